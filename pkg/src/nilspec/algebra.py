"""Exact nilpotent Lie algebra core: brackets, derived series, center, quotients.

Everything in this module runs in exact rational arithmetic.  Structure
constants are given in a fixed structural basis; c[i][j][k] is the
coefficient of basis vector k in [b_i, b_j].
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .rational import (
    ONE,
    ZERO,
    Subspace,
    Vec,
    frac,
    is_zero_vec,
    solve,
    vadd,
    vec,
    vscale,
    zero_vec,
)


class AntisymmetryViolation(ValueError):
    def __init__(self, i, j, k):
        super().__init__(f"c[{i}][{j}][{k}] != -c[{j}][{i}][{k}]")
        self.indices = (i, j, k)


class NonTerminating(ValueError):
    """Derived series stabilized at a nonzero subspace: algebra not nilpotent."""


class NotAnIdeal(ValueError):
    pass


@dataclass(frozen=True)
class JacobiViolation:
    i: int
    j: int
    l: int
    k: int
    value: Fraction


class StructureConstants:
    """Bracket table of a Lie algebra in a fixed structural basis.

    Immutable by convention; derived data (series, center, step) is cached.
    """

    def __init__(self, dim: int, labels, brackets):
        """brackets: mapping (i, j) -> {k: coeff} for i < j; antisymmetric
        completion is implied."""
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.labels = tuple(labels) if labels else tuple(f"b{i}" for i in range(dim))
        if len(self.labels) != dim:
            raise ValueError("labels length != dim")
        table = {}
        for (i, j), coeffs in brackets.items():
            if i == j:
                if any(frac(c) != 0 for c in coeffs.values()):
                    raise AntisymmetryViolation(i, j, next(iter(coeffs)))
                continue
            entry = {k: frac(c) for k, c in coeffs.items() if frac(c) != 0}
            if not entry:
                continue
            if i > j:
                i, j = j, i
                entry = {k: -c for k, c in entry.items()}
            if (i, j) in table:
                # merging duplicate entries must be consistent
                for k, c in entry.items():
                    if table[(i, j)].get(k, ZERO) != c:
                        raise AntisymmetryViolation(i, j, k)
            else:
                table[(i, j)] = entry
        self._table = table
        # sparse list used by the bracket hot path
        self._pairs = tuple(
            (i, j, tuple(coeffs.items())) for (i, j), coeffs in sorted(table.items())
        )

    def c(self, i: int, j: int, k: int) -> Fraction:
        if i == j:
            return ZERO
        if i < j:
            return self._table.get((i, j), {}).get(k, ZERO)
        return -self._table.get((j, i), {}).get(k, ZERO)

    def bracket(self, u: Vec, v: Vec) -> Vec:
        out = [ZERO] * self.dim
        for i, j, terms in self._pairs:
            coef = u[i] * v[j] - u[j] * v[i]
            if coef:
                for k, c in terms:
                    out[k] += coef * c
        return tuple(out)

    def basis_vector(self, i: int) -> Vec:
        return tuple(ONE if j == i else ZERO for j in range(self.dim))

    @cached_property
    def derived_series(self) -> list[Subspace]:
        return derived_series(self)

    @cached_property
    def step(self) -> int:
        return len(self.derived_series)

    @cached_property
    def center(self) -> Subspace:
        return center(self)

    def is_central(self, v: Vec) -> bool:
        return self.center.contains(v)

    def __repr__(self):
        return f"StructureConstants(dim={self.dim}, labels={self.labels})"


def check_antisymmetry(sc: StructureConstants) -> None:
    """Raises AntisymmetryViolation on the first failure.

    The internal table is antisymmetric by construction, so this guards
    against hand-built c() overrides and documents the precondition.
    """
    for i in range(sc.dim):
        for j in range(sc.dim):
            for k in range(sc.dim):
                if sc.c(i, j, k) != -sc.c(j, i, k):
                    raise AntisymmetryViolation(i, j, k)


def check_jacobi(sc: StructureConstants) -> list[JacobiViolation]:
    """All Jacobi failures over basis triples; empty list means valid."""
    check_antisymmetry(sc)
    violations = []
    n = sc.dim
    for i in range(n):
        for j in range(i + 1, n):
            bij = sc.bracket(sc.basis_vector(i), sc.basis_vector(j))
            for l in range(j + 1, n):
                term = sc.bracket(bij, sc.basis_vector(l))
                bjl = sc.bracket(sc.basis_vector(j), sc.basis_vector(l))
                term = vadd(term, sc.bracket(bjl, sc.basis_vector(i)))
                bli = sc.bracket(sc.basis_vector(l), sc.basis_vector(i))
                term = vadd(term, sc.bracket(bli, sc.basis_vector(j)))
                for k in range(n):
                    if term[k] != 0:
                        violations.append(JacobiViolation(i, j, l, k, term[k]))
    return violations


def derived_series(sc: StructureConstants) -> list[Subspace]:
    """The series g^(1), g^(2), ... ending with the first zero subspace.

    g^(1) = [g, g] and g^(k+1) = [g, g^(k)]; the nilpotency step is the
    1-based index of the zero entry, i.e. len(result).
    """
    series = []
    n = sc.dim
    current = Subspace.span(
        n,
        [
            sc.bracket(sc.basis_vector(i), sc.basis_vector(j))
            for i in range(n)
            for j in range(i + 1, n)
        ],
    )
    while not current.is_zero():
        series.append(current)
        nxt = Subspace.span(
            n,
            [sc.bracket(sc.basis_vector(i), w) for i in range(n) for w in current.rows],
        )
        if nxt.dim >= current.dim:
            raise NonTerminating("derived series does not reach zero")
        current = nxt
    series.append(current)
    return series


def step(sc: StructureConstants) -> int:
    """Nilpotency step: k with g^(k) = 0, g^(k-1) != 0."""
    return len(derived_series(sc))


def center(sc: StructureConstants) -> Subspace:
    """Kernel of X -> ad(X), by exact null-space computation."""
    rows = []
    n = sc.dim
    for j in range(n):
        for k in range(n):
            rows.append(tuple(sc.c(i, j, k) for i in range(n)))
    from .rational import nullspace

    return Subspace(n, nullspace(rows))


@dataclass
class NonsingularityVerdict:
    value: bool
    sampled_only: bool
    witness: Vec | None = None           # noncentral X violating the condition
    certificates: list | None = None     # (X, [Y solving [X,Y]=Z_c per center gen])

    def __bool__(self):
        return self.value


def _ad_image_contains_center(sc: StructureConstants, x: Vec, zc: Subspace):
    """For each center basis vector Z, an exact Y with [X,Y] = Z, or None."""
    cols = [sc.bracket(x, sc.basis_vector(i)) for i in range(sc.dim)]
    a_rows = list(zip(*cols))  # dim x dim matrix, columns = ad(X) images
    ys = []
    for z in zc.rows:
        y = solve(a_rows, z)
        if y is None:
            return None
        ys.append(tuple(y))
    return ys


def is_strictly_nonsingular(sc: StructureConstants, samples: int = 32,
                            seed: int = 0) -> NonsingularityVerdict:
    """Check that ad(X) hits the whole center for every noncentral X.

    Exact on the structural basis generators plus randomized rational
    sampling; a True verdict is therefore sample-based and flagged as such.
    """
    zc = sc.center
    if zc.dim == sc.dim:
        return NonsingularityVerdict(True, sampled_only=False, certificates=[])
    certs = []
    test_vectors = [sc.basis_vector(i) for i in range(sc.dim)]
    rng = random.Random(seed)
    tries = 0
    while len(test_vectors) < sc.dim + samples and tries < 50 * samples:
        tries += 1
        v = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(sc.dim))
        if not zc.contains(v):
            test_vectors.append(v)
    for x in test_vectors:
        if zc.contains(x):
            continue
        ys = _ad_image_contains_center(sc, x, zc)
        if ys is None:
            return NonsingularityVerdict(False, sampled_only=False, witness=x)
        certs.append((x, ys))
    return NonsingularityVerdict(True, sampled_only=True, certificates=certs)


@dataclass
class QuotientMap:
    """Projection data for g -> g/ideal in complementary coordinates."""

    ideal: Subspace
    complement: tuple[int, ...]      # structural indices surviving as coordinates
    projection: tuple                # rows: quotient coords of each structural basis vector image

    def project(self, v: Vec) -> Vec:
        reduced = self.ideal.reduce(v)
        return tuple(reduced[i] for i in self.complement)

    def lift(self, w: Vec) -> Vec:
        """Algebraic section placing quotient coordinates at complement indices."""
        out = [ZERO] * self.ideal.ambient_dim
        for val, i in zip(w, self.complement):
            out[i] = val
        return tuple(out)


def quotient_algebra(sc: StructureConstants, ideal: Subspace):
    """Quotient structure constants plus the projection map.

    Raises NotAnIdeal unless [g, ideal] is contained in the ideal.
    """
    for i in range(sc.dim):
        for w in ideal.rows:
            if not ideal.contains(sc.bracket(sc.basis_vector(i), w)):
                raise NotAnIdeal(f"bracket with basis vector {i} leaves the subspace")
    comp = ideal.complement_indices()
    qdim = len(comp)
    qm = QuotientMap(ideal=ideal, complement=comp,
                     projection=tuple(tuple(ideal.reduce(sc.basis_vector(i))[c] for c in comp)
                                      for i in range(sc.dim)))
    labels = tuple(sc.labels[i] for i in comp)
    brackets = {}
    for a in range(qdim):
        for b in range(a + 1, qdim):
            ea = sc.basis_vector(comp[a])
            eb = sc.basis_vector(comp[b])
            img = qm.project(sc.bracket(ea, eb))
            coeffs = {k: img[k] for k in range(qdim) if img[k] != 0}
            if coeffs:
                brackets[(a, b)] = coeffs
    qsc = StructureConstants(qdim, labels, brackets)
    return qsc, qm


def ad_matrix(sc: StructureConstants, x: Vec):
    """Matrix of ad(x) acting on structural coordinates (columns = images)."""
    cols = [sc.bracket(x, sc.basis_vector(i)) for i in range(sc.dim)]
    return tuple(zip(*cols))


def bracket_image(sc: StructureConstants, x: Vec) -> Subspace:
    """Span of [x, g]."""
    return Subspace.span(sc.dim, [sc.bracket(x, sc.basis_vector(i)) for i in range(sc.dim)])
