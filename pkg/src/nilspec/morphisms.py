"""Automorphism classification: bracket checks, almost-inner solves, factorization.

Conjugation by exp(A) acts on logs as e^{ad_A}; for step <= 3 the
per-element conjugacy equation splits into two exact linear solves, so
inner / almost-inner membership is decided without search.  The
isometry-times-almost-inner factorization of a two-step marking is
recovered by a single linear solve and is unique when it exists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct

from .algebra import StructureConstants, Subspace, bracket_image
from .group import GroupElement, LatticeContext
from .rational import (
    Mat,
    Vec,
    identity_mat,
    is_zero_vec,
    mat,
    mat_inv,
    mat_mul,
    mat_vec,
    solve,
    transpose,
    vadd,
    vscale,
    zero_vec,
)


class Singular(ValueError):
    pass


@dataclass(frozen=True)
class BracketViolation:
    i: int
    j: int
    difference: tuple


def apply_map(m: Mat, x) -> GroupElement:
    log = x.log if isinstance(x, GroupElement) else x
    return GroupElement(mat_vec(m, log))


def is_automorphism(sc: StructureConstants, m: Mat):
    """Exact bracket preservation over all basis pairs; (ok, violation)."""
    from .rational import det

    m = mat(m)
    if det(m) == 0:
        raise Singular("map is not invertible")
    n = sc.dim
    cols = tuple(zip(*m))
    for i in range(n):
        for j in range(i + 1, n):
            bij = sc.bracket(sc.basis_vector(i), sc.basis_vector(j))
            lhs = [Fraction(0)] * n
            for k in range(n):
                if bij[k]:
                    ck = cols[k]
                    for r in range(n):
                        if ck[r]:
                            lhs[r] += bij[k] * ck[r]
            rhs = sc.bracket(cols[i], cols[j])
            if tuple(lhs) != rhs:
                return False, BracketViolation(i, j, tuple(a - b for a, b in zip(lhs, rhs)))
    return True, None


def is_isometric_automorphism(m: Mat, gram: Mat, gram2: Mat | None = None) -> bool:
    """Exact check m^T G2 m == G1 (G2 defaults to G1)."""
    m = mat(m)
    g1 = mat(gram)
    g2 = g1 if gram2 is None else mat(gram2)
    return mat_mul(transpose(m), mat_mul(g2, m)) == g1


# -- conjugation solves ------------------------------------------------------

def _ad_transpose_matrix(sc: StructureConstants, x: Vec) -> Mat:
    """Matrix of A -> [A, x] acting on coordinates (columns = images)."""
    cols = [sc.bracket(sc.basis_vector(i), x) for i in range(sc.dim)]
    return tuple(zip(*cols))


def _exp_ad(sc: StructureConstants, a: Vec, x: Vec) -> Vec:
    t1 = sc.bracket(a, x)
    t2 = sc.bracket(a, t1)
    out = vadd(x, t1)
    if not is_zero_vec(t2):
        out = vadd(out, vscale(Fraction(1, 2), t2))
    return out


def conjugation_witness(sc: StructureConstants, m: Mat, x: Vec):
    """Exact A with exp(A) exp(x) exp(-A) = exp(m x), or None.

    Layered solve: the quotient mod g^(1) pins nothing, the zeta layer is
    linear in A, and the top layer is corrected by a second linear solve
    that leaves the lower layers untouched.
    """
    y = mat_vec(mat(m), x)
    series = sc.derived_series
    n = sc.dim
    v1 = series[0] if len(series) >= 2 else Subspace(n)
    v2 = series[1] if len(series) >= 3 else Subspace(n)
    diff = tuple(b - a for a, b in zip(x, y))
    if not v1.contains(diff):
        return None
    lmat = _ad_transpose_matrix(sc, x)
    # layer 2: [A, x] == y - x  (mod g^(2))
    red_rows = _reduced_rows(v2, lmat, n)
    red_target = v2.reduce(diff)
    a0 = solve(red_rows, red_target)
    if a0 is None:
        return None
    resid = tuple(b - a for a, b in zip(_exp_ad(sc, a0, x), y))
    if is_zero_vec(resid):
        return a0
    if not v2.contains(resid):
        return None
    # layer 3: [D, x + [A0,x]/2] == resid with [D, x] central
    xprime = vadd(x, vscale(Fraction(1, 2), sc.bracket(a0, x)))
    dmat = _ad_transpose_matrix(sc, xprime)
    eq_rows = [row_of(dmat, n, r) for r in range(n)]
    eq_target = list(resid)
    cmat = _ad_transpose_matrix(sc, x)
    extra = _reduced_rows(v2, cmat, n)
    eq_rows_full = eq_rows + extra
    eq_target_full = tuple(eq_target) + zero_vec(len(extra))
    d = solve(eq_rows_full, eq_target_full)
    if d is None:
        return None
    a = vadd(a0, d)
    if _exp_ad(sc, a, x) != y:
        return None
    return a


def row_of(m: Mat, n: int, r: int) -> Vec:
    return tuple(m[r][c] for c in range(n))


def _reduced_rows(space: Subspace, m: Mat, n: int):
    """Rows of m with the row space reduced modulo `space` (as equations)."""
    cols = list(zip(*m))
    reduced_cols = [space.reduce(tuple(c)) for c in cols]
    return [tuple(rc[r] for rc in reduced_cols) for r in range(n)]


def _matrix_is_unipotent(m: Mat) -> bool:
    n = len(m)
    nm = _mat_sub(m, identity_mat(n))
    p = nm
    for _ in range(n):
        if all(is_zero_vec(r) for r in p):
            return True
        p = mat_mul(p, nm)
    return all(is_zero_vec(r) for r in p)


def _mat_sub(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _mat_scale(c, a: Mat) -> Mat:
    return tuple(tuple(c * x for x in r) for r in a)


def _mat_add(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _matrix_log_unipotent(m: Mat) -> Mat:
    n = len(m)
    nm = _mat_sub(m, identity_mat(n))
    out = tuple(zero_vec(n) for _ in range(n))
    p = nm
    sign = 1
    for k in range(1, n + 1):
        if all(is_zero_vec(r) for r in p):
            break
        out = _mat_add(out, _mat_scale(Fraction(sign, k), p))
        p = mat_mul(p, nm)
        sign = -sign
    return out


def inner_witness(sc: StructureConstants, m: Mat):
    """Exact A with Ad_{exp A} = m, or None; decides membership in IA(G)."""
    m = mat(m)
    if not _matrix_is_unipotent(m):
        return None
    lmat = _matrix_log_unipotent(m)
    # solve log(m) = ad(A): linear in the coordinates of A
    n = sc.dim
    rows = []
    target = []
    for r in range(n):
        for c in range(n):
            rows.append(tuple(sc.c(i, c, r) for i in range(n)))
            target.append(lmat[r][c])
    a = solve(rows, tuple(target))
    if a is None:
        return None
    # confirm exp(ad_A) == m exactly (finite series, ad_A nilpotent)
    ad_a = _ad_matrix_of(sc, a)
    expm = identity_mat(n)
    p = identity_mat(n)
    fact = 1
    for k in range(1, n + 1):
        p = mat_mul(ad_a, p)
        if all(is_zero_vec(r) for r in p):
            break
        fact *= k
        expm = _mat_add(expm, _mat_scale(Fraction(1, fact), p))
    if expm != m:
        return None
    return a


def _ad_matrix_of(sc: StructureConstants, a: Vec) -> Mat:
    cols = [sc.bracket(a, sc.basis_vector(c)) for c in range(sc.dim)]
    return tuple(zip(*cols))


@dataclass
class AlmostInnerVerdict:
    kind: str                      # INNER | ALMOST_INNER | GAMMA_ALMOST_INNER | NO
    witnesses: list = field(default_factory=list)   # (x_log, a_log) samples
    failure: tuple | None = None   # x_log with empty conjugation solution set
    sampled_only: bool = False
    lattice: str | None = None

    def at_least(self, kind: str) -> bool:
        order = {"NO": 0, "GAMMA_ALMOST_INNER": 1, "ALMOST_INNER": 2, "INNER": 3}
        return order[self.kind] >= order[kind]


def is_almost_inner(sc: StructureConstants, m: Mat, lattice_ctx: LatticeContext | None = None,
                    window: int = 2, samples: int = 24, seed: int = 0) -> AlmostInnerVerdict:
    """Classify an automorphism as inner / almost inner / lattice-almost-inner.

    The global variant samples random rational elements (exact per-element
    solves, so a positive verdict is sample-based); the lattice variant is
    exhaustive over the word window and exact there.
    """
    import random

    ok, viol = is_automorphism(sc, m)
    if not ok:
        raise ValueError(f"not an automorphism: {viol}")
    m = mat(m)
    a = inner_witness(sc, m)
    if a is not None:
        return AlmostInnerVerdict("INNER", witnesses=[(zero_vec(sc.dim), tuple(a))])
    rng = random.Random(seed)
    witnesses = []
    for _ in range(samples):
        x = tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(sc.dim))
        a = conjugation_witness(sc, m, x)
        if a is None:
            break
        witnesses.append((x, a))
    else:
        return AlmostInnerVerdict("ALMOST_INNER", witnesses=witnesses, sampled_only=True)
    global_failure = x
    if lattice_ctx is not None:
        lat_witnesses = []
        bounds = [window] * lattice_ctx.lattice.rank
        for exps in iproduct(*[range(-b, b + 1) for b in bounds]):
            from .group import CanonicalWord

            el = lattice_ctx.word_to_element(CanonicalWord(exps))
            a = conjugation_witness(sc, m, el.log)
            if a is None:
                return AlmostInnerVerdict("NO", failure=el.log,
                                          lattice=lattice_ctx.lattice.name)
            lat_witnesses.append((el.log, a))
        return AlmostInnerVerdict("GAMMA_ALMOST_INNER", witnesses=lat_witnesses,
                                  lattice=lattice_ctx.lattice.name)
    return AlmostInnerVerdict("NO", failure=global_failure)


# -- two-step factorization --------------------------------------------------

@dataclass
class Factorization:
    isometry: Mat          # Phi1, isometric isomorphism (gram1 -> gram2)
    almost_inner: Mat      # Phi2 = I + S, lattice-almost-inner
    shear: Mat             # S, maps onto the derived algebra
    aia_checked_window: int


@dataclass
class NoFactorization:
    reason: str

    def __bool__(self):
        return False


class MarkingFactorizer:
    """Reusable factorization checker for one two-step group and metric pair.

    check(phi) factors phi = Phi1 . Phi2 (Phi1 isometric, Phi2 almost
    inner) or explains why none exists.  The shear S is pinned by the
    linear (complement, derived) block of the isometry condition, so the
    factorization is unique; block identities are verified lazily so scans
    reject cheaply.
    """

    def __init__(self, sc: StructureConstants, gram1: Mat, gram2: Mat,
                 lattice_ctx: LatticeContext | None = None, window: int = 2):
        if sc.step > 2:
            raise ValueError("factorization applies to two-step groups")
        self.sc = sc
        self.g1 = mat(gram1)
        self.g2 = mat(gram2)
        self.lattice_ctx = lattice_ctx
        self.window = window
        n = sc.dim
        self.n = n
        self.derived = sc.derived_series[0] if sc.step == 2 else Subspace(n)
        comp = self.derived.complement_indices()
        basis_cols = [tuple(Fraction(int(i == j)) for i in range(n)) for j in comp] + \
                     [tuple(r) for r in self.derived.rows]
        self.b = tuple(zip(*basis_cols))
        self.binv = mat_inv(self.b)
        bt = transpose(self.b)
        self.g1p = mat_mul(bt, mat_mul(self.g1, self.b))
        self.g2_is_identity = self.g2 == identity_mat(n)
        self.nc = len(comp)
        self.nd = self.derived.dim
        self._phi2_cols = None
        if lattice_ctx is not None:
            bounds = [window] * lattice_ctx.lattice.rank
            self._words = [
                lattice_ctx.word_to_element(_word(exps)).log
                for exps in iproduct(*[range(-bb, bb + 1) for bb in bounds])]
        else:
            self._words = []

    def _adapted_gram(self, phi: Mat) -> Mat:
        """(B^T) phi^T G2 phi B, the candidate's pulled-back inner products."""
        cols = tuple(zip(*mat_mul(phi, self.b)))    # adapted-basis images
        if self.g2_is_identity:
            gcols = cols
        else:
            gcols = tuple(mat_vec(self.g2, c) for c in cols)
        n = self.n
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                v = vdot_local(cols[i], gcols[j])
                out[i][j] = v
                out[j][i] = v
        return tuple(tuple(r) for r in out)

    def check(self, phi: Mat):
        n, nc, nd = self.n, self.nc, self.nd
        phi = mat(phi)
        if nd == 0:
            if is_isometric_automorphism(phi, self.g1, self.g2):
                zero = tuple(zero_vec(n) for _ in range(n))
                return Factorization(phi, identity_mat(n), zero, self.window)
            return NoFactorization("abelian group with non-isometric map")
        mp = self._adapted_gram(phi)
        g1p = self.g1p
        for i in range(nd):
            for j in range(nd):
                if mp[nc + i][nc + j] != g1p[nc + i][nc + j]:
                    return NoFactorization("derived-block inner products are not preserved")
        # (c,d) block:  M_cd - s^T M_dd = G_cd   =>   s = M_dd^-1 (M_cd - G_cd)^T
        m_dd = tuple(tuple(mp[nc + i][nc + j] for j in range(nd)) for i in range(nd))
        diff = tuple(tuple(mp[i][nc + j] - g1p[i][nc + j] for j in range(nd))
                     for i in range(nc))
        s = mat_mul(mat_inv(m_dd), transpose(diff))      # nd x nc
        # (c,c) block:  M_cc - s^T M_dc - M_cd s + s^T M_dd s = G_cc
        for i in range(nc):
            for j in range(i, nc):
                val = mp[i][j]
                for a in range(nd):
                    val -= s[a][i] * mp[nc + a][j] + mp[i][nc + a] * s[a][j]
                    for bb in range(nd):
                        val += s[a][i] * m_dd[a][bb] * s[bb][j]
                if val != g1p[i][j]:
                    return NoFactorization("no isometric factor exists for this map")
        n_adapted = [[Fraction(0)] * n for _ in range(n)]
        for i in range(nd):
            for j in range(nc):
                n_adapted[nc + i][j] = s[i][j]
        shear = mat_mul(self.b, mat_mul(tuple(tuple(r) for r in n_adapted), self.binv))
        phi2 = _mat_add(identity_mat(n), shear)
        phi1 = mat_mul(phi, _mat_sub(identity_mat(n), shear))
        # guard the structural invariants behind the blockwise algebra
        if not is_isometric_automorphism(phi1, self.g1, self.g2):
            return NoFactorization("no isometric factor exists for this map")
        ok2, viol = is_automorphism(self.sc, phi2)
        if not ok2:
            return NoFactorization(f"shear is not an automorphism: {viol}")
        for log in self._words:
            img = mat_vec(shear, log)
            if is_zero_vec(img):
                continue
            if not bracket_image(self.sc, log).contains(img):
                return NoFactorization("shear is not almost inner on a window word")
        return Factorization(phi1, phi2, shear, self.window)


def vdot_local(a, b):
    total = Fraction(0)
    for x, y in zip(a, b):
        if x and y:
            total += x * y
    return total


def _word(exps):
    from .group import CanonicalWord

    return CanonicalWord(exps)


def marking_factorization(sc: StructureConstants, phi: Mat, gram1: Mat, gram2: Mat,
                          lattice_ctx: LatticeContext | None = None, window: int = 2):
    """One-shot wrapper around MarkingFactorizer.check."""
    return MarkingFactorizer(sc, gram1, gram2, lattice_ctx, window).check(phi)


# -- parameterized family scans ----------------------------------------------

@dataclass
class FamilyScanResult:
    scanned: int
    admitted: list            # params satisfying every predicate
    rejected_samples: list    # (params, reason) examples, capped


def isomorphism_family_scan(candidates, predicates, sample_cap: int = 12) -> FamilyScanResult:
    """Filter (params, matrix) candidates through named predicates.

    predicates: list of (name, callable(matrix) -> bool_or_reason).  A
    candidate is admitted when every predicate returns truthy.
    """
    admitted = []
    rejected = []
    scanned = 0
    for params, matrix in candidates:
        scanned += 1
        verdict = None
        for name, pred in predicates:
            res = pred(matrix)
            if not res:
                verdict = (params, name)
                break
        if verdict is None:
            admitted.append(params)
        elif len(rejected) < sample_cap:
            rejected.append(verdict)
    return FamilyScanResult(scanned=scanned, admitted=admitted, rejected_samples=rejected)
