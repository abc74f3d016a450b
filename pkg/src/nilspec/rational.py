"""Exact linear algebra over the rationals plus integer-lattice utilities.

Vectors are tuples of Fraction, matrices are tuples of row tuples.  All
routines here are exact; floating point never enters.
"""
from __future__ import annotations

from fractions import Fraction

Vec = tuple
Mat = tuple

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    """Coerce ints, Fractions, and 'p/q' strings to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


def fmt_frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def vec(values) -> Vec:
    return tuple(frac(v) for v in values)


def zero_vec(n: int) -> Vec:
    return (ZERO,) * n


def vadd(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vscale(c: Fraction, a: Vec) -> Vec:
    return tuple(c * x for x in a)


def vdot(a: Vec, b: Vec) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def is_zero_vec(a: Vec) -> bool:
    return all(x == 0 for x in a)


def mat(rows) -> Mat:
    return tuple(vec(r) for r in rows)


def identity_mat(n: int) -> Mat:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def mat_vec(m: Mat, v: Vec) -> Vec:
    return tuple(vdot(row, v) for row in m)


def mat_mul(a: Mat, b: Mat) -> Mat:
    bt = transpose(b)
    return tuple(tuple(vdot(row, col) for col in bt) for row in a)


def transpose(m: Mat) -> Mat:
    return tuple(zip(*m)) if m else ()


def mat_inv(m: Mat) -> Mat:
    """Invert a square rational matrix by Gauss-Jordan; raises on singular."""
    n = len(m)
    aug = [list(row) + list(identity_mat(n)[i]) for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def det(m: Mat) -> Fraction:
    n = len(m)
    a = [list(r) for r in m]
    d = ONE
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return ZERO
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            d = -d
        p = a[col][col]
        d *= p
        for r in range(col + 1, n):
            if a[r][col] != 0:
                f = a[r][col] / p
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return d


def rref(rows) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        m[r] = [x / p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return [row for row in m[:r]], pivots


def solve(a_rows, b: Vec):
    """One exact solution x of A x = b, or None; free variables set to zero."""
    m = len(a_rows)
    if m == 0:
        return ()
    n = len(a_rows[0])
    aug = [list(a_rows[i]) + [b[i]] for i in range(m)]
    red, pivots = rref(aug)
    if any(p == n for p in pivots):
        return None
    x = [ZERO] * n
    for row, p in zip(red, pivots):
        x[p] = row[n]
    return tuple(x)


def nullspace(a_rows) -> list[Vec]:
    """Basis of the right kernel of A."""
    if not a_rows:
        return []
    n = len(a_rows[0])
    red, pivots = rref(a_rows)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * n
        v[f] = ONE
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(tuple(v))
    return basis


class FixedSolver:
    """Exact solver for a fixed full-column-rank matrix, reusable across targets.

    Precomputes the inverse of an invertible row subsystem; solve() answers
    A x = b or None, verifying the non-pivot rows.
    """

    def __init__(self, a_rows):
        self.rows = [tuple(r) for r in a_rows]
        self.m = len(self.rows)
        self.n = len(self.rows[0]) if self.m else 0
        if self.n == 0:
            self.pivot_rows = []
            self.inv = ()
            return
        chosen = []
        span = []
        for i, r in enumerate(self.rows):
            trial = span + [list(r)]
            red, piv = rref(trial)
            if len(red) > len(span):
                chosen.append(i)
                span = [list(x) for x in red]
            if len(chosen) == self.n:
                break
        if len(chosen) < self.n:
            raise ValueError("matrix does not have full column rank")
        self.pivot_rows = chosen
        self.inv = mat_inv(tuple(self.rows[i] for i in chosen))

    def solve(self, b):
        if self.n == 0:
            return () if all(x == 0 for x in b) else None
        x = mat_vec(self.inv, tuple(b[i] for i in self.pivot_rows))
        for i, row in enumerate(self.rows):
            if vdot(row, x) != b[i]:
                return None
        return x


class Subspace:
    """Rational subspace kept in RREF so equality tests are canonical."""

    def __init__(self, ambient_dim: int, rows=()):
        red, pivots = rref([list(r) for r in rows])
        self.ambient_dim = ambient_dim
        self.rows = tuple(tuple(r) for r in red)
        self.pivots = tuple(pivots)

    @classmethod
    def span(cls, ambient_dim: int, vectors) -> "Subspace":
        return cls(ambient_dim, [vec(v) for v in vectors])

    @property
    def dim(self) -> int:
        return len(self.rows)

    def is_zero(self) -> bool:
        return not self.rows

    def reduce(self, v: Vec) -> Vec:
        """Canonical representative of v modulo this subspace (pivot coords zeroed)."""
        out = list(v)
        for row, p in zip(self.rows, self.pivots):
            c = out[p]
            if c != 0:
                out = [x - c * y for x, y in zip(out, row)]
        return tuple(out)

    def contains(self, v: Vec) -> bool:
        return is_zero_vec(self.reduce(v))

    def contains_space(self, other: "Subspace") -> bool:
        return all(self.contains(r) for r in other.rows)

    def sum_with(self, other: "Subspace") -> "Subspace":
        return Subspace(self.ambient_dim, self.rows + other.rows)

    def complement_indices(self) -> tuple[int, ...]:
        return tuple(c for c in range(self.ambient_dim) if c not in self.pivots)

    def __eq__(self, other) -> bool:
        return isinstance(other, Subspace) and self.rows == other.rows \
            and self.ambient_dim == other.ambient_dim

    def __hash__(self):
        return hash((self.ambient_dim, self.rows))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


# ---------------------------------------------------------------------------
# Integer lattices (row span over Z), used for conjugacy residue arithmetic.
# ---------------------------------------------------------------------------

def row_hnf(rows):
    """Integer row echelon via gcd elimination.

    Returns (H, U, rank) with U @ M = H, U unimodular, H echelon with
    positive pivots and zero rows last.
    """
    M = [list(map(int, r)) for r in rows]
    m = len(M)
    n = len(M[0]) if m else 0
    U = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    r = 0
    for c in range(n):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if M[i][c] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(M[i][c]))
            if i0 != r:
                M[r], M[i0] = M[i0], M[r]
                U[r], U[i0] = U[i0], U[r]
            p = M[r][c]
            done = True
            for i in range(r + 1, m):
                if M[i][c] != 0:
                    q = M[i][c] // p
                    M[i] = [x - q * y for x, y in zip(M[i], M[r])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[r])]
                    if M[i][c] != 0:
                        done = False
            if done:
                break
        if M[r][c] != 0:
            if M[r][c] < 0:
                M[r] = [-x for x in M[r]]
                U[r] = [-x for x in U[r]]
            r += 1
    return M, U, r


class IntLattice:
    """Sublattice of Z^n spanned by integer generator rows."""

    def __init__(self, n: int, rows=()):
        self.n = n
        self.gens = [tuple(map(int, r)) for r in rows]
        H, U, rank = row_hnf(self.gens) if self.gens else ([], [], 0)
        self.H = [tuple(h) for h in H[:rank]]
        self._U = U
        self.rank = rank
        self.pivots = []
        for h in self.H:
            self.pivots.append(next(c for c in range(n) if h[c] != 0))
        # rows of U beyond rank are a basis for integer relations among gens
        self.relation_basis = [tuple(U[i]) for i in range(rank, len(self.gens))]

    def residue(self, v):
        """Canonical representative of v + L, plus the generator combo removed.

        Returns (res, combo) with  res = v - combo @ gens.
        """
        out = list(map(int, v))
        t = [0] * len(self.gens)
        for row_idx, (h, p) in enumerate(zip(self.H, self.pivots)):
            q = out[p] // h[p]
            if q:
                out = [x - q * y for x, y in zip(out, h)]
                for j in range(len(self.gens)):
                    t[j] += q * self._U[row_idx][j]
        return tuple(out), tuple(t)

    def solve(self, v):
        """Integer combo of generators equal to v, or None."""
        out = list(map(int, v))
        y = [0] * len(self.gens)
        for row_idx, (h, p) in enumerate(zip(self.H, self.pivots)):
            if out[p] % h[p] != 0:
                return None
            q = out[p] // h[p]
            if q:
                out = [a - q * b for a, b in zip(out, h)]
                for j in range(len(self.gens)):
                    y[j] += q * self._U[row_idx][j]
        if any(out):
            return None
        return tuple(y)

    def contains(self, v) -> bool:
        return self.solve(v) is not None

    def is_full_rank(self) -> bool:
        return self.rank == self.n
