"""Built-in, exactly encoded data for the five example nilmanifold pairs.

Each record carries the algebra, the fixed left-invariant metric, the two
cocompact lattices, any named automorphisms, and the expected-property
flags used for regression.  All coefficients are exact rationals.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import StructureConstants
from .group import GroupElement, LatticeSpec
from .rational import frac, mat, vec

F = Fraction


class UnknownExample(KeyError):
    pass


@dataclass(frozen=True)
class AutomorphismSpec:
    """Rational linear map on the algebra, acting by columns on coordinates."""

    name: str
    matrix: tuple                 # rows, acting on coordinate columns
    on_quotient: bool = False     # map lives on the 2-step quotient algebra
    expected_isometry: bool | None = None
    expected_class: str | None = None   # INNER / ALMOST_INNER / ... when asserted


@dataclass(frozen=True)
class ExpectedFlags:
    """Table row of asserted properties for one example pair.

    verifiable marks the flags this artifact can actually test (length /
    marked-length); the spectral and representation columns are stored as
    stated but never executed.
    """

    p_form_spectrum: bool
    representation_equivalent: bool
    isomorphic_fundamental_groups: bool
    same_length_spectrum: bool
    same_marked_length_spectrum: bool
    verifiable: tuple = ()


@dataclass
class ExampleRecord:
    id: str
    algebra: StructureConstants
    metric_gram: tuple
    orthonormal_basis: tuple | None
    lattices: tuple                      # pair of LatticeSpec
    automorphisms: dict = field(default_factory=dict)
    expected: ExpectedFlags | None = None
    notes: str = ""


def _columns_to_matrix(cols):
    """Images given per basis vector; stored row-wise for coordinate action."""
    return tuple(zip(*[vec(c) for c in cols]))


def _gram_from_orthonormal_rows(rows):
    """Metric whose orthonormal basis has the given structural rows: (B^T B)^-1."""
    from .rational import mat_inv, mat_mul, transpose

    b = mat(rows)
    return mat_inv(mat_mul(transpose(b), b))


def _seven_dim_algebra() -> StructureConstants:
    # span {X1, X2, Y1, Y2, Z1, Z2, W}
    labels = ("X1", "X2", "Y1", "Y2", "Z1", "Z2", "W")
    X1, X2, Y1, Y2, Z1, Z2, W = range(7)
    brackets = {
        (X1, Y1): {Z1: 1},
        (X2, Y2): {Z1: 1},
        (X1, Y2): {Z2: 1},
        (X1, Z1): {W: 1},
        (X2, Z2): {W: 1},
        (Y1, Y2): {W: 1},
    }
    return StructureConstants(7, labels, brackets)


def _five_dim_algebra() -> StructureConstants:
    # span {X1, Y1, Y2, Z, W}
    labels = ("X1", "Y1", "Y2", "Z", "W")
    X1, Y1, Y2, Z, W = range(5)
    brackets = {
        (X1, Y1): {Z: 1},
        (X1, Z): {W: 1},
        (Y1, Y2): {W: 1},
    }
    return StructureConstants(5, labels, brackets)


def _basis_exp(dim, assignments) -> GroupElement:
    v = [F(0)] * dim
    for idx, c in assignments:
        v[idx] = frac(c)
    return GroupElement(tuple(v))


_EXAMPLE_V_PHI_COLUMNS = (
    # images of X1, X2, Y1, Y2, Z1, Z2, W
    ("-1", "1", "1/4", "1/2", "0", "0", "0"),
    ("0", "1", "-1/2", "0", "1/4", "0", "0"),
    ("0", "0", "-1", "0", "0", "0", "0"),
    ("0", "0", "2", "1", "0", "1", "0"),
    ("0", "0", "0", "0", "1", "0", "1/2"),
    ("0", "0", "0", "0", "-1", "-1", "1/4"),
    ("0", "0", "0", "0", "0", "0", "-1"),
)

_EXAMPLE_V_PSI1_COLUMNS = (
    # quotient basis X1, X2, Y1, Y2, Z1, Z2
    ("-1", "1", "1/4", "1/2", "0", "0"),
    ("0", "1", "-1/2", "0", "0", "0"),
    ("0", "0", "-1", "0", "0", "0"),
    ("0", "0", "2", "1", "0", "0"),
    ("0", "0", "0", "0", "1", "0"),
    ("0", "0", "0", "0", "-1", "-1"),
)

_EXAMPLE_V_PSI2_COLUMNS = (
    ("1", "0", "0", "0", "0", "0"),
    ("0", "1", "0", "0", "1/4", "0"),
    ("0", "0", "1", "0", "0", "0"),
    ("0", "0", "0", "1", "-1", "-1"),
    ("0", "0", "0", "0", "1", "0"),
    ("0", "0", "0", "0", "0", "1"),
)

_EXAMPLE_V_ORTHONORMAL_ROWS = (
    ("1", "-1/2", "0", "-1/4", "0", "0", "0"),   # E1 = X1 - X2/2 - Y2/4
    ("0", "1", "-1/4", "0", "0", "0", "0"),      # E2 = X2 - Y1/4
    ("0", "0", "1", "0", "0", "0", "0"),         # E3 = Y1
    ("0", "0", "1", "1", "0", "0", "0"),         # E4 = Y1 + Y2
    ("0", "0", "0", "0", "1", "0", "0"),         # E5 = Z1
    ("0", "0", "0", "0", "1/2", "1", "0"),       # E6 = Z1/2 + Z2
    ("0", "0", "0", "0", "0", "0", "1"),         # E7 = W
)


def _apply_matrix(matrix, el: GroupElement) -> GroupElement:
    from .rational import mat_vec

    return GroupElement(mat_vec(matrix, el.log))


def _build_example(example_id: str) -> ExampleRecord:
    if example_id in ("I", "III", "V"):
        sc = _seven_dim_algebra()
        X1, X2, Y1, Y2, Z1, Z2, W = range(7)
        g1 = LatticeSpec(
            name=f"{example_id}.1",
            generators=(
                _basis_exp(7, [(X1, 2)]),
                _basis_exp(7, [(X2, 2)]),
                _basis_exp(7, [(Y1, 1)]),
                _basis_exp(7, [(Y2, 1)]),
                _basis_exp(7, [(Z1, 1)]),
                _basis_exp(7, [(Z2, 1)]),
                _basis_exp(7, [(W, 1)]),
            ),
        )
        if example_id == "I":
            gens2 = list(g1.generators)
            gens2[3] = _basis_exp(7, [(Y2, 1), (Z2, "1/2")])
            g2 = LatticeSpec(name="I.2", generators=tuple(gens2))
            gram = _gram_from_orthonormal_rows(
                tuple(tuple("1" if i == j else "0" for j in range(7)) for i in range(7)))
            return ExampleRecord(
                id="I", algebra=sc, metric_gram=gram, orthonormal_basis=None,
                lattices=(g1, g2),
                expected=ExpectedFlags(True, True, False, False, False, verifiable=()),
                notes=("fundamental groups are not isomorphic (shown elsewhere); the "
                       "marked-length NO flag rests on that and is metadata only"),
            )
        if example_id == "III":
            g2 = LatticeSpec(
                name="III.2",
                generators=(
                    _basis_exp(7, [(X1, 1)]),
                    _basis_exp(7, [(X2, 1)]),
                    _basis_exp(7, [(Y1, 2)]),
                    _basis_exp(7, [(Y2, 2)]),
                    _basis_exp(7, [(Z1, 1)]),
                    _basis_exp(7, [(Z2, 1)]),
                    _basis_exp(7, [(W, 1)]),
                ),
            )
            gram = _gram_from_orthonormal_rows(
                tuple(tuple("1" if i == j else "0" for j in range(7)) for i in range(7)))
            return ExampleRecord(
                id="III", algebra=sc, metric_gram=gram, orthonormal_basis=None,
                lattices=(g1, g2),
                expected=ExpectedFlags(False, False, False, False, False,
                                       verifiable=("same_length_spectrum",
                                                   "same_marked_length_spectrum")),
            )
        # Example V
        phi = _columns_to_matrix(_EXAMPLE_V_PHI_COLUMNS)
        gens2 = tuple(_apply_matrix(phi, g) for g in g1.generators)
        g1 = LatticeSpec(name="V.1", generators=g1.generators)
        g2 = LatticeSpec(name="V.2", generators=gens2)
        gram = _gram_from_orthonormal_rows(_EXAMPLE_V_ORTHONORMAL_ROWS)
        autos = {
            "Phi": AutomorphismSpec(name="Phi", matrix=phi),
            "Psi1": AutomorphismSpec(
                name="Psi1", matrix=_columns_to_matrix(_EXAMPLE_V_PSI1_COLUMNS),
                on_quotient=True, expected_isometry=True),
            "Psi2": AutomorphismSpec(
                name="Psi2", matrix=_columns_to_matrix(_EXAMPLE_V_PSI2_COLUMNS),
                on_quotient=True, expected_isometry=False,
                expected_class="ALMOST_INNER"),
        }
        return ExampleRecord(
            id="V", algebra=sc, metric_gram=gram,
            orthonormal_basis=mat(_EXAMPLE_V_ORTHONORMAL_ROWS),
            lattices=(g1, g2), automorphisms=autos,
            expected=ExpectedFlags(False, False, True, True, True,
                                   verifiable=("same_length_spectrum",
                                               "same_marked_length_spectrum")),
        )
    if example_id in ("II", "IV"):
        sc = _five_dim_algebra()
        X1, Y1, Y2, Z, W = range(5)
        gram = _gram_from_orthonormal_rows(
            tuple(tuple("1" if i == j else "0" for j in range(5)) for i in range(5)))
        if example_id == "II":
            g1 = LatticeSpec(
                name="II.1",
                generators=(
                    _basis_exp(5, [(X1, 2)]),
                    _basis_exp(5, [(Y1, 1)]),
                    _basis_exp(5, [(Y2, 1)]),
                    _basis_exp(5, [(Z, 1)]),
                    _basis_exp(5, [(W, 1)]),
                ),
            )
            g2 = LatticeSpec(
                name="II.2",
                generators=(
                    _basis_exp(5, [(X1, 2)]),
                    _basis_exp(5, [(Y1, 1), (Z, "1/2")]),
                    _basis_exp(5, [(Y2, 1)]),
                    _basis_exp(5, [(Z, 1)]),
                    _basis_exp(5, [(W, 1)]),
                ),
            )
            return ExampleRecord(
                id="II", algebra=sc, metric_gram=gram, orthonormal_basis=None,
                lattices=(g1, g2),
                expected=ExpectedFlags(True, True, True, True, False,
                                       verifiable=("same_length_spectrum",
                                                   "same_marked_length_spectrum")),
            )
        g1 = LatticeSpec(
            name="IV.1",
            generators=(
                _basis_exp(5, [(X1, 2)]),
                _basis_exp(5, [(Y1, 1)]),
                _basis_exp(5, [(Y2, 1)]),
                _basis_exp(5, [(Z, 1)]),
                _basis_exp(5, [(W, 1)]),
            ),
        )
        g2 = LatticeSpec(
            name="IV.2",
            generators=(
                _basis_exp(5, [(X1, 1)]),
                _basis_exp(5, [(Y1, 2)]),
                _basis_exp(5, [(Y2, 2)]),
                _basis_exp(5, [(Z, 1)]),
                _basis_exp(5, [(W, 1)]),
            ),
        )
        return ExampleRecord(
            id="IV", algebra=sc, metric_gram=gram, orthonormal_basis=None,
            lattices=(g1, g2),
            expected=ExpectedFlags(False, False, False, False, False,
                                   verifiable=("same_length_spectrum",
                                               "same_marked_length_spectrum")),
        )
    raise UnknownExample(example_id)


class _AffineVec:
    """Vector with entries affine in named unknowns; brackets stay affine
    because unknown coefficients only sit on central directions."""

    def __init__(self, const, lin=None):
        self.const = vec(const)
        self.lin = dict(lin or {})   # name -> coefficient vector

    def bracket(self, sc: StructureConstants, other: "_AffineVec") -> "_AffineVec":
        const = sc.bracket(self.const, other.const)
        lin = {}
        for name, v in self.lin.items():
            lin[name] = sc.bracket(v, other.const)
        for name, v in other.lin.items():
            add = sc.bracket(self.const, v)
            lin[name] = vec([a + b for a, b in zip(lin[name], add)]) if name in lin else add
        for na, va in self.lin.items():
            for nb, vb in other.lin.items():
                if any(c != 0 for c in sc.bracket(va, vb)):
                    raise ValueError("unknown-by-unknown bracket is nonzero")
        return _AffineVec(const, lin)

    def axpy(self, c, other: "_AffineVec") -> "_AffineVec":
        """self + c * other."""
        const = tuple(a + c * b for a, b in zip(self.const, other.const))
        lin = dict(self.lin)
        for name, v in other.lin.items():
            if name in lin:
                lin[name] = tuple(a + c * b for a, b in zip(lin[name], v))
            else:
                lin[name] = tuple(c * b for b in v)
        return _AffineVec(const, lin)

    def substitute(self, values: dict):
        out = list(self.const)
        for name, v in self.lin.items():
            c = values[name]
            if c:
                out = [a + c * b for a, b in zip(out, v)]
        return tuple(out)


def _solve_affine_images(sc: StructureConstants, images: dict, unknowns: list):
    """Pin unknown central coefficients by exact bracket preservation.

    images: basis index -> _AffineVec for the generating directions; the
    remaining basis images are derived through bracket words.  Returns the
    full column list or None when the linear system is inconsistent.
    """
    from .rational import solve as rsolve

    full = dict(images)
    # derive images of bracket-generated basis vectors from the table
    progress = True
    while progress and len(full) < sc.dim:
        progress = False
        for i in range(sc.dim):
            for j in range(sc.dim):
                if i in full and j in full:
                    b = sc.bracket(sc.basis_vector(i), sc.basis_vector(j))
                    nz = [k for k in range(sc.dim) if b[k] != 0]
                    if len(nz) == 1 and nz[0] not in full and b[nz[0]] == 1:
                        full[nz[0]] = full[i].bracket(sc, full[j])
                        progress = True
    if len(full) < sc.dim:
        raise ValueError("generating directions do not span the algebra")
    # bracket-preservation equations, affine in the unknowns
    rows, rhs = [], []
    for i in range(sc.dim):
        for j in range(i + 1, sc.dim):
            diff = full[i].bracket(sc, full[j])
            bij = sc.bracket(sc.basis_vector(i), sc.basis_vector(j))
            for k in range(sc.dim):
                if bij[k]:
                    diff = diff.axpy(-bij[k], full[k])
            for coord in range(sc.dim):
                row = tuple(diff.lin.get(name, (F(0),) * sc.dim)[coord] for name in unknowns)
                rows.append(row)
                rhs.append(-diff.const[coord])
    sol = rsolve(rows, tuple(rhs))
    if sol is None:
        return None
    values = dict(zip(unknowns, sol))
    return tuple(zip(*[full[i].substitute(values) for i in range(sc.dim)]))


def example_ii_family(bound: int, quotient_of=None):
    """The integer-parameter isomorphism family for the 5-dim pair.

    Yields ((signs, h1..h4), matrix).  Matrices act on the full algebra,
    with central corrections solved exactly per parameter tuple; tuples
    whose correction system is inconsistent are skipped.  The family's
    side constraint h3^2 + h4^2 != 0 is applied.  With `quotient_of` a
    SubmersionData, the candidates are produced directly on the quotient.
    """
    sc = _five_dim_algebra()
    X1, Y1, Y2, Z, W = range(5)
    half = F(1, 2)
    rng_h = range(-bound, bound + 1)
    for ex_ in (1, -1):
        for ey1 in (1, -1):
            for ey2 in (1, -1):
                for h1 in rng_h:
                    for h2 in rng_h:
                        for h3 in rng_h:
                            for h4 in rng_h:
                                if h3 * h3 + h4 * h4 == 0:
                                    continue
                                params = {"ex": ex_, "ey1": ey1, "ey2": ey2,
                                          "h1": h1, "h2": h2, "h3": h3, "h4": h4}
                                if quotient_of is not None:
                                    yield params, _example_ii_quotient_matrix(
                                        quotient_of, params)
                                    continue
                                images = {
                                    X1: _AffineVec(
                                        (ex_, half * h3, half * h4, 0, 0),
                                        {"a1": (0, 0, 0, 1, 0), "a2": (0, 0, 0, 0, 1)}),
                                    Y1: _AffineVec(
                                        (0, ey1, h1, half * ey1 + h2, 0),
                                        {"a3": (0, 0, 0, 0, 1)}),
                                    Y2: _AffineVec(
                                        (0, 0, ey2, 0, 0),
                                        {"a4": (0, 0, 0, 1, 0), "a5": (0, 0, 0, 0, 1)}),
                                }
                                m = _solve_affine_images(sc, images,
                                                         ["a1", "a2", "a3", "a4", "a5"])
                                if m is not None:
                                    yield params, m


def _example_ii_quotient_matrix(sub, params):
    """Quotient-level family member; free central shears set to zero.

    The factorization verdict is invariant in those directions: shears
    into [x, g] are absorbed by the almost-inner factor, and the fatal
    norm excess |Phi1(X1)|^2 >= 1 + (h3^2 + h4^2)/4 has no central part.
    """
    ey1 = params["ey1"]
    cols = (
        (params["ex"], F(params["h3"], 2), F(params["h4"], 2), 0),
        (0, ey1, params["h1"], F(ey1, 2) + params["h2"]),
        (0, 0, params["ey2"], 0),
        (0, 0, 0, params["ex"] * ey1),
    )
    return tuple(zip(*[vec(c) for c in cols]))


_CACHE: dict = {}

EXAMPLE_IDS = ("I", "II", "III", "IV", "V")


def load_example(example_id: str) -> ExampleRecord:
    if example_id not in EXAMPLE_IDS:
        raise UnknownExample(example_id)
    if example_id not in _CACHE:
        _CACHE[example_id] = _build_example(example_id)
    return _CACHE[example_id]


def expected_matrix() -> dict:
    """Asserted property flags per example, with the verifiable subset marked."""
    return {eid: load_example(eid).expected for eid in EXAMPLE_IDS}
