from fractions import Fraction

import pytest

from nilspec.algebra import (
    AntisymmetryViolation,
    NotAnIdeal,
    StructureConstants,
    center,
    check_jacobi,
    derived_series,
    is_strictly_nonsingular,
    quotient_algebra,
    step,
)
from nilspec.rational import Subspace


def abelian(n):
    return StructureConstants(n, None, {})


def heisenberg3():
    return StructureConstants(3, ("X", "Y", "Z"), {(0, 1): {2: 1}})


def test_catalog_algebras_pass_jacobi(example):
    assert check_jacobi(example.algebra) == []


def test_catalog_algebras_are_three_step(example):
    assert example.algebra.step == 3


def test_abelian_series_and_center():
    sc = abelian(4)
    assert check_jacobi(sc) == []
    series = derived_series(sc)
    assert len(series) == 1 and series[0].is_zero()
    assert step(sc) == 1
    assert center(sc).dim == 4


def test_example_v_series_and_center(example_v):
    series = derived_series(example_v.algebra)
    assert [s.dim for s in series] == [3, 1, 0]
    # g^(1) = span{Z1, Z2, W}, g^(2) = span{W}
    z1 = example_v.algebra.basis_vector(4)
    w = example_v.algebra.basis_vector(6)
    assert series[0].contains(z1) and series[0].contains(w)
    assert series[1].contains(w) and not series[1].contains(z1)
    assert center(example_v.algebra).rows == ((Fraction(0),) * 6 + (Fraction(1),),)


def test_example_ii_series(example_ii):
    series = derived_series(example_ii.algebra)
    assert [s.dim for s in series] == [2, 1, 0]


def test_deleting_a_w_bracket_breaks_jacobi(example_v):
    # removing [X2, Z2] = W leaves the Jacobi sum on (X1, X2, Y2) unbalanced
    sc = example_v.algebra
    brackets = {}
    for i in range(sc.dim):
        for j in range(i + 1, sc.dim):
            coeffs = {k: sc.c(i, j, k) for k in range(sc.dim) if sc.c(i, j, k) != 0}
            if coeffs and (i, j) != (1, 5):
                brackets[(i, j)] = coeffs
    broken = StructureConstants(sc.dim, sc.labels, brackets)
    violations = check_jacobi(broken)
    assert violations
    assert any({v.i, v.j, v.l} == {0, 1, 3} for v in violations)


def test_deleting_y1_y2_bracket_keeps_jacobi_but_kills_nonsingularity(example_v):
    # this mutation still satisfies Jacobi; what it destroys is the
    # ad-image condition (ad(Y1) no longer reaches the center)
    sc = example_v.algebra
    brackets = {}
    for i in range(sc.dim):
        for j in range(i + 1, sc.dim):
            coeffs = {k: sc.c(i, j, k) for k in range(sc.dim) if sc.c(i, j, k) != 0}
            if coeffs and (i, j) != (2, 3):
                brackets[(i, j)] = coeffs
    mutated = StructureConstants(sc.dim, sc.labels, brackets)
    assert check_jacobi(mutated) == []
    verdict = is_strictly_nonsingular(mutated)
    assert not verdict.value
    assert verdict.witness is not None


def test_antisymmetry_violation_reported():
    with pytest.raises(AntisymmetryViolation):
        StructureConstants(2, None, {(0, 0): {1: 1}})


def test_strictly_nonsingular_catalog(example):
    verdict = is_strictly_nonsingular(example.algebra)
    assert verdict.value
    assert verdict.sampled_only
    assert len(verdict.certificates) >= 32


def test_abelian_vacuously_nonsingular():
    verdict = is_strictly_nonsingular(abelian(3))
    assert verdict.value and not verdict.sampled_only


def test_heisenberg_plus_line_not_strictly_nonsingular():
    # h1 + R: the 2-dim center exceeds every ad image
    sc = StructureConstants(4, ("X", "Y", "Z", "T"), {(0, 1): {2: 1}})
    assert center(sc).dim == 2
    verdict = is_strictly_nonsingular(sc)
    assert not verdict.value


def test_strict_nonsingularity_certificates_are_exact(example_v):
    sc = example_v.algebra
    verdict = is_strictly_nonsingular(sc, samples=4)
    for x, ys in verdict.certificates[:6]:
        for z, y in zip(sc.center.rows, ys):
            assert sc.bracket(x, y) == z


def test_quotient_by_center_of_example_v(example_v):
    sc = example_v.algebra
    series = derived_series(sc)
    qsc, qm = quotient_algebra(sc, series[1])
    assert qsc.dim == 6
    assert qsc.step == 2
    assert qsc.labels == ("X1", "X2", "Y1", "Y2", "Z1", "Z2")
    # quotient brackets: [X1,Y1] = [X2,Y2] = Z1, [X1,Y2] = Z2
    assert qsc.c(0, 2, 4) == 1 and qsc.c(1, 3, 4) == 1 and qsc.c(0, 3, 5) == 1
    assert qsc.c(2, 3, 4) == 0 and qsc.c(2, 3, 5) == 0
    # step drops by exactly one
    assert sc.step - qsc.step == 1


def test_quotient_center_of_example_iii_quotient(example_iii):
    sc = example_iii.algebra
    qsc, _ = quotient_algebra(sc, derived_series(sc)[1])
    c = center(qsc)
    assert c.dim == 2
    assert c.contains(qsc.basis_vector(4)) and c.contains(qsc.basis_vector(5))


def test_quotient_of_example_iv_is_h1_plus_line(example_iv):
    sc = example_iv.algebra
    qsc, _ = quotient_algebra(sc, derived_series(sc)[1])
    assert qsc.dim == 4 and qsc.step == 2
    # [X1, Y1] = Z is the only bracket
    nonzero = [(i, j) for i in range(4) for j in range(i + 1, 4)
               if any(qsc.c(i, j, k) != 0 for k in range(4))]
    assert nonzero == [(0, 1)]


def test_quotient_by_zero_ideal_is_identity(example_ii):
    sc = example_ii.algebra
    qsc, qm = quotient_algebra(sc, Subspace(sc.dim))
    assert qsc.dim == sc.dim
    for i in range(sc.dim):
        for j in range(sc.dim):
            for k in range(sc.dim):
                assert qsc.c(i, j, k) == sc.c(i, j, k)


def test_quotient_rejects_non_ideal(example_v):
    sc = example_v.algebra
    not_ideal = Subspace.span(sc.dim, [sc.basis_vector(0)])
    with pytest.raises(NotAnIdeal):
        quotient_algebra(sc, not_ideal)


def test_permuted_basis_gives_same_invariants(example_v):
    sc = example_v.algebra
    perm = [6, 4, 0, 2, 5, 1, 3]
    inv = {p: i for i, p in enumerate(perm)}
    brackets = {}
    for i in range(sc.dim):
        for j in range(i + 1, sc.dim):
            coeffs = {inv[k]: sc.c(perm[i], perm[j], k)
                      for k in range(sc.dim) if sc.c(perm[i], perm[j], k) != 0}
            if coeffs:
                brackets[(i, j)] = coeffs
    permuted = StructureConstants(sc.dim, None, brackets)
    assert check_jacobi(permuted) == []
    assert permuted.step == sc.step
    assert [s.dim for s in derived_series(permuted)] == \
        [s.dim for s in derived_series(sc)]
    assert center(permuted).dim == center(sc).dim
    assert bool(is_strictly_nonsingular(permuted)) == bool(is_strictly_nonsingular(sc))
