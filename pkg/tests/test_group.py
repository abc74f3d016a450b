import random
from fractions import Fraction

import pytest

from nilspec.algebra import StructureConstants
from nilspec.group import (
    CanonicalWord,
    GroupElement,
    LatticeContext,
    LatticeSpec,
    NotInLattice,
    UnsupportedStep,
    ambient_class_counts,
    ambient_class_key,
    bch_product,
    commutator,
    conjugate,
    enumerate_classes,
    identity,
    inverse,
    lattice_conjugacy_condition,
    power,
)
from pbw_oracle import Enveloping


def rand_vec(rng, dim, span=5):
    return tuple(Fraction(rng.randint(-span, span), rng.randint(1, 3))
                 for _ in range(dim))


def test_commuting_elements_add(example_v):
    sc = example_v.algebra
    x = GroupElement((0, 0, 0, 0, 1, 0, 2))
    y = GroupElement((0, 0, 0, 0, 0, 3, 1))
    assert bch_product(sc, x, y).log == tuple(a + b for a, b in zip(x.log, y.log))


def test_heisenberg_relation():
    h1 = StructureConstants(3, ("X", "Y", "Z"), {(0, 1): {2: 1}})
    x = GroupElement((1, 0, 0))
    y = GroupElement((0, 1, 0))
    p = bch_product(h1, x, y)
    assert p.log == (Fraction(1), Fraction(1), Fraction(1, 2))
    assert commutator(h1, x, y).log == (Fraction(0), Fraction(0), Fraction(1))


def test_bch_against_enveloping_oracle(example):
    sc = example.algebra
    env = Enveloping(sc)
    rng = random.Random(7)
    for _ in range(25):
        a = rand_vec(rng, sc.dim, 4)
        b = rand_vec(rng, sc.dim, 4)
        got = bch_product(sc, GroupElement(a), GroupElement(b)).log
        assert got == env.group_product_log(a, b)


def test_example_ii_commutator_against_oracle(example_ii):
    # exp(2X1) and exp(Y1) fail to commute by a Z and W correction
    sc = example_ii.algebra
    env = Enveloping(sc)
    a = (Fraction(2), 0, 0, 0, 0)
    b = (0, Fraction(1), 0, 0, 0)
    ab = env.group_product_log(a, b)
    ba = env.group_product_log(b, a)
    assert ab != ba
    comm = commutator(sc, GroupElement(a), GroupElement(b))
    # oracle route: a * b * a^-1 * b^-1
    oracle = env.group_product_log(
        env.group_product_log(env.group_product_log(a, b),
                              tuple(-x for x in a)), tuple(-x for x in b))
    assert comm.log == oracle


def test_bch_associativity_exact(example):
    sc = example.algebra
    rng = random.Random(11)
    for _ in range(500):
        x, y, z = (GroupElement(rand_vec(rng, sc.dim)) for _ in range(3))
        left = bch_product(sc, bch_product(sc, x, y), z)
        right = bch_product(sc, x, bch_product(sc, y, z))
        assert left.log == right.log


def test_inverse_law_exact(example):
    sc = example.algebra
    rng = random.Random(13)
    for _ in range(100):
        x = GroupElement(rand_vec(rng, sc.dim))
        assert bch_product(sc, x, inverse(x)).log == identity(sc.dim).log


def test_conjugation_is_homomorphism(example_v):
    sc = example_v.algebra
    rng = random.Random(17)
    for _ in range(50):
        a, b, x, y = (GroupElement(rand_vec(rng, sc.dim, 3)) for _ in range(4))
        ab = bch_product(sc, a, b)
        assert conjugate(sc, ab, x).log == \
            conjugate(sc, a, conjugate(sc, b, x)).log
        assert conjugate(sc, a, bch_product(sc, x, y)).log == \
            bch_product(sc, conjugate(sc, a, x), conjugate(sc, a, y)).log


def test_conjugating_central_fixes(example_v):
    sc = example_v.algebra
    z = GroupElement((0, 0, 0, 0, 0, 0, Fraction(5, 2)))
    a = GroupElement((1, 2, 0, 1, 0, 0, 0))
    assert conjugate(sc, a, z).log == z.log


def test_unsupported_step_raises():
    # free 4-step on one pair would exceed the truncation; emulate with a
    # filiform 4-step algebra
    sc = StructureConstants(
        5, ("X", "A", "B", "C", "D"),
        {(0, 1): {2: 1}, (0, 2): {3: 1}, (0, 3): {4: 1}})
    assert sc.step == 4
    with pytest.raises(UnsupportedStep):
        bch_product(sc, identity(5), identity(5))


def test_word_round_trip(example):
    sc = example.algebra
    for lat in example.lattices:
        ctx = LatticeContext(sc, lat)
        rng = random.Random(23)
        for _ in range(200):
            w = CanonicalWord(tuple(rng.randint(-5, 5) for _ in range(lat.rank)))
            el = ctx.word_to_element(w)
            assert ctx.element_to_word(el) == w


def test_zero_word_is_identity(example_ii):
    ctx = LatticeContext(example_ii.algebra, example_ii.lattices[0])
    assert ctx.word_to_element(CanonicalWord((0,) * 5)).is_identity()


def test_word_solve_example_ii_generator_product(example_ii):
    # word (1,1,0,0,0): exp(2X1) exp(Y1), log carries the Z/2 correction
    ctx = LatticeContext(example_ii.algebra, example_ii.lattices[0])
    el = ctx.word_to_element(CanonicalWord((1, 1, 0, 0, 0)))
    assert el.log[3] == Fraction(1)  # [2X1, Y1]/2 = Z
    assert ctx.element_to_word(el) == CanonicalWord((1, 1, 0, 0, 0))


def test_not_in_lattice(example_ii):
    ctx = LatticeContext(example_ii.algebra, example_ii.lattices[0])
    with pytest.raises(NotInLattice):
        ctx.element_to_word(GroupElement((Fraction(1), 0, 0, 0, 0)))  # odd X1 part
    with pytest.raises(NotInLattice):
        ctx.element_to_word(GroupElement((0, 0, 0, Fraction(1, 3), 0)))


def test_example_ii_conjugation_closed_forms(ctx_ii_pair, example_ii):
    """BCH reproduces both displayed conjugation laws exactly."""
    sc = example_ii.algebra
    rng = random.Random(31)
    ctx1, ctx2 = ctx_ii_pair
    for _ in range(150):
        n1, m1, m2, k, j = (rng.randint(-3, 3) for _ in range(5))
        nb1, mb1, mb2, kb, jb = (rng.randint(-3, 3) for _ in range(5))
        kp = k + 2 * m1 * nb1 - 2 * n1 * mb1
        jp_common = (j + m2 * mb1 - m1 * mb2 + 2 * k * nb1 - 2 * n1 * kb
                     + 2 * m1 * nb1 ** 2 - 4 * n1 * nb1 * mb1 + 2 * n1 ** 2 * mb1)
        got1 = ctx1.element_to_word(conjugate(
            sc, ctx1.word_to_element(CanonicalWord((nb1, mb1, mb2, kb, jb))),
            ctx1.word_to_element(CanonicalWord((n1, m1, m2, k, j)))))
        assert got1.exponents == (n1, m1, m2, kp, jp_common)
        got2 = ctx2.element_to_word(conjugate(
            sc, ctx2.word_to_element(CanonicalWord((nb1, mb1, mb2, kb, jb))),
            ctx2.word_to_element(CanonicalWord((n1, m1, m2, k, j)))))
        assert got2.exponents == (
            n1, m1, m2, kp, jp_common + (m1 * nb1 - n1 * mb1))


def test_conjugacy_condition_examples(ctx_ii_pair):
    ctx1, _ = ctx_ii_pair
    w = CanonicalWord((0, 1, 0, 1, 0))
    same, witness = lattice_conjugacy_condition(ctx1, w, w)
    assert same and witness is not None

    same, witness = lattice_conjugacy_condition(
        ctx1, CanonicalWord((0, 1, 0, 1, 0)), CanonicalWord((0, 1, 0, 3, 0)))
    assert same
    got = ctx1.element_to_word(conjugate(
        ctx1.sc, witness, ctx1.word_to_element(CanonicalWord((0, 1, 0, 1, 0)))))
    assert got == CanonicalWord((0, 1, 0, 3, 0))

    same, _ = lattice_conjugacy_condition(
        ctx1, CanonicalWord((0, 1, 0, 1, 0)), CanonicalWord((0, 1, 0, 2, 0)))
    assert not same


def test_example_iv_central_fiber_conjugacy(example_iv):
    # exp(7Z) exp(jW) and exp(7Z) exp(j'W): conjugate iff j' = j mod 14 in
    # lattice 1 and mod 7 in lattice 2
    sc = example_iv.algebra
    c1 = LatticeContext(sc, example_iv.lattices[0])
    c2 = LatticeContext(sc, example_iv.lattices[1])
    for j in (0, 1, 6, 13):
        same, _ = lattice_conjugacy_condition(
            c1, CanonicalWord((0, 0, 0, 7, 0)), CanonicalWord((0, 0, 0, 7, j)))
        assert same == (j % 14 == 0)
        same, _ = lattice_conjugacy_condition(
            c2, CanonicalWord((0, 0, 0, 7, 0)), CanonicalWord((0, 0, 0, 7, j)))
        assert same == (j % 7 == 0)


def test_canonical_representative_idempotent_and_invariant(ctx_ii_pair):
    ctx1, _ = ctx_ii_pair
    rng = random.Random(37)
    for _ in range(60):
        w = CanonicalWord(tuple(rng.randint(-3, 3) for _ in range(5)))
        c = ctx1.canonical_representative(w)
        assert ctx1.canonical_representative(c) == c
        delta = GroupElement(rand_vec(rng, 5, 2))
        # conjugating by lattice elements fixes the canonical form
        word_delta = CanonicalWord(tuple(rng.randint(-2, 2) for _ in range(5)))
        moved = ctx1.element_to_word(conjugate(
            ctx1.sc, ctx1.word_to_element(word_delta), ctx1.word_to_element(w)))
        assert ctx1.canonical_representative(moved) == c


def test_nice_reduction_matches_gcd_rule(ctx_ii_pair):
    # with n1 = m1 = 1 the zeta exponent reduces modulo gcd(2n1, 2m1) = 2
    ctx1, _ = ctx_ii_pair
    reps = {ctx1.canonical_representative(CanonicalWord((1, 1, 0, k, 0))).exponents[3]
            for k in range(-6, 7)}
    assert reps == {0, 1}


def test_example_iii_case1_class_count(example_iii):
    # exp(+-Y2) exp(k1 Z1) exp(k2 Z2) exp(j W): 8 distinct classes
    ctx = LatticeContext(example_iii.algebra, example_iii.lattices[0])
    reps = set()
    for sign in (1, -1):
        for k1 in range(-3, 4):
            for k2 in range(-3, 4):
                for j in range(-3, 4):
                    w = CanonicalWord((0, 0, 0, sign, k1, k2, j))
                    reps.add(ctx.canonical_representative(w))
    assert len(reps) == 8


def test_example_iii_case2_class_count(example_iii):
    # exp(+-Y1) exp(k1 Z1) exp(j W): 4 distinct classes (k2 = 0 layer)
    ctx = LatticeContext(example_iii.algebra, example_iii.lattices[0])
    reps = set()
    for sign in (1, -1):
        for k1 in range(-3, 4):
            for j in range(-3, 4):
                w = CanonicalWord((0, 0, sign, 0, k1, 0, j))
                reps.add(ctx.canonical_representative(w))
    assert len(reps) == 4


def test_ambient_class_key_constants(example_ii):
    sc = example_ii.algebra
    # central elements are singleton classes
    k1 = ambient_class_key(sc, GroupElement((0, 0, 0, 0, Fraction(2))))
    k2 = ambient_class_key(sc, GroupElement((0, 0, 0, 0, Fraction(3))))
    assert k1 != k2 and k1[0] == "central"
    # conjugate pairs share keys
    ctx = LatticeContext(sc, example_ii.lattices[0])
    g = ctx.word_to_element(CanonicalWord((1, 1, 0, 2, 1)))
    a = GroupElement((Fraction(1, 2), Fraction(1, 3), 0, 0, 0))
    assert ambient_class_key(sc, g) == ambient_class_key(sc, conjugate(sc, a, g))


def test_paper_conjugator_witness_for_pairing_map(ctx_ii_pair, example_ii):
    """The displayed conjugator a = exp(X1/2) exp((1/8 + k/(2 m1)) Y2)
    carries gamma1 to its lattice-2 partner when m1 != 0."""
    sc = example_ii.algebra
    ctx1, ctx2 = ctx_ii_pair
    for (n1, m1, m2, k, j) in ((0, 1, 0, 2, 1), (1, 2, 1, 3, -2), (-1, 1, 2, 0, 4)):
        g1 = ctx1.word_to_element(CanonicalWord((n1, m1, m2, k, j)))
        g2 = ctx2.word_to_element(CanonicalWord((n1, m1, m2, k, j)))
        a = bch_product(
            sc,
            GroupElement((Fraction(1, 2), 0, 0, 0, 0)),
            GroupElement((0, 0, Fraction(1, 8) + Fraction(k, 2 * m1), 0, 0)))
        assert conjugate(sc, a, g1).log == g2.log


def test_pairing_map_bijective_on_reduced_representatives(ctx_ii_pair):
    """The exponent-preserving correspondence respects conjugacy only on
    zeta-reduced representatives, where it pairs classes bijectively."""
    ctx1, ctx2 = ctx_ii_pair
    import itertools

    classes1 = set()
    classes2 = set()
    for exps in itertools.product(*[range(-2, 3)] * 5):
        classes1.add(ctx1.canonical_representative(CanonicalWord(exps)))
        classes2.add(ctx2.canonical_representative(CanonicalWord(exps)))
    image = {ctx2.canonical_representative(c) for c in classes1}
    assert len(image) == len(classes1)   # injective on classes
    assert image == classes2             # onto the window classes of lattice 2
    preimage = {ctx1.canonical_representative(c) for c in classes2}
    assert preimage == classes1


def test_abelian_lattice_counts():
    sc = StructureConstants(2, ("A", "B"), {})
    lat = LatticeSpec("Z2", (GroupElement((1, 0)), GroupElement((0, 1))))
    ctx1 = LatticeContext(sc, lat)
    ctx2 = LatticeContext(sc, lat)
    rows = ambient_class_counts(sc, ctx1, ctx2, 2)
    assert all(r.count1 == 1 and r.count2 == 1 for r in rows)
    assert len(rows) == 25


def test_enumerate_classes_flags(example_iv):
    ctx = LatticeContext(example_iv.algebra, example_iv.lattices[0])
    classes = enumerate_classes(ctx, 2)
    idword = CanonicalWord((0, 0, 0, 0, 0))
    assert idword in classes
    regular = classes[CanonicalWord((0, 1, 0, 0, 0))]
    assert not regular.is_central and not regular.is_quotient_central
    central = classes[CanonicalWord((0, 0, 0, 0, 1))]
    assert central.is_central and central.free_central
    qcentral = classes[CanonicalWord((0, 0, 0, 1, 0))]
    assert qcentral.is_quotient_central and not qcentral.is_central


def test_powers_stay_on_one_parameter_subgroups(example_v):
    sc = example_v.algebra
    rng = random.Random(41)
    x = GroupElement(rand_vec(rng, 7, 3))
    acc = identity(7)
    for n in range(1, 5):
        acc = bch_product(sc, acc, x)
        assert acc.log == power(x, n).log
