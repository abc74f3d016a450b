"""Length spectra: closed forms, the step reduction, multiplicities, comparisons.

Closed-form lengths are exact symbolic values sqrt(q0 + q1 pi + q2 pi^2)
with rational q's, so set comparisons never go through floats.  Noncentral
three-step lengths come exclusively from the quotient reduction; central
classes report guaranteed lengths only and are flagged incomplete.
Numerical shooting cross-checks the closed forms but never feeds them.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import StructureConstants, Subspace, is_strictly_nonsingular
from .geometry import (
    AdaptedFrame,
    MetricSpec,
    SubmersionData,
    Trajectory,
    float_bch,
    integrate_geodesic,
    log_distance,
    translation_defect,
)
from .group import (
    CanonicalWord,
    ConjugacyClass,
    GroupElement,
    LatticeContext,
    LatticeSpec,
    enumerate_classes,
)
from .rational import Vec, is_zero_vec, nullspace, solve, vec, zero_vec

_SQRT_GUARD = 1e-9


class NotAFactorGroup(ValueError):
    pass


class HypothesisFails(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True, order=False)
class LengthValue:
    """Exact length sqrt(q0 + q1 pi + q2 pi^2) with rational coefficients."""

    q0: Fraction = Fraction(0)
    q1: Fraction = Fraction(0)
    q2: Fraction = Fraction(0)

    @classmethod
    def sqrt_of(cls, q0, q1=0, q2=0) -> "LengthValue":
        return cls(Fraction(q0), Fraction(q1), Fraction(q2))

    def squared(self):
        return (self.q0, self.q1, self.q2)

    def value(self) -> float:
        return math.sqrt(float(self.q0) + float(self.q1) * math.pi
                         + float(self.q2) * math.pi ** 2)

    def compose(self, other: "LengthValue") -> "LengthValue":
        """Pythagorean composition sqrt(a^2 + b^2) of exact lengths."""
        return LengthValue(self.q0 + other.q0, self.q1 + other.q1, self.q2 + other.q2)

    def is_zero(self) -> bool:
        return self.q0 == 0 and self.q1 == 0 and self.q2 == 0

    def symbolic(self) -> str:
        from .rational import fmt_frac

        parts = []
        if self.q0:
            parts.append(fmt_frac(self.q0))
        if self.q1:
            parts.append(f"{fmt_frac(self.q1)}*pi")
        if self.q2:
            parts.append(f"{fmt_frac(self.q2)}*pi^2")
        inner = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        if self.q1 == 0 and self.q2 == 0:
            root = _exact_sqrt(self.q0)
            if root is not None:
                return fmt_frac(root)
        return f"sqrt({inner})"

    def __lt__(self, other):
        a, b = self.value(), other.value()
        if abs(a - b) > 1e-12 * max(1.0, abs(a), abs(b)):
            return a < b
        return self.squared() < other.squared()

    def __le__(self, other):
        return self == other or self < other


def _exact_sqrt(q: Fraction):
    from math import isqrt

    if q < 0:
        return None
    np_, dp = isqrt(q.numerator), isqrt(q.denominator)
    if np_ * np_ == q.numerator and dp * dp == q.denominator:
        return Fraction(np_, dp)
    return None


@dataclass(frozen=True)
class TwoStepLengthData:
    """V*/Z*/Z** split of a two-step log with exact squared norms."""

    vstar: tuple
    zstar: tuple
    zstarstar: tuple
    vstar_norm2: Fraction
    zstar_norm2: Fraction
    zss_norm2: Fraction


@dataclass(frozen=True)
class PeriodSet:
    certified: tuple            # LengthValue, guaranteed periods
    complete: bool              # certified is the full period set
    lower: LengthValue          # every period lies in [lower, upper]
    upper: LengthValue
    data: TwoStepLengthData | None = None
    route: str = "two-step"


class TwoStepEngine:
    """Closed-form period machinery on one two-step group with metric."""

    def __init__(self, sc: StructureConstants, metric: MetricSpec):
        if sc.step > 2:
            raise ValueError("two-step engine needs step <= 2")
        self.sc = sc
        self.metric = metric
        self.centre = sc.center
        rows = [tuple(metric.inner(z, sc.basis_vector(i)) for i in range(sc.dim))
                for z in self.centre.rows]
        self.vcomp = nullspace(rows) if rows else \
            [sc.basis_vector(i) for i in range(sc.dim)]
        self.split = _detect_heisenberg_split(sc, metric)

    def decompose(self, x: Vec) -> TwoStepLengthData:
        cols = list(self.vcomp) + list(self.centre.rows)
        coords = solve(tuple(zip(*cols)), x)
        if coords is None:
            raise ValueError("decomposition failed")
        nv = len(self.vcomp)
        vstar = zero_vec(self.sc.dim)
        for c, b in zip(coords[:nv], self.vcomp):
            vstar = tuple(a + c * bb for a, bb in zip(vstar, b))
        zstar = tuple(a - b for a, b in zip(x, vstar))
        bracket_img = [self.sc.bracket(vstar, self.sc.basis_vector(i))
                       for i in range(self.sc.dim)]
        span = [r for r in Subspace(self.sc.dim, bracket_img).rows]
        zss = _orthogonal_residue(self.metric, zstar, span)
        return TwoStepLengthData(
            vstar=vstar, zstar=zstar, zstarstar=zss,
            vstar_norm2=self.metric.norm2(vstar),
            zstar_norm2=self.metric.norm2(zstar),
            zss_norm2=self.metric.norm2(zss),
        )

    def periods(self, x: Vec) -> PeriodSet:
        """Guaranteed periods plus the bracket for one nonidentity element."""
        if is_zero_vec(x):
            raise ValueError("identity has no periods")
        if self.split is not None:
            ps = self.split.periods(x)
            if ps is not None:
                return ps
        d = self.decompose(x)
        lower = LengthValue.sqrt_of(d.vstar_norm2)
        upper = LengthValue.sqrt_of(d.vstar_norm2 + d.zss_norm2)
        if d.zss_norm2 == 0:
            return PeriodSet((lower,), True, lower, upper, d)
        return PeriodSet((upper,), False, lower, upper, d)


def _orthogonal_residue(metric: MetricSpec, v: Vec, span_rows) -> Vec:
    """Component of v orthogonal (in the metric) to the given span."""
    if not span_rows:
        return v
    gram = [[metric.inner(a, b) for b in span_rows] for a in span_rows]
    rhs = tuple(metric.inner(a, v) for a in span_rows)
    coeffs = solve(gram, rhs)
    out = list(v)
    for c, row in zip(coeffs, span_rows):
        for i in range(len(out)):
            out[i] -= c * row[i]
    return tuple(out)


class _HeisenbergSplit:
    """Riemannian direct sum H1 + abelian with the normalized H1 metric.

    Supplies complete period sets: the classical central length set on the
    H1 factor and Pythagorean composition with the flat factor.
    """

    def __init__(self, sc, metric, h_basis, r_basis, unit_central):
        self.sc = sc
        self.metric = metric
        self.h_space = Subspace.span(sc.dim, h_basis)
        self.r_space = Subspace.span(sc.dim, r_basis)
        self.h_basis = h_basis
        self.r_basis = r_basis
        self.unit_central = unit_central

    def components(self, x: Vec):
        cols = list(self.h_basis) + list(self.r_basis)
        coords = solve(tuple(zip(*cols)), x)
        if coords is None:
            return None
        nh = len(self.h_basis)
        h = zero_vec(self.sc.dim)
        for c, b in zip(coords[:nh], self.h_basis):
            h = tuple(a + c * bb for a, bb in zip(h, b))
        r = tuple(a - b for a, b in zip(x, h))
        return h, r

    def h_factor_periods(self, h: Vec):
        """Complete period set of the H1 component, or None if unavailable."""
        centre_comp = _orthogonal_residue(self.metric, h, self._noncentral_rows())
        noncentral = tuple(a - b for a, b in zip(h, centre_comp))
        if not is_zero_vec(noncentral):
            return [LengthValue.sqrt_of(self.metric.norm2(noncentral))]
        c2 = self.metric.norm2(h)
        c = _exact_sqrt(c2)
        if c is None:
            return None
        out = [LengthValue.sqrt_of(c2)]
        k = 1
        while True:
            # k < c / (2 pi), guarded away from the boundary
            boundary = float(c) / (2 * math.pi)
            if k > boundary - _SQRT_GUARD:
                if abs(k - boundary) < _SQRT_GUARD:
                    raise NoConvergence("winding bound too close to the cutoff")
                break
            out.append(LengthValue.sqrt_of(0, 4 * k * c, -4 * k * k))
            k += 1
        return out

    def periods(self, x: Vec):
        comps = self.components(x)
        if comps is None:
            return None
        h, r = comps
        lam2 = LengthValue.sqrt_of(self.metric.norm2(r))
        if is_zero_vec(h):
            vals = (lam2,)
        else:
            hp = self.h_factor_periods(h)
            if hp is None:
                return None
            vals = tuple(sorted(p.compose(lam2) for p in hp))
        lower = min(vals)
        upper = max(vals)
        return PeriodSet(vals, True, lower, upper, None, route="heisenberg-split")

    def _noncentral_rows(self):
        rows = []
        for b in self.h_basis:
            if not self.sc.is_central(b):
                rows.append(b)
        return rows


def _detect_heisenberg_split(sc: StructureConstants, metric: MetricSpec):
    """Exact detection of a normalized H1 x R^k Riemannian direct sum."""
    if sc.step != 2:
        return None
    derived = sc.derived_series[0]
    if derived.dim != 1:
        return None
    centre = sc.center
    rows = [tuple(metric.inner(z, sc.basis_vector(i)) for i in range(sc.dim))
            for z in centre.rows]
    vcomp = nullspace(rows)
    if len(vcomp) != 2:
        return None
    v1, v2 = vcomp
    j = sc.bracket(v1, v2)
    area2 = metric.norm2(v1) * metric.norm2(v2) - metric.inner(v1, v2) ** 2
    if metric.norm2(j) != area2 or is_zero_vec(j):
        return None  # H1 factor is not metrically normalized
    h_basis = [v1, v2, j]
    # flat factor: central directions metric-orthogonal to the h block
    r_rows = [tuple(metric.inner(b, sc.basis_vector(i)) for i in range(sc.dim))
              for b in h_basis]
    r_basis = nullspace(r_rows)
    for r in r_basis:
        if not sc.is_central(r):
            return None
    if len(r_basis) + 3 != sc.dim:
        return None
    return _HeisenbergSplit(sc, metric, h_basis, r_basis, j)


def heisenberg_central_lengths(split: _HeisenbergSplit, x: Vec):
    """Complete closed-form length set of an H1-factor element.

    Central elements get the classical winding set; noncentral ones the
    pinched single period (the bracket collapses when the center is hit).
    """
    comps = split.components(x)
    if comps is None or not is_zero_vec(comps[1]):
        raise NotAFactorGroup("element does not lie in the H1 factor")
    vals = split.h_factor_periods(comps[0])
    if vals is None:
        raise NoConvergence("central norm is not an exact rational")
    return sorted(vals)


# -- environments ------------------------------------------------------------

@dataclass(frozen=True)
class NotApplicable:
    reason: str

    def __bool__(self):
        return False


class SpectrumEnv:
    """Everything needed to compute one lattice's spectrum in one metric."""

    def __init__(self, sc: StructureConstants, metric: MetricSpec, lattice: LatticeSpec,
                 orthonormal_rows=None):
        self.sc = sc
        self.metric = metric
        self.lattice = lattice
        self.ctx = LatticeContext(sc, lattice)
        self.frame = AdaptedFrame(sc, metric, orthonormal_rows=orthonormal_rows)
        if sc.step >= 3:
            verdict = is_strictly_nonsingular(sc)
            if not verdict:
                raise ValueError("three-step spectra need strict nonsingularity")
            self.sub = SubmersionData(sc, metric)
            self.engine = TwoStepEngine(self.sub.qsc, self.sub.qmetric)
            qgens = []
            for g in lattice.generators:
                pe = self.sub.project_element(g)
                if not pe.is_identity():
                    qgens.append(pe)
            self.quotient_lattice = LatticeSpec(name=f"{lattice.name}.quotient",
                                                generators=tuple(qgens))
            self.quotient_ctx = LatticeContext(self.sub.qsc, self.quotient_lattice)
        else:
            self.sub = None
            self.engine = TwoStepEngine(sc, metric)
            self.quotient_lattice = lattice
            self.quotient_ctx = self.ctx
        self._period_cache: dict = {}

    @classmethod
    def for_example(cls, record, lattice_index: int) -> "SpectrumEnv":
        return cls(record.algebra, MetricSpec(record.metric_gram),
                   record.lattices[lattice_index],
                   orthonormal_rows=record.orthonormal_basis)

    def reduce_to_quotient(self, w: CanonicalWord):
        """Quotient element of a noncentral word; NotApplicable when central."""
        el = self.ctx.word_to_element(w)
        if self.sc.is_central(el.log):
            return NotApplicable("central element projects to the identity class data")
        if self.sub is None:
            return el
        return self.sub.project_element(el)

    def class_periods(self, cls: ConjugacyClass) -> PeriodSet:
        x = cls.log
        if self.sc.is_central(x):
            lv = LengthValue.sqrt_of(self.metric.norm2(x))
            return PeriodSet((lv,), False, lv, lv, None, route="central-guaranteed")
        if self.sub is not None:
            xq = self.sub.qmap.project(x)
        else:
            xq = x
        cached = self._period_cache.get(xq)
        if cached is None:
            cached = self.engine.periods(xq)
            self._period_cache[xq] = cached
        return cached

    def block_length_floor(self, block) -> float:
        """Lower bound (float) for every period of classes over this block."""
        exps = [0] * self.lattice.rank
        for idx, val in zip(self.ctx.d1, block):
            exps[idx] = val
        el = self.ctx.word_to_element(CanonicalWord(tuple(exps)))
        x = self.sub.qmap.project(el.log) if self.sub is not None else el.log
        if is_zero_vec(x):
            return 0.0
        eng = self.engine
        d = eng.decompose(x)
        floor2 = d.vstar_norm2
        if eng.split is not None:
            comps = eng.split.components(x)
            if comps is not None:
                # periods compose as lam^2 = lam1^2 + lam2^2 with lam2 exact
                floor2 = d.vstar_norm2 + eng.split.metric.norm2(comps[1])
        return math.sqrt(float(floor2))


@dataclass
class ClassEntry:
    word: tuple
    kind: str                   # central | quotient-central | noncentral
    complete: bool
    route: str


@dataclass
class SpectrumEntry:
    length: LengthValue
    m_total: int
    m_central: int
    m_noncentral: int
    classes: list               # ClassEntry
    window: tuple
    flags: tuple = ()

    def check_split(self):
        return self.m_total == self.m_central + self.m_noncentral


@dataclass
class SpectrumReport:
    entries: list
    window: tuple
    lambda_max: float
    bound_only: list            # (word, lower float, upper float) undecided classes
    notes: tuple = ()


def length_spectrum(env: SpectrumEnv, window, lambda_max: float) -> SpectrumReport:
    """Certified spectrum entries up to lambda_max over the class window."""
    lam_max = float(lambda_max)

    def block_ok(block):
        return env.block_length_floor(block) <= lam_max + 1e-9

    classes = enumerate_classes(env.ctx, window, block_filter=block_ok)
    by_length: dict = {}
    bound_only = []
    notes = set()
    for w, cls in classes.items():
        if cls.representative.exponents == tuple([0] * env.lattice.rank):
            continue
        ps = env.class_periods(cls)
        kind = ("central" if cls.is_central
                else "quotient-central" if cls.is_quotient_central else "noncentral")
        for lv in ps.certified:
            if lv.value() <= lam_max + 1e-12 and not lv.is_zero():
                by_length.setdefault(lv, []).append(
                    ClassEntry(w.exponents, kind, ps.complete, ps.route))
        if not ps.complete and ps.lower.value() <= lam_max:
            bound_only.append((w.exponents, ps.lower.value(), ps.upper.value()))
            notes.add("some classes carry only bound or guaranteed data in range")
        if cls.free_central:
            notes.add("window truncates an unreduced central family")
    entries = []
    bounds = tuple(_window_tuple(env, window))
    for lv in sorted(by_length.keys()):
        members = by_length[lv]
        m_central = sum(1 for c in members if c.kind == "central")
        flags = set()
        if any(not c.complete for c in members):
            flags.add("incomplete-class-data")
        entries.append(SpectrumEntry(
            length=lv,
            m_total=len(members),
            m_central=m_central,
            m_noncentral=len(members) - m_central,
            classes=sorted(members, key=lambda c: c.word),
            window=bounds,
            flags=tuple(sorted(flags)),
        ))
    return SpectrumReport(entries=entries, window=bounds, lambda_max=lam_max,
                          bound_only=sorted(bound_only), notes=tuple(sorted(notes)))


def _window_tuple(env: SpectrumEnv, window):
    if isinstance(window, int):
        return [window] * env.lattice.rank
    return list(window)


def central_multiplicity_check(env1: SpectrumEnv, env2: SpectrumEnv, window: int):
    """Verify equal central sublattices, then equal central counts per length."""
    c1 = _central_generators(env1)
    c2 = _central_generators(env2)
    for g in c1:
        if not env2.ctx.contains(g):
            raise HypothesisFails("central generator of lattice 1 missing from lattice 2")
    for g in c2:
        if not env1.ctx.contains(g):
            raise HypothesisFails("central generator of lattice 2 missing from lattice 1")
    counts1 = _central_counts(env1, window)
    counts2 = _central_counts(env2, window)
    return counts1 == counts2, counts1, counts2


def _central_generators(env: SpectrumEnv):
    return [env.lattice.generators[i] for i in env.ctx.d3]


def _central_counts(env: SpectrumEnv, window: int):
    counts: dict = {}
    for exps in itertools.product(*[range(-window, window + 1) for _ in env.ctx.d3]):
        if not any(exps):
            continue
        v = zero_vec(env.sc.dim)
        for idx, e in zip(env.ctx.d3, exps):
            v = tuple(a + e * b for a, b in zip(v, env.lattice.generators[idx].log))
        lv = LengthValue.sqrt_of(env.metric.norm2(v))
        counts[lv.squared()] = counts.get(lv.squared(), 0) + 1
    return counts


# -- marked comparisons -------------------------------------------------------

@dataclass
class MarkedClassRow:
    word: tuple
    image_word: tuple
    verdict: str                # SAME | DIFFERENT | INCONCLUSIVE
    lengths: tuple
    image_lengths: tuple


@dataclass
class MarkedReport:
    verdict: str                # SAME | DIFFERENT | INCONCLUSIVE
    per_class: list
    notes: tuple = ()
    factorization = None


def compare_marked(env1: SpectrumEnv, env2: SpectrumEnv, phi, window,
                   lambda_max: float | None = None, use_factorization: bool = True):
    """Per-class period comparison under a marking candidate.

    DIFFERENT requires a certified mismatch; SAME needs every class pair to
    carry identical certified sets and identical closed-form data.  For
    two-step pairs (or via the quotient) the factorization criterion makes
    the aggregate decisive.
    """
    from .morphisms import apply_map, is_automorphism

    ok, viol = is_automorphism(env1.sc, phi)
    if not ok:
        raise ValueError(f"marking candidate is not an automorphism: {viol}")
    for g in env1.lattice.generators:
        if not env2.ctx.contains(apply_map(phi, g)):
            raise ValueError("candidate does not map lattice 1 into lattice 2")
    from .rational import mat_inv

    phi_inv = mat_inv(vec_matrix(phi))
    for g in env2.lattice.generators:
        if not env1.ctx.contains(apply_map(phi_inv, g)):
            raise ValueError("candidate does not map lattice 1 onto lattice 2")
    rows = []
    verdicts = set()
    classes = enumerate_classes(env1.ctx, window)
    for w, cls in classes.items():
        if not any(w.exponents):
            continue
        img = env2.ctx.element_to_word(apply_map(phi, GroupElement(cls.log)))
        ps1 = env1.class_periods(cls)
        img_cls = _class_of(env2, img)
        ps2 = env2.class_periods(img_cls)
        if lambda_max is not None and ps1.lower.value() > lambda_max:
            continue
        verdict = _compare_period_sets(ps1, ps2)
        verdicts.add(verdict)
        rows.append(MarkedClassRow(
            word=w.exponents, image_word=img.exponents, verdict=verdict,
            lengths=tuple(l.symbolic() for l in ps1.certified),
            image_lengths=tuple(l.symbolic() for l in ps2.certified)))
    notes = set()
    if "DIFFERENT" in verdicts:
        agg = "DIFFERENT"
    elif "INCONCLUSIVE" in verdicts:
        agg = "INCONCLUSIVE"
    else:
        agg = "SAME"
    report = MarkedReport(verdict=agg, per_class=sorted(rows, key=lambda r: r.word))
    if use_factorization and agg != "DIFFERENT":
        fact = _quotient_factorization(env1, env2, phi, window=2)
        from .morphisms import NoFactorization

        if isinstance(fact, NoFactorization):
            report.verdict = "DIFFERENT"
            notes.add(f"no isometric almost-inner factorization: {fact.reason}")
        else:
            report.verdict = "SAME"
            notes.add("isometric almost-inner factorization certifies the marking")
            report.factorization = fact
    report.notes = tuple(sorted(notes))
    return report


def vec_matrix(m):
    from .rational import mat

    return mat(m)


def _class_of(env: SpectrumEnv, w: CanonicalWord) -> ConjugacyClass:
    el = env.ctx.word_to_element(w)
    return ConjugacyClass(
        representative=w, lattice=env.lattice.name, window=(),
        is_central=env.sc.is_central(el.log),
        is_quotient_central=env.ctx.v1.contains(el.log),
        log=el.log)


def _compare_period_sets(a: PeriodSet, b: PeriodSet) -> str:
    if a.certified == b.certified and a.complete == b.complete \
            and a.lower == b.lower and a.upper == b.upper:
        return "SAME"
    seta, setb = set(a.certified), set(b.certified)
    if a.complete and (setb - seta):
        return "DIFFERENT"
    if b.complete and (seta - setb):
        return "DIFFERENT"
    if a.complete and b.complete and seta != setb:
        return "DIFFERENT"
    # certified values outside the other side's possibility bracket are decisive
    for lv in seta - setb:
        if lv.value() < b.lower.value() - 1e-9 or lv.value() > b.upper.value() + 1e-9:
            return "DIFFERENT"
    for lv in setb - seta:
        if lv.value() < a.lower.value() - 1e-9 or lv.value() > a.upper.value() + 1e-9:
            return "DIFFERENT"
    return "INCONCLUSIVE"


def _quotient_phi(env1: SpectrumEnv, phi):
    """Projection of a three-step marking candidate to the quotient algebra."""
    from .rational import mat, mat_vec

    if env1.sub is None:
        return vec_matrix(phi)
    sub = env1.sub
    cols = []
    for a in range(sub.qsc.dim):
        unit = tuple(Fraction(int(a == b)) for b in range(sub.qsc.dim))
        img = mat_vec(mat(phi), sub.qmap.lift(unit))
        cols.append(sub.qmap.project(img))
    return tuple(zip(*cols))


def _quotient_factorization(env1: SpectrumEnv, env2: SpectrumEnv, phi, window: int = 2):
    from .morphisms import marking_factorization

    phibar = _quotient_phi(env1, phi)
    qsc = env1.sub.qsc if env1.sub is not None else env1.sc
    g1 = env1.engine.metric.gram
    g2 = env2.engine.metric.gram
    return marking_factorization(qsc, phibar, g1, g2,
                                 lattice_ctx=env1.quotient_ctx, window=window)


@dataclass
class OneDimCenterReport:
    verdict: str
    preconditions: dict
    central_generator_condition: bool
    quotient_verdict: str
    notes: tuple = ()


class PreconditionFail(ValueError):
    pass


def one_dim_center_marking(env1: SpectrumEnv, env2: SpectrumEnv, phi,
                           window: int = 2) -> OneDimCenterReport:
    """Marking decision for strictly nonsingular 3-step, 1-dim center pairs.

    Reduces to the quotient factorization plus the central-generator
    condition phi(c) in {c, c^-1}.
    """
    from .morphisms import NoFactorization, apply_map

    pre = {}
    pre["three-step"] = env1.sc.step == 3
    pre["one-dim-center"] = env1.sc.center.dim == 1
    pre["strictly-nonsingular"] = bool(is_strictly_nonsingular(env1.sc))
    c1 = _central_generators(env1)
    c2 = _central_generators(env2)
    pre["equal-central-sublattices"] = (
        all(env2.ctx.contains(g) for g in c1) and all(env1.ctx.contains(g) for g in c2))
    for name, okp in pre.items():
        if not okp:
            raise PreconditionFail(name)
    central_ok = all(
        apply_map(phi, g).log == g.log or apply_map(phi, g).log == tuple(-x for x in g.log)
        for g in c1)
    fact = _quotient_factorization(env1, env2, phi, window=window)
    qv = "DIFFERENT" if isinstance(fact, NoFactorization) else "SAME"
    verdict = "SAME" if (qv == "SAME" and central_ok) else "DIFFERENT"
    notes = ()
    if isinstance(fact, NoFactorization):
        notes = (fact.reason,)
    return OneDimCenterReport(verdict=verdict, preconditions=pre,
                              central_generator_condition=central_ok,
                              quotient_verdict=qv, notes=notes)


# -- numerical shooting -------------------------------------------------------

@dataclass
class ShootResult:
    lam: float
    velocity: tuple
    defect: float


def _batched_rhs(frame: AdaptedFrame, Y):
    """Geodesic right-hand side for a batch of (position, velocity) rows."""
    n = frame.dim
    XI, V = Y[:, :n], Y[:, n:]
    VD = np.einsum("acb,ma,mb->mc", frame.frame_struct, V, V)
    VS = V @ frame.basis.T
    BR1 = np.einsum("mi,mj,ijk->mk", XI, VS, frame.bracket_tensor)
    BR2 = np.einsum("mi,mj,ijk->mk", XI, BR1, frame.bracket_tensor)
    XID = VS + 0.5 * BR1 + BR2 / 12.0
    return np.hstack([XID, VD])


def _batched_endpoints(frame: AdaptedFrame, V0, lams, steps: int):
    """Endpoint states of unit-speed geodesics with per-row periods."""
    m, n = V0.shape
    Y = np.hstack([np.zeros((m, n)), V0])
    h = (np.asarray(lams, dtype=float) / steps)[:, None]
    for _ in range(steps):
        k1 = _batched_rhs(frame, Y)
        k2 = _batched_rhs(frame, Y + 0.5 * h * k1)
        k3 = _batched_rhs(frame, Y + 0.5 * h * k2)
        k4 = _batched_rhs(frame, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return Y


def _orbit_defect_data(frame: AdaptedFrame, g):
    """Float data measuring distance to the ambient conjugacy orbit of g.

    In a two-step group the orbit of log g is the affine space
    log g + [log g, g]; the defect is the metric norm of the component of
    (log x - log g) orthogonal to the bracket image.
    """
    n = frame.dim
    image = [frame.bracket_struct(g, np.eye(n)[i]) for i in range(n)]
    onb = []
    for w in image:
        w = np.array(w, dtype=float)
        for prev in onb:
            w -= (prev @ frame.gram_float @ w) * prev
        nrm = float(np.sqrt(max(w @ frame.gram_float @ w, 0.0)))
        if nrm > 1e-12:
            onb.append(w / nrm)
    return np.array(onb) if onb else np.zeros((0, n))


def _batched_defect(frame: AdaptedFrame, g, orbit_onb, V, lams, steps: int):
    """Endpoint one-jet defects for rows of (velocity, period) candidates.

    Position part: metric distance from log sigma(lam) to the conjugacy
    orbit of g.  Velocity part: left-trivialized velocity mismatch.  A zero
    defect certifies that sigma(lam) itself translates sigma with period
    lam and lies in the class of g.
    """
    n = frame.dim
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    V0 = V / norms
    Y = _batched_endpoints(frame, V0, lams, steps)
    D = Y[:, :n] - g[None, :]
    if len(orbit_onb):
        coeffs = D @ frame.gram_float @ orbit_onb.T
        D = D - coeffs @ orbit_onb
    pos_mis = np.sqrt(np.maximum(np.einsum("mi,ij,mj->m", D, frame.gram_float, D), 0.0))
    vel_mis = np.linalg.norm(Y[:, n:] - V0, axis=1)
    return pos_mis + vel_mis


def shoot_translated(frame: AdaptedFrame, gamma_log, lam_bracket, tol: float = 1e-6,
                     starts: int = 64, seed: int = 0, lam_seeds=(),
                     coarse_steps: int = 48, fine_steps: int = 768):
    """Local search for translated-geodesic periods and initial velocities.

    Multi-start coordinate descent over (unit velocity, period) against the
    endpoint one-jet defect; matching position and left-trivialized
    velocity at s = lam certifies translation for all s by uniqueness of
    geodesics.  Each descent sweep is evaluated as one integration batch.
    Returns all distinct solutions below tol, sorted by period.
    """
    rng = np.random.default_rng(seed)
    g = np.array([float(x) for x in gamma_log], dtype=float)
    n = frame.dim
    lo, hi = float(lam_bracket[0]), float(lam_bracket[1])
    if hi <= 0:
        raise ValueError("period bracket must reach past zero")
    lo = max(lo, 1e-3)

    orbit_onb = _orbit_defect_data(frame, g)
    lam_options = [float(x) for x in lam_seeds] or []
    lam_options += list(np.linspace(lo, hi, 5))
    gcoef = np.asarray(frame.coeffs(g), dtype=float)
    if np.linalg.norm(gcoef) < 1e-12:
        gcoef = np.ones(n)
    u0 = gcoef / np.linalg.norm(gcoef)
    base_dirs = [u0]
    for ang in (15.0, 30.0, 45.0, 60.0, 75.0):
        c, s = math.cos(math.radians(ang)), math.sin(math.radians(ang))
        for i in range(n):
            e = np.eye(n)[i] - (np.eye(n)[i] @ u0) * u0
            nrm = np.linalg.norm(e)
            if nrm > 1e-9:
                base_dirs.append(c * u0 + s * e / nrm)
    seeds = []
    while len(seeds) < starts:
        for d in base_dirs:
            for lam0 in lam_options:
                if len(seeds) < starts:
                    seeds.append((np.array(d, dtype=float), float(lam0)))
        base_dirs = [rng.normal(size=n) for _ in range(8)]

    def evaluate(cv, cl, steps):
        return _batched_defect(frame, g, orbit_onb, np.array(cv), cl, steps)

    def _unit(w):
        return w / np.linalg.norm(w)

    def descend(v, lam, steps, iters):
        # the search lives on the unit sphere: normalizing candidates keeps
        # coordinate steps angular, so shrinking scales can converge; modest
        # initial scales keep each start local to its seed basin
        v = _unit(v)
        best = float(evaluate([v], [lam], steps)[0])
        scale_v, scale_l = 0.1, 0.03 * max(1.0, lam)
        for _ in range(iters):
            cand_v = [v]
            cand_l = [lam]
            for i in range(n):
                for sgn in (1.0, -1.0):
                    w = v.copy()
                    w[i] += sgn * scale_v
                    cand_v.append(_unit(w))
                    cand_l.append(lam)
                    # diagonal (v_i, lam) moves track canyon-shaped valleys
                    for sgl in (1.0, -1.0):
                        lam_c = lam + sgl * scale_l
                        if lam_c > 1e-3:
                            cand_v.append(_unit(w))
                            cand_l.append(lam_c)
            for sgn in (1.0, -1.0):
                lam_c = lam + sgn * scale_l
                if lam_c > 1e-3:
                    cand_v.append(v)
                    cand_l.append(lam_c)
            d = evaluate(cand_v, cand_l, steps)
            k = int(np.argmin(d))
            if k > 0 and d[k] < best - 1e-15:
                dv = cand_v[k] - v
                dl = cand_l[k] - lam
                best, v, lam = float(d[k]), cand_v[k], cand_l[k]
                # pattern acceleration along the accepted move
                mults = [2.0, 4.0, 8.0, 16.0]
                pv = [_unit(v + m * dv) for m in mults]
                pl = [max(lam + m * dl, 1e-3) for m in mults]
                pd = evaluate(pv, pl, steps)
                kk = int(np.argmin(pd))
                if pd[kk] < best - 1e-15:
                    best, v, lam = float(pd[kk]), pv[kk], pl[kk]
            else:
                scale_v *= 0.5
                scale_l *= 0.5
                if scale_v < 1e-11 and scale_l < 1e-11:
                    break
            if best < tol * 1e-2:
                break
        return v, lam, best

    v_arr = np.array([s[0] for s in seeds])
    l_arr = [s[1] for s in seeds]
    coarse = _batched_defect(frame, g, orbit_onb, v_arr, l_arr, coarse_steps)
    order = np.argsort(coarse)
    refined = []
    for idx in order[: max(16, starts // 2)]:
        v, lam, d = descend(v_arr[idx].copy(), l_arr[idx], coarse_steps, iters=80)
        refined.append((d, v, lam))
    refined.sort(key=lambda t: t[0])
    # refine representatives of distinct period basins, not just the best few
    sep = max(0.002 * (hi - lo), 100 * tol)
    picks = []
    for d, v, lam in refined:
        if len(picks) >= 10:
            break
        if d > min(r[0] for r in refined) + 0.5:
            continue
        if all(abs(lam - p[2]) > sep for p in picks) or len(picks) < 3:
            picks.append((d, v, lam))
    results = []
    for d, v, lam in picks:
        v, lam, dfine = descend(v, lam, fine_steps, iters=60)
        if dfine < tol:
            results.append(ShootResult(lam=lam, velocity=tuple(v / np.linalg.norm(v)),
                                       defect=dfine))
    if not results:
        raise NoConvergence(f"no translated geodesic found below tol={tol}")
    results.sort(key=lambda r: r.lam)
    deduped = []
    for r in results:
        if not deduped or abs(r.lam - deduped[-1].lam) > 50 * tol:
            deduped.append(r)
    return deduped
