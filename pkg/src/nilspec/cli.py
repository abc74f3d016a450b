"""Batch command-line front end: verify, lengths, compare, geodesic, catalog.

Exit codes: 0 all checks match expectations, 1 a result mismatched, 2 usage
or input error.  Reports are deterministic: sorted keys, floats at 12
significant digits, canonical class ordering.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import catalog as cat
from . import formats
from .algebra import check_jacobi, is_strictly_nonsingular
from .geometry import (
    AdaptedFrame,
    MetricSpec,
    SubmersionData,
    integrate_geodesic,
    translation_bracket_residual,
    translation_defect,
)
from .group import GroupElement, LatticeContext, ambient_class_counts
from .morphisms import (
    MarkingFactorizer,
    NoFactorization,
    is_almost_inner,
    is_automorphism,
    is_isometric_automorphism,
)
from .rational import frac, mat
from .spectra import (
    LengthValue,
    SpectrumEnv,
    compare_marked,
    length_spectrum,
    one_dim_center_marking,
    shoot_translated,
)

KNOWN_CHECKS = ("jacobi", "step", "nonsingular", "automorphism", "almost-inner",
                "isometry", "factorization")


class UnknownCheck(ValueError):
    pass


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("NILSPEC_THREADS", "1")))
    except ValueError:
        return 1


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _example(args):
    try:
        return cat.load_example(args.example)
    except cat.UnknownExample:
        raise SystemExit(2)


# -- verify -------------------------------------------------------------------

def _check_rows(record, checks, window, bound):
    rows = []

    def add(name, target, passed, expected=True, details=""):
        rows.append({"check": name, "target": target, "passed": bool(passed),
                     "expected": bool(expected), "details": details})

    for check in checks:
        if check not in KNOWN_CHECKS:
            raise UnknownCheck(check)
    sc = record.algebra
    if "jacobi" in checks:
        add("jacobi", record.id, not check_jacobi(sc))
    if "step" in checks:
        add("step", record.id, sc.step == 3, details=f"step={sc.step}")
    if "nonsingular" in checks:
        verdict = is_strictly_nonsingular(sc)
        add("nonsingular", record.id, verdict.value,
            details="sampled" if verdict.sampled_only else "")
    quotient = None
    if {"automorphism", "almost-inner", "isometry", "factorization"} & set(checks) \
            and record.automorphisms:
        quotient = SubmersionData(sc, MetricSpec(record.metric_gram))
    for name, auto in sorted(record.automorphisms.items()):
        target_sc = quotient.qsc if auto.on_quotient else sc
        if "automorphism" in checks:
            ok, viol = is_automorphism(target_sc, auto.matrix)
            add("automorphism", f"{record.id}.{name}", ok,
                details="" if ok else str(viol))
        if "isometry" in checks and auto.expected_isometry is not None:
            gram = quotient.qmetric.gram if auto.on_quotient \
                else record.metric_gram
            got = is_isometric_automorphism(auto.matrix, gram)
            add("isometry", f"{record.id}.{name}", got,
                expected=auto.expected_isometry,
                details=f"isometric={got}, expected={auto.expected_isometry}")
        if "almost-inner" in checks and auto.expected_class is not None:
            env = SpectrumEnv.for_example(record, 0)
            ctx = env.quotient_ctx if auto.on_quotient else env.ctx
            verdict = is_almost_inner(target_sc, auto.matrix, lattice_ctx=ctx,
                                      window=window)
            add("almost-inner", f"{record.id}.{name}",
                verdict.kind == auto.expected_class or
                (auto.expected_class == "ALMOST_INNER" and verdict.kind == "INNER"),
                details=verdict.kind)
    if "factorization" in checks:
        if record.id == "V":
            env1 = SpectrumEnv.for_example(record, 0)
            report = one_dim_center_marking(
                env1, SpectrumEnv.for_example(record, 1),
                record.automorphisms["Phi"].matrix, window=window)
            add("factorization", "V.Phi", report.verdict == "SAME",
                details=report.quotient_verdict)
        elif record.id == "II":
            scanned, admitted = _scan_example_ii(bound, thread_count())
            add("factorization", "II.family", admitted == 0,
                details=f"scanned={scanned}, admitted={admitted}, bound={bound}")
    return rows


def cmd_verify(args) -> int:
    record = _example(args)
    checks = tuple(args.checks.split(",")) if args.checks else KNOWN_CHECKS
    try:
        rows = _check_rows(record, checks, args.window, args.bound)
    except UnknownCheck as exc:
        sys.stderr.write(f"unknown check: {exc}\n")
        return 2
    ok = all(r["passed"] == r["expected"] for r in rows)
    doc = {"example": record.id, "checks": rows, "ok": ok}
    if args.format == "pretty":
        lines = [f"verify {record.id}"]
        for r in rows:
            state = "pass" if r["passed"] == r["expected"] else "FAIL"
            lines.append(f"  {r['check']:<13} {r['target']:<12} {state}  {r['details']}")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, formats.dumps(doc))
    return 0 if ok else 1


def _scan_worker(payload):
    lo, hi, bound, window = payload
    record = cat.load_example("II")
    sc = record.algebra
    sub = SubmersionData(sc, MetricSpec(record.metric_gram))
    env1 = SpectrumEnv.for_example(record, 0)
    gram = env1.engine.metric.gram
    fast = MarkingFactorizer(sub.qsc, gram, gram)
    full = MarkingFactorizer(sub.qsc, gram, gram, lattice_ctx=env1.quotient_ctx,
                             window=window)
    scanned = admitted = 0
    for params, m in cat.example_ii_family(bound, quotient_of=sub):
        if not (lo <= params["h1"] <= hi):
            continue
        scanned += 1
        if isinstance(fast.check(m), NoFactorization):
            continue
        ok, _ = is_automorphism(sub.qsc, m)
        if ok and not isinstance(full.check(m), NoFactorization):
            admitted += 1
    return scanned, admitted


def _scan_example_ii(bound: int, threads: int, window: int = 2):
    """Partition the family scan by the h1 sub-range; order-independent."""
    edges = list(range(-bound, bound + 2))
    if threads <= 1:
        scanned, admitted = _scan_worker((-bound, bound, bound, window))
        return scanned, admitted
    import multiprocessing as mp

    chunks = []
    per = max(1, (2 * bound + 1) // threads)
    lo = -bound
    while lo <= bound:
        hi = min(bound, lo + per - 1)
        chunks.append((lo, hi, bound, window))
        lo = hi + 1
    with mp.Pool(min(threads, len(chunks))) as pool:
        parts = pool.map(_scan_worker, chunks)
    return sum(p[0] for p in parts), sum(p[1] for p in parts)


# -- lengths ------------------------------------------------------------------

def _parse_window(text, rank):
    if "," in text:
        parts = [int(x) for x in text.split(",")]
        if len(parts) != rank:
            raise SystemExit(2)
        return parts
    return int(text)


def cmd_lengths(args) -> int:
    record = _example(args)
    idx = args.lattice - 1
    if idx not in (0, 1):
        sys.stderr.write("lattice index must be 1 or 2\n")
        return 2
    env = SpectrumEnv.for_example(record, idx)
    window = _parse_window(args.window, record.lattices[idx].rank)
    report = length_spectrum(env, window, args.lambda_max)
    doc = {
        "example": record.id,
        "lattice": record.lattices[idx].name,
        "window": list(report.window),
        "lambda_max": formats.fmt_float(report.lambda_max),
        "entries": formats.spectrum_report_doc(report),
        "bound_only_classes": [
            {"word": list(w), "lower": formats.fmt_float(lo),
             "upper": formats.fmt_float(hi)}
            for (w, lo, hi) in report.bound_only],
        "notes": list(report.notes),
    }
    if args.format == "pretty":
        lines = [f"length spectrum {record.id} lattice {args.lattice} "
                 f"(lambda <= {args.lambda_max}, window {args.window})"]
        for e in doc["entries"]:
            lines.append(f"  {e['length']:<16} {e['length_symbolic']:<24} "
                         f"m={e['m_total']} (central {e['m_central']}, "
                         f"noncentral {e['m_noncentral']})")
        _emit(args, "\n".join(lines) + "\n")
    elif args.format == "csv":
        lines = ["length,length_symbolic,m_total,m_central,m_noncentral"]
        for e in doc["entries"]:
            lines.append(f"{e['length']},{e['length_symbolic']},{e['m_total']},"
                         f"{e['m_central']},{e['m_noncentral']}")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, formats.dumps(doc))
    return 0


# -- compare ------------------------------------------------------------------

def cmd_compare(args) -> int:
    record = _example(args)
    expected = record.expected
    if args.mode == "length":
        verdict, doc = _compare_length(record, args)
        expected_same = expected.same_length_spectrum
    else:
        verdict, doc = _compare_marked(record, args)
        expected_same = expected.same_marked_length_spectrum
    doc["verdict"] = verdict
    doc["expected"] = "SAME" if expected_same else "DIFFERENT"
    if args.format == "pretty":
        lines = [f"compare {record.id} mode={args.mode}: {verdict} "
                 f"(expected {doc['expected']})"]
        for note in doc.get("notes", []):
            lines.append(f"  note: {note}")
        if "evidence" in doc:
            lines.append(f"  evidence: {doc['evidence']}")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, formats.dumps(doc))
    if verdict.startswith("INCONCLUSIVE"):
        return 1
    return 0 if (verdict == doc["expected"]) else 1


def _compare_length(record, args):
    sc = record.algebra
    ctx1 = LatticeContext(sc, record.lattices[0])
    ctx2 = LatticeContext(sc, record.lattices[1])
    rows = ambient_class_counts(sc, ctx1, ctx2, args.window)
    mismatched = [r for r in rows if r.count1 != r.count2]
    env1 = SpectrumEnv.for_example(record, 0)
    env2 = SpectrumEnv.for_example(record, 1)
    rep1 = length_spectrum(env1, args.window, args.lambda_max)
    rep2 = length_spectrum(env2, args.window, args.lambda_max)
    tab1 = {e.length: (e.m_total, e.m_central) for e in rep1.entries}
    tab2 = {e.length: (e.m_total, e.m_central) for e in rep2.entries}
    diff_lengths = sorted(
        lv for lv in set(tab1) | set(tab2) if tab1.get(lv) != tab2.get(lv))
    doc = {
        "g_class_counts": formats.conjugacy_report_doc(rows),
        "count_mismatches": len(mismatched),
        "spectrum_differences": [
            {"length": formats.fmt_float(lv.value()),
             "length_symbolic": lv.symbolic(),
             "lattice1": tab1.get(lv, (0, 0))[0],
             "lattice2": tab2.get(lv, (0, 0))[0]}
            for lv in diff_lengths],
        "notes": [],
    }
    if mismatched or diff_lengths:
        if diff_lengths:
            doc["evidence"] = (f"multiplicities differ at "
                               f"{diff_lengths[0].symbolic()}")
        return "DIFFERENT", doc
    doc["notes"].append("equal class counts and certified entries over the window")
    return "SAME", doc


def _compare_marked(record, args):
    env1 = SpectrumEnv.for_example(record, 0)
    env2 = SpectrumEnv.for_example(record, 1)
    notes = []
    if record.id == "V":
        report = one_dim_center_marking(env1, env2,
                                        record.automorphisms["Phi"].matrix,
                                        window=args.window)
        marked = compare_marked(env1, env2, record.automorphisms["Phi"].matrix,
                                window=max(1, args.window - 1),
                                lambda_max=args.lambda_max)
        return report.verdict, {
            "route": "one-dimensional-center reduction",
            "quotient_verdict": report.quotient_verdict,
            "central_generator_condition": report.central_generator_condition,
            "per_class": formats.marked_report_doc(marked)["per_class"][:40],
            "notes": list(report.notes) + list(marked.notes),
        }
    if record.id == "II":
        scanned, admitted = _scan_example_ii(args.bound, thread_count())
        verdict = "DIFFERENT" if admitted == 0 else "INCONCLUSIVE(scan)"
        return verdict, {
            "route": "isomorphism family scan",
            "scanned": scanned,
            "admitted": admitted,
            "bound": args.bound,
            "notes": ["no family member admits an isometric almost-inner "
                      "factorization" if admitted == 0 else "scan found candidates"],
        }
    # no marking candidate: a certified length-spectrum difference decides
    length_verdict, ldoc = _compare_length(record, args)
    if length_verdict == "DIFFERENT":
        notes.append("certified length-spectrum difference rules out any marking")
        return "DIFFERENT", {"route": "length-spectrum difference",
                             "evidence": ldoc.get("evidence", ""), "notes": notes}
    if record.id == "I":
        notes.append("fundamental groups are not isomorphic (catalog metadata, "
                     "asserted, not recomputed); no marking exists")
        return "DIFFERENT(metadata)", {"route": "metadata", "notes": notes}
    return "INCONCLUSIVE(window)", {"route": "none", "notes": notes}


# -- geodesic -----------------------------------------------------------------

def cmd_geodesic(args) -> int:
    record = _example(args)
    metric = MetricSpec(record.metric_gram)
    sc = record.algebra
    if args.quotient:
        sub = SubmersionData(sc, metric)
        frame = AdaptedFrame(sub.qsc, sub.qmetric)
        dim = sub.qsc.dim
    else:
        frame = AdaptedFrame(sc, metric, orthonormal_rows=record.orthonormal_basis)
        dim = sc.dim
    gamma = None
    if args.gamma:
        coords = [frac(x) for x in args.gamma.split(",")]
        if len(coords) != dim:
            sys.stderr.write(f"gamma needs {dim} rational coordinates\n")
            return 2
        gamma = GroupElement(tuple(coords))
    if args.shoot:
        if gamma is None:
            sys.stderr.write("--shoot requires --gamma\n")
            return 2
        from .rational import fmt_frac
        from .spectra import TwoStepEngine

        engine = TwoStepEngine(sub.qsc if args.quotient else sc, frame.metric)
        ps = engine.periods(gamma.log)
        shoot_tol = args.tol if args.tol is not None else 1e-6
        results = shoot_translated(frame, gamma.log,
                                   (ps.lower.value(), max(ps.upper.value(), 0.5)),
                                   tol=shoot_tol, starts=args.starts)
        doc = {
            "gamma": [fmt_frac(x) for x in gamma.log],
            "bracket": [formats.fmt_float(ps.lower.value()),
                        formats.fmt_float(ps.upper.value())],
            "found": [
                {"lambda": formats.fmt_float(r.lam),
                 "defect": formats.fmt_float(r.defect),
                 "velocity": [formats.fmt_float(v) for v in r.velocity]}
                for r in results],
        }
        _emit(args, formats.dumps(doc))
        return 0
    if args.velocity:
        v0 = np.array([float(frac(x)) for x in args.velocity.split(",")])
        if len(v0) != dim:
            sys.stderr.write(f"velocity needs {dim} coefficients\n")
            return 2
    else:
        v0 = np.zeros(dim)
        v0[0] = 1.0
    v0 = v0 / np.linalg.norm(v0)
    traj = integrate_geodesic(frame, v0, args.s_max,
                              tol=args.tol if args.tol is not None else 1e-9)
    lines = ["s," + ",".join(f"x{i}" for i in range(dim)) + ","
             + ",".join(f"v{i}" for i in range(dim)) + ",speed_drift"]
    speed0 = float(np.linalg.norm(traj.v_coeffs[0]))
    for i in range(len(traj.s)):
        drift = abs(float(np.linalg.norm(traj.v_coeffs[i])) - speed0)
        lines.append(formats.fmt_float(traj.s[i]) + ","
                     + ",".join(formats.fmt_float(x) for x in traj.pos_struct[i]) + ","
                     + ",".join(formats.fmt_float(x) for x in traj.v_coeffs[i]) + ","
                     + formats.fmt_float(drift))
    summary = [f"# speed_drift_max,{formats.fmt_float(traj.speed_drift)}"]
    if gamma is not None and not args.shoot:
        lam = args.s_max / 2
        defect = translation_defect(frame, gamma, traj, lam)
        residual = translation_bracket_residual(frame, gamma, traj)
        summary.append(f"# translation_defect_at_half_span,{formats.fmt_float(defect)}")
        summary.append(f"# bracket_residual,{formats.fmt_float(residual)}")
    _emit(args, "\n".join(lines + summary) + "\n")
    return 0


# -- catalog ------------------------------------------------------------------

def cmd_catalog(args) -> int:
    if args.example:
        record = _example(args)
        doc = {
            "id": record.id,
            "algebra": formats.serialize_algebra(record.algebra),
            "metric": {"gram": formats.serialize_matrix(record.metric_gram)},
            "lattices": [formats.serialize_lattice(l) for l in record.lattices],
            "automorphisms": {
                name: {"matrix": formats.serialize_matrix(a.matrix),
                       "on_quotient": a.on_quotient}
                for name, a in sorted(record.automorphisms.items())},
            "expected": vars(record.expected) | {
                "verifiable": list(record.expected.verifiable)},
            "notes": record.notes,
        }
        if record.orthonormal_basis is not None:
            doc["metric"]["orthonormal_basis"] = formats.serialize_matrix(
                record.orthonormal_basis)
        _emit(args, formats.dumps(doc))
        return 0
    matrix = cat.expected_matrix()
    if args.format == "pretty":
        cols = ("p-form", "rep.equiv", "isom.pi1", "same.length", "same.marked")
        lines = ["example  " + "  ".join(f"{c:<11}" for c in cols)]
        for eid in cat.EXAMPLE_IDS:
            f = matrix[eid]
            vals = (f.p_form_spectrum, f.representation_equivalent,
                    f.isomorphic_fundamental_groups, f.same_length_spectrum,
                    f.same_marked_length_spectrum)
            lines.append(f"{eid:<8} " + "  ".join(
                f"{'Yes' if v else 'No':<11}" for v in vals))
        _emit(args, "\n".join(lines) + "\n")
    else:
        doc = {eid: vars(matrix[eid]) | {"verifiable": list(matrix[eid].verifiable)}
               for eid in cat.EXAMPLE_IDS}
        _emit(args, formats.dumps(doc))
    return 0


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nilspec",
                                description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "pretty"),
                        default="json")
    common.add_argument("--out", default=None)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run catalog checks with expectations",
                       parents=[common])
    v.add_argument("example")
    v.add_argument("--checks", default=None,
                   help=f"comma list from {','.join(KNOWN_CHECKS)}")
    v.add_argument("--window", type=int, default=2)
    v.add_argument("--bound", type=int, default=2)
    v.set_defaults(func=cmd_verify)

    l = sub.add_parser("lengths", help="length spectrum of one lattice",
                       parents=[common])
    l.add_argument("example")
    l.add_argument("lattice", type=int)
    l.add_argument("--window", default="2")
    l.add_argument("--lambda-max", dest="lambda_max", type=float, default=3.0)
    l.set_defaults(func=cmd_lengths)

    c = sub.add_parser("compare", help="length or marked-length comparison",
                       parents=[common])
    c.add_argument("example")
    c.add_argument("--mode", choices=("length", "marked"), required=True)
    c.add_argument("--window", type=int, default=2)
    c.add_argument("--lambda-max", dest="lambda_max", type=float, default=2.0)
    c.add_argument("--bound", type=int, default=8)
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("geodesic", help="integrate or shoot geodesics",
                       parents=[common])
    g.add_argument("example")
    g.add_argument("--velocity", default=None, help="frame coefficients, comma list")
    g.add_argument("--gamma", default=None, help="log coordinates, comma list")
    g.add_argument("--s-max", dest="s_max", type=float, default=5.0)
    g.add_argument("--tol", type=float, default=None)
    g.add_argument("--quotient", action="store_true")
    g.add_argument("--shoot", action="store_true")
    g.add_argument("--starts", type=int, default=64)
    g.set_defaults(func=cmd_geodesic)

    k = sub.add_parser("catalog", help="dump catalog records",
                       parents=[common])
    k.add_argument("example", nargs="?", default=None)
    k.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (cat.UnknownExample, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
