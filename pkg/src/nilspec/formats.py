"""JSON schemas for algebras, lattices, metrics, automorphisms, and reports.

Rational values travel as bit-exact strings "p/q"; floats are serialized
at 12 significant digits so identical runs emit identical bytes.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .algebra import StructureConstants
from .group import GroupElement, LatticeSpec
from .geometry import MetricSpec
from .rational import fmt_frac, frac


def fmt_float(x: float) -> str:
    return format(float(x), ".12g")


def parse_algebra(doc: dict) -> StructureConstants:
    """{dim, labels, brackets: [{i, j, coeffs: {k: "p/q"}}]}; antisymmetric
    completion implied.  Indices may be integers or label strings."""
    dim = int(doc["dim"])
    labels = tuple(doc.get("labels") or (f"b{i}" for i in range(dim)))
    index = {lab: i for i, lab in enumerate(labels)}

    def resolve(key):
        if isinstance(key, str) and key in index:
            return index[key]
        return int(key)

    brackets: dict = {}
    for entry in doc.get("brackets", ()):
        i = resolve(entry["i"])
        j = resolve(entry["j"])
        coeffs = {resolve(k): frac(v) for k, v in entry["coeffs"].items()}
        brackets[(i, j)] = coeffs
    return StructureConstants(dim, labels, brackets)


def serialize_algebra(sc: StructureConstants) -> dict:
    entries = []
    for i in range(sc.dim):
        for j in range(i + 1, sc.dim):
            coeffs = {str(k): fmt_frac(sc.c(i, j, k))
                      for k in range(sc.dim) if sc.c(i, j, k) != 0}
            if coeffs:
                entries.append({"i": i, "j": j, "coeffs": coeffs})
    return {"dim": sc.dim, "labels": list(sc.labels), "brackets": entries}


def parse_lattice(doc: dict, name: str = "lattice") -> LatticeSpec:
    """{generators: [[rational strings]], order: optional names}."""
    gens = tuple(GroupElement(tuple(frac(x) for x in row)) for row in doc["generators"])
    return LatticeSpec(name=doc.get("name", name), generators=gens)


def serialize_lattice(lat: LatticeSpec) -> dict:
    return {
        "name": lat.name,
        "generators": [[fmt_frac(x) for x in g.log] for g in lat.generators],
    }


def parse_metric(doc: dict) -> MetricSpec:
    """{gram: [[...]]} or {orthonormal_basis: [[...]]} with rational strings."""
    if "gram" in doc:
        return MetricSpec(tuple(tuple(frac(x) for x in row) for row in doc["gram"]))
    if "orthonormal_basis" in doc:
        return MetricSpec.from_orthonormal_basis(
            tuple(tuple(frac(x) for x in row) for row in doc["orthonormal_basis"]))
    raise ValueError("metric document needs 'gram' or 'orthonormal_basis'")


def serialize_metric(metric: MetricSpec) -> dict:
    return {"gram": [[fmt_frac(x) for x in row] for row in metric.gram]}


def parse_automorphism(doc: dict):
    return tuple(tuple(frac(x) for x in row) for row in doc["matrix"])


def serialize_matrix(m) -> list:
    return [[fmt_frac(Fraction(x)) for x in row] for row in m]


def spectrum_report_doc(report) -> list:
    out = []
    for e in report.entries:
        out.append({
            "length": fmt_float(e.length.value()),
            "length_symbolic": e.length.symbolic(),
            "m_total": e.m_total,
            "m_central": e.m_central,
            "m_noncentral": e.m_noncentral,
            "class_representatives": [list(c.word) for c in e.classes],
            "class_kinds": [c.kind for c in e.classes],
            "flags": list(e.flags),
        })
    return out


def marked_report_doc(report) -> dict:
    return {
        "verdict": report.verdict,
        "notes": list(report.notes),
        "per_class": [
            {
                "word": list(r.word),
                "image_word": list(r.image_word),
                "verdict": r.verdict,
                "lengths": list(r.lengths),
                "image_lengths": list(r.image_lengths),
            }
            for r in report.per_class
        ],
    }


def conjugacy_report_doc(rows) -> list:
    out = []
    for r in rows:
        tag, payload = r.key
        out.append({
            "g_class_invariants": {
                "kind": tag,
                "reduced_log": [fmt_frac(x) for x in payload],
            },
            "count_lattice1": r.count1,
            "count_lattice2": r.count2,
            "representatives": {
                "lattice1": [list(w.exponents) for w in r.representatives1[:4]],
                "lattice2": [list(w.exponents) for w in r.representatives2[:4]],
            },
        })
    return out


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
