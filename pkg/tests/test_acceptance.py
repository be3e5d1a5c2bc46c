"""Acceptance battery: one test per criterion, each with its time budget in seconds.

Every check is exact; the only tolerance is wall-clock time.
"""
import json
import time

import ltpg.herr as herr
from ltpg import suites
from ltpg.reports import canonical, envelope

SEED = 0

BUDGET = {
    "formal_group_calibration": 5,
    "endomorphism_laws": 30,
    "norm_parameter": 10,
    "herr_assembly": 30,
    "cohomology_calibration": 60,
    "base_change": 120,
    "lattice_lemma": 30,
    "norm_map_lemma": 5,
    "obstruction_calculus": 60,
    "appendix": 60,
    "oracle_cross_validation": 30,
}
SUITE_BUDGET = 300


def _item(name):
    for items in suites.SUITES.values():
        if name in items:
            return items[name]
    raise KeyError(name)


def check(name):
    start = time.perf_counter()
    result = suites._run_item(_item(name), SEED)
    elapsed = time.perf_counter() - start
    assert result["status"] == "PASS", result.get("witness")
    assert elapsed < BUDGET[name], f"{name} took {elapsed:.1f}s"
    return result


def test_01_formal_group_calibration():
    check("formal_group_calibration")


def test_02_endomorphism_ring_laws():
    check("endomorphism_laws")


def test_03_norm_parameter_lemma():
    check("norm_parameter")


def test_04_herr_assembly():
    check("herr_assembly")


def test_04_herr_assembly_catches_sign_error(monkeypatch):
    original = herr.koszul_components

    def flipped(n_ops, r):
        out = list(original(n_ops, r))
        if r == 1:
            S, S2, j, sign = out[0]
            out[0] = (S, S2, j, -sign)
        return out

    monkeypatch.setattr(herr, "koszul_components", flipped)
    result = suites._run_item(suites.herr_assembly, SEED)
    assert result["status"] == "FAIL" and result["witness"]


def test_05_cohomology_calibration():
    detail = check("cohomology_calibration")["detail"]
    assert detail["trivial"]["dimensions"] == [1, 2, 0]
    assert detail["ur_2"]["h0"] == 0


def test_06_base_change_instance():
    check("base_change")


def test_07_lattice_lemma():
    check("lattice_lemma")


def test_08_norm_map_lemma():
    check("norm_map_lemma")


def test_09_obstruction_calculus():
    assert check("obstruction_calculus")["detail"]["trivial_lift_count"] == 9


def test_10_appendix_suite():
    check("appendix")


def test_11_oracle_cross_validation():
    check("oracle_cross_validation")


def _evidence_blocks(obj):
    if isinstance(obj, dict):
        if "divisors_by_precision" in obj:
            yield obj
        for v in obj.values():
            yield from _evidence_blocks(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _evidence_blocks(v)


def test_12_determinism_and_stabilization_evidence():
    start = time.perf_counter()
    reports = {}
    for name in sorted(suites.SUITES):
        first = canonical(envelope("suite", "ok", suites.run_suite(name, SEED)))
        second = canonical(envelope("suite", "ok", suites.run_suite(name, SEED)))
        assert first == second, name
        reports[name] = first
    assert time.perf_counter() - start < SUITE_BUDGET
    docs = {k: json.loads(v)["result"] for k, v in reports.items()}
    assert all(d["status"] == "pass" for d in docs.values())
    cohomology_items = [docs["calibration"]["items"]["cohomology_calibration"],
                        docs["properties"]["items"]["base_change"],
                        docs["properties"]["items"]["obstruction_calculus"]]
    for item in cohomology_items:
        blocks = list(_evidence_blocks(item))
        assert blocks
        for b in blocks:
            assert b["agree"]
            assert len(b["divisors_by_precision"]) == 2
    precs = {tuple(sorted(b["divisors_by_precision"], key=int))
             for b in _evidence_blocks(docs["calibration"]["items"]["cohomology_calibration"])}
    assert precs == {("40", "80")}
