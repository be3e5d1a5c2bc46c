"""Cohomology, obstruction, appendix and suite commands of the ltpg CLI."""

from __future__ import annotations

import click
import numpy as np

from . import reports
from .base_rings import coeff_from_json, reduction_map
from .cli import _int_list, _module, _prec, emit, loading, main, prec_option
from .herr import (Instability, Unsupported, basechange_compare, cohomology_with_evidence,
                   finite_koszul_oracle, koszul_cohomology, tensor_divisors)


def _precisions(text, prec):
    if text:
        return tuple(_int_list(text))
    base = _prec(prec)
    return (base, 2 * base)


def _cohomology_or_exit(ctx, command, M, degrees, window, precisions):
    try:
        return cohomology_with_evidence(M, degrees, window, precisions)
    except Instability as exc:
        emit(ctx, command, "unstable", {"message": str(exc), "partial": exc.reports})
    except Unsupported as exc:
        raise reports.InputError(f"unsupported: {exc}") from None


def _render(rep):
    return {"h": [rep[r]["length"] for r in sorted(rep)],
            "dimensions": {str(r): v["length"] for r, v in rep.items()},
            "divisors": {str(r): [f"varpi^{t}" for t in v["divisors"]] for r, v in rep.items()}}


@main.command()
@click.argument("module_path", type=click.Path())
@click.option("--degrees", default=None, help="Comma-separated degrees (default: all available).")
@click.option("--window", type=int, default=None, help="Fixed window depth (default: doubling search).")
@click.option("--precisions", default=None, help="Comma-separated T-adic precisions to compare (default: P and 2P).")
@prec_option
@click.pass_context
def herr(ctx, module_path, degrees, window, precisions, prec):
    """Herr cohomology H^i with divisors, witnesses and stabilization evidence."""
    M = _module(module_path, prec)
    degs = _int_list(degrees) if degrees else None
    rep = _cohomology_or_exit(ctx, "herr", M, degs, window, _precisions(precisions, prec))
    agree = all(v["evidence"]["agree"] for v in rep.values())
    emit(ctx, "herr", "ok" if agree else "unstable", {"cohomology": rep, "rendering": _render(rep)})


@main.command("herr-basechange")
@click.argument("module_path", type=click.Path())
@click.option("--to", "target", default="finite_field",
              help="Target ring: finite_field or quotient:<a> (a reduction of the coefficients).")
@click.option("--degrees", default="0,2")
@click.option("--window", type=int, default=None)
@prec_option
@click.pass_context
def herr_basechange(ctx, module_path, target, degrees, window, prec):
    """Compare H^i(M) (x) B with H^i(M (x) B) along a reduction A -> B."""
    M = _module(module_path, prec)
    with loading("--to"):
        kind, _, a = target.partition(":")
        spec = {"kind": kind, "degree": M.A.n // M.base.field.f}
        if a:
            spec["a"] = int(a)
        B = coeff_from_json(M.base.field, spec)
        red = reduction_map(M.A, B)
    degs = _int_list(degrees)
    try:
        cmp = basechange_compare(M, B, red, degs, window)
    except Instability as exc:
        emit(ctx, "herr-basechange", "unstable", {"message": str(exc)})
    except Unsupported as exc:
        raise reports.InputError(f"unsupported: {exc}") from None
    rows = {}
    ok = True
    for r in degs:
        want = tensor_divisors(cmp["source"][r], M.A.a, B.a)
        rows[str(r)] = {"tensored": want, "base_changed": cmp["target"][r], "match": want == cmp["target"][r]}
        ok &= rows[str(r)]["match"]
    emit(ctx, "herr-basechange", "ok" if ok else "refuted", {"degrees": rows, "raw": cmp})


@main.command()
@click.argument("module_path", type=click.Path())
@click.option("--extension", "ext_path", default=None, type=click.Path(),
              help="Extension JSON (kind quotient or split); default split.")
@click.option("--window", type=int, default=None)
@prec_option
@click.pass_context
def obstruct(ctx, module_path, ext_path, window, prec):
    """Obstruction class of lifting M along a square-zero extension."""
    from .obstruction import extension_from_json, obstruction_class

    M = _module(module_path, prec)
    doc = reports.load_json(ext_path, "extension") if ext_path else {"kind": "split"}
    with loading(ext_path or "extension"):
        ext = extension_from_json(M.A, doc)
    try:
        rep = obstruction_class(M, ext, window=window)
    except Instability as exc:
        emit(ctx, "obstruct", "unstable", {"message": str(exc)})
    except Unsupported as exc:
        raise reports.InputError(f"unsupported: {exc}") from None
    if rep["vanishes"]:
        status = "ok"
    elif rep["decidable"] and rep.get("h2_evidence", {}).get("agree", True):
        status = "refuted"
    else:
        status = "inconclusive"
    emit(ctx, "obstruct", status, {"extension": ext.to_json(), **rep})


@main.command()
@click.argument("module_path", type=click.Path())
@click.option("--F", "F", default="A", type=click.Choice(["A", "0"]), help="The A-module F in A[F].")
@click.option("--window", type=int, default=None)
@prec_option
@click.pass_context
def lifts(ctx, module_path, F, window, prec):
    """Lifts of M to A[F] as a torsor under H^1(ad M (x) F)."""
    from .obstruction import lift_torsor

    M = _module(module_path, prec)
    try:
        rep = lift_torsor(M, F, window)
    except Instability as exc:
        emit(ctx, "lifts", "unstable", {"message": str(exc)})
    except Unsupported as exc:
        raise reports.InputError(f"unsupported: {exc}") from None
    ok = all(g["commute"] and g["etale"] and g["roundtrip"] for g in rep["generators"])
    if ok and not rep.get("h1_evidence", {}).get("agree", True):
        emit(ctx, "lifts", "inconclusive", rep)
    emit(ctx, "lifts", "ok" if ok else "refuted", rep)


@main.command()
@click.argument("module_path", type=click.Path())
@click.option("--op", "op_spec", default="gamma:1", help="0, 1, T, phi, gamma:i or gamma:i^n.")
@click.option("--range", "n_range", default="-3:3", help="Exponents for the power formula, lo:hi.")
@click.option("--m", "m_target", type=int, default=2, help="Target T^m for the nilpotence witness.")
@click.option("--equivalences", is_flag=True, help="Also run the continuity equivalence chain.")
@prec_option
@click.pass_context
def tquasi(ctx, module_path, op_spec, n_range, m_target, equivalences, prec):
    """T-quasi-linearity witness, power formula and topological nilpotence of an operator."""
    from .tquasi import (certify_tquasi, equivalence_suite, is_topologically_nilpotent,
                         operator_from_spec, power_formula_check)

    M = _module(module_path, prec)
    with loading("--op/--range"):
        f = operator_from_spec(M, op_spec)
        lo, hi = (int(x) for x in n_range.split(":"))
    w = certify_tquasi(f, np.random.default_rng(0))
    result = {"operator": op_spec, "witness": w.to_json()}
    if w.ok:
        result["power_formula"] = {str(k): v for k, v in power_formula_check(f, range(lo, hi + 1), w).items()}
    result["nilpotence"] = is_topologically_nilpotent(f, None, m_target)
    if equivalences:
        result["equivalences"] = equivalence_suite(M, None, m_target)
    pf_ok = all(v["identity"] and v["b_n_in_pi_T"] for v in result.get("power_formula", {}).values())
    verdict = result["nilpotence"]["verdict"]
    if not w.ok or not pf_ok or verdict == "refuted":
        status = "refuted"
    elif verdict == "inconclusive":
        status = "inconclusive"
    else:
        status = "ok"
    emit(ctx, "tquasi", status, result)


@main.command("oracle-koszul")
@click.argument("matrices_path", type=click.Path())
@click.pass_context
def oracle_koszul(ctx, matrices_path):
    """Koszul cohomology of commuting integer matrices, by Smith form and by enumeration."""
    from .rings import LocalRing, is_prime

    doc = reports.load_json(matrices_path, "matrices")
    with loading(matrices_path):
        m = int(doc["modulus"])
        p = min(q for q in range(2, m + 1) if m % q == 0)
        a = 0
        while p ** a < m:
            a += 1
        if p ** a != m or not is_prime(p):
            raise ValueError("modulus must be a prime power")
        ops = [np.asarray(X, dtype=np.int64) for X in doc["operators"]]
        d = ops[0].shape[0]
        if any(X.shape != (d, d) for X in ops):
            raise ValueError("operators must be square of equal size")
        slow = finite_koszul_oracle(m, ops, d)
        R = LocalRing(p, 1, [-p, 1], a)
        fast = koszul_cohomology(R, [(X[..., None] * R.one_vec) % R.moduli for X in ops], d)
    rows = {}
    ok = True
    for r, v in slow.items():
        orders = sorted((p ** (a - t) for t in fast.divisors[r]), reverse=True)
        rows[str(r)] = {"enumeration": v["invariant_factors"], "smith": orders,
                        "order": v["order"], "match": orders == v["invariant_factors"]}
        ok &= rows[str(r)]["match"]
    emit(ctx, "oracle-koszul", "ok" if ok else "refuted", {"modulus": m, "degrees": rows})


@main.command()
@click.argument("name")
@click.option("--seed", type=int, default=0)
@click.option("--jobs", type=int, default=1, help="Run items concurrently (results merged by name).")
@click.pass_context
def suite(ctx, name, seed, jobs):
    """Run a built-in battery: calibration, properties or appendix."""
    from .suites import SUITES, run_suite, suite_log

    if name not in SUITES:
        raise reports.InputError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}")
    rep = run_suite(name, seed, jobs)
    click.echo(suite_log(rep), err=True, nl=False)
    emit(ctx, "suite", rep["status"], rep, seed=seed)
