"""Built-in acceptance batteries: calibration, properties, appendix.

Every item returns a dict with a PASS/FAIL status and, on failure, a witness
that is enough to re-check the failure by hand.  Randomness comes only from
``numpy.random.default_rng`` seeded by (seed, item name), so reports are
byte-identical for equal seeds.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .base_rings import (WittCoeff, coeff_finite_field, coeff_quotient, make_field, norm_kernel,
                         norm_map, reduction_map)
from .herr import (Instability, build_herr, cohomology_with_evidence, differential_table,
                   finite_koszul_oracle, koszul_cohomology, phi_stable_lattice,
                   solve_phi_minus_one, tensor_divisors)
from .laurent import EXACT, TruncatedSeries
from .lubin_tate import (FrobeniusSeries, build_endomorphism, build_formal_group,
                         delta_norm_parameter)
from .phigamma import (PhiGammaBase, random_module, trivial_module, unramified_module)
from .seriesmat import SeriesMatrix


def _rng(seed: int, name: str):
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def _result(ok: bool, detail=None, witness=None) -> dict:
    out = {"status": "PASS" if ok else "FAIL", "detail": detail if detail is not None else {}}
    if not ok:
        out["witness"] = witness
    return out


def _q3():
    return make_field(3, precision=8)


# ------------------------------------------------------------------ formal groups
def formal_group_calibration(seed: int) -> dict:
    F = _q3()
    mult = build_formal_group(FrobeniusSeries(F, "mult"), 20)
    got = {f"{i},{j}": [int(c) for c in v] for (i, j), v in sorted(mult.as_dict().items())}
    want = {"0,1": [1], "1,0": [1], "1,1": [1]}
    std = build_formal_group(FrobeniusSeries(F, "std"), 20).check()
    ok = got == want and std["ok"]
    return _result(ok, {"mult_coefficients": got, "std_invariants": std},
                   {"expected": want, "got": got, "std_invariants": std})


def _compose(f: TruncatedSeries, g: TruncatedSeries, N: int) -> TruncatedSeries:
    """f(g(T)) mod T^N for g in T A[[T]] (g need not have a unit coefficient)."""
    out = TruncatedSeries.zero(f.ring, N)
    power = TruncatedSeries.one(f.ring, N)
    g = g.truncate(N)
    for k in range(N):
        c = f.coefficient(k)
        if f.ring.is_zero(c) is False:
            out = out + power.scale(c)
        power = (power * g).truncate(N)
    return out


def endomorphism_laws(seed: int, pairs: int = 20, N: int = 40) -> dict:
    rng = _rng(seed, "endomorphism_laws")
    F = _q3()
    detail = {}
    for kind in ("mult", "std"):
        phi = FrobeniusSeries(F, kind)
        G = build_formal_group(phi, N)
        for t in range(pairs):
            a, b = (int(x) for x in rng.integers(0, 3 ** F.precision, size=2))
            ea, eb = (build_endomorphism(phi, x, N).series for x in (a, b))
            # a + b and a b stay exact integers: [x] mod (p^c, T^N) depends on x beyond p^c
            s = build_endomorphism(phi, a + b, N).series
            m = build_endomorphism(phi, a * b, N).series
            add = G.evaluate(ea, eb).truncate(N)
            comp = _compose(ea, eb, N)
            if not (add.equals(s.truncate(N)) and comp.equals(m.truncate(N))):
                return _result(False, witness={"frobenius": kind, "a": a, "b": b,
                                               "sum_law": bool(add.equals(s.truncate(N))),
                                               "product_law": bool(comp.equals(m.truncate(N)))})
        detail[kind] = {"pairs": pairs, "precision": N}
    return _result(True, detail)


def norm_parameter(seed: int, N: int = 40) -> dict:
    F = _q3()
    phi = FrobeniusSeries(F, "mult")
    rep = delta_norm_parameter(phi, N, gammas=[4])
    R = F.ring
    T = TruncatedSeries.T(R, EXACT)
    one_plus_T = TruncatedSeries.from_dict(R, {0: R.one(), 1: R.one()}, EXACT)
    want = (-(T * T) * one_plus_T.invert(N + 2)).truncate(N)
    got = rep["T_K"].truncate(N)
    formula = got.equals(want)
    certs = {k: bool(v["integral"]) for k, v in rep["certificates"].items()}
    ok = formula and all(certs.values()) and rep["valuation_ok"]
    return _result(ok, {"formula": formula, "certificates": certs, "delta_order": rep["delta_order"]},
                   {"T_K": got.to_json(), "expected": want.to_json(), "certificates": certs})


# ------------------------------------------------------------------ Herr complex
TWO_GENERATOR_TABLE = {
    0: [["phi-1"], ["gamma_1-1"], ["gamma_2-1"]],
    1: [["-(gamma_1-1)", "phi-1", "0"], ["-(gamma_2-1)", "0", "phi-1"], ["0", "-(gamma_2-1)", "gamma_1-1"]],
    2: [["gamma_2-1", "-(gamma_1-1)", "phi-1"]],
}


def _small_bases(N=40):
    """(base, label) pairs: Q_3 with one Gamma generator and Q_9 with two."""
    q3, q9 = _q3(), make_field(3, f=2, precision=8)
    out = []
    for a in (1, 2):
        out.append(PhiGammaBase(q3, coeff_quotient(q3, a), "std", N))
        out.append(PhiGammaBase(q9, coeff_quotient(q9, a), "std", N, None, "T"))
    return out


def herr_assembly(seed: int, samples: int = 10) -> dict:
    rng = _rng(seed, "herr_assembly")
    tables = {r: differential_table(3, r) for r in range(3)}
    table_ok = tables == TWO_GENERATOR_TABLE
    if not table_ok:
        return _result(False, witness={"expected": TWO_GENERATOR_TABLE, "got": tables})
    bases = _small_bases()
    for t in range(samples):
        base = bases[t % len(bases)]
        rank = 1 + t % 2
        M = random_module(base, rng, rank)
        verdict = build_herr(M).check_d_squared(rng, 2)
        for r, v in verdict.items():
            if not v["ok"]:
                return _result(False, witness={"sample": t, "q": base.q, "rank": rank, "degree": r,
                                               "module": M.to_json(), **v["witness"]})
    return _result(True, {"table": "matches", "modules": samples})


def _divisors(report):
    return [report[r]["divisors"] for r in sorted(report)]


def cohomology_calibration(seed: int) -> dict:
    F = _q3()
    base = PhiGammaBase(F, coeff_finite_field(F), "std", 40)
    try:
        triv = cohomology_with_evidence(trivial_module(base))
        ur2 = cohomology_with_evidence(unramified_module(base, 2), degrees=[0])
    except Instability as exc:
        return _result(False, witness={"instability": str(exc)})
    dims = [triv[r]["length"] for r in sorted(triv)]
    evidence = all(v["evidence"]["agree"] for v in list(triv.values()) + list(ur2.values()))
    ok = dims == [1, 2, 0] and ur2[0]["length"] == 0 and evidence
    detail = {"trivial": {"dimensions": dims, "divisors": _divisors(triv),
                          "evidence": {r: triv[r]["evidence"] for r in triv}},
              "ur_2": {"h0": ur2[0]["length"], "evidence": ur2[0]["evidence"]}}
    return _result(ok, detail, detail)


def base_change(seed: int, samples: int = 5) -> dict:
    rng = _rng(seed, "base_change")
    F = _q3()
    A, B = coeff_quotient(F, 2), coeff_finite_field(F)
    red = reduction_map(A, B)
    base = PhiGammaBase(F, A, "std", 40)
    from .phigamma import base_change as push

    rows = []
    for t in range(samples):
        M = random_module(base, rng, 1)
        try:
            HA = cohomology_with_evidence(M)
            HB = cohomology_with_evidence(push(M, B, red))
        except Instability as exc:
            return _result(False, witness={"sample": t, "instability": str(exc)})
        row = {"a": M.meta.get("a"), "source": _divisors(HA), "target": _divisors(HB),
               "evidence": {"source": {r: v["evidence"] for r, v in HA.items()},
                            "target": {r: v["evidence"] for r, v in HB.items()}}}
        if not all(v["evidence"]["agree"] for v in list(HA.values()) + list(HB.values())):
            return _result(False, witness={"sample": t, "unstable": row["evidence"]})
        for r in (0, 2):
            want = tensor_divisors(HA[r]["divisors"], A.a, B.a)
            if want != HB[r]["divisors"]:
                return _result(False, witness={"sample": t, "degree": r, "tensored": want,
                                               "base_changed": HB[r]["divisors"], "module": M.to_json()})
        rows.append(row)
    return _result(True, {"samples": rows})


def lattice_lemma(seed: int, samples: int = 10) -> dict:
    rng = _rng(seed, "lattice_lemma")
    F = _q3()
    rows = []
    for t in range(samples):
        a = 1 + t % 2
        base = PhiGammaBase(F, coeff_quotient(F, a), "std", 40)
        M = random_module(base, rng, 1 + (t // 2) % 2)
        lat = phi_stable_lattice(M)
        N = base.N
        d = M.rank
        TmI = SeriesMatrix.identity(M.A, d).shift(lat.m)
        img = M.apply(0, TmI, N)
        need = lat.m + base.q ** (a - 1)
        contracts = img.truncate(need).is_zero()
        y = SeriesMatrix(M.A, M.A.random(rng, (d, 1, 6)), lat.m, N)
        x = solve_phi_minus_one(M, lat, y, N)
        resid = (M.apply(0, x, N) - x - y)
        solved = resid.truncate(min(resid.precision, N)).is_zero()
        rows.append({"a": a, "rank": d, "m": lat.m, "contracts": contracts, "solved": solved})
        if not (contracts and solved):
            return _result(False, witness={"sample": t, **rows[-1], "module": M.to_json()})
    return _result(True, {"samples": rows})


def norm_map_lemma(seed: int) -> dict:
    F = _q3()
    detail = {}
    for name, A in (("F_9/F_3", coeff_finite_field(F)), ("Z/9 rank 2", coeff_quotient(F, 2))):
        W = WittCoeff(F, A, 2)
        R = W.ring
        units = R.units()
        norms = {tuple(int(c) for c in norm_map(W, x)) for x in units}
        target = {tuple(int(c) for c in u) for u in A.units()}
        kernel = {tuple(int(c) for c in x) for x in units
                  if A.equal(norm_map(W, x), A.one())}
        predicted = norm_kernel(W)
        detail[name] = {"units": len(units), "surjective": norms == target,
                        "kernel_size": len(kernel), "kernel_matches": kernel == predicted}
        if norms != target or kernel != predicted:
            return _result(False, witness={name: detail[name],
                                           "missing_norms": sorted(target - norms)[:5],
                                           "kernel_difference": sorted(kernel ^ predicted)[:5]})
    return _result(True, detail)


def obstruction_calculus(seed: int, samples: int = 10) -> dict:
    from .herr import _zero_to, herr_differential
    from .obstruction import (_vec, adjoint_over_I, change_lifts, choose_lifts, lift_torsor,
                              obstruction_cocycle, quotient_extension, split_extension)

    rng = _rng(seed, "obstruction_calculus")
    bases = _small_bases()
    rows = []
    for t in range(samples):
        base = bases[t % len(bases)]
        M = random_module(base, rng, 1 + (t // 4) % 2)
        ext = (quotient_extension if t % 2 else split_extension)(M.A)
        N = base.N
        B = ext.I_ring
        d = M.rank

        def rand_X():
            return [SeriesMatrix(B, B.random(rng, (d, d, 4)), 0, N) for _ in range(M.n + 1)]

        L = change_lifts(choose_lifts(M, ext), ext, rand_X())
        D = obstruction_cocycle(M, ext, L)
        adI = adjoint_over_I(M, ext)
        if M.n + 1 > 2:
            dD = herr_differential(adI, 2, D, N)
            cocycle = _zero_to(dD, min(v.precision for v in dD.values()))
        else:
            cocycle = True  # C^2 is the top term
        X = rand_X()
        D2 = obstruction_cocycle(M, ext, change_lifts(L, ext, X))
        dX = herr_differential(adI, 1, {(i,): _vec(Xi) for i, Xi in enumerate(X)}, N)
        diff = {S: D2[S] - D[S] - dX[S] for S in D}
        shifted = _zero_to(diff, min(v.precision for v in diff.values()))
        rows.append({"q": base.q, "rank": d, "extension": ext.kind, "cocycle": cocycle,
                     "coboundary_shift": shifted, "defect_zero": _zero_to(D, N)})
        if not (cocycle and shifted):
            return _result(False, witness={"sample": t, **rows[-1], "module": M.to_json()})
    F = _q3()
    triv = trivial_module(PhiGammaBase(F, coeff_finite_field(F), "std", 40))
    tors = lift_torsor(triv, "A")
    gens_ok = all(g["commute"] and g["etale"] and g["roundtrip"] for g in tors["generators"])
    ok = tors["count"] == 9 and gens_ok and tors["h1_evidence"]["agree"]
    detail = {"pairs": rows, "trivial_lift_count": tors["count"], "h1_divisors": tors["h1_divisors"],
              "h1_evidence": tors["h1_evidence"],
              "generators_verified": gens_ok}
    return _result(ok, detail, detail)


# ------------------------------------------------------------------ appendix
def _appendix_modules(rng):
    F = _q3()
    from .phigamma import gauge, random_unit_matrix

    out = []
    for a in (1, 2):
        base = PhiGammaBase(F, coeff_quotient(F, a), "std", 30)
        out.append(trivial_module(base) if a == 1 else _twisted(base, 2, 4))
        out.append(random_module(base, rng, 1))
    base = PhiGammaBase(F, coeff_quotient(F, 2), "std", 30)
    out.append(unramified_module(base, 2, r=2))
    tw = gauge(_twisted(base, 1, 4), random_unit_matrix(base.A, 1, rng, precision=base.N))
    tw.label = "random(twisted)"
    out.append(tw)
    return out


def _twisted(base, a, c):
    """Rank 1: phi acts by a, gamma by the constant c (a character of level > 0 when c != 1 mod T)."""
    from .phigamma import rank1_module

    A = base.A
    const = lambda v: TruncatedSeries.constant(A, A.from_int(v), EXACT)
    M = rank1_module(base, const(a), [const(c)])
    M.label = f"twist(phi={a}, gamma={c})"
    return M


def appendix(seed: int) -> dict:
    from .tquasi import (certify_tquasi, equivalence_suite, gamma_minus_one, identity_operator,
                         is_topologically_nilpotent, power_formula_check)

    rng = _rng(seed, "appendix")
    mods = _appendix_modules(rng)
    M0 = mods[1]
    detail = {"witnesses": {}, "power_formula": {}, "equivalences": []}
    for n in (1, 2, 3):
        f = gamma_minus_one(M0, 0, n)
        w = certify_tquasi(f, rng)
        detail["witnesses"][n] = {"verified": w.verified, "a_unit": w.a_unit, "b_in_pi_T": w.b_in_pi_T}
        if not w.ok:
            return _result(False, witness={"n": n, **w.to_json()})
        pf = power_formula_check(f, range(-3, 4), w)
        bad = [k for k, v in pf.items() if not (v["identity"] and v["b_n_in_pi_T"])]
        detail["power_formula"][n] = "all n in [-3, 3]" if not bad else bad
        if bad:
            return _result(False, witness={"n": n, "failing_exponents": bad, "report": pf})
    for M in mods:
        rep = equivalence_suite(M)
        detail["equivalences"].append({"module": M.label, "rank": M.rank, "coeff": M.A.name,
                                       "report": rep})
        if rep["verdict"] != "holds":
            return _result(False, witness={"module": M.to_json(), "report": rep})
    ident = is_topologically_nilpotent(identity_operator(M0))
    detail["identity"] = ident
    ok = ident["verdict"] == "refuted"
    return _result(ok, detail, {"identity": ident})


# ------------------------------------------------------------------ oracle
def _commuting_family(rng, modulus, d, count):
    """Polynomials in one random matrix (plus scalar shifts), so the family commutes."""
    X = rng.integers(0, modulus, size=(d, d))
    I = np.eye(d, dtype=np.int64)
    ops = []
    for _ in range(count):
        c = rng.integers(0, modulus, size=3)
        Y = (c[0] * I + c[1] * X + c[2] * (X @ X)) % modulus
        ops.append(Y)
    if rng.integers(2):
        # I + p X type operators give torsion in the cohomology
        p = min(q for q in range(2, modulus + 1) if modulus % q == 0)
        ops[0] = (I + p * X) % modulus
    return ops


def oracle_cross_validation(seed: int, samples: int = 20) -> dict:
    from .rings import LocalRing

    rng = _rng(seed, "oracle_cross_validation")
    rows = []
    for t in range(samples):
        p, a = ((3, 1), (3, 2), (2, 2), (5, 1))[t % 4]
        d = 1 + int(rng.integers(2))
        n = 1 + int(rng.integers(2 if d == 2 or p ** a > 5 else 3))
        ops = _commuting_family(rng, p ** a, d, n)
        R = LocalRing(p, 1, [-p, 1], a)
        fast = koszul_cohomology(R, [R.from_int(1)[None, None] * np.asarray(M)[..., None] % R.moduli
                                     for M in ops], d)
        slow = finite_koszul_oracle(p ** a, ops, d)
        mismatch = None
        for r in range(n + 1):
            orders = sorted((p ** (a - e) for e in fast.divisors[r]), reverse=True)
            if orders != slow[r]["invariant_factors"]:
                mismatch = {"degree": r, "smith": orders, "enumeration": slow[r]["invariant_factors"]}
                break
        rows.append({"modulus": p ** a, "rank": d, "operators": n,
                     "orders": [slow[r]["order"] for r in range(n + 1)]})
        if mismatch:
            return _result(False, witness={"sample": t, "operators": [M.tolist() for M in ops], **mismatch})
    return _result(True, {"instances": rows})


# ------------------------------------------------------------------ runner
SUITES = {
    "calibration": {
        "formal_group_calibration": formal_group_calibration,
        "norm_parameter": norm_parameter,
        "cohomology_calibration": cohomology_calibration,
        "norm_map_lemma": norm_map_lemma,
    },
    "properties": {
        "endomorphism_laws": endomorphism_laws,
        "herr_assembly": herr_assembly,
        "base_change": base_change,
        "lattice_lemma": lattice_lemma,
        "obstruction_calculus": obstruction_calculus,
        "oracle_cross_validation": oracle_cross_validation,
    },
    "appendix": {
        "appendix": appendix,
    },
}


def _run_item(fn, seed):
    try:
        return fn(seed)
    except Exception as exc:  # a crash is a failure with the exception as witness
        return _result(False, witness={"exception": type(exc).__name__, "message": str(exc)})


def run_suite(name: str, seed: int = 0, jobs: int = 1) -> dict:
    """Run a named battery; items may run concurrently and are merged by item name."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    items = SUITES[name]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {k: pool.submit(_run_item, fn, seed) for k, fn in items.items()}
            results = {k: f.result() for k, f in futures.items()}
    else:
        results = {k: _run_item(fn, seed) for k, fn in items.items()}
    results = dict(sorted(results.items()))
    failed = [k for k, v in results.items() if v["status"] != "PASS"]
    return {"suite": name, "seed": int(seed), "items": results, "failed": failed,
            "status": "pass" if not failed else "fail"}


def suite_log(report: dict) -> str:
    """One PASS/FAIL line per item."""
    return "".join(f"{v['status']} {report['suite']}/{k}\n" for k, v in report["items"].items())
