"""ltpg command line: every command prints one canonical JSON report.

Exit codes: 0 verified, 1 input error, 2 refuted (witness attached),
3 inconclusive or unstable.
"""

from __future__ import annotations

import json
import sys
from contextlib import contextmanager

import click

from . import reports
from .base_rings import field_from_json
from .laurent import PrecisionError
from .lubin_tate import build_endomorphism, build_formal_group, delta_norm_parameter, frobenius_from_json
from .phigamma import check_module, continuity_level, default_precision, height, module_from_json
from .rings import RingError


class Done(Exception):
    def __init__(self, code):
        self.code = code


def emit(ctx, command, status, result, **extra):
    text = reports.canonical(reports.envelope(command, status, result, **extra))
    out = ctx.obj.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    click.echo(text, nl=False)
    raise Done(reports.exit_code(status))


@contextmanager
def loading(what):
    """Anything raised while reading input is an input error."""
    try:
        yield
    except reports.InputError:
        raise
    except (RingError, KeyError, TypeError, ValueError, IndexError) as exc:
        raise reports.InputError(f"{what}: {type(exc).__name__}: {exc}") from None


def _prec(p):
    return p if p is not None else default_precision()


def _field(path, phi=None):
    doc = reports.load_json(path, "field")
    with loading(path):
        F = field_from_json(doc)
        frob = frobenius_from_json(F, phi or doc.get("frobenius", "std"))
    return F, frob


def _module(path, prec):
    doc = reports.load_json(path, "module")
    with loading(path):
        return module_from_json(doc, prec)


def _value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise reports.InputError(f"expected a comma-separated list of integers, got {text!r}") from None


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--out", type=click.Path(dir_okay=False), help="Also write the report to this file.")
@click.pass_context
def main(ctx, out):
    """Exact Lubin-Tate formal groups, (phi, Gamma)-modules and Herr cohomology."""
    ctx.obj = {"out": out}


prec_option = click.option("--prec", type=int, default=None, help="T-adic precision (default: LTPG_PREC or 40).")
phi_option = click.option("--phi", default=None, help="Frobenius series: std, mult, or a JSON description.")


@main.command()
@click.option("--field", "field_path", required=True, type=click.Path())
@phi_option
@prec_option
@click.pass_context
def fg(ctx, field_path, phi, prec):
    """Formal group law F_phi modulo total degree PREC."""
    F, frob = _field(field_path, _value(phi) if phi else None)
    G = build_formal_group(frob, _prec(prec))
    checks = G.check()
    coeffs = {f"{i},{j}": [int(c) for c in v] for (i, j), v in sorted(G.as_dict().items())}
    emit(ctx, "fg", "ok" if checks["ok"] else "refuted",
         {"frobenius": frob.to_json(), "degree": G.N, "coefficients": coeffs, "checks": checks})


@main.command()
@click.option("--field", "field_path", required=True, type=click.Path())
@phi_option
@click.option("--a", "a_text", required=True, help="Element of O_F: integer, \"pi\" or nested digits (JSON).")
@prec_option
@click.pass_context
def endo(ctx, field_path, phi, a_text, prec):
    """The endomorphism series [a]_phi modulo T^PREC."""
    F, frob = _field(field_path, _value(phi) if phi else None)
    with loading("--a"):
        e = build_endomorphism(frob, _value(a_text), _prec(prec))
    emit(ctx, "endo", "ok", {"a": e.a, "series": e.series.to_json()})


@main.command()
@click.option("--field", "field_path", required=True, type=click.Path())
@phi_option
@click.option("--chi", "chis", multiple=True, help="chi(gamma) values to certify (JSON), repeatable.")
@prec_option
@click.pass_context
def tk(ctx, field_path, phi, chis, prec):
    """The norm parameter T_K = prod [zeta](T) with its stability certificates."""
    F, frob = _field(field_path, _value(phi) if phi else None)
    with loading("--chi"):
        rep = delta_norm_parameter(frob, _prec(prec), [_value(c) for c in chis])
    certs = {k: {"integral": v["integral"], "quotient": v["quotient"].to_json()}
             for k, v in rep["certificates"].items()}
    ok = rep["valuation_ok"] and all(v["integral"] for v in certs.values())
    emit(ctx, "tk", "ok" if ok else "refuted",
         {"T_K": rep["T_K"].to_json(), "delta_order": rep["delta_order"],
          "valuation_ok": rep["valuation_ok"], "certificates": certs})


@main.command()
@click.argument("module_path", type=click.Path())
@prec_option
@click.pass_context
def check(ctx, module_path, prec):
    """Etale and commutation checks for a module."""
    M = _module(module_path, prec)
    rep = check_module(M)
    emit(ctx, "check", "ok" if rep["ok"] else "refuted", rep)


@main.command("height")
@click.argument("module_path", type=click.Path())
@click.option("--bound", type=int, default=None, help="Refute unless the T-height is at most this.")
@prec_option
@click.pass_context
def height_cmd(ctx, module_path, bound, prec):
    """T-height of the Frobenius matrix on the standard lattice."""
    M = _module(module_path, prec)
    try:
        h = height(M.P, M.base.N)
    except RingError as exc:
        emit(ctx, "height", "inconclusive", {"reason": str(exc)})
    if h is None:
        emit(ctx, "height", "refuted", {"height": None, "reason": "Frobenius matrix is not invertible"})
    status = "ok" if bound is None or h <= bound else "refuted"
    emit(ctx, "height", status, {"height": h, "bound": bound})


@main.command()
@click.argument("module_path", type=click.Path())
@click.option("--n", "n_target", type=int, default=1, help="Target T-power in (gamma^(p^s)-1) M in T^n M.")
@click.option("--s-max", type=int, default=None)
@prec_option
@click.pass_context
def level(ctx, module_path, n_target, s_max, prec):
    """Smallest s with (gamma_i^(p^s) - 1) M in T^n M on the standard lattice."""
    M = _module(module_path, prec)
    s = continuity_level(M, n_target, None, s_max)
    emit(ctx, "level", "ok" if s is not None else "inconclusive", {"level": s, "n": n_target})


from . import cli_cohomology  # noqa: E402,F401  (registers the remaining commands)


def run(argv=None) -> int:
    try:
        main.main(args=argv, standalone_mode=False)
    except Done as d:
        return d.code
    except reports.InputError as exc:
        click.echo(reports.canonical(reports.envelope("error", "error", {"message": str(exc)})), nl=False)
        return reports.EXIT_INPUT
    except click.ClickException as exc:
        exc.show()
        return reports.EXIT_INPUT
    except click.exceptions.Abort:
        return reports.EXIT_INPUT
    except PrecisionError as exc:
        click.echo(reports.canonical(reports.envelope("error", "inconclusive", {"message": str(exc)})), nl=False)
        return reports.EXIT_INCONCLUSIVE
    return 0


def entry():
    sys.exit(run())
