"""Command-line front end.

Exit codes: 0 completed analysis (whatever the verdicts), 2 usage errors,
3 model errors, 4 numeric errors.  JSON floats are emitted as the shortest
decimal that round-trips, up to 17 significant digits; the human format
prints 6 and contains every field of the JSON format.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import criteria, poisson, reproduce, simulator
from .criteria import AnalysisOptions
from .errors import (DomainError, HorizonExceeded, ModelSpecError,
                     SingleBirthError, StructureError)
from .modelspec import compile_rate_expression, load_model_file
from .sequences import CoefficientVector, compute_sequences

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_NUMERIC = 4


def _json_floats(obj):
    """Normalize floats for JSON output (17 significant digits, inf/nan as strings)."""
    if isinstance(obj, dict):
        return {k: _json_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_floats(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(format(x, ".17g"))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_floats(v) for v in obj]
    return obj


def emit_json(obj, stream=None) -> None:
    print(json.dumps(_json_floats(obj), indent=2), file=stream or sys.stdout)


def _emit_human(obj, indent: int = 0, stream=None) -> None:
    pad = "  " * indent
    out = stream or sys.stdout
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)):
                print(f"{pad}{k}:", file=out)
                _emit_human(v, indent + 1, out)
            else:
                print(f"{pad}{k}: {_human_scalar(v)}", file=out)
    elif isinstance(obj, list):
        scalars = all(not isinstance(v, (dict, list)) for v in obj)
        if scalars:
            print(pad + ", ".join(_human_scalar(v) for v in obj), file=out)
        else:
            for v in obj:
                _emit_human(v, indent + 1, out)
    else:
        print(pad + _human_scalar(obj), file=out)


def _human_scalar(v) -> str:
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


def emit(obj, fmt: str) -> None:
    if fmt == "human":
        _emit_human(_json_floats(obj))
    else:
        emit_json(obj)


def _load_model(path: str):
    return load_model_file(path)


def _coefficient(preset: str, lam: float) -> CoefficientVector:
    if preset == "zero":
        return CoefficientVector.zero()
    if preset == "plus":
        return CoefficientVector.constant(lam)
    if preset == "minus":
        return CoefficientVector.constant(-lam)
    raise DomainError(f"unknown coefficient preset {preset!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="singlebirth",
                                description="Analysis of upwardly skip-free Markov chains")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_n=True):
        sp.add_argument("--model", required=True, help="model spec file (.toml or .json)")
        if with_n:
            sp.add_argument("--N", type=int, default=1000, help="truncation level")
        sp.add_argument("--format", choices=["json", "human"], default="json")

    sp = sub.add_parser("analyze", help="run the full classification pipeline")
    common(sp)
    sp.add_argument("--exp-lambda", type=float, default=None,
                    help="also evaluate the exponential return-time moment at this rate")

    sp = sub.add_parser("sequences", help="emit the fundamental sequences as CSV")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--sign", choices=["+", "-"], default="-",
                    help="sign of the constant coefficient preset")

    sp = sub.add_parser("poisson", help="solve the Poisson equation on the half line")
    common(sp)
    sp.add_argument("--c-preset", choices=["zero", "plus", "minus"], default="zero")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--f", default="0", help="inhomogeneity as an expression in i")
    sp.add_argument("--g0", type=float, default=0.0)

    sp = sub.add_parser("moments", help="polynomial moments of hitting times")
    common(sp)
    sp.add_argument("--i0", type=int, default=0)
    sp.add_argument("--ell", type=int, default=1)

    sp = sub.add_parser("laplace", help="Laplace transforms of return or life times")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--of", choices=["return", "lifetime"], default="return")

    sp = sub.add_parser("expmoment", help="exponential moments of return or life times")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--of", choices=["return", "lifetime"], default="return")

    sp = sub.add_parser("simulate", help="Monte Carlo estimates from sample paths")
    common(sp, with_n=False)
    sp.add_argument("--start", type=int, default=0)
    sp.add_argument("--stop", nargs="+", required=True,
                    metavar="RULE", help="return0 | hit J | horizon T")
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--level-cap", type=int, default=None)

    sp = sub.add_parser("reproduce", help="run the bundled end-to-end checks")
    sp.add_argument("--filter", default=None, help="only run checks whose key contains this")
    sp.add_argument("--strict", action="store_true", default=True)
    sp.add_argument("--no-strict", dest="strict", action="store_false",
                    help="exit 0 even when checks fail")

    return p


def _parse_stop(tokens) -> simulator.StopRule:
    kind = tokens[0]
    if kind == "return0":
        return simulator.FirstReturnTo(0)
    if kind == "hit":
        if len(tokens) != 2:
            raise DomainError("stop rule 'hit' needs a target state")
        return simulator.FirstHit(int(tokens[1]))
    if kind == "horizon":
        if len(tokens) != 2:
            raise DomainError("stop rule 'horizon' needs a time")
        return simulator.TimeHorizon(float(tokens[1]))
    raise DomainError(f"unknown stop rule {kind!r}")


def _cmd_analyze(args) -> int:
    model, echo = _load_model(args.model)
    opts = AnalysisOptions(N=args.N)
    report = criteria.analyze(model, args.N, opts, exp_lambda=args.exp_lambda,
                              model_echo=echo)
    emit(report.to_dict(), args.format)
    return EXIT_OK


def _cmd_sequences(args) -> int:
    model, _ = _load_model(args.model)
    lam = args.lam if args.sign == "+" else -args.lam
    c = CoefficientVector.zero() if args.lam == 0.0 else CoefficientVector.constant(lam)
    table = compute_sequences(model, c, args.N)
    F, m, d = table.F0_floats(), table.m_floats(), table.d_floats()
    print("n,F0_sign,F0_log,F0,m_sign,m_log,m,d_sign,d_log,d")

    def dec(x: float) -> str:
        return format(x, ".17g") if math.isfinite(x) else ""

    for n in range(args.N + 1):
        print(f"{n},{table.F0_signs[n]},{dec(float(table.F0_logs[n]))},{dec(F[n])},"
              f"{table.m_signs[n]},{dec(float(table.m_logs[n]))},{dec(m[n])},"
              f"{table.d_signs[n]},{dec(float(table.d_logs[n]))},{dec(d[n])}")
    return EXIT_OK


def _cmd_poisson(args) -> int:
    model, _ = _load_model(args.model)
    c = _coefficient(args.c_preset, args.lam)
    f_fn = compile_rate_expression(args.f)
    sol = poisson.solve_poisson(poisson.PoissonProblem(model, c, f_fn, args.g0, args.N))
    payload = {"g": list(sol.g), "residual": sol.residual, "overflow": sol.overflow}
    if sol.overflow:
        payload["g_scaled"] = [{"sign": v.sign, "log": v.log_mag} for v in sol.g_scaled]
        payload["note"] = "some entries exceed double range; decimals suppressed there"
    emit(payload, args.format)
    return EXIT_OK


def _cmd_moments(args) -> int:
    model, _ = _load_model(args.model)
    opts = AnalysisOptions(N=args.N)
    y, E = criteria.hitting_moment(model, args.i0, args.ell, args.N, opts)
    emit({"i0": args.i0, "ell": args.ell, "E_i0": y,
          "E": E.to_list(min(args.N, 50)), "trusted_upto": E.trusted_upto}, args.format)
    return EXIT_OK


def _cmd_laplace(args) -> int:
    model, _ = _load_model(args.model)
    opts = AnalysisOptions(N=args.N)
    if args.of == "return":
        E = criteria.laplace_return(model, args.lam, args.N, opts)
    else:
        E = criteria.lifetime_transforms(model, args.lam, args.N, "laplace", opts)
    emit({"lambda": args.lam, "of": args.of, "quantity": E.quantity,
          "E": E.to_list(min(args.N, 50)), "trusted_upto": E.trusted_upto}, args.format)
    return EXIT_OK


def _cmd_expmoment(args) -> int:
    model, _ = _load_model(args.model)
    opts = AnalysisOptions(N=args.N)
    if args.of == "return":
        feasible, E, dt = criteria.exp_moment_return(model, args.lam, args.N, opts)
        emit({"lambda": args.lam, "of": args.of, "feasible": feasible.to_dict(),
              "d_tilde": dt.to_dict(), "E": E.to_list(min(args.N, 50)),
              "trusted_upto": E.trusted_upto}, args.format)
    else:
        E = criteria.lifetime_transforms(model, args.lam, args.N, "exp_moment", opts)
        emit({"lambda": args.lam, "of": args.of, "quantity": E.quantity,
              "E": E.to_list(min(args.N, 50))}, args.format)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    model, _ = _load_model(args.model)
    stop = _parse_stop(args.stop)
    est = simulator.estimate_stop(model, args.start, stop, args.samples,
                                  rng_seed=args.seed, level_cap=args.level_cap)
    emit({"mean": est.mean, "std_error": est.std_error, "samples": est.samples,
          "capped_fraction": est.capped_fraction}, args.format)
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    ok = reproduce.run_suite(args.filter)
    if args.strict and not ok:
        return 1
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analyze,
    "sequences": _cmd_sequences,
    "poisson": _cmd_poisson,
    "moments": _cmd_moments,
    "laplace": _cmd_laplace,
    "expmoment": _cmd_expmoment,
    "simulate": _cmd_simulate,
    "reproduce": _cmd_reproduce,
}


def run(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except (ModelSpecError, StructureError, DomainError, HorizonExceeded) as exc:
        emit_json({"error": type(exc).__name__, "message": str(exc)}, stream=sys.stderr)
        return EXIT_MODEL
    except SingleBirthError as exc:
        emit_json({"error": type(exc).__name__, "message": str(exc)}, stream=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
