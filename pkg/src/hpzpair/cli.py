"""Command-line scenario runner.

    hpzpair coeffs   --regime all --set gamma=1/128
    hpzpair evolve   --scenario scenarios/fig1.txt --out fig1.csv
    hpzpair entangle --scenario scenarios/fig3.txt
    hpzpair sweep    --scenario scenarios/fig4.txt --param kappa --values 5,15
    hpzpair validate --scenario scenarios/fig2.txt

Exit codes: 0 success, 2 invalid input, 3 stability rejection,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .coefficients import RegimeTag, check_stability, coefficients
from .covariance import sigma_to_q
from .errors import HPZError, InvalidInput, NumericalError, StabilityError
from .oracle import integrate_trajectory, master_equation_residual
from .scenario import (
    Scenario,
    coerce,
    detect_transitions,
    evaluate_grid,
    load_scenario,
    separability_onset,
    build_propagator,
)

EXIT_OK, EXIT_INPUT, EXIT_UNSTABLE, EXIT_NUMERIC = 0, 2, 3, 4
ORACLE_T_END = 50.0


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, complex):
        return f"{x.real!r}{'+' if x.imag >= 0 else '-'}{abs(x.imag)!r}j"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (float, np.floating)):
        return None if not math.isfinite(x) else float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def header_record(scenario: Scenario, coeffs=None, extra: dict | None = None) -> dict:
    p = scenario.params
    rec = {
        "scenario": scenario.name or "-",
        "units": "hbar = m = Omega = 1; entropies in nats; E_N in bits",
        "omega": p.omega,
        "omega_c": p.omega_c,
        "gamma": p.gamma,
        "temperature": p.temperature,
        "kappa": p.kappa,
        "m": p.m,
        "regime": scenario.regime.value,
        "p": scenario.p,
        "r_s": scenario.r_s,
        "t_start": scenario.t_start,
        "t_end": scenario.t_end,
        "n_points": scenario.n_points,
        "spacing": scenario.spacing,
        "tol": scenario.tol,
        "gamma_crit": p.gamma_crit,
        "kappa_crit": p.kappa_crit,
    }
    if coeffs is not None:
        rec.update(
            A=coeffs.A,
            B=coeffs.B,
            C=coeffs.C,
            D=coeffs.D,
            **{"lambda": coeffs.lam},
            omega_c_eff=coeffs.omega_c,
            omega_d=coeffs.omega_d,
            D_px=coeffs.D_px,
            D_pp=coeffs.D_pp,
            period=coeffs.asymptotic_period,
        )
    if extra:
        rec.update(extra)
    return rec


class Writer:
    """Serialises one header plus one table in CSV or JSON."""

    def __init__(self, fmt: str, reproducible: bool):
        self.fmt = fmt
        self.reproducible = reproducible

    def _meta(self, header: dict) -> dict:
        meta = {"version": f"hpzpair {__version__}"}
        if not self.reproducible:
            meta["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        meta.update(header)
        return meta

    def render(self, header: dict, columns: list[str], rows) -> str:
        meta = self._meta(header)
        if self.fmt == "json":
            doc = {"header": meta, "columns": columns, "rows": [dict(zip(columns, r)) for r in rows]}
            return json.dumps(_jsonable(doc), indent=1) + "\n"
        buf = io.StringIO()
        for k, v in meta.items():
            buf.write(f"# {k} = {_fmt(v)}\n")
        rows = list(rows)
        if columns and rows:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _scenario_from_args(args) -> Scenario:
    sc = load_scenario(args.scenario) if args.scenario else Scenario()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise InvalidInput(f"--set expects KEY=VALUE, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        overrides[k] = coerce(k, v)
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.regime and args.regime != "all":
        overrides["regime"] = RegimeTag.parse(args.regime)
    return sc.with_values(**overrides) if overrides else sc


def coeff_record(scenario: Scenario, regime: RegimeTag) -> dict:
    c = coefficients(scenario.params, regime)
    rep = check_stability(c)
    roots = c.roots
    rec = {}
    for i, name in enumerate(("z1", "z2", "z3")):
        rec[name] = list(roots)[i] if roots is not None else math.nan
    rec.update(
        A=c.A,
        B=c.B,
        C=c.C,
        D=c.D,
        **{"lambda": c.lam},
        omega_c=c.omega_c,
        omega_d=c.omega_d,
        D_px=c.D_px,
        D_pp=c.D_pp,
        gamma_crit=scenario.params.gamma_crit,
        kappa_crit=scenario.params.kappa_crit,
        stable=rep.stable,
    )
    for k, v in rep.margins.items():
        rec[f"margin.{k}"] = v
    return rec


def cmd_coeffs(args, writer: Writer) -> str:
    sc = _scenario_from_args(args)
    regimes = list(RegimeTag) if args.regime == "all" else [sc.regime]
    records = {r.value: coeff_record(sc, r) for r in regimes}
    keys = list(next(iter(records.values())))
    if writer.fmt == "json":
        meta = writer._meta(header_record(sc))
        return json.dumps(_jsonable({"header": meta, "coefficients": records}), indent=1) + "\n"
    rows = [[k] + [records[r][k] for r in records] for k in keys]
    return writer.render(header_record(sc), ["key"] + list(records), rows)


def _table_rows(table: dict, outputs, lead=()):
    cols = ["t"] + list(outputs)
    n = len(table["t"])
    return cols, [list(lead) + [table[c][i] for c in cols] for i in range(n)]


def cmd_evolve(args, writer: Writer) -> str:
    sc = _scenario_from_args(args)
    res = evaluate_grid(sc, args.allow_unstable)
    header = header_record(sc, res.coeffs)
    if not sc.outputs:
        return writer.render(header, [], [])
    cols, rows = _table_rows(res.table, sc.outputs)
    return writer.render(header, cols, rows)


def cmd_entangle(args, writer: Writer) -> str:
    sc = _scenario_from_args(args)
    res = evaluate_grid(sc, args.allow_unstable)
    events = detect_transitions(res, "separability") + detect_transitions(res, "positivity")
    t_s = separability_onset(res, events)
    extra = {
        "t_s": math.nan if t_s is None else t_s,
        "t_s_window": f"[{sc.t_start!r}, {sc.t_end!r}]",
        "entangled_at_end": bool(res.table["nu1_pt"][-1] < 1 - sc.tol),
    }
    rows = [[e.channel, e.kind, e.t] for e in sorted(events, key=lambda e: (e.t, e.channel))]
    return writer.render(header_record(sc, res.coeffs, extra), ["channel", "kind", "t"], rows)


def cmd_sweep(args, writer: Writer) -> str:
    sc = _scenario_from_args(args)
    if not args.param or not args.values:
        raise InvalidInput("sweep needs --param and --values")
    values = [coerce(args.param, v) for v in args.values.split(",") if v.strip()]
    scenarios = [sc.with_values(**{args.param: v}) for v in values]

    def run(s):
        return evaluate_grid(s, args.allow_unstable)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(run, scenarios))
    header = header_record(sc, extra={"sweep_param": args.param, "sweep_values": ",".join(map(_fmt, values))})
    rows = []
    cols = [args.param, "t"] + list(sc.outputs)
    for v, res in zip(values, results):
        _, r = _table_rows(res.table, sc.outputs, lead=(v,))
        rows.extend(r)
    return writer.render(header, cols, rows)


def validation_record(sc: Scenario, allow_unstable: bool = False, n_points: int = 100, seed: int = 0) -> dict:
    """RK4 versus closed form on [0, 50] plus master-equation residuals."""
    prop = build_propagator(sc, allow_unstable)
    s0 = sc.initial_state()
    times, rk = integrate_trajectory(prop.drift, prop.R, s0, ORACLE_T_END, n_out=51)
    closed = prop.evolve_many(s0, times)
    rng = np.random.default_rng(seed)
    q0 = sigma_to_q(s0.sigma)
    res = []
    for t in rng.uniform(0.0, ORACLE_T_END, n_points):
        w = rng.normal(size=4)
        res.append(abs(master_equation_residual(prop.coeffs, prop.quadratic_form(q0, t), prop.quadratic_form_rate(q0, t), w)))
    return {"rk4_max_abs_diff": float(np.max(np.abs(rk - closed))), "residual_max": float(max(res))}


def cmd_validate(args, writer: Writer) -> str:
    sc = _scenario_from_args(args)
    rec = validation_record(sc, args.allow_unstable, seed=args.seed)
    ok = rec["rk4_max_abs_diff"] < args.oracle_tol and rec["residual_max"] < args.oracle_tol
    rec["oracle_tol"] = args.oracle_tol
    rec["pass"] = ok
    out = writer.render(header_record(sc), ["key", "value"], [[k, v] for k, v in rec.items()])
    if not ok:
        raise _ValidationFailed(out)
    return out


class _ValidationFailed(NumericalError):
    def __init__(self, output: str):
        super().__init__("closed form disagrees with the oracles")
        self.output = output


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="key = value scenario file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one scenario key (repeatable)")
    common.add_argument("--regime", help="regime tag, or 'all' for coeffs")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--tol", type=float, help="tolerance for positivity and separability verdicts")
    common.add_argument("--allow-unstable", action="store_true", help="skip the stability gate")
    common.add_argument("--reproducible", action="store_true", help="omit timestamps from headers")

    parser = argparse.ArgumentParser(prog="hpzpair", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"hpzpair {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coeffs", parents=[common], help="Markovian coefficients and stability margins")
    sub.add_parser("evolve", parents=[common], help="information quantities on a time grid")
    sub.add_parser("entangle", parents=[common], help="entanglement and positivity transitions")
    sw = sub.add_parser("sweep", parents=[common], help="repeat evolve over values of one key")
    sw.add_argument("--param", help="key to vary")
    sw.add_argument("--values", help="comma-separated values")
    sw.add_argument("--jobs", type=int, default=1, help="worker threads")
    va = sub.add_parser("validate", parents=[common], help="check closed form against the oracles")
    va.add_argument("--oracle-tol", type=float, default=1e-8)
    va.add_argument("--seed", type=int, default=0)
    return parser


COMMANDS = {
    "coeffs": cmd_coeffs,
    "evolve": cmd_evolve,
    "entangle": cmd_entangle,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.regime == "all" and args.command != "coeffs":
        print("error: --regime all is only valid for coeffs", file=sys.stderr)
        return EXIT_INPUT
    writer = Writer(args.format, args.reproducible)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            _emit(COMMANDS[args.command](args, writer), args.out)
    except _ValidationFailed as exc:
        _emit(exc.output, args.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except StabilityError as exc:
        print(f"stability rejection: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HPZError, ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
