"""Command-line front end: ``volswap price | vix | simulate | calibrate | report``.

Exit codes: 0 success, 1 user error (bad flags, parameters or input files),
2 numerical failure (quadrature non-convergence, diverging chain).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, laplace, swaps
from .calibration import ChainConfig, ChainDivergenceError, run_mcmc
from .market_data import MarketDataError, load_futures, load_prices
from .metrics import Comparison, MetricsVariant, build_report, emit_report
from .moments import FormulaMode
from .montecarlo import (
    SimConfig,
    estimate_strikes,
    estimate_vix_future,
    estimate_vix_log_contract,
    simulate_levy_cir,
)
from .params import (
    MODEL_KINDS,
    BatesParams,
    HestonParams,
    LevyHestonParams,
    ParameterError,
    build_model,
    load_config,
)

PRICE_METHODS = ("analytic", "convexity", "laplace", "monte_carlo", "all")
VIX_METHODS = ("convexity", "laplace", "monte_carlo", "all")


class UserError(Exception):
    """Invalid invocation; reported with exit code 1."""


# ---------------------------------------------------------------------------
# argument parsing


def _model_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=MODEL_KINDS, help="model kind (or 'model' key in the config file)")
    g.add_argument("--config", type=Path, help="flat TOML file of parameter values; flags override it")
    for name, text in (
        ("kappa", "mean-reversion speed"),
        ("theta", "long-run variance"),
        ("sigma", "vol of variance (Heston/Bates) or diffusion volatility (Merton)"),
        ("rho", "correlation of price and variance shocks"),
        ("v0", "initial variance"),
        ("r", "interest rate"),
        ("lambda", "jump intensity per year"),
        ("a", "mean of the log jump size"),
        ("b2", "variance of the log jump size"),
        ("alpha", "stability index of the driving stable process"),
        ("sigma-s", "stable scale in exp(-sigma_s |u|^alpha)"),
        ("beta", "stable skewness"),
        ("delta", "stable location"),
    ):
        flags = [f"--{name}"] + (["-r"] if name == "r" else [])
        g.add_argument(*flags, dest=name.replace("-", "_"), type=float, help=text)
    return p


def _mode_option(top: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument(
        "--paper-mode",
        action="store_true",
        default=False if top else argparse.SUPPRESS,
        help="use the printed variance-of-realised-variance formula and printed error metrics",
    )
    return p


def _sim_options(paths: int = 200_000) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("simulation")
    g.add_argument("--paths", type=int, default=paths, help=f"Monte Carlo paths (default {paths})")
    g.add_argument("--steps", type=int, default=1000, help="time steps per year (default 1000)")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("--scheme", choices=("exact_cir", "full_truncation_euler"), default="exact_cir")
    g.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    return p


def _quad_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("quadrature")
    g.add_argument("--rel-tol", type=float, default=1e-8)
    g.add_argument("--abs-tol", type=float, default=1e-12)
    g.add_argument("--max-subdivisions", type=int, default=200)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volswap",
        description="Variance/volatility swap strikes and VIX futures under Heston, Merton, Bates "
        "and stable-driven variance models.",
        parents=[_mode_option(top=True)],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{price,vix,simulate,calibrate,report}")
    mode, model, sim, quad = _mode_option(False), _model_options(), _sim_options(), _quad_options()

    p = sub.add_parser("price", parents=[mode, model, sim, quad], help="variance and volatility strikes")
    p.add_argument("-T", "--maturity", type=float, dest="T", help="maturity in years")
    p.add_argument("--method", choices=PRICE_METHODS, default="all")
    p.add_argument("--csv", type=Path, help="also write the quotes as CSV")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("vix", parents=[mode, model, sim, quad], help="VIX futures")
    p.add_argument("-T", "--maturity", type=float, nargs="+", dest="T", help="maturities in days")
    p.add_argument("--tau", type=float, default=30.0, help="VIX window in days (default 30)")
    p.add_argument("--method", choices=VIX_METHODS, default=None,
                   help="default: convexity and laplace; 'all' adds Monte Carlo")
    p.add_argument("--market", type=Path, help="futures CSV to compare against")
    p.add_argument("--out", type=Path, help="write the price comparison CSV here (with --market)")
    p.add_argument("--k", type=int, default=0, help="parameter count for RSE (default 0)")
    p.set_defaults(func=cmd_vix)

    p = sub.add_parser("simulate", parents=[mode, model, sim], help="Monte Carlo estimates")
    p.add_argument("-T", "--maturity", type=float, dest="T", help="horizon in years (days for --estimate vix)")
    p.add_argument("--estimate", choices=("strikes", "vix", "log-contract"), default="strikes")
    p.add_argument("--tau", type=float, default=30.0, help="VIX window in days (default 30)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[mode], help="MCMC calibration from a price history")
    p.add_argument("--model", choices=("heston", "bates"), required=True)
    p.add_argument("--prices", type=Path, required=True, help="CSV with header date,close")
    p.add_argument("--burn", type=int, default=3000)
    p.add_argument("--keep", type=int, default=8000)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1.0 / 252.0, help="years per observation")
    p.add_argument("--out", type=Path, help="posterior summary CSV")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("report", parents=[mode], help="error tables and charts from a comparison CSV")
    p.add_argument("--in", dest="input", type=Path, required=True, help="comparison CSV written by 'vix --out'")
    p.add_argument("--format", choices=("table", "csv", "svg"), default="table")
    p.add_argument("--out", type=Path, help="output file (default: stdout, or <input>.svg for svg)")
    p.add_argument("--k", type=int, default=0, help="parameter count for RSE (default 0)")
    p.set_defaults(func=cmd_report)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _header(args: argparse.Namespace) -> str:
    mode = "printed" if args.paper_mode else "corrected"
    metrics = "printed" if args.paper_mode else "standard"
    return f"# volswap {args.command} variance-formula={mode} metrics={metrics}"


def _formula_mode(args: argparse.Namespace) -> FormulaMode:
    return FormulaMode.PRINTED if args.paper_mode else FormulaMode.CORRECTED


def _resolve_model(args: argparse.Namespace) -> tuple[Any, dict[str, Any]]:
    values: dict[str, Any] = {}
    if args.config is not None:
        try:
            values.update(load_config(args.config))
        except OSError as exc:
            raise UserError(f"cannot read config: {exc}") from None
        except ValueError as exc:  # includes TOML syntax errors
            raise UserError(f"invalid config {args.config}: {exc}") from None
    for key in ("kappa", "theta", "sigma", "rho", "v0", "r", "lambda", "a", "b2", "alpha", "sigma_s", "beta", "delta"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    kind = args.model or values.get("model")
    if kind is None:
        raise UserError("no model kind: pass --model or set 'model' in the config file")
    values.pop("model", None)
    contract = {k: values.pop(k) for k in ("T", "tau") if k in values}
    return build_model(kind, values), contract


def _sim_config(args: argparse.Namespace) -> SimConfig:
    return SimConfig(args.paths, args.steps, args.seed, args.scheme, workers=args.workers)


def _quad_config(args: argparse.Namespace) -> laplace.QuadratureConfig:
    return laplace.QuadratureConfig(args.rel_tol, args.abs_tol, args.max_subdivisions)


def _maturity(args: argparse.Namespace, contract: dict[str, Any]) -> float:
    T = args.T if args.T is not None else contract.get("T")
    if T is None:
        raise UserError("maturity missing: pass -T or set T in the config file")
    return float(T)


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.10g}"


def _print_rows(header: Sequence[str], rows: list[Sequence[Any]]) -> None:
    text = [[str(c) for c in header]] + [[str(c) or "-" for c in r] for r in rows]
    widths = [max(len(r[i]) for r in text) for i in range(len(header))]
    for r in text:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())


# ---------------------------------------------------------------------------
# commands


def cmd_price(args: argparse.Namespace) -> int:
    model, contract = _resolve_model(args)
    T = _maturity(args, contract)
    if not T > 0:
        raise UserError("T must be > 0")
    wanted = PRICE_METHODS[:-1] if args.method == "all" else (args.method,)
    explicit = args.method != "all"
    mode = _formula_mode(args)
    rows: list[tuple[str, str, float, float | None, float | None]] = []
    for method in wanted:
        if method == "analytic":
            q = swaps.variance_strike(model, T)
            rows.append(("analytic", "K_var", q.value, None, None))
        elif method == "convexity":
            if isinstance(model, LevyHestonParams):
                if explicit:
                    raise UserError("no convexity formula for levy-heston")
                continue
            q = swaps.vol_strike_convexity_model(model, T, mode)
            rows.append(("convexity", "K_vol", q.value, None, None))
        elif method == "laplace":
            if isinstance(model, LevyHestonParams):
                if explicit:
                    raise UserError("no Laplace transform for levy-heston")
                continue
            q = laplace.vol_strike_laplace(model, T, _quad_config(args))
            rows.append(("laplace", "K_vol", q.value, None, q.quad_error))
        elif method == "monte_carlo":
            cfg = _sim_config(args)
            kv, kvol = estimate_strikes(model, T, cfg)
            rows.append(("monte_carlo", "K_var", kv.mean, kv.std_error, None))
            rows.append(("monte_carlo", "K_vol", kvol.mean, kvol.std_error, None))
    print(_header(args))
    print(f"# model={type(model).__name__} T={T:g}")
    header = ("method", "quantity", "value", "std_error", "quad_error")
    table = [(m, qn, _fmt(v), _fmt(se), _fmt(qe)) for m, qn, v, se, qe in rows]
    _print_rows(header, table)
    if args.csv is not None:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(table)
    return 0


def cmd_vix(args: argparse.Namespace) -> int:
    model, contract = _resolve_model(args)
    if not isinstance(model, (HestonParams, BatesParams)):
        raise UserError("VIX futures need a heston or bates model")
    quotes = load_futures(args.market) if args.market is not None else None
    if args.T is not None:
        days = [float(d) for d in args.T]
    elif quotes:
        days = [float(q.days_to_expiry) for q in quotes]
    else:
        raise UserError("maturities missing: pass -T (days) or --market")
    if any(d < 0 for d in days):
        raise UserError("maturities must be >= 0 days")
    tau = args.tau / 365.0
    methods = {None: ("convexity", "laplace"), "all": ("convexity", "laplace", "monte_carlo")}.get(
        args.method, (args.method,)
    )
    kind = "bates" if isinstance(model, BatesParams) else "heston"
    q = _quad_config(args)
    values: dict[str, list[float]] = {m: [] for m in methods}
    errors: dict[str, list[float | None]] = {m: [] for m in methods}
    for d in days:
        T = d / 365.0
        for m in methods:
            if m == "convexity":
                values[m].append(swaps.vix_future_convexity(model, T, tau).value)
                errors[m].append(None)
            elif m == "laplace":
                res = laplace.vix_future_closed_form(model, T, tau, q)
                values[m].append(res.value)
                errors[m].append(res.quad_error)
            else:
                est = estimate_vix_future(model, T, tau, _sim_config(args))
                values[m].append(est.mean)
                errors[m].append(est.std_error)
    print(_header(args))
    print(f"# model={kind} tau_days={args.tau:g}")
    header = ["days"] + [c for m in methods for c in (m, "std_error" if m == "monte_carlo" else f"{m}_err")]
    rows = []
    for i, d in enumerate(days):
        row = [f"{d:g}"]
        for m in methods:
            row += [f"{values[m][i]:.6f}", _fmt(errors[m][i])]
        rows.append(row)
    _print_rows(header, rows)

    if quotes is not None:
        by_day = {}
        for qt in quotes:
            by_day.setdefault(float(qt.days_to_expiry), qt.settlement)
        missing = [d for d in days if d not in by_day]
        if missing:
            raise UserError(f"no market quote for maturities {', '.join(f'{d:g}' for d in missing)}")
        comp = Comparison(
            np.array(days),
            np.array([by_day[d] for d in days]),
            {(kind, m): np.array(values[m]) for m in methods},
        )
        if args.out is not None:
            comp.write_csv(args.out)
        variant = MetricsVariant.PRINTED if args.paper_mode else MetricsVariant.STANDARD
        print()
        print(emit_report(build_report(comp, args.k, variant), "table"), end="")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model, contract = _resolve_model(args)
    cfg = _sim_config(args)
    T = _maturity(args, contract)
    print(_header(args))
    print(f"# model={type(model).__name__} paths={cfg.n_paths} steps_per_year={cfg.n_steps} "
          f"seed={cfg.seed} scheme={cfg.scheme.value}")
    header = ("estimate", "mean", "std_error", "n")
    if args.estimate == "strikes":
        if not T > 0:
            raise UserError("T must be > 0")
        if isinstance(model, LevyHestonParams):
            res = simulate_levy_cir(model.heston, model.stable, T, cfg)
            e = res.k_var
            _print_rows(header, [("K_var", _fmt(e.mean), _fmt(e.std_error), e.n)])
            print(f"# negative_fraction={res.negative_fraction:.6g}")
            return 0
        kv, kvol = estimate_strikes(model, T, cfg)
        rows = [("K_var", kv), ("K_vol", kvol)]
    elif args.estimate == "vix":
        if not isinstance(model, (HestonParams, BatesParams)):
            raise UserError("VIX futures need a heston or bates model")
        rows = [("E[VIX_T]", estimate_vix_future(model, T / 365.0, args.tau / 365.0, cfg))]
    else:
        if not isinstance(model, HestonParams):
            raise UserError("the log-contract estimate is defined for heston only")
        rows = [("VIX^2 (log contract)", estimate_vix_log_contract(model, T, args.tau / 365.0, cfg))]
    _print_rows(header, [(n, _fmt(e.mean), _fmt(e.std_error), e.n) for n, e in rows])
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    series = load_prices(args.prices)
    chain = ChainConfig(n_burn=args.burn, n_keep=args.keep, n_runs=args.runs, dt=args.dt, seed=args.seed)
    summary = run_mcmc(series.log_returns, args.model, chain=chain)
    print(_header(args))
    print(f"# model={args.model} returns={len(series) - 1} burn={args.burn} keep={args.keep} runs={args.runs}")
    rows = [(name, f"{m:.6g}", "" if math.isnan(s) else f"{s:.6g}") for name, m, s in summary.rows()]
    _print_rows(("parameter", "mean", "std_dev"), rows)
    if summary.acceptance_rate is not None:
        print(f"# variance MH acceptance={summary.acceptance_rate:.3f}")
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("parameter", "mean", "std_dev"))
            for name, m, s in summary.rows():
                w.writerow((name, repr(m), "" if math.isnan(s) else repr(s)))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    try:
        comp = Comparison.read_csv(args.input)
    except OSError as exc:
        raise UserError(f"cannot read {args.input}: {exc}") from None
    variant = MetricsVariant.PRINTED if args.paper_mode else MetricsVariant.STANDARD
    report = build_report(comp, args.k, variant)
    out = args.out
    if out is None and args.format == "svg":
        out = args.input.with_suffix(".svg")
    if args.format == "table":
        text = _header(args) + "\n" + emit_report(report, "table")
        if out is not None:
            out.write_text(text, encoding="utf-8")
        else:
            print(text, end="")
        return 0
    text = emit_report(report, args.format, out)
    if out is None:
        print(text, end="")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (laplace.QuadratureError, ChainDivergenceError, ArithmeticError) as exc:
        print(f"volswap: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UserError, ParameterError, MarketDataError, ValueError, TypeError, OSError) as exc:
        print(f"volswap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
