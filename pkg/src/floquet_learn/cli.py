"""Command-line driver.

    floquet-learn sweep --preset fig3 --out fig3.csv
    floquet-learn diagnose --spin 64 --tau-points 30
    floquet-learn learn --tau 0.5 --order 2
    floquet-learn rmt --spin 32 --mc-samples 50

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .kicked_top import floquet_operator
from .learning import align_phase, constraint_matrix, parameter_distance, reconstruct, sample_initial_states
from .magnus import ansatz_set, project_fm_coefficients
from .rmt_oracle import analytic_q_a0, ise_average_Q, lambda_rmt, monte_carlo_lambda
from .sweep import emit, load_config, run_sweep

WORKERS_ENV = "FLOQUET_LEARN_WORKERS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(WORKERS_ENV, "must be at least 1")
    return n


def _orders(text: str) -> list[int]:
    try:
        return [int(k) for k in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, tau_grid: bool = True) -> None:
    p.add_argument("--preset", help="named configuration (fig2, fig3)")
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--spin", type=float, help="spin size S (integer or half-integer)")
    if tau_grid:
        p.add_argument("--tau-min", type=float)
        p.add_argument("--tau-max", type=float)
        p.add_argument("--tau-points", type=int)
    p.add_argument("--ansatz-orders", type=_orders, help="e.g. 0,1,2")
    p.add_argument("--variant", choices=["two-step", "three-step"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="floquet-learn", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="full pipeline over a tau grid")
    _common(p)
    p = sub.add_parser("diagnose", help="accuracy, spacing ratio and participation ratio only")
    _common(p)
    p = sub.add_parser("learn", help="single-tau reconstruction with a coefficient table")
    _common(p, tau_grid=False)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--order", type=int, default=2)
    p = sub.add_parser("rmt", help="random-matrix reference values")
    _common(p, tau_grid=False)
    p.add_argument("--mc-samples", type=int, default=0, help="Monte-Carlo samples (0 skips the check)")
    return parser


def _overrides(args) -> dict:
    out: dict = {}
    if args.spin is not None:
        out["spin"] = args.spin
    grid = {}
    for key in ("min", "max", "points"):
        value = getattr(args, f"tau_{key}", None)
        if value is not None:
            grid[key] = value
    if grid:
        out["tau"] = {"min": 1e-2, "max": 10.0, "points": 60, **grid}
    for key in ("ansatz_orders", "variant", "seed"):
        if getattr(args, key) is not None:
            out[key] = getattr(args, key)
    return out


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError("out", f"cannot write {out}: {exc}") from None


def _cmd_sweep(args, diagnostics_only: bool = False) -> None:
    overrides = _overrides(args)
    if diagnostics_only:
        overrides["diagnostics"] = ["accuracy", "spacing", "pr"]
    config = load_config(args.preset, args.config, overrides)
    workers = args.workers if args.workers is not None else _default_workers()
    result = run_sweep(config, workers=workers)
    _write(emit(result, args.format), args.out)


def _cmd_learn(args) -> None:
    overrides = {**_overrides(args), "diagnostics": ["learning"], "ansatz_orders": [args.order]}
    config = load_config(args.preset, args.config, overrides)
    if args.tau <= 0:
        raise ConfigError("tau", "must be positive")
    s, tau, k = config.spin, args.tau, args.order
    ansatz = ansatz_set(s, k, config.variant)
    step = floquet_operator(config.params, s, tau, config.variant)
    states = sample_initial_states(s, config.resolved_n_con, np.random.SeedSequence([config.seed, 0]))
    result = reconstruct(constraint_matrix(step, states, ansatz, config.resolved_total_time))
    c_fm = project_fm_coefficients(config.params, s, k, tau, config.variant).normalize().values
    c_rec = align_phase(c_fm, result.c_rec)
    dist = parameter_distance(c_fm, result.c_rec)
    if args.format == "json":
        doc = {
            "tau": tau,
            "order": k,
            "lambda1": result.lambda1,
            "parameter_distance": dist,
            "labels": list(ansatz.labels),
            "c_fm": [[z.real, z.imag] for z in c_fm],
            "c_rec": [[z.real, z.imag] for z in c_rec],
        }
        _write(json.dumps(doc, indent=2) + "\n", args.out)
        return
    lines = [f"S={s.s:g}  tau={tau:g}  order={k}  lambda1={result.lambda1:.6e}  distance={dist:.3e}"]
    lines.append(f"{'operator':<12}{'Re c_FM':>14}{'Re c_rec':>14}{'Im c_rec':>14}")
    for lab, a, b in zip(ansatz.labels, c_fm, c_rec):
        lines.append(f"{lab:<12}{a.real:>14.6e}{b.real:>14.6e}{b.imag:>14.2e}")
    _write("\n".join(lines) + "\n", args.out)


def _cmd_rmt(args) -> None:
    config = load_config(args.preset, args.config, {**_overrides(args), "diagnostics": ["rmt"]})
    s = config.spin
    rows = []
    for k in config.ansatz_orders:
        ansatz = ansatz_set(s, k, config.variant)
        row = {"order": k, "lambda_rmt": lambda_rmt(ise_average_Q(ansatz))}
        if k == 0:
            row["lambda_rmt_analytic"] = lambda_rmt(analytic_q_a0(s))
        if args.mc_samples:
            mean, err = monte_carlo_lambda(ansatz, n_con=config.resolved_n_con, n_samples=args.mc_samples,
                                           seed=config.seed)
            row["monte_carlo_mean"], row["monte_carlo_stderr"] = mean, err
        rows.append(row)
    if args.format == "json":
        _write(json.dumps({"spin": s.s, "n_con": config.resolved_n_con, "orders": rows}, indent=2) + "\n", args.out)
        return
    lines = [f"S={s.s:g}  N_con={config.resolved_n_con}"]
    for row in rows:
        line = f"A_{row['order']}: lambda_RMT={row['lambda_rmt']:.6f}"
        if "lambda_rmt_analytic" in row:
            line += f"  closed form={row['lambda_rmt_analytic']:.6f}"
        if "monte_carlo_mean" in row:
            line += f"  Monte Carlo={row['monte_carlo_mean']:.6f} +/- {row['monte_carlo_stderr']:.6f}"
        lines.append(line)
    _write("\n".join(lines) + "\n", args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sweep":
            _cmd_sweep(args)
        elif args.command == "diagnose":
            _cmd_sweep(args, diagnostics_only=True)
        elif args.command == "learn":
            _cmd_learn(args)
        else:
            _cmd_rmt(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
