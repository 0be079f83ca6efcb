"""Command-line front end: optimize, protocol, sweep, husimi, fit.

Exit codes are a stable scripting contract: 0 success, 1 usage/config/input
error, 2 optimizer non-convergence or partial sweep failure.  Report paths
write figures next to their data files unless --no-plot is given.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from spincat.dynamics import PulseSequence
from spincat.interferometer import (
    DegenerateSignalError,
    ProtocolConfig,
    loss_db,
    sensitivity,
)
from spincat.pulse_optimizer import FixedBudget, OptimizationProblem, optimize
from spincat.spin_core import CatSpec, make_cat, make_css
from spincat.sweep import (
    InsufficientDataError,
    _parse_angle,
    fit_scaling,
    husimi_grid,
    load_sweep_config,
    read_records,
    run_sweep,
    write_husimi_csv,
)

SCHEMA_VERSION = 1


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _load_sequence_file(path: Path) -> tuple[int, PulseSequence]:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        n_atoms = int(obj["n_atoms"])
        pulses = tuple((float(q), float(mu)) for q, mu in obj["sequence"]["pulses"])
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"cannot parse sequence file {path}: {exc}") from exc
    return n_atoms, PulseSequence(pulses)


def cmd_optimize(args) -> int:
    mode = FixedBudget(args.q_tilde) if args.q_tilde is not None else None
    problem = OptimizationProblem(
        n_atoms=args.n_atoms,
        target=CatSpec.symmetric(args.theta),
        n_pulses=args.n_pulses,
        mode=mode,
        seed=args.seed,
        max_iterations=args.max_iterations,
        restarts=args.restarts,
    )
    result = optimize(problem)
    out = Path(args.out)
    _write_json(out, {
        "schema_version": SCHEMA_VERSION,
        "n_atoms": args.n_atoms,
        "theta": args.theta,
        "n_pulses": args.n_pulses,
        "mode": "fixed_budget" if mode else "free",
        "Q_tilde": args.q_tilde,
        "seed": args.seed,
        "restarts": args.restarts,
        "max_iterations": args.max_iterations,
        "sequence": {"pulses": [[q, mu] for q, mu in result.sequence.pulses]},
        "infidelity": result.infidelity,
        "iterations": result.iterations,
        "converged": result.converged,
        "history": list(result.history),
    })
    if not args.no_plot and result.history:
        from spincat.plotting import save_convergence_figure

        save_convergence_figure(result.history, out.with_suffix(".png"))
    print(f"infidelity {result.infidelity:.6g} after {result.iterations} iterations "
          f"({'converged' if result.converged else 'not converged'}) -> {out}")
    return 0 if result.converged else 2


def cmd_protocol(args) -> int:
    if args.ramsey:
        if args.n_atoms is None:
            print("protocol: error: --ramsey requires --n-atoms", file=sys.stderr)
            return 1
        n_atoms, sequence = args.n_atoms, PulseSequence(())
    else:
        n_atoms, sequence = _load_sequence_file(Path(args.sequence))
    common = dict(n_atoms=n_atoms, sequence=sequence,
                  phase_step=args.phase_step, gamma=args.gamma)
    lossless = sensitivity(ProtocolConfig(**common, loss_enabled=False))
    lossy = sensitivity(ProtocolConfig(**common, loss_enabled=True))
    q_tilde = sequence.normalized_q(n_atoms)
    obj = {
        "schema_version": SCHEMA_VERSION,
        "n_atoms": n_atoms,
        "Q_tilde": q_tilde,
        "gamma": args.gamma,
        "phase_step": ProtocolConfig(**common).phase_step,
        "signal_slope": lossless.signal_slope,
        "noise": lossless.noise,
        "qfi_prepared": lossless.qfi_prepared,
        "delta_phi": lossless.delta_phi,
        "gain_db": lossless.gain_db,
        "amplification": lossless.amplification,
        "contrast": lossless.contrast,
        "gain_db_lossless": lossless.gain_db,
        "gain_db_lossy": lossy.gain_db,
        "delta_phi_lossy": lossy.delta_phi,
        "amplification_lossy": lossy.amplification,
        "contrast_lossy": lossy.contrast,
        "loss_db": loss_db(args.gamma, q_tilde),
    }
    if args.out:
        _write_json(Path(args.out), obj)
    else:
        print(json.dumps(obj, indent=2))
    print(f"gain {lossless.gain_db:.3f} dB lossless, {lossy.gain_db:.3f} dB lossy "
          f"(delta_phi {lossless.delta_phi:.4g})", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    config = load_sweep_config(args.config)

    def progress(record):
        status = record.error or (
            f"eps={record.infidelity:.4f} gain={record.gain_db_lossless:.2f} dB"
        )
        print(f"[N={record.N} theta={record.theta:.4f} Q~={record.Q_tilde:g} "
              f"seed={record.seed}] {status}", flush=True)

    summary = run_sweep(config, workers=args.workers,
                        progress=progress, plot=not args.no_plot)
    print(f"{summary['completed']} jobs run ({summary['skipped']} resumed, "
          f"{summary['failed']} failed) -> {summary['records_path']}")
    for cell in summary["fits"]["cells"]:
        lossless = cell.get("lossless", {})
        if "b" in lossless:
            print(f"  theta={cell['theta']:.4f} Q~={cell['Q_tilde']:g}: "
                  f"b={lossless['b']:.3f} (r2={lossless['r_squared']:.3f})")
    return 2 if summary["failed"] else 0


def cmd_husimi(args) -> int:
    if args.sequence:
        n_atoms, sequence = _load_sequence_file(Path(args.sequence))
        from spincat.dynamics import propagate_sequence

        state = propagate_sequence(make_css(n_atoms, math.pi / 2, 0.0), sequence)
    else:
        if args.n_atoms is None:
            print("husimi: error: --cat-theta requires --n-atoms", file=sys.stderr)
            return 1
        state = make_cat(args.n_atoms, CatSpec.symmetric(args.cat_theta))
    grid = husimi_grid(state, n_theta=args.grid_theta, n_phi=args.grid_phi)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_husimi_csv(grid, out)
    if not args.no_plot:
        from spincat.plotting import save_husimi_figure

        save_husimi_figure(grid, out.with_suffix(".png"))
    print(f"{grid.values.shape[0]}x{grid.values.shape[1]} grid, "
          f"quadrature {grid.quadrature:.4f} -> {out}")
    return 0


def cmd_fit(args) -> int:
    records = read_records(args.records)
    fit = fit_scaling(records, gain_field=args.gain_field, aggregate=args.aggregate)
    obj = {
        "schema_version": SCHEMA_VERSION,
        "gain_field": args.gain_field,
        "aggregate": args.aggregate,
        "a": fit.a,
        "b": fit.b,
        "r_squared": fit.r_squared,
        "N_range": list(fit.N_range),
        "n_points": fit.n_points,
    }
    if args.out:
        _write_json(Path(args.out), obj)
    print(json.dumps(obj, indent=2))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="spincat",
                     description="Cat-state pulse engineering and time-reversal "
                                 "interferometry in the Dicke basis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="find a pulse sequence for a target cat state")
    p.add_argument("--n-atoms", type=int, required=True)
    p.add_argument("--theta", type=_parse_angle, required=True,
                   help="target opening angle in radians ('0.5pi' accepted)")
    p.add_argument("--n-pulses", type=int, required=True)
    p.add_argument("--q-tilde", type=float, default=None,
                   help="fix the normalized shearing budget sqrt(N)*sum(Q)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iterations", type=int, default=1000)
    p.add_argument("--out", required=True, help="output JSON path")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("protocol", help="run the time-reversal protocol sensitivity")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--sequence", help="sequence JSON from the optimize command")
    src.add_argument("--ramsey", action="store_true",
                     help="empty sequence: the SQL Ramsey baseline")
    p.add_argument("--n-atoms", type=int, default=None)
    p.add_argument("--gamma", type=float, default=0.36)
    p.add_argument("--phase-step", type=float, default=None)
    p.add_argument("--out", default=None, help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("sweep", help="run a resumable (N, theta, Q~, seed) sweep")
    p.add_argument("config", help="sweep config file (see README for the schema)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (beats SPINCAT_WORKERS and the config)")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("husimi", help="emit a coherent-state overlap grid")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--sequence", help="sequence JSON to propagate")
    src.add_argument("--cat-theta", type=_parse_angle,
                     help="analytic symmetric cat with this opening angle")
    p.add_argument("--n-atoms", type=int, default=None)
    p.add_argument("--grid-theta", type=int, default=181)
    p.add_argument("--grid-phi", type=int, default=361)
    p.add_argument("--out", default="husimi.csv")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_husimi)

    p = sub.add_parser("fit", help="power-law scaling fit over a records file")
    p.add_argument("--records", required=True)
    p.add_argument("--gain-field", default="gain_db_lossless",
                   choices=["gain_db_lossless", "gain_db_lossy"])
    p.add_argument("--aggregate", default="max", choices=["none", "max"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, InsufficientDataError, DegenerateSignalError) as exc:
        print(f"spincat {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
