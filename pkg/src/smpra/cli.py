"""Command-line entry point: ``simulate``, ``evolve`` and ``exit`` subcommands."""
import argparse
import json
import logging
import sys

from .evolution import (EvolutionParams, classify_convergence, default_grid, exit_curve,
                        run_evolution, write_evolution_csv, write_exit_csv)
from .harness import ExperimentSpec, emit_csv, parse_sweep, run_experiment
from .model import SystemConfig, effective_noise_variance

DEFAULT_BASE = dict(M=40, N_s=300, N_p=64, N_c=10, p_a=0.2, snr_db=-10.0, seed=0)


def _add_system_args(p, with_iters=True):
    p.add_argument("--m", type=int, help="antennas")
    p.add_argument("--ns", type=int, help="devices")
    p.add_argument("--np", type=int, help="preambles")
    p.add_argument("--nc", type=int, help="preamble length")
    p.add_argument("--pa", type=float, help="activation probability")
    p.add_argument("--snr-db", type=float)
    if with_iters:
        p.add_argument("--iters", type=int)
    p.add_argument("--out", required=True)


def _build_parser():
    parser = argparse.ArgumentParser(prog="smpra", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte-Carlo EER sweep")
    _add_system_args(sim)
    sim.add_argument("--config", help="JSON experiment spec; flags override it")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--estimators", help="comma list from smp,mf,lmmse")
    sim.add_argument("--sweep", help="PARAM=V1:STEP:V2")
    sim.add_argument("--per-iteration", action="store_true", default=None)
    sim.add_argument("--threshold", type=float, help="baseline activity threshold")
    sim.add_argument("--workers", type=int, default=1)

    evo = sub.add_parser("evolve", help="mean-evolution trajectory")
    _add_system_args(evo)

    ex = sub.add_parser("exit", help="EXIT curve and convergence class")
    _add_system_args(ex, with_iters=False)
    ex.add_argument("--grid-points", type=int, default=200)
    return parser


def _system_overrides(args):
    mapping = {"m": "M", "ns": "N_s", "np": "N_p", "nc": "N_c", "pa": "p_a", "snr_db": "snr_db"}
    return {key: getattr(args, flag) for flag, key in mapping.items() if getattr(args, flag) is not None}


def _simulate(args):
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    else:
        data = {"base": dict(DEFAULT_BASE)}
    data.setdefault("base", dict(DEFAULT_BASE))
    data["base"] = {**DEFAULT_BASE, **data["base"], **_system_overrides(args)}
    if args.seed is not None:
        data["base"]["seed"] = args.seed
    if args.trials is not None:
        data["trials"] = args.trials
    if args.estimators:
        data["estimators"] = [e.strip() for e in args.estimators.split(",") if e.strip()]
    if args.iters is not None:
        data["smp_params"] = {**data.get("smp_params", {}), "max_iters": args.iters}
    if args.per_iteration:
        data["record_per_iteration"] = True
    if args.threshold is not None:
        data["threshold"] = args.threshold
    if args.sweep:
        data["sweep_param"], data["sweep_values"] = parse_sweep(args.sweep)
    spec = ExperimentSpec.from_dict(data)
    report = run_experiment(spec, workers=args.workers)
    emit_csv(report, args.out)
    for row in report.rows:
        if row.iteration == "final":
            print(f"{row.sweep_param}={row.sweep_value} {row.estimator}: "
                  f"eer={row.eer:.5g} +- {row.stderr:.2g} ({row.trials} trials)")


def _evolution_params(args, **kw):
    base = {**DEFAULT_BASE, **_system_overrides(args)}
    cfg = SystemConfig(**base)
    return EvolutionParams(N_s=cfg.N_s, N_p=cfg.N_p, M=cfg.M, p_a=cfg.p_a,
                           sigma_eff_sq=effective_noise_variance(cfg.snr_db, cfg.N_c), **kw)


def _evolve(args):
    kw = {"max_iters": args.iters} if args.iters is not None else {}
    params = _evolution_params(args, **kw)
    traj = run_evolution(params)
    write_evolution_csv(traj, args.out)
    print(f"{'converged' if traj.converged else 'not converged'} after {traj.final.iter} "
          f"iterations, e_s_pos={traj.final.e_s_pos:.6g}")


def _exit(args):
    params = _evolution_params(args)
    curve = exit_curve(params, default_grid(params, args.grid_points))
    write_exit_csv(curve, args.out)
    print(classify_convergence(curve))


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    handlers = {"simulate": _simulate, "evolve": _evolve, "exit": _exit}
    try:
        handlers[args.command](args)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
