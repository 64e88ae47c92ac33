"""Command-line entry point: reproducible experiments from one TOML config.

Every experiment subcommand writes records.jsonl, summary.csv, extras.json,
a copy of the config, and a manifest into the output directory; the output
directory alone suffices to re-run the experiment (`nlslab <cmd> config.toml`).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, ExperimentError
from .experiments import (
    ExperimentConfig,
    load_config,
    run_clt,
    run_fluctuations,
    run_haar_stats,
    run_homogenization,
    run_mollified,
)
from .io import (
    write_density_csv,
    write_diagnostics_csv,
    write_difference_csv,
    write_ensemble,
    write_field_csv,
    write_measure_csv,
)

_EXPERIMENTS = {
    "homogenize": run_homogenization,
    "clt": run_clt,
    "fluctuations": run_fluctuations,
    "mollified": run_mollified,
    "haar-stats": run_haar_stats,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="Monte Carlo laboratory for the cubic flow with random point-measure nonlinearity",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate-config", "sample-measure", "solve", *_EXPERIMENTS):
        p = sub.add_parser(name)
        p.add_argument("config", type=Path, help="TOML experiment configuration")
        if name != "validate-config":
            p.add_argument("--output", type=Path, default=None, help="output directory override")
        if name == "sample-measure":
            p.add_argument("--mollify", type=float, default=None, metavar="H",
                           help="also write the kernel-smoothed density at width H")
        if name == "solve":
            p.add_argument("--snapshots", action="store_true",
                           help="write one field CSV per stored time")
    return parser


def _outdir(cfg: ExperimentConfig, override: Path | None) -> Path:
    out = override or (Path(cfg.output_dir) if cfg.output_dir else None)
    if out is None:
        raise ConfigError("no output directory: set experiment.output_dir or pass --output")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_sample_measure(cfg: ExperimentConfig, out: Path, config_text: str, mollify_h: float | None) -> None:
    from .measures import mollify, sample
    from .rng import replica_rng

    eps = cfg.epsilons[0]
    measure = sample(cfg.levy, eps, cfg.grid, replica_rng(cfg.master_seed, "measure", 0))
    write_measure_csv(measure, out / "measure.csv")
    write_density_csv(measure, out / "density.csv")
    files = ["measure.csv", "density.csv"]
    if mollify_h is not None:
        write_density_csv(mollify(measure, mollify_h), out / "density_mollified.csv")
        files.append("density_mollified.csv")
    from .io import write_manifest

    write_manifest(out, experiment="sample-measure", config_text=config_text,
                   master_seed=cfg.master_seed, files=files)


def _cmd_solve(cfg: ExperimentConfig, out: Path, config_text: str, snapshots: bool) -> None:
    import numpy as np

    from .grid import GridField
    from .io import write_trajectory_csvs
    from .measures import sample
    from .rng import replica_rng
    from .solvers import difference_norms, solve_nls, solve_nls_measure
    from .weights import xn1_norm, yns1_norm

    eps = cfg.epsilons[0]
    solver_cfg = cfg.solver_config()
    psi0 = cfg.psi0()
    measure = sample(cfg.levy, eps, cfg.grid, replica_rng(cfg.master_seed, "measure", 0))
    traj_n = solve_nls_measure(psi0, measure, solver_cfg)
    traj = solve_nls(psi0, solver_cfg)
    if snapshots:
        write_trajectory_csvs(traj_n, out / "snapshots_measure")
        write_trajectory_csvs(traj, out / "snapshots_cubic")
    xn1 = np.array([xn1_norm(GridField(cfg.grid, st), measure) for st in traj_n.states])
    yns1 = np.array(
        [yns1_norm(GridField(cfg.grid, st), measure, cfg.sobolev_index) for st in traj_n.states]
    )
    write_diagnostics_csv(traj_n, out / "diagnostics_measure.csv", {"xn1": xn1, "yns1": yns1})
    write_diagnostics_csv(traj, out / "diagnostics_cubic.csv")
    write_difference_csv(difference_norms(traj_n, traj), out / "differences.csv")
    write_field_csv(traj_n.final(), out / "state_measure_final.csv")
    write_field_csv(traj.final(), out / "state_cubic_final.csv")
    from .io import write_manifest

    write_manifest(
        out, experiment="solve", config_text=config_text, master_seed=cfg.master_seed,
        files=["diagnostics_measure.csv", "diagnostics_cubic.csv", "differences.csv",
               "state_measure_final.csv", "state_cubic_final.csv"],
    )


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, config_text = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        print(f"{args.config}: ok")
        return 0

    try:
        out = _outdir(cfg, args.output)
        if args.command == "sample-measure":
            _cmd_sample_measure(cfg, out, config_text, args.mollify)
        elif args.command == "solve":
            _cmd_solve(cfg, out, config_text, args.snapshots)
        else:
            result = _EXPERIMENTS[args.command](cfg)
            write_ensemble(result, out, config_text, cfg.master_seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"experiment aborted: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: wrote results to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
