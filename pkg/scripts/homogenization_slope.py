#!/usr/bin/env python3
"""Quick homogenization sweep: prints the per-epsilon difference table and
the fitted log-log slope.  Smaller than the shipped desk configuration so it
finishes in about a minute; pass --desk for the full configs/homogenize.toml.
"""

import argparse
from pathlib import Path

from nlslab.experiments import config_from_mapping, load_config, run_homogenization

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def quick_config(replicas: int, seed: int):
    return config_from_mapping(
        {
            "levy": {"kind": "poisson", "a": 1.0},
            "grid": {"length": 32.0, "size": 512},
            "solver": {"dt": 5e-4, "time_horizon": 0.5, "store_every": 50},
            "initial_data": {"profile": "gaussian", "amplitude": 1.0, "width": 2.0},
            "experiment": {
                "epsilons": [0.2, 0.1, 0.05, 0.025],
                "replicas": replicas,
                "master_seed": seed,
            },
        },
        where="quick",
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--desk", action="store_true", help="run configs/homogenize.toml instead")
    parser.add_argument("--replicas", type=int, default=16)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    if args.desk:
        cfg, _ = load_config(CONFIG_DIR / "homogenize.toml")
    else:
        cfg = quick_config(args.replicas, args.seed)
    result = run_homogenization(cfg)

    print(f"{'eps':>8} {'E||diff||_H-1':>14} {'se':>10} {'E||diff||_inf':>14} {'E||diff||_H1':>13}")
    for eps in cfg.epsilons:
        row = {
            r["metric"]: r
            for r in result.aggregates
            if r["epsilon"] == eps and r["metric"].endswith("_p1")
        }
        print(
            f"{eps:>8.4g} {row['mean_h_minus1_p1']['value']:>14.5f} "
            f"{row['mean_h_minus1_p1']['se']:>10.5f} {row['mean_linf_p1']['value']:>14.5f} "
            f"{row['mean_h1_p1']['value']:>13.5f}"
        )
    slope = result.extras.get("slope_h_minus1")
    if slope:
        print(f"\nlog-log slope of the H^-1 mean: {slope['slope']:.3f} +- {slope['stderr']:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
