#!/usr/bin/env python3
"""Visual check of the fluctuation law: histogram of Re<f, phi_n(T)> against
the exact Gaussian density, plus the empirical vs exact covariance.

Writes a PNG next to the chosen output stem (requires matplotlib).
"""

import argparse
import math

import numpy as np

from nlslab.experiments import config_from_mapping
from nlslab.grid import GridField, l2_pairing
from nlslab.linearized import noise_response
from nlslab.measures import sample
from nlslab.profiles import make_profile
from nlslab.rng import replica_rng
from nlslab.solvers import solve_nls, solve_nls_measure


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epsilon", type=float, default=0.05)
    parser.add_argument("--replicas", type=int, default=200)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--output", default="fluctuation_hist.png")
    args = parser.parse_args()

    cfg = config_from_mapping(
        {
            "levy": {"kind": "poisson", "a": 1.0},
            "grid": {"length": 32.0, "size": 512},
            "solver": {"dt": 5e-4, "time_horizon": 0.5, "store_every": 1},
            "initial_data": {"profile": "gaussian", "amplitude": 1.0, "width": 2.0},
            "experiment": {
                "epsilons": [args.epsilon],
                "replicas": args.replicas,
                "master_seed": args.seed,
            },
            "test_profiles": [{"profile": "gaussian", "amplitude": 1.0, "width": 2.0}],
        },
        where="script",
    )
    solver_cfg = cfg.solver_config()
    psi0 = cfg.psi0()
    ref = solve_nls(psi0, solver_cfg)
    f = make_profile(cfg.grid, cfg.test_profiles[0])
    t_end = cfg.time_horizon
    u, _ = noise_response(f, t_end, ref, solver_cfg)
    sigma = math.sqrt(float(np.sum(u**2) * cfg.grid.dx))

    eps = args.epsilon
    samples = np.empty(args.replicas)
    run_cfg = cfg.solver_config(store_every=10**9)
    for r in range(args.replicas):
        mu = sample(cfg.levy, eps, cfg.grid, replica_rng(cfg.master_seed, "script", r))
        traj = solve_nls_measure(psi0, mu, run_cfg)
        phi = GridField(cfg.grid, (traj.states[-1] - ref.states[-1]) / math.sqrt(eps))
        samples[r] = l2_pairing(f, phi).real

    print(f"eps={eps}: empirical std {samples.std(ddof=1):.4f}, exact sigma {sigma:.4f}")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = np.linspace(-4 * sigma, 4 * sigma, 400)
    density = np.exp(-(xs**2) / (2 * sigma**2)) / (sigma * math.sqrt(2 * math.pi))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(samples, bins=30, density=True, alpha=0.6, label=f"Re<f, phi_n(T)>, eps={eps}")
    ax.plot(xs, density, "k-", lw=2, label=f"exact N(0, {sigma:.3f}^2)")
    ax.set_xlabel("Re <f, phi_n(T)>")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
