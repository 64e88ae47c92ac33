"""Estimators and test statistics shared by the Monte Carlo suites.

Cumulant estimation uses the classical k-statistics (unbiased through order
four) expressed in power sums, which makes grouped-jackknife standard errors
cheap: deleting a block only subtracts its power sums.
"""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

__all__ = [
    "mean_se",
    "power_sums",
    "k_statistic",
    "cross_covariance",
    "grouped_jackknife",
    "empirical_char",
    "ks_distance_to_gaussian",
    "bootstrap_se",
    "anderson_normality",
    "fit_loglog_slope",
]


def mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return float(np.mean(x)), float("inf")
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(n))


def power_sums(x: np.ndarray, max_order: int = 4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([np.sum(x**r) for r in range(1, max_order + 1)])


def _kstats(sums: np.ndarray, n: float) -> np.ndarray:
    """k-statistics k1..k4 from power sums S1..S4 of an n-sample."""
    s1, s2, s3, s4 = sums
    k1 = s1 / n
    k2 = (n * s2 - s1**2) / (n * (n - 1))
    k3 = (2 * s1**3 - 3 * n * s1 * s2 + n**2 * s3) / (n * (n - 1) * (n - 2))
    k4 = (
        -6 * s1**4
        + 12 * n * s1**2 * s2
        - 3 * n * (n - 1) * s2**2
        - 4 * n * (n + 1) * s1 * s3
        + n**2 * (n + 1) * s4
    ) / (n * (n - 1) * (n - 2) * (n - 3))
    return np.array([k1, k2, k3, k4])


def k_statistic(x: np.ndarray, order: int, n_groups: int = 100) -> tuple[float, float]:
    """Unbiased cumulant estimate of the given order (1..4) with jackknife SE."""
    if not 1 <= order <= 4:
        raise ValueError("k-statistics implemented through order 4")
    x = np.asarray(x, dtype=float)
    n = x.size
    estimate = float(_kstats(power_sums(x), n)[order - 1])
    se = _jackknife_se(x, lambda block_sums, m: _kstats(block_sums, m)[order - 1], n_groups)
    return estimate, se


def cross_covariance(x: np.ndarray, y: np.ndarray, n_groups: int = 100) -> tuple[float, float]:
    """Unbiased covariance estimate with grouped-jackknife SE."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size

    def from_sums(sums, m):
        sx, sy, sxy = sums
        return (m * sxy - sx * sy) / (m * (m - 1))

    joint = np.stack([x, y, x * y], axis=1)
    estimate = float(from_sums(joint.sum(axis=0), n))
    se = _jackknife_joint_se(joint, from_sums, n_groups)
    return estimate, se


def _jackknife_se(x: np.ndarray, stat_from_sums, n_groups: int) -> float:
    joint = np.stack([x, x**2, x**3, x**4], axis=1)
    return _jackknife_joint_se(joint, lambda s, m: stat_from_sums(s, m), n_groups)


def _jackknife_joint_se(joint: np.ndarray, stat_from_sums, n_groups: int) -> float:
    n = joint.shape[0]
    g = min(n_groups, n)
    bounds = np.linspace(0, n, g + 1).astype(int)
    totals = joint.sum(axis=0)
    leave_out = np.empty(g)
    for i in range(g):
        block = joint[bounds[i] : bounds[i + 1]]
        m = n - block.shape[0]
        leave_out[i] = stat_from_sums(totals - block.sum(axis=0), m)
    center = leave_out.mean()
    return float(np.sqrt((g - 1) / g * np.sum((leave_out - center) ** 2)))


def empirical_char(samples: np.ndarray, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Empirical characteristic function E e^{i theta X} with per-theta SEs."""
    samples = np.asarray(samples, dtype=float)
    phases = np.exp(1j * np.outer(thetas, samples))
    means = phases.mean(axis=1)
    n = samples.size
    se = np.sqrt(
        (phases.real.var(axis=1, ddof=1) + phases.imag.var(axis=1, ddof=1)) / n
    )
    return means, se


def ks_distance_to_gaussian(samples: np.ndarray, sigma: float) -> float:
    """Kolmogorov-Smirnov distance to the centered Gaussian of the given sigma."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(sps.kstest(np.asarray(samples, dtype=float), "norm", args=(0.0, sigma)).statistic)


def bootstrap_se(samples: np.ndarray, statistic, rng: np.random.Generator, n_boot: int = 200) -> float:
    samples = np.asarray(samples)
    n = samples.size
    reps = np.empty(n_boot)
    for b in range(n_boot):
        reps[b] = statistic(samples[rng.integers(0, n, size=n)])
    return float(np.std(reps, ddof=1))


def anderson_normality(samples: np.ndarray) -> tuple[float, float]:
    """Anderson-Darling statistic against normality and its 1% critical value."""
    result = sps.anderson(np.asarray(samples, dtype=float), dist="norm")
    idx = list(result.significance_level).index(1.0)
    return float(result.statistic), float(result.critical_values[idx])


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope of log y against log x: (slope, stderr, intercept)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    res = sps.linregress(lx, ly)
    return float(res.slope), float(res.stderr), float(res.intercept)
