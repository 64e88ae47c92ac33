"""Haar coefficients of sampled measures and their exact joint cumulants.

The centered coefficients X = int e dmu - int e dx of the Haar family have
joint cumulants in closed form,

    kappa(X_1, ..., X_J) = (-eps)^{J-1} * Phi^{(J)}(0) * int prod_j e_j dx,

with the product integral evaluated exactly on the dyadic lattice.  These
closed forms are the oracles for the empirical k-statistics, and the same
machinery yields the key moment estimate for fields multiplied by the
centered, rescaled measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ResolutionError
from .grid import Grid, GridField, sobolev_norm
from .measures import LevySpec, SampledMeasure, phi_derivative, sample
from .rng import as_rng
from .stats import cross_covariance, k_statistic, mean_se

__all__ = [
    "HaarIndex",
    "haar_eval",
    "haar_function",
    "haar_integral",
    "haar_product_integral",
    "haar_coefficient",
    "haar_coefficient_samples",
    "exact_joint_cumulant",
    "empirical_cumulants",
    "weighted_negative_norm_moment",
]


@dataclass(frozen=True)
class HaarIndex:
    """Index (N, k): scale N a power of two, translate k; support in [k/N-ish, ...).

    N = 1 gives the indicator of [k, k+1); N >= 2 the oscillating function
    sqrt(N/2) * (1 on [2k/N, (2k+1)/N) minus 1 on [(2k+1)/N, (2k+2)/N)).
    """

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1 or self.n & (self.n - 1):
            raise ValueError("Haar scale must be a power of two >= 1")

    @property
    def support(self) -> tuple[Fraction, Fraction]:
        if self.n == 1:
            return Fraction(self.k), Fraction(self.k + 1)
        return Fraction(2 * self.k, self.n), Fraction(2 * self.k + 2, self.n)

    @property
    def amplitude(self) -> float:
        return 1.0 if self.n == 1 else float(np.sqrt(self.n / 2.0))

    def piece_value(self, x: Fraction) -> float:
        """Value on the constant piece containing the rational point x."""
        lo, hi = self.support
        if not lo <= x < hi:
            return 0.0
        if self.n == 1:
            return 1.0
        mid = Fraction(2 * self.k + 1, self.n)
        return self.amplitude if x < mid else -self.amplitude


def haar_eval(index: HaarIndex, x: np.ndarray) -> np.ndarray:
    """Pointwise evaluation (half-open pieces, exact on dyadic breakpoints)."""
    x = np.asarray(x, dtype=float)
    if index.n == 1:
        return ((x >= index.k) & (x < index.k + 1)).astype(float)
    lo = 2 * index.k / index.n
    mid = (2 * index.k + 1) / index.n
    hi = (2 * index.k + 2) / index.n
    plus = (x >= lo) & (x < mid)
    minus = (x >= mid) & (x < hi)
    return index.amplitude * (plus.astype(float) - minus.astype(float))


def haar_function(index: HaarIndex, grid: Grid) -> GridField:
    """Haar function sampled on the grid; requires pieces spanning >= 2 cells."""
    piece = 1.0 / index.n
    if piece < 2.0 * grid.dx - 1e-15:
        raise ResolutionError(f"Haar scale {index.n} unresolved: piece width {piece} < 2*dx")
    lo, hi = index.support
    if lo < -grid.length / 2 or hi > grid.length / 2:
        raise ValueError("Haar support must sit inside the torus")
    return GridField(grid, haar_eval(index, grid.x))


def haar_integral(index: HaarIndex) -> float:
    """int e dx: one for the indicator scale, zero for oscillating scales."""
    return 1.0 if index.n == 1 else 0.0


def haar_product_integral(indices: list[HaarIndex]) -> float:
    """Exact integral of the product of Haar functions over the dyadic lattice.

    All breakpoints are multiples of 1/N_max, so the product is constant on
    lattice cells of that width and the rectangle sum is exact.
    """
    if not indices:
        raise ValueError("need at least one index")
    n_max = max(idx.n for idx in indices)
    lo = max(idx.support[0] for idx in indices)
    hi = min(idx.support[1] for idx in indices)
    if hi <= lo:
        return 0.0
    step = Fraction(1, n_max)
    total = Fraction(0)
    ncells = int((hi - lo) / step)
    for i in range(ncells):
        mid = lo + step * i + step / 2
        prod = 1.0
        for idx in indices:
            prod *= idx.piece_value(mid)
        total += Fraction(prod) * step
    return float(total)


def haar_coefficient(measure: SampledMeasure, index: HaarIndex) -> float:
    """Centered coefficient X = int e dmu - int e dx, atoms read exactly."""
    atom_part = float(np.sum(measure.atom_weights * haar_eval(index, measure.atom_positions)))
    return atom_part + (measure.lebesgue_density - 1.0) * haar_integral(index)


def exact_joint_cumulant(spec: LevySpec, epsilon: float, indices: list[HaarIndex]) -> float:
    """Closed-form joint cumulant of the centered coefficients at the given indices."""
    order = len(indices)
    if order < 1:
        raise ValueError("need at least one index")
    if order == 1:
        return 0.0
    return (
        (-epsilon) ** (order - 1)
        * phi_derivative(spec, order)
        * haar_product_integral(indices)
    )


def haar_coefficient_samples(
    spec: LevySpec,
    epsilon: float,
    indices: list[HaarIndex],
    grid: Grid,
    replicas: int,
    rng,
    batch_size: int = 4096,
) -> np.ndarray:
    """Vectorized replicas of the centered coefficients, shape (replicas, n_indices).

    Same sampling scheme as `measures.sample`, batched; gamma realizations
    pair per-cell masses with the (cell-aligned) Haar values.
    """
    rng = as_rng(rng)
    out = np.empty((replicas, len(indices)))
    centering = np.array(
        [(spec.lebesgue_density - 1.0) * haar_integral(idx) for idx in indices]
    )
    if spec.kind == "gamma":
        evals = np.stack([haar_eval(idx, grid.x) for idx in indices], axis=1)
        for start in range(0, replicas, batch_size):
            nb = min(batch_size, replicas - start)
            masses = rng.gamma(grid.dx / epsilon, epsilon, size=(nb, grid.size))
            out[start : start + nb] = masses @ evals + centering
        return out
    for start in range(0, replicas, batch_size):
        nb = min(batch_size, replicas - start)
        counts = rng.poisson(spec.total_rate * grid.length / epsilon, size=nb)
        total = int(counts.sum())
        positions = rng.uniform(-0.5 * grid.length, 0.5 * grid.length, size=total)
        if spec.kind == "poisson":
            weights = np.full(total, epsilon)
        else:
            sizes = rng.choice(np.asarray(spec.jump_sizes), size=total, p=spec.jump_probs)
            weights = epsilon * sizes
        owner = np.repeat(np.arange(nb), counts)
        block = np.empty((nb, len(indices)))
        for j, idx in enumerate(indices):
            vals = weights * haar_eval(idx, positions)
            block[:, j] = np.bincount(owner, weights=vals, minlength=nb)
        out[start : start + nb] = block + centering
    return out


def empirical_cumulants(
    spec: LevySpec,
    epsilon: float,
    indices: list[HaarIndex],
    grid: Grid,
    replicas: int,
    rng,
) -> list[dict]:
    """k-statistics through order four per index, plus pairwise covariances.

    Each row carries the matching closed-form cumulant and a grouped
    jackknife standard error.
    """
    if replicas < 100:
        raise ValueError("cumulant estimation needs at least 100 replicas")
    samples = haar_coefficient_samples(spec, epsilon, indices, grid, replicas, rng)
    rows: list[dict] = []
    for j, idx in enumerate(indices):
        col = samples[:, j]
        mean, mean_err = mean_se(col)
        rows.append(
            {
                "indices": ((idx.n, idx.k),),
                "order": 1,
                "exact": 0.0,
                "estimate": mean,
                "se": mean_err,
            }
        )
        for order in (2, 3, 4):
            est, se = k_statistic(col, order)
            rows.append(
                {
                    "indices": ((idx.n, idx.k),) * order,
                    "order": order,
                    "exact": exact_joint_cumulant(spec, epsilon, [idx] * order),
                    "estimate": est,
                    "se": se,
                }
            )
    for j in range(len(indices)):
        for l in range(j + 1, len(indices)):
            est, se = cross_covariance(samples[:, j], samples[:, l])
            rows.append(
                {
                    "indices": ((indices[j].n, indices[j].k), (indices[l].n, indices[l].k)),
                    "order": 2,
                    "exact": exact_joint_cumulant(spec, epsilon, [indices[j], indices[l]]),
                    "estimate": est,
                    "se": se,
                }
            )
    return rows


def weighted_negative_norm_moment(
    spec: LevySpec,
    epsilon: float,
    psi: GridField,
    s: float,
    p: int,
    replicas: int,
    rng,
) -> tuple[float, float]:
    """Monte Carlo estimate of E || psi * (density - 1) ||_{H^{-s}}^{2p}.

    The multiplier is the deposited grid density minus one; the theory bounds
    this moment by a constant multiple of epsilon^p * ||psi||_{H^1}^{2p}.
    """
    if s <= 0.5:
        raise ValueError("need s > 1/2")
    if p not in (1, 2):
        raise ValueError("p restricted to {1, 2}")
    rng = as_rng(rng)
    grid = psi.grid
    vals = np.empty(replicas)
    for r in range(replicas):
        measure = sample(spec, epsilon, grid, rng)
        defect = GridField(grid, psi.values * (measure.cell_density - 1.0))
        vals[r] = sobolev_norm(defect, -s) ** (2 * p)
    return mean_se(vals)
