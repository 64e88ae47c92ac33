"""Envelope-weighted norms used to monitor solutions near the random measure.

A nonnegative integer-indexed sequence Z induces the slowly varying envelope

    N(k)^2 = 4 + max_l [ Z(l)^2 - d(k, l) ],

with d the wrap-around distance on the integer torus, and the piecewise
linear weight omega(x) interpolating N(k)^2 between integers.  The solution
monitors combine the H^1 norm with L^2 norms weighted by omega for two
sequence choices: unit-cell masses of the sampled measure, and local
negative-Sobolev norms of the centered, rescaled measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridField, partition_bump, sobolev_norm
from .measures import MollifiedMeasure, SampledMeasure

__all__ = [
    "WeightSequence",
    "EnvelopeWeight",
    "envelope",
    "weighted_l2_norm",
    "unit_cell_masses",
    "local_defect_norms",
    "xn1_norm",
    "yns1_norm",
]


def _integer_torus(grid: Grid) -> int:
    cells = round(grid.length)
    if abs(grid.length - cells) > 1e-9 or cells < 2:
        raise ValueError("weighted norms need an integer torus length >= 2")
    return cells


@dataclass(frozen=True)
class WeightSequence:
    """Nonnegative sequence over the integer torus, anchored at k_start."""

    k_start: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("weight sequence needs at least two entries")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("weight sequence must be finite and nonnegative")

    @classmethod
    def zeros(cls, grid: Grid) -> "WeightSequence":
        cells = _integer_torus(grid)
        return cls(-(cells // 2), np.zeros(cells))

    @property
    def size(self) -> int:
        return len(self.values)

    def at(self, k: int) -> float:
        return float(self.values[(k - self.k_start) % self.size])


@dataclass(frozen=True)
class EnvelopeWeight:
    """Envelope N(k)^2 over the integer torus plus the interpolated weight."""

    k_start: int
    envelope_sq: np.ndarray

    @property
    def size(self) -> int:
        return len(self.envelope_sq)

    def envelope_sq_at(self, k: int) -> float:
        return float(self.envelope_sq[(k - self.k_start) % self.size])

    def weight_values(self, grid: Grid) -> np.ndarray:
        """omega(x) at the grid nodes: piecewise linear between integer squares."""
        cells = _integer_torus(grid)
        if cells != self.size:
            raise ValueError("grid torus length does not match the envelope")
        k = np.floor(grid.x).astype(np.int64)
        frac = grid.x - k
        idx = (k - self.k_start) % self.size
        nxt = (idx + 1) % self.size
        return (1.0 - frac) * self.envelope_sq[idx] + frac * self.envelope_sq[nxt]


def envelope(z: WeightSequence) -> EnvelopeWeight:
    """Slowly varying envelope of Z with wrap-around index distance.

    By construction N(k)^2 >= 4, Z(k) <= N(k), and adjacent squares differ
    by at most 1, which makes the interpolated weight 1-Lipschitz.
    """
    n = z.size
    k = np.arange(n)
    diff = np.abs(k[:, None] - k[None, :])
    dist = np.minimum(diff, n - diff)
    vals = np.asarray(z.values, dtype=float)
    env_sq = 4.0 + np.max(vals[None, :] ** 2 - dist, axis=1)
    return EnvelopeWeight(z.k_start, env_sq)


def weighted_l2_norm(f: GridField, z: WeightSequence) -> float:
    """Weighted norm: sqrt of the quadrature of |f|^2 * omega(x; Z)."""
    omega = envelope(z).weight_values(f.grid)
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2 * omega) * f.grid.dx))


def unit_cell_masses(measure: SampledMeasure) -> WeightSequence:
    """Z_n(k) = mu([k - 1/2, k + 1/2)) read off atoms exactly plus the Lebesgue part."""
    grid = measure.grid
    cells = _integer_torus(grid)
    k_start = -(cells // 2)
    masses = np.full(cells, measure.lebesgue_density)
    if measure.atom_positions.size:
        k = np.floor(measure.atom_positions + 0.5).astype(np.int64)
        idx = (k - k_start) % cells
        masses += np.bincount(idx, weights=measure.atom_weights, minlength=cells)
    return WeightSequence(k_start, masses)


def local_defect_norms(
    measure: SampledMeasure | MollifiedMeasure, s: float
) -> WeightSequence:
    """Z_{n,s}(k) = || rho_k * (density - 1) / sqrt(eps) ||_{H^{-s}} per unit cell."""
    if not 0.5 < s <= 1.0:
        raise ValueError("local defect norms need 1/2 < s <= 1")
    grid = measure.grid
    cells = _integer_torus(grid)
    k_start = -(cells // 2)
    centered = (measure.cell_density - 1.0) / np.sqrt(measure.epsilon)
    vals = np.empty(cells)
    for i in range(cells):
        rho = partition_bump(k_start + i, grid)
        vals[i] = sobolev_norm(GridField(grid, rho.values.real * centered), -s)
    return WeightSequence(k_start, vals)


def xn1_norm(f: GridField, measure: SampledMeasure) -> float:
    """sqrt(||f||_{H^1}^2 + ||f||^2 weighted by the unit-cell-mass envelope)."""
    h1 = sobolev_norm(f, 1.0)
    weighted = weighted_l2_norm(f, unit_cell_masses(measure))
    return float(np.hypot(h1, weighted))


def yns1_norm(f: GridField, measure: SampledMeasure | MollifiedMeasure, s: float) -> float:
    """sqrt(xn1^2 + ||f||^2 weighted by the local-defect envelope at index s."""
    base = measure.base if isinstance(measure, MollifiedMeasure) else measure
    xn1 = xn1_norm(f, base)
    weighted = weighted_l2_norm(f, local_defect_norms(measure, s))
    return float(np.hypot(xn1, weighted))
