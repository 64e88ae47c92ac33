"""Uniform periodic grid, spectral transforms, and Sobolev-norm machinery.

Fields live on a torus of length L sampled at M = 2^k nodes.  Discrete
Sobolev norms follow the unitary continuum transform, so that
``sobolev_norm(f, 0)`` is exactly the L^2 norm and single Fourier modes
carry weight ``sqrt(1 + xi^2)^s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import ResolutionError

__all__ = [
    "Grid",
    "GridField",
    "bump",
    "BUMP_MASS",
    "smooth_step",
    "plateau_cutoff",
    "sobolev_norm",
    "l2_pairing",
    "spectral_derivative",
    "littlewood_paley",
    "cutoff",
    "partition_bump",
    "dealias_mask",
    "mollifier_kernel",
    "mollify_field",
]


def bump(x: np.ndarray) -> np.ndarray:
    """Even C^inf bump exp(-1/(1-x^2)) on (-1, 1), zero outside, unnormalized."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


# Unit-mass normalizer of `bump`, int_{-1}^{1} exp(-1/(1-x^2)) dx ~ 0.443994.
BUMP_MASS = float(quad(lambda t: np.exp(-1.0 / (1.0 - t * t)), -1.0, 1.0)[0])


def _g(t: np.ndarray) -> np.ndarray:
    out = np.zeros(t.shape)
    pos = t > 0.0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C^inf monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    num = _g(t)
    return num / (num + _g(1.0 - t))


def plateau_cutoff(x: np.ndarray) -> np.ndarray:
    """Smooth even plateau: 1 on [-1, 1], 0 outside (-2, 2), monotone between."""
    return smooth_step(2.0 - np.abs(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class Grid:
    """Periodic grid on [-length/2, length/2) with a power-of-two node count."""

    length: float
    size: int

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("grid length must be positive")
        if self.size < 2 or self.size & (self.size - 1):
            raise ValueError("grid size must be a power of two >= 2")

    @property
    def dx(self) -> float:
        return self.length / self.size

    @cached_property
    def x(self) -> np.ndarray:
        arr = -0.5 * self.length + self.dx * np.arange(self.size)
        arr.setflags(write=False)
        return arr

    @cached_property
    def xi(self) -> np.ndarray:
        """Torus frequencies 2*pi*m/L in FFT ordering."""
        arr = 2.0 * np.pi * np.fft.fftfreq(self.size, d=self.dx)
        arr.setflags(write=False)
        return arr

    @cached_property
    def xi_bracket_sq(self) -> np.ndarray:
        arr = 1.0 + self.xi**2
        arr.setflags(write=False)
        return arr

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map coordinates to the fundamental domain [-L/2, L/2)."""
        return (np.asarray(x, dtype=float) + 0.5 * self.length) % self.length - 0.5 * self.length


@dataclass
class GridField:
    """Complex-valued field sampled at the grid nodes."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.size,):
            raise ValueError(f"values shape {self.values.shape} != ({self.grid.size},)")

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridField":
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridField":
        return cls(grid, np.zeros(grid.size, dtype=np.complex128))

    def copy(self) -> "GridField":
        return GridField(self.grid, self.values.copy())

    def spectrum(self) -> np.ndarray:
        return np.fft.fft(self.values)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx))

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values), initial=0.0)))
        return float(np.max(np.abs(self.values.imag), initial=0.0)) <= tol * scale

    def __add__(self, other: "GridField") -> "GridField":
        _check_same_grid(self, other)
        return GridField(self.grid, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        _check_same_grid(self, other)
        return GridField(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "GridField":
        return GridField(self.grid, self.values * scalar)

    __rmul__ = __mul__


def _check_same_grid(f: GridField, g: GridField) -> None:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def l2_pairing(f: GridField, g: GridField) -> complex:
    """L^2 pairing <f, g> = integral of f * conj(g); conjugation on the second slot."""
    _check_same_grid(f, g)
    return complex(np.sum(f.values * np.conj(g.values)) * f.grid.dx)


def sobolev_norm(f: GridField, s: float) -> float:
    """Fractional Sobolev norm via spectral weights sqrt(1+xi^2)^s, s in [-2, 2]."""
    if not -2.0 <= s <= 2.0:
        raise ValueError("sobolev_norm supports s in [-2, 2]")
    coeffs = np.fft.fft(f.values)
    weights = f.grid.xi_bracket_sq**s
    total = np.sum(weights * np.abs(coeffs) ** 2) * f.grid.dx / f.grid.size
    return float(np.sqrt(total))


def spectral_derivative(f: GridField) -> GridField:
    return GridField(f.grid, np.fft.ifft(1j * f.grid.xi * np.fft.fft(f.values)))


def _dyadic(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def littlewood_paley(f: GridField, n_cut: int, side: str = "low") -> GridField:
    """Dyadic frequency projection: ``low`` retains |xi| <~ n_cut, ``high`` the rest.

    The low projector multiplies the spectrum by the fixed plateau profile
    evaluated at xi/n_cut (identically 1 on [-1, 1], supported on (-2, 2));
    the high projector is the exact complement, so low + high == f.
    """
    if not _dyadic(n_cut):
        raise ValueError("projection cutoff must be a dyadic integer >= 1")
    if side not in ("low", "high"):
        raise ValueError("side must be 'low' or 'high'")
    mult = plateau_cutoff(f.grid.xi / n_cut)
    low = np.fft.ifft(mult * np.fft.fft(f.values))
    if side == "low":
        return GridField(f.grid, low)
    return GridField(f.grid, f.values - low)


def cutoff(f: GridField, radius: float) -> GridField:
    """Multiply by the plateau profile at scale `radius` (identity once radius >= L)."""
    if radius <= 0:
        raise ValueError("cutoff radius must be positive")
    return GridField(f.grid, f.values * plateau_cutoff(f.grid.x / radius))


@lru_cache(maxsize=32)
def _partition_denominator(grid: Grid) -> np.ndarray:
    # At any x only the two nearest integers contribute to sum_j bump(x - j).
    frac = grid.x - np.floor(grid.x)
    den = bump(frac) + bump(frac - 1.0)
    den.setflags(write=False)
    return den


def partition_bump(k: int, grid: Grid) -> GridField:
    """Member rho_k of the smooth partition of unity on integer translates.

    rho_k(x) = bump(x - k) / sum_j bump(x - j), periodized over the torus.
    The translates sum to 1 at every node.
    """
    if grid.dx > 0.1 + 1e-12:
        raise ResolutionError("partition of unity needs dx <= 0.1")
    offsets = grid.wrap(grid.x - float(k))
    vals = bump(offsets) / _partition_denominator(grid)
    return GridField(grid, vals)


def dealias_mask(grid: Grid) -> np.ndarray:
    """Boolean 2/3-rule mask in FFT ordering: keep |m| <= M/3."""
    m = np.fft.fftfreq(grid.size) * grid.size
    return np.abs(m) <= grid.size / 3.0


def mollifier_kernel(grid: Grid, h: float) -> np.ndarray:
    """Discrete unit-mass mollifier zeta_h by node offset, for circular convolution.

    zeta is the normalized even bump; the discrete kernel is renormalized so
    that its grid quadrature is exactly 1, which makes mollification mass
    preserving to rounding.
    """
    if not 0.0 < h <= 1.0:
        raise ValueError("mollifier width h must lie in (0, 1]")
    if h < 2.0 * grid.dx:
        raise ResolutionError(f"mollifier width {h} below 2*dx = {2 * grid.dx}")
    offsets = grid.wrap(np.arange(grid.size) * grid.dx)
    vals = bump(offsets / h)
    return vals / (np.sum(vals) * grid.dx)


def mollify_field(values: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    """Circular convolution with the discrete unit-mass mollifier at width h."""
    kernel = mollifier_kernel(grid, h)
    out = np.fft.ifft(np.fft.fft(values) * np.fft.fft(kernel)) * grid.dx
    if np.isrealobj(values):
        return out.real
    return out
