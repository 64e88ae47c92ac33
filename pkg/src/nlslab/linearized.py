"""Linearization of the cubic flow about a background, and its noise response.

The linearized equation i du/dt = -u_xx + 4|psi|^2 u + 2 psi^2 conj(u) is
advanced by the same symmetric splitting as the nonlinear solver; the
potential substep is an exact per-cell 2x2 real rotation with the background
frozen at the step midpoint.  The flow map S(t, tau) is real linear.

The zero-data response to a stationary forcing profile f,

    K_t f = int_0^t S(t, tau) [ (2/i) |psi(tau)|^2 psi(tau) f ] dtau,

is realized discretely with midpoint quadrature.  On stacked (Re, Im)
vectors the real pairing Re<f, g> becomes the Euclidean inner product, so
the dual map K_t^* is the literal matrix transpose; `kt_adjoint_apply`
computes its action matrix-free by running the step transposes in reverse.

For spatial white noise xi the field phi(t) = K_t xi is Gaussian with

    Var Re<f, phi(t)> = || Re K_t^* f ||_{L^2}^2,

and the complex covariance/pseudo-covariance follow by polarization; they
are produced by `exact_covariance` (verified against the Monte Carlo
ensemble in the test suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError
from .grid import Grid, GridField, mollify_field
from .rng import as_rng
from .solvers import SolverConfig, Trajectory

__all__ = [
    "WhiteNoiseSample",
    "RealLinearOperator",
    "sample_white_noise",
    "propagate_linearized",
    "assemble_operator",
    "solve_fluctuation",
    "kt_operator",
    "kt_adjoint_apply",
    "noise_response",
    "covariance_from_responses",
    "exact_covariance",
    "pair_moments",
]

DENSE_ASSEMBLY_LIMIT = 512


@dataclass
class WhiteNoiseSample:
    """Real per-cell noise with variance 1/dx, optionally mollified at width h."""

    grid: Grid
    values: np.ndarray
    h: float | None = None


def sample_white_noise(grid: Grid, rng, h: float | None = None) -> WhiteNoiseSample:
    """Draw spatial white noise: i.i.d. N(0, 1/dx) per cell; convolve if h given."""
    rng = as_rng(rng)
    values = rng.standard_normal(grid.size) / math.sqrt(grid.dx)
    if h is not None:
        values = mollify_field(values, grid, h)
    return WhiteNoiseSample(grid, values, h)


@dataclass
class RealLinearOperator:
    """Dense real-linear map on complex fields, acting on stacked (Re, Im) vectors."""

    grid: Grid
    matrix: np.ndarray  # (2M, 2M)
    t: float
    tau: float

    def apply(self, f: GridField) -> GridField:
        vec = np.concatenate([f.values.real, f.values.imag])
        out = self.matrix @ vec
        m = self.grid.size
        return GridField(self.grid, out[:m] + 1j * out[m:])

    def transpose(self) -> "RealLinearOperator":
        return RealLinearOperator(self.grid, self.matrix.T.copy(), self.t, self.tau)

    def save(self, path) -> None:
        np.savez(
            path,
            matrix=self.matrix,
            t=self.t,
            tau=self.tau,
            grid_length=self.grid.length,
            grid_size=self.grid.size,
        )

    @classmethod
    def load(cls, path) -> "RealLinearOperator":
        data = np.load(path)
        grid = Grid(float(data["grid_length"]), int(data["grid_size"]))
        return cls(grid, data["matrix"], float(data["t"]), float(data["tau"]))


def _steps_between(tau: float, t: float, dt: float) -> tuple[int, float]:
    span = t - tau
    n = round(abs(span) / dt)
    if abs(n * dt - abs(span)) > 1e-9 * max(1.0, abs(span)):
        raise AlignmentError("t - tau must be an integer number of steps")
    return n, math.copysign(dt, span) if n else dt


def _rotation_coeffs(psi_mid: np.ndarray, dt: float):
    """Exact exponential of the per-cell potential block over a step of length dt.

    With V = 4|psi|^2 and W = 2 psi^2 the stacked generator is traceless with
    determinant V^2 - |W|^2 = 12|psi|^4 >= 0, a pure rotation-like block.
    """
    v = 4.0 * np.abs(psi_mid) ** 2
    w = 2.0 * psi_mid**2
    sigma = np.sqrt(np.maximum(v * v - np.abs(w) ** 2, 0.0))
    cos = np.cos(sigma * dt)
    sin_scaled = dt * np.sinc(sigma * dt / np.pi)  # sin(sigma dt)/sigma
    a11 = cos + sin_scaled * w.imag
    a12 = sin_scaled * (v - w.real)
    a21 = -sin_scaled * (v + w.real)
    a22 = cos - sin_scaled * w.imag
    return a11, a12, a21, a22


def _apply_rotation(u: np.ndarray, coeffs, transpose: bool = False) -> np.ndarray:
    a11, a12, a21, a22 = coeffs
    if transpose:
        a12, a21 = a21, a12
    p, q = u.real, u.imag
    return (a11 * p + a12 * q) + 1j * (a21 * p + a22 * q)


def _apply_free(u: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(u, axis=-1) * multiplier, axis=-1)


def _forcing_profile(psi_mid: np.ndarray, g: np.ndarray) -> np.ndarray:
    return -2j * np.abs(psi_mid) ** 2 * psi_mid * g  # (2/i) |psi|^2 psi g


def _forward_pass(
    u: np.ndarray,
    psi_traj: Trajectory,
    cfg: SolverConfig,
    tau: float,
    t: float,
    forcing: np.ndarray | None = None,
) -> np.ndarray:
    """Evolve stacked rows from tau to t; optionally add the forced response.

    The forcing contribution of each step is injected at the midpoint and
    carried to the step end by a half rotation plus half free flight,
    consistent with midpoint quadrature of the response integral.
    """
    n, dt_s = _steps_between(tau, t, cfg.dt)
    half = np.exp(-1j * cfg.grid.xi**2 * dt_s / 2.0)
    out = np.array(u, dtype=np.complex128, copy=True)
    for k in range(n):
        t_mid = tau + (k + 0.5) * dt_s
        psi_mid = psi_traj.values_at(t_mid)
        rot = _rotation_coeffs(psi_mid, dt_s)
        out = _apply_free(out, half)
        out = _apply_rotation(out, rot)
        out = _apply_free(out, half)
        if forcing is not None:
            extra = _forcing_profile(psi_mid, forcing)
            extra = _apply_rotation(extra, _rotation_coeffs(psi_mid, dt_s / 2.0))
            extra = _apply_free(extra, half)
            out = out + dt_s * extra
    return out


def propagate_linearized(
    u0: GridField, tau: float, t: float, psi_traj: Trajectory, cfg: SolverConfig
) -> GridField:
    """Apply S(t, tau) to u0 along the stored background trajectory."""
    return GridField(cfg.grid, _forward_pass(u0.values, psi_traj, cfg, tau, t))


def _stacked_basis(m: int) -> np.ndarray:
    eye = np.eye(m, dtype=np.complex128)
    return np.vstack([eye, 1j * eye])


def _images_to_matrix(images: np.ndarray, m: int) -> np.ndarray:
    # Row j of `images` is the image of stacked basis vector j.
    mat = np.empty((2 * m, 2 * m))
    mat[:m, :] = images.real.T
    mat[m:, :] = images.imag.T
    return mat


def assemble_operator(
    tau: float,
    t: float,
    psi_traj: Trajectory,
    cfg: SolverConfig,
    max_size: int = DENSE_ASSEMBLY_LIMIT,
) -> RealLinearOperator:
    """Dense matrix of S(t, tau) obtained by propagating the stacked basis."""
    m = cfg.grid.size
    if m > max_size:
        raise ValueError(f"dense assembly limited to grids of size <= {max_size}")
    images = _forward_pass(_stacked_basis(m), psi_traj, cfg, tau, t)
    return RealLinearOperator(cfg.grid, _images_to_matrix(images, m), t, tau)


def solve_fluctuation(
    psi_traj: Trajectory, xi: WhiteNoiseSample, cfg: SolverConfig
) -> Trajectory:
    """Zero-data solution driven by the noise-weighted cubic forcing.

    phi(t) = int_0^t S(t, tau) [(2/i) |psi(tau)|^2 psi(tau) xi] dtau, stored
    every `store_every` steps like the nonlinear solver.
    """
    grid = cfg.grid
    if xi.grid != grid:
        raise AlignmentError("noise and solver grids differ")
    n_steps = cfg.n_steps
    dt_s = cfg.signed_dt
    phi = np.zeros(grid.size, dtype=np.complex128)
    times = [0.0]
    states = [phi.copy()]
    for k in range(n_steps):
        phi = _forward_pass(phi, psi_traj, cfg, k * dt_s, (k + 1) * dt_s, forcing=xi.values)
        if (k + 1) % cfg.store_every == 0 or k + 1 == n_steps:
            times.append((k + 1) * dt_s)
            states.append(phi.copy())
    return Trajectory(grid, np.asarray(times), np.asarray(states), {})


def kt_operator(
    t: float,
    psi_traj: Trajectory,
    cfg: SolverConfig,
    max_size: int = DENSE_ASSEMBLY_LIMIT,
) -> RealLinearOperator:
    """Dense matrix of the response map K_t (forcing profile -> field at t)."""
    m = cfg.grid.size
    if m > max_size:
        raise ValueError(f"dense assembly limited to grids of size <= {max_size}")
    zeros = np.zeros((2 * m, m), dtype=np.complex128)
    images = _forward_pass(zeros, psi_traj, cfg, 0.0, t, forcing=_stacked_basis(m))
    return RealLinearOperator(cfg.grid, _images_to_matrix(images, m), t, 0.0)


def kt_adjoint_apply(
    f: GridField | np.ndarray, t: float, psi_traj: Trajectory, cfg: SolverConfig
) -> np.ndarray:
    """Matrix-free K_t^T acting on f (rows), without dense assembly.

    Runs the transposed elementary steps in reverse order, accumulating the
    transposed midpoint forcing terms; agrees with kt_operator().transpose()
    to rounding.
    """
    values = f.values if isinstance(f, GridField) else np.asarray(f, dtype=np.complex128)
    n, dt_s = _steps_between(0.0, t, cfg.dt)
    xi_sq = cfg.grid.xi**2
    half_back = np.exp(1j * xi_sq * dt_s / 2.0)
    v = np.array(values, dtype=np.complex128, copy=True)
    acc = np.zeros_like(v)
    for k in reversed(range(n)):
        psi_mid = psi_traj.values_at((k + 0.5) * dt_s)
        w = _apply_free(v, half_back)
        w = _apply_rotation(w, _rotation_coeffs(psi_mid, dt_s / 2.0), transpose=True)
        acc = acc + dt_s * (2j * np.abs(psi_mid) ** 2 * np.conj(psi_mid)) * w
        v = _apply_free(v, half_back)
        v = _apply_rotation(v, _rotation_coeffs(psi_mid, dt_s), transpose=True)
        v = _apply_free(v, half_back)
    return acc


def noise_response(
    f: GridField, t: float, psi_traj: Trajectory, cfg: SolverConfig, h: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Real profiles (u, v) with <f, phi(t)> = <u, xi> + i <v, xi> for noise xi.

    u = Re K_t^T f and v = Re K_t^T (f / i); when the noise is mollified at
    width h, the profiles are convolved with the same kernel (the mollifier
    is even, hence self-adjoint).
    """
    rows = np.stack([f.values, -1j * f.values])
    res = kt_adjoint_apply(rows, t, psi_traj, cfg)
    u, v = res[0].real.copy(), res[1].real.copy()
    if h is not None:
        u = mollify_field(u, cfg.grid, h)
        v = mollify_field(v, cfg.grid, h)
    return u, v


def covariance_from_responses(
    resp_f: tuple[np.ndarray, np.ndarray],
    resp_g: tuple[np.ndarray, np.ndarray],
    dx: float,
) -> tuple[complex, complex]:
    """Covariance/pseudo-covariance of two pairings given their noise responses."""
    uf, vf = resp_f
    ug, vg = resp_g

    def dot(a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(a * b) * dx)

    cov = dot(uf, ug) + dot(vf, vg) + 1j * (dot(vf, ug) - dot(uf, vg))
    pcov = dot(uf, ug) - dot(vf, vg) + 1j * (dot(vf, ug) + dot(uf, vg))
    return complex(cov), complex(pcov)


def exact_covariance(
    t: float,
    psi_traj: Trajectory,
    f: GridField,
    g: GridField,
    cfg: SolverConfig,
    h: float | None = None,
) -> tuple[complex, complex]:
    """Gaussian covariance and pseudo-covariance of (<f, phi(t)>, <g, phi(t)>).

    Returns (E[Z_f conj(Z_g)], E[Z_f Z_g]) where Z_f = <f, phi(t)> under the
    pairing with conjugation on the second slot.  Both follow from the noise
    response profiles by polarization of Var Re<., phi>.
    """
    resp_f = noise_response(f, t, psi_traj, cfg, h=h)
    resp_g = noise_response(g, t, psi_traj, cfg, h=h)
    return covariance_from_responses(resp_f, resp_g, cfg.grid.dx)


def pair_moments(u: np.ndarray, v: np.ndarray, noises: np.ndarray, dx: float) -> np.ndarray:
    """Samples of <f, phi> from noise draws, given the response profiles (u, v).

    `noises` has one draw per row; returns the complex pairing samples.
    """
    re = noises @ u * dx
    im = noises @ v * dx
    return re + 1j * im
