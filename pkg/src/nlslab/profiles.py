"""Named analytic profiles for initial data and test functionals."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import Grid, GridField

__all__ = ["make_profile", "PROFILE_NAMES"]

PROFILE_NAMES = ("gaussian", "gaussian_cosine", "plane_wave")


def _gaussian(grid: Grid, amplitude: float, width: float, center: float) -> np.ndarray:
    return amplitude * np.exp(-((grid.x - center) ** 2) / width**2)


def make_profile(grid: Grid, descriptor: dict) -> GridField:
    """Build a field from a descriptor like {"profile": "gaussian", "width": 2.0}."""
    desc = dict(descriptor)
    name = desc.pop("profile", None)
    if name not in PROFILE_NAMES:
        raise ConfigError(f"unknown profile {name!r}; expected one of {PROFILE_NAMES}")
    amplitude = float(desc.pop("amplitude", 1.0))
    center = float(desc.pop("center", 0.0))
    if name == "gaussian":
        width = float(desc.pop("width", 2.0))
        values = _gaussian(grid, amplitude, width, center).astype(complex)
    elif name == "gaussian_cosine":
        width = float(desc.pop("width", 2.0))
        wavenumber = float(desc.pop("wavenumber", 1.0))
        values = (
            _gaussian(grid, amplitude, width, center) * np.cos(wavenumber * (grid.x - center))
        ).astype(complex)
    else:  # plane_wave
        wavenumber = float(desc.pop("wavenumber", 2.0 * np.pi / grid.length))
        mode = wavenumber * grid.length / (2.0 * np.pi)
        if abs(mode - round(mode)) > 1e-9:
            raise ConfigError(
                f"plane wave wavenumber {wavenumber} is not a torus frequency 2*pi*m/L"
            )
        values = amplitude * np.exp(1j * wavenumber * grid.x)
    if desc:
        raise ConfigError(f"unknown profile parameters for {name!r}: {sorted(desc)}")
    return GridField(grid, values)
