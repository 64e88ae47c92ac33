"""Desk-scale laboratory for the cubic Schrodinger equation with random
point-measure nonlinearity: homogenization toward the constant-coefficient
flow and Gaussian fluctuations driven by spatial white noise."""

__version__ = "0.1.0"

from .grid import Grid, GridField, l2_pairing, sobolev_norm
from .measures import (
    LevySpec,
    MollifiedMeasure,
    SampledMeasure,
    characteristic_functional_exact,
    laplace_functional_exact,
    mollify,
    phi_derivative,
    phi_eval,
    sample,
)
from .solvers import SolverConfig, Trajectory, difference_norms, solve_nls, solve_nls_measure
from .linearized import (
    RealLinearOperator,
    WhiteNoiseSample,
    assemble_operator,
    exact_covariance,
    kt_operator,
    propagate_linearized,
    sample_white_noise,
    solve_fluctuation,
)
from .weights import WeightSequence, envelope, weighted_l2_norm, xn1_norm, yns1_norm
from .haar import HaarIndex, empirical_cumulants, exact_joint_cumulant, haar_coefficient

__all__ = [
    "__version__",
    "Grid",
    "GridField",
    "l2_pairing",
    "sobolev_norm",
    "LevySpec",
    "SampledMeasure",
    "MollifiedMeasure",
    "phi_eval",
    "phi_derivative",
    "sample",
    "mollify",
    "laplace_functional_exact",
    "characteristic_functional_exact",
    "SolverConfig",
    "Trajectory",
    "solve_nls",
    "solve_nls_measure",
    "difference_norms",
    "RealLinearOperator",
    "WhiteNoiseSample",
    "sample_white_noise",
    "propagate_linearized",
    "assemble_operator",
    "solve_fluctuation",
    "kt_operator",
    "exact_covariance",
    "WeightSequence",
    "envelope",
    "weighted_l2_norm",
    "xn1_norm",
    "yns1_norm",
    "HaarIndex",
    "haar_coefficient",
    "exact_joint_cumulant",
    "empirical_cumulants",
]
