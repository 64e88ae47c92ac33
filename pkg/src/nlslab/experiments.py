"""Config-driven Monte Carlo experiments: homogenization, scalar limit law,
field fluctuations, and mollified variants.

Each runner returns an `EnsembleResult` holding one record per (epsilon,
replica), a flat table of aggregates (every aggregate carries a standard
error), and experiment-level extras such as fitted slopes.  All randomness
flows through named sub-streams of the master seed, so identical configs
reproduce identical results bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ExperimentError
from .grid import Grid, GridField, l2_pairing, mollify_field, sobolev_norm
from .haar import HaarIndex, empirical_cumulants, weighted_negative_norm_moment
from .linearized import covariance_from_responses, noise_response
from .measures import (
    LevySpec,
    SampledMeasure,
    characteristic_functional_exact,
    field_integral_samples,
    mollify,
    sample,
)
from .profiles import make_profile
from .rng import replica_rng
from .solvers import SolverConfig, Trajectory, difference_norms, solve_nls, solve_nls_measure
from .stats import (
    anderson_normality,
    bootstrap_se,
    empirical_char,
    fit_loglog_slope,
    ks_distance_to_gaussian,
    mean_se,
)

__all__ = [
    "ExperimentConfig",
    "EnsembleResult",
    "config_from_mapping",
    "run_homogenization",
    "run_clt",
    "run_fluctuations",
    "run_mollified",
    "run_haar_stats",
    "LEAKAGE_LIMIT",
]

LEAKAGE_LIMIT = 1e-3
MEASURE_LEAKAGE_LIMIT = 5e-2  # defect radiation is genuine; only veto blowups

_DEFAULT_THETAS = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
_HAAR_INDICES = tuple((n, k) for n in (1, 2, 4, 8) for k in (0, 1))


@dataclass(frozen=True)
class ExperimentConfig:
    levy: LevySpec
    grid: Grid
    dt: float
    time_horizon: float
    store_every: int
    dealias: bool
    initial_data: dict
    epsilons: tuple[float, ...]
    replicas: int
    master_seed: int
    sobolev_index: float = 0.75
    test_profiles: tuple[dict, ...] = field(default=())
    h_values: tuple[float, ...] = field(default=())
    clt_thetas: tuple[float, ...] = _DEFAULT_THETAS
    phi_reference_replicas: int = 0
    force_lebesgue: bool = False
    output_dir: str | None = None

    def solver_config(self, store_every: int | None = None) -> SolverConfig:
        return SolverConfig(
            grid=self.grid,
            dt=self.dt,
            time_horizon=self.time_horizon,
            store_every=self.store_every if store_every is None else store_every,
            dealias=self.dealias,
        )

    def psi0(self) -> GridField:
        return make_profile(self.grid, self.initial_data)

    def profiles(self) -> list[GridField]:
        return [make_profile(self.grid, d) for d in self.test_profiles]


def _take(table: dict, key: str, kind, where: str, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"{where}.{key} is required")
        return default
    value = table[key]
    try:
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind is list:
            if not isinstance(value, list):
                raise TypeError
            return value
        if kind is dict:
            if not isinstance(value, dict):
                raise TypeError
            return value
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"{where}.{key} must be of type {kind.__name__}")


def config_from_mapping(data: dict, where: str = "config") -> ExperimentConfig:
    """Build and validate a config from parsed TOML-style tables."""
    levy_tbl = _take(data, "levy", dict, where)
    kind = _take(levy_tbl, "kind", str, f"{where}.levy")
    a_default = 0.5 if kind == "gamma" else 1.0
    try:
        if kind == "compound_poisson":
            levy = LevySpec.compound_poisson(
                _take(levy_tbl, "jump_sizes", list, f"{where}.levy"),
                _take(levy_tbl, "jump_probs", list, f"{where}.levy"),
                _take(levy_tbl, "rate", float, f"{where}.levy"),
                a=_take(levy_tbl, "a", float, f"{where}.levy", a_default),
            )
        else:
            levy = LevySpec(kind, a=_take(levy_tbl, "a", float, f"{where}.levy", a_default))
    except ValueError as exc:
        raise ConfigError(f"{where}.levy: {exc}") from exc

    grid_tbl = _take(data, "grid", dict, where)
    try:
        grid = Grid(
            _take(grid_tbl, "length", float, f"{where}.grid"),
            _take(grid_tbl, "size", int, f"{where}.grid"),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}.grid: {exc}") from exc

    solver_tbl = _take(data, "solver", dict, where)
    dt = _take(solver_tbl, "dt", float, f"{where}.solver")
    horizon = _take(solver_tbl, "time_horizon", float, f"{where}.solver")
    store_every = _take(solver_tbl, "store_every", int, f"{where}.solver", 1)
    dealias = _take(solver_tbl, "dealias", bool, f"{where}.solver", False)

    init_tbl = _take(data, "initial_data", dict, where)

    exp_tbl = _take(data, "experiment", dict, where)
    epsilons = tuple(float(e) for e in _take(exp_tbl, "epsilons", list, f"{where}.experiment"))
    if not epsilons or any(not 0.0 < e <= 1.0 for e in epsilons):
        raise ConfigError(f"{where}.experiment.epsilons must all lie in (0, 1]")
    replicas = _take(exp_tbl, "replicas", int, f"{where}.experiment")
    if replicas < 1:
        raise ConfigError(f"{where}.experiment.replicas must be >= 1")
    sobolev_index = _take(exp_tbl, "sobolev_index", float, f"{where}.experiment", 0.75)
    if not 0.5 < sobolev_index <= 1.0:
        raise ConfigError(f"{where}.experiment.sobolev_index must lie in (1/2, 1]")
    h_values = tuple(
        float(h) for h in _take(exp_tbl, "h_values", list, f"{where}.experiment", [])
    )
    if any(not 0.0 < h <= 1.0 for h in h_values):
        raise ConfigError(f"{where}.experiment.h_values must lie in (0, 1]")

    cfg = ExperimentConfig(
        levy=levy,
        grid=grid,
        dt=dt,
        time_horizon=horizon,
        store_every=store_every,
        dealias=dealias,
        initial_data=dict(init_tbl),
        epsilons=epsilons,
        replicas=replicas,
        master_seed=_take(exp_tbl, "master_seed", int, f"{where}.experiment"),
        sobolev_index=sobolev_index,
        test_profiles=tuple(dict(d) for d in _take(data, "test_profiles", list, where, [])),
        h_values=h_values,
        clt_thetas=tuple(
            float(t) for t in _take(exp_tbl, "clt_thetas", list, f"{where}.experiment", list(_DEFAULT_THETAS))
        ),
        phi_reference_replicas=_take(exp_tbl, "phi_reference_replicas", int, f"{where}.experiment", 0),
        force_lebesgue=_take(exp_tbl, "force_lebesgue", bool, f"{where}.experiment", False),
        output_dir=_take(exp_tbl, "output_dir", str, f"{where}.experiment", None),
    )
    # Fail fast on malformed profiles.
    try:
        cfg.psi0()
        cfg.profiles()
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    known = {"levy", "grid", "solver", "initial_data", "experiment", "test_profiles"}
    stray = sorted(set(data) - known)
    if stray:
        raise ConfigError(f"{where}: unknown tables {stray}")
    return cfg


def load_config(path) -> tuple[ExperimentConfig, str]:
    """Parse a TOML config file; returns the config and the raw text."""
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - environment dependent
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_mapping(data, where=str(path)), raw.decode("utf-8")


@dataclass
class EnsembleResult:
    experiment: str
    records: list[dict]
    aggregates: list[dict]
    extras: dict


def _agg(epsilon, h, metric, value, se=None, exact=None, n=None) -> dict:
    return {
        "epsilon": epsilon,
        "h": h,
        "metric": metric,
        "value": value,
        "se": se,
        "exact": exact,
        "n": n,
    }


def _measure_for(cfg: ExperimentConfig, eps: float, stream: str, eps_idx: int, r: int) -> SampledMeasure:
    if cfg.force_lebesgue:
        return SampledMeasure.lebesgue(cfg.grid, eps)
    rng = replica_rng(cfg.master_seed, stream, eps_idx, r)
    return sample(cfg.levy, eps, cfg.grid, rng)


def _guard_leakage(traj: Trajectory, label: str, limit: float = LEAKAGE_LIMIT) -> None:
    """Abort when mass reaches the torus edge.

    The tight limit applies to the homogenized reference (the torus-for-line
    substitution must not let the coherent solution reach the boundary).
    Measure runs radiate a genuine O(sqrt(eps)) far field, so they are only
    vetoed at the loose blowup threshold; their leakage is reported
    per replica.
    """
    worst = float(np.max(traj.diagnostics["leakage"]))
    if worst >= limit:
        raise ExperimentError(
            f"boundary leakage {worst:.3e} >= {limit} for {label}; "
            "enlarge the torus or shorten the horizon"
        )


def _drifts(traj: Trajectory) -> tuple[float, float]:
    m = traj.diagnostics["mass"]
    e = traj.diagnostics["energy"]
    mass_drift = float(np.max(np.abs(m - m[0])) / abs(m[0])) if m[0] else 0.0
    energy_drift = float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] else 0.0
    return mass_drift, energy_drift


def _norm_moment_rows(eps: float, h, values: np.ndarray, name: str, power: int) -> list[dict]:
    rows = []
    for p in range(1, power + 1):
        mean, se = mean_se(values**p)
        rows.append(_agg(eps, h, f"mean_{name}_p{p}", mean, se, None, values.size))
    return rows


def run_homogenization(cfg: ExperimentConfig) -> EnsembleResult:
    """Measure-flow vs homogenized-flow differences across the epsilon ladder."""
    solver_cfg = cfg.solver_config()
    psi0 = cfg.psi0()
    ref = solve_nls(psi0, solver_cfg)
    _guard_leakage(ref, "homogenized reference")

    records: list[dict] = []
    aggregates: list[dict] = []
    s = cfg.sobolev_index
    per_eps_mean: list[float] = []
    for i, eps in enumerate(cfg.epsilons):
        sups = {"h-1": [], "linf": [], "h1": [], "h1_sq_diff": []}
        for r in range(cfg.replicas):
            measure = _measure_for(cfg, eps, "homogenize", i, r)
            traj = solve_nls_measure(psi0, measure, solver_cfg)
            _guard_leakage(traj, f"epsilon={eps} replica={r}", MEASURE_LEAKAGE_LIMIT)
            table = difference_norms(traj, ref, sobolev_indices=(-1.0, 1.0, -s))
            mass_drift, energy_drift = _drifts(traj)
            rec = {
                "epsilon": eps,
                "replica": r,
                "sup_h_minus1": table.sup("h-1"),
                "sup_linf": table.sup("linf"),
                "sup_h1": table.sup("h1"),
                "sup_h1_sq_diff": table.sup("h1_sq_diff"),
                "sup_h_neg_s": table.sup(f"h{-s:g}") / math.sqrt(eps),
                "mass_drift": mass_drift,
                "energy_drift": energy_drift,
                "leakage": float(np.max(traj.diagnostics["leakage"])),
            }
            records.append(rec)
            sups["h-1"].append(rec["sup_h_minus1"])
            sups["linf"].append(rec["sup_linf"])
            sups["h1"].append(rec["sup_h1"])
            sups["h1_sq_diff"].append(rec["sup_h1_sq_diff"])
        for name, key in (("h_minus1", "h-1"), ("linf", "linf"), ("h1", "h1")):
            aggregates.extend(_norm_moment_rows(eps, None, np.asarray(sups[key]), name, 2))
        mean, se = mean_se(np.asarray(sups["h1_sq_diff"]))
        aggregates.append(_agg(eps, None, "mean_h1_sq_diff_p1", mean, se, None, cfg.replicas))
        per_eps_mean.append(float(np.mean(sups["h-1"])))

    extras: dict = {"mean_h_minus1": dict(zip(cfg.epsilons, per_eps_mean))}
    if len(cfg.epsilons) >= 2 and min(per_eps_mean) > 0:
        slope, stderr, intercept = fit_loglog_slope(np.asarray(cfg.epsilons), np.asarray(per_eps_mean))
        extras["slope_h_minus1"] = {"slope": slope, "stderr": stderr, "intercept": intercept}
        aggregates.append(_agg(None, None, "loglog_slope_h_minus1_p1", slope, stderr, None, len(cfg.epsilons)))
    return EnsembleResult("homogenize", records, aggregates, extras)


def run_clt(cfg: ExperimentConfig) -> EnsembleResult:
    """Scalar limit law: empirical characteristic function of the centered,
    1/sqrt(eps)-scaled integrals against the closed form and the Gaussian limit."""
    profiles = cfg.profiles()
    if not profiles:
        raise ConfigError("clt experiment needs at least one [[test_profiles]] entry")
    grid = cfg.grid
    thetas = np.asarray(cfg.clt_thetas)
    records: list[dict] = []
    aggregates: list[dict] = []
    extras: dict = {"gauss_distance": {}}
    for p_idx, f in enumerate(profiles):
        name = f"f{p_idx}"
        fvals = f.values.real
        l2_sq = float(np.sum(fvals**2) * grid.dx)
        l3 = float(np.sum(np.abs(fvals) ** 3) * grid.dx) ** (1.0 / 3.0)
        lin_mass = float(np.sum(fvals) * grid.dx)
        for e_idx, eps in enumerate(cfg.epsilons):
            rng = replica_rng(cfg.master_seed, "clt", p_idx, e_idx)
            integrals = field_integral_samples(cfg.levy, eps, [f], cfg.replicas, rng)[:, 0]
            scaled = (integrals - lin_mass) / math.sqrt(eps)
            emp, emp_se = empirical_char(scaled, thetas)
            exact = np.array(
                [characteristic_functional_exact(cfg.levy, eps, theta * f) for theta in thetas]
            )
            gauss = np.exp(-0.5 * thetas**2 * l2_sq)
            dev_emp = np.abs(emp - exact)
            dev_gauss = np.abs(exact - gauss)
            for j, theta in enumerate(thetas):
                records.append(
                    {
                        "profile": name,
                        "epsilon": eps,
                        "theta": float(theta),
                        "emp_re": float(emp[j].real),
                        "emp_im": float(emp[j].imag),
                        "se": float(emp_se[j]),
                        "exact_re": float(exact[j].real),
                        "exact_im": float(exact[j].imag),
                        "gauss": float(gauss[j]),
                        "dev_emp_exact": float(dev_emp[j]),
                        "dev_exact_gauss": float(dev_gauss[j]),
                    }
                )
            dist = float(np.max(dev_gauss))
            aggregates.append(
                _agg(eps, None, f"char_max_dev_emp_exact_{name}", float(np.max(dev_emp)),
                     float(np.max(emp_se)), None, cfg.replicas)
            )
            aggregates.append(_agg(eps, None, f"gauss_distance_{name}", dist, 0.0, None, cfg.replicas))
            ratio = dist / (math.sqrt(eps) * l3**3) if l3 > 0 else 0.0
            aggregates.append(_agg(eps, None, f"gauss_distance_ratio_{name}", ratio, 0.0, None, cfg.replicas))
            extras["gauss_distance"].setdefault(name, {})[eps] = dist
    return EnsembleResult("clt", records, aggregates, extras)


def _pair_field(f: GridField, phi: GridField) -> complex:
    return l2_pairing(f, phi)


def _covariance_matrices(responses: list, dx: float) -> tuple[np.ndarray, np.ndarray]:
    n = len(responses)
    cov = np.empty((n, n), dtype=complex)
    pcov = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            cov[i, j], pcov[i, j] = covariance_from_responses(responses[i], responses[j], dx)
    return cov, pcov


def _fluct_aggregates(
    eps: float,
    h: float | None,
    pairings: np.ndarray,
    cov_exact: np.ndarray,
    pcov_exact: np.ndarray,
    sigmas: list[float],
    thetas: np.ndarray,
    master_seed: int,
    eps_idx: int,
) -> list[dict]:
    """Aggregate pairing samples against the exact Gaussian law."""
    n_prof = pairings.shape[1]
    n = pairings.shape[0]
    rows: list[dict] = []
    centered = pairings - pairings.mean(axis=0, keepdims=True)
    for i in range(n_prof):
        mean_re, se_re = mean_se(pairings[:, i].real)
        mean_im, se_im = mean_se(pairings[:, i].imag)
        rows.append(_agg(eps, h, f"mean_re_f{i}", mean_re, se_re, 0.0, n))
        rows.append(_agg(eps, h, f"mean_im_f{i}", mean_im, se_im, 0.0, n))
    for i in range(n_prof):
        for j in range(i, n_prof):
            w = centered[:, i] * np.conj(centered[:, j]) * n / (n - 1)
            pw = centered[:, i] * centered[:, j] * n / (n - 1)
            for tag, samples, exact in (
                ("cov", w, cov_exact[i, j]),
                ("pcov", pw, pcov_exact[i, j]),
            ):
                mean_r, se_r = mean_se(samples.real)
                mean_i, se_i = mean_se(samples.imag)
                rows.append(_agg(eps, h, f"{tag}_re_f{i}_f{j}", mean_r, se_r, float(exact.real), n))
                rows.append(_agg(eps, h, f"{tag}_im_f{i}_f{j}", mean_i, se_i, float(exact.imag), n))
    trace_samples = np.sum(np.abs(centered) ** 2, axis=1) * n / (n - 1)
    tr_mean, tr_se = mean_se(trace_samples)
    rows.append(
        _agg(eps, h, "tr_cov", tr_mean, tr_se, float(np.trace(cov_exact).real), n)
    )
    for i in range(n_prof):
        sigma = sigmas[i]
        re_samples = pairings[:, i].real
        if sigma > 0:
            ks = ks_distance_to_gaussian(re_samples, sigma)
            boot = replica_rng(master_seed, "fluct-boot", eps_idx, i)
            ks_se = bootstrap_se(re_samples, lambda s: ks_distance_to_gaussian(s, sigma), boot)
            rows.append(_agg(eps, h, f"ks_re_f{i}", ks, ks_se, None, n))
            emp, emp_se = empirical_char(re_samples, thetas)
            target = np.exp(-0.5 * thetas**2 * sigma**2)
            rows.append(
                _agg(eps, h, f"char_dev_re_f{i}", float(np.max(np.abs(emp - target))),
                     float(np.max(emp_se)), None, n)
            )
        if np.std(re_samples) > 0:
            stat, crit = anderson_normality(re_samples)
            boot = replica_rng(master_seed, "fluct-ad-boot", eps_idx, i)
            ad_se = bootstrap_se(
                re_samples,
                lambda s: anderson_normality(s)[0] if np.std(s) > 0 else 0.0,
                boot,
            )
            rows.append(_agg(eps, h, f"ad_re_f{i}", stat, ad_se, crit, n))
    return rows


def run_fluctuations(cfg: ExperimentConfig) -> EnsembleResult:
    """Distribution of the rescaled defect field against the exact Gaussian law."""
    profiles = cfg.profiles()
    if not profiles:
        raise ConfigError("fluctuation experiment needs at least one [[test_profiles]] entry")
    s = cfg.sobolev_index
    solver_dense = cfg.solver_config(store_every=1)
    psi0 = cfg.psi0()
    ref = solve_nls(psi0, solver_dense)
    _guard_leakage(ref, "homogenized reference")
    t_end = cfg.time_horizon

    responses = [noise_response(f, t_end, ref, solver_dense) for f in profiles]
    sigmas = [float(np.sqrt(np.sum(u**2) * cfg.grid.dx)) for u, _ in responses]
    n_prof = len(profiles)
    cov_exact, pcov_exact = _covariance_matrices(responses, cfg.grid.dx)

    solver_cfg = cfg.solver_config()
    thetas = np.asarray(cfg.clt_thetas)
    records: list[dict] = []
    aggregates: list[dict] = []
    ref_sub: Trajectory | None = None

    for e_idx, eps in enumerate(cfg.epsilons):
        scale = 1.0 / math.sqrt(eps)
        pairings = np.empty((cfg.replicas, n_prof), dtype=complex)
        for r in range(cfg.replicas):
            measure = _measure_for(cfg, eps, "fluctuations", e_idx, r)
            traj = solve_nls_measure(psi0, measure, solver_cfg)
            _guard_leakage(traj, f"epsilon={eps} replica={r}", MEASURE_LEAKAGE_LIMIT)
            if ref_sub is None:
                ref_sub = ref.at_times(traj.times)
            table = difference_norms(traj, ref_sub, sobolev_indices=(-1.0, -s))
            phi_t = GridField(cfg.grid, (traj.states[-1] - ref_sub.states[-1]) * scale)
            z = np.array([_pair_field(f, phi_t) for f in profiles])
            pairings[r] = z
            rec = {"epsilon": eps, "replica": r}
            for i in range(n_prof):
                rec[f"pair_re_f{i}"] = float(z[i].real)
                rec[f"pair_im_f{i}"] = float(z[i].imag)
            rec["sup_h_neg_s"] = table.sup(f"h{-s:g}") * scale
            rec["sup_h_minus1"] = table.sup("h-1")
            records.append(rec)
        aggregates.extend(
            _fluct_aggregates(
                eps, None, pairings, cov_exact, pcov_exact, sigmas, thetas,
                cfg.master_seed, e_idx,
            )
        )

    extras = {
        "cov_exact": [[(c.real, c.imag) for c in row] for row in cov_exact],
        "pcov_exact": [[(c.real, c.imag) for c in row] for row in pcov_exact],
        "response_l2": sigmas,
    }
    if cfg.phi_reference_replicas > 0:
        extras["phi_reference_sup_h_neg_s"] = _phi_reference_sups(cfg, ref, solver_dense)
    return EnsembleResult("fluctuations", records, aggregates, extras)


def _phi_reference_sups(cfg: ExperimentConfig, ref: Trajectory, solver_dense: SolverConfig) -> list[float]:
    """Reference distribution of sup_t ||phi(t)||_{H^{-s}} from direct noise solves."""
    from .linearized import sample_white_noise, solve_fluctuation

    s = cfg.sobolev_index
    sups = []
    store = cfg.solver_config()
    for r in range(cfg.phi_reference_replicas):
        xi = sample_white_noise(cfg.grid, replica_rng(cfg.master_seed, "phi-ref", r))
        phi = solve_fluctuation(ref, xi, store)
        sups.append(
            max(sobolev_norm(GridField(cfg.grid, st), -s) for st in phi.states)
        )
    return sups


def run_mollified(cfg: ExperimentConfig) -> EnsembleResult:
    """Homogenization and fluctuation metrics under kernel-smoothed measures.

    Atom samples are shared across the h ladder (common random numbers), so
    the reported h-variation isolates the mollification effect.
    """
    if not cfg.h_values:
        raise ConfigError("mollified experiment needs experiment.h_values")
    for h in cfg.h_values:
        if h < 2.0 * cfg.grid.dx:
            raise ConfigError(f"h={h} unresolvable: below 2*dx = {2 * cfg.grid.dx}")
    profiles = cfg.profiles()
    s = cfg.sobolev_index
    solver_dense = cfg.solver_config(store_every=1)
    psi0 = cfg.psi0()
    ref = solve_nls(psi0, solver_dense)
    _guard_leakage(ref, "homogenized reference")
    t_end = cfg.time_horizon
    n_prof = len(profiles)
    thetas = np.asarray(cfg.clt_thetas)
    solver_cfg = cfg.solver_config()

    records: list[dict] = []
    aggregates: list[dict] = []
    spread_sources: dict[tuple[float, str], dict[float, tuple[float, float]]] = {}
    base_responses = [noise_response(f, t_end, ref, solver_dense) for f in profiles]

    for e_idx, eps in enumerate(cfg.epsilons):
        base_measures = [
            _measure_for(cfg, eps, "mollified", e_idx, r) for r in range(cfg.replicas)
        ]
        ref_sub: Trajectory | None = None
        for h in cfg.h_values:
            # mollified noise: convolve the response profiles (kernel is even)
            responses = [
                (mollify_field(u, cfg.grid, h), mollify_field(v, cfg.grid, h))
                for u, v in base_responses
            ]
            sigmas = [float(np.sqrt(np.sum(u**2) * cfg.grid.dx)) for u, _ in responses]
            cov_exact, pcov_exact = _covariance_matrices(responses, cfg.grid.dx)
            sups_h1m = []
            pairings = np.empty((cfg.replicas, n_prof), dtype=complex)
            scale = 1.0 / math.sqrt(eps)
            for r, base in enumerate(base_measures):
                traj = solve_nls_measure(psi0, mollify(base, h), solver_cfg)
                _guard_leakage(traj, f"h={h} epsilon={eps} replica={r}", MEASURE_LEAKAGE_LIMIT)
                if ref_sub is None:
                    ref_sub = ref.at_times(traj.times)
                table = difference_norms(traj, ref_sub, sobolev_indices=(-1.0, -s))
                phi_t = GridField(cfg.grid, (traj.states[-1] - ref_sub.states[-1]) * scale)
                z = np.array([_pair_field(f, phi_t) for f in profiles])
                pairings[r] = z
                rec = {"epsilon": eps, "h": h, "replica": r,
                       "sup_h_minus1": table.sup("h-1"),
                       "sup_h_neg_s": table.sup(f"h{-s:g}") * scale}
                for i in range(n_prof):
                    rec[f"pair_re_f{i}"] = float(z[i].real)
                    rec[f"pair_im_f{i}"] = float(z[i].imag)
                records.append(rec)
                sups_h1m.append(rec["sup_h_minus1"])
            mean, se = mean_se(np.asarray(sups_h1m))
            aggregates.append(_agg(eps, h, "mean_h_minus1_p1", mean, se, None, cfg.replicas))
            spread_sources.setdefault((eps, "mean_h_minus1_p1"), {})[h] = (mean, se)
            if profiles:
                rows = _fluct_aggregates(
                    eps, h, pairings, cov_exact, pcov_exact, sigmas, thetas,
                    cfg.master_seed, e_idx,
                )
                aggregates.extend(rows)
                tr = next(r for r in rows if r["metric"] == "tr_cov")
                spread_sources.setdefault((eps, "tr_cov"), {})[h] = (tr["value"], tr["se"])

    extras: dict = {"h_spread": {}}
    for (eps, metric), by_h in spread_sources.items():
        vals = np.array([v for v, _ in by_h.values()])
        ses = np.array([s for _, s in by_h.values()])
        center = float(np.mean(vals))
        spread = float((vals.max() - vals.min()) / center) if center else 0.0
        # conservative: ignores the variance reduction from the shared samples
        spread_se = (
            float(np.hypot(ses[np.argmax(vals)], ses[np.argmin(vals)]) / center) if center else 0.0
        )
        aggregates.append(
            _agg(eps, None, f"h_spread_{metric}", spread, spread_se, None, len(vals))
        )
        extras["h_spread"][f"{metric}@eps={eps}"] = spread
    return EnsembleResult("mollified", records, aggregates, extras)


def run_haar_stats(cfg: ExperimentConfig) -> EnsembleResult:
    """Cumulant comparison for the centered coefficients plus the moment-scaling check."""
    indices = [HaarIndex(n, k) for n, k in _HAAR_INDICES]
    records: list[dict] = []
    aggregates: list[dict] = []
    psi0 = cfg.psi0()
    for e_idx, eps in enumerate(cfg.epsilons):
        rng = replica_rng(cfg.master_seed, "haar", e_idx)
        rows = empirical_cumulants(cfg.levy, eps, indices, cfg.grid, cfg.replicas, rng)
        for row in rows:
            label = "+".join(f"({n},{k})" for n, k in row["indices"])
            records.append(
                {
                    "epsilon": eps,
                    "indices": label,
                    "order": row["order"],
                    "exact": row["exact"],
                    "estimate": row["estimate"],
                    "se": row["se"],
                }
            )
            aggregates.append(
                _agg(eps, None, f"cumulant[{label}]", row["estimate"], row["se"],
                     row["exact"], cfg.replicas)
            )
        moment_rng = replica_rng(cfg.master_seed, "haar-moment", e_idx)
        est, se = weighted_negative_norm_moment(
            cfg.levy, eps, psi0, cfg.sobolev_index, 1,
            min(cfg.replicas, 10_000), moment_rng,
        )
        aggregates.append(_agg(eps, None, "defect_moment_p1", est, se, None, min(cfg.replicas, 10_000)))
        aggregates.append(_agg(eps, None, "defect_moment_ratio_p1", est / eps, se / eps, None, None))
    return EnsembleResult("haar-stats", records, aggregates, {})
