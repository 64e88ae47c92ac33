from pathlib import Path

import numpy as np
import pytest

from nlslab.errors import ConfigError
from nlslab.experiments import (
    config_from_mapping,
    load_config,
    run_clt,
    run_fluctuations,
    run_haar_stats,
    run_homogenization,
    run_mollified,
)

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def smoke_mapping(**overrides):
    data = {
        "levy": {"kind": "poisson", "a": 1.0},
        "grid": {"length": 32.0, "size": 256},
        "solver": {"dt": 2e-3, "time_horizon": 0.2, "store_every": 20},
        "initial_data": {"profile": "gaussian", "amplitude": 1.0, "width": 2.0},
        "experiment": {
            "epsilons": [0.2],
            "replicas": 2,
            "master_seed": 7,
            "sobolev_index": 0.75,
            "h_values": [1.0, 0.5],
            "clt_thetas": [0.0, 1.0, 2.0],
        },
        "test_profiles": [{"profile": "gaussian", "amplitude": 1.0, "width": 2.0}],
    }
    exp_overrides = overrides.pop("experiment", {})
    data["experiment"].update(exp_overrides)
    data.update(overrides)
    return data


class TestConfigLoading:
    def test_shipped_configs_load(self):
        for path in sorted(CONFIG_DIR.glob("*.toml")):
            cfg, raw = load_config(path)
            assert cfg.replicas >= 1
            assert raw.startswith("#")

    def test_missing_table_anchored(self):
        data = smoke_mapping()
        del data["levy"]
        with pytest.raises(ConfigError, match=r"config\.levy"):
            config_from_mapping(data)

    def test_missing_key_anchored(self):
        data = smoke_mapping()
        del data["experiment"]["master_seed"]
        with pytest.raises(ConfigError, match=r"experiment\.master_seed"):
            config_from_mapping(data)

    def test_bad_epsilon_rejected(self):
        data = smoke_mapping(experiment={"epsilons": [1.5]})
        with pytest.raises(ConfigError, match="epsilons"):
            config_from_mapping(data)

    def test_bad_type_rejected(self):
        data = smoke_mapping()
        data["grid"]["size"] = "big"
        with pytest.raises(ConfigError, match=r"grid\.size"):
            config_from_mapping(data)

    def test_unknown_table_rejected(self):
        data = smoke_mapping(extras={"x": 1})
        with pytest.raises(ConfigError, match="unknown tables"):
            config_from_mapping(data)

    def test_bad_profile_rejected(self):
        data = smoke_mapping()
        data["initial_data"] = {"profile": "vortex"}
        with pytest.raises(ConfigError, match="vortex"):
            config_from_mapping(data)

    def test_toml_parse_error_mentions_line(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[levy\nkind='poisson'\n")
        with pytest.raises(ConfigError, match="line"):
            load_config(bad)


class TestHomogenizationRunner:
    def test_smoke_run_and_record_shape(self):
        cfg = config_from_mapping(smoke_mapping())
        result = run_homogenization(cfg)
        assert len(result.records) == 2
        rec = result.records[0]
        assert {"epsilon", "replica", "sup_h_minus1", "sup_linf", "sup_h1",
                "mass_drift", "energy_drift", "leakage"} <= set(rec)
        metrics = {row["metric"] for row in result.aggregates}
        assert "mean_h_minus1_p1" in metrics and "mean_h_minus1_p2" in metrics
        for row in result.aggregates:
            assert row["se"] is not None

    def test_degenerate_lebesgue_gives_identical_flows(self):
        cfg = config_from_mapping(
            smoke_mapping(experiment={"force_lebesgue": True, "epsilons": [1.0]})
        )
        result = run_homogenization(cfg)
        for rec in result.records:
            assert rec["sup_h_minus1"] < 1e-9
            assert rec["sup_linf"] < 1e-9
            assert rec["sup_h1"] < 1e-9

    def test_determinism_of_records(self):
        cfg = config_from_mapping(smoke_mapping())
        a = run_homogenization(cfg)
        b = run_homogenization(cfg)
        assert a.records == b.records


class TestCltRunner:
    def test_theta_zero_rows_are_unity(self):
        cfg = config_from_mapping(smoke_mapping(experiment={"replicas": 2000}))
        result = run_clt(cfg)
        rows = [r for r in result.records if r["theta"] == 0.0]
        assert rows
        for row in rows:
            assert row["emp_re"] == pytest.approx(1.0, abs=1e-12)
            assert row["exact_re"] == pytest.approx(1.0, abs=1e-12)
            assert row["gauss"] == 1.0

    def test_empirical_matches_exact(self):
        cfg = config_from_mapping(
            smoke_mapping(experiment={"replicas": 20000, "epsilons": [0.1]})
        )
        result = run_clt(cfg)
        for row in result.records:
            emp = row["emp_re"] + 1j * row["emp_im"]
            exact = row["exact_re"] + 1j * row["exact_im"]
            assert abs(emp - exact) < 4.0 / np.sqrt(20000)

    def test_gauss_distance_decreases(self):
        cfg = config_from_mapping(
            smoke_mapping(experiment={"replicas": 200, "epsilons": [0.2, 0.05, 0.0125]})
        )
        result = run_clt(cfg)
        dists = result.extras["gauss_distance"]["f0"]
        assert dists[0.2] > dists[0.05] > dists[0.0125]


class TestFluctuationRunner:
    def test_smoke_aggregates(self):
        cfg = config_from_mapping(smoke_mapping(experiment={"replicas": 8}))
        result = run_fluctuations(cfg)
        metrics = {row["metric"] for row in result.aggregates}
        assert {"mean_re_f0", "cov_re_f0_f0", "pcov_re_f0_f0", "tr_cov", "ad_re_f0"} <= metrics
        cov_row = next(r for r in result.aggregates if r["metric"] == "cov_re_f0_f0")
        assert cov_row["exact"] is not None and cov_row["exact"] > 0
        assert len(result.records) == 8
        assert "pair_re_f0" in result.records[0]

    def test_requires_profiles(self):
        data = smoke_mapping()
        data["test_profiles"] = []
        cfg = config_from_mapping(data)
        with pytest.raises(ConfigError, match="test_profiles"):
            run_fluctuations(cfg)

    def test_phi_reference_extras(self):
        cfg = config_from_mapping(
            smoke_mapping(experiment={"replicas": 2, "phi_reference_replicas": 3})
        )
        result = run_fluctuations(cfg)
        assert len(result.extras["phi_reference_sup_h_neg_s"]) == 3


class TestMollifiedRunner:
    def test_requires_h_values(self):
        data = smoke_mapping()
        data["experiment"]["h_values"] = []
        cfg = config_from_mapping(data)
        with pytest.raises(ConfigError, match="h_values"):
            run_mollified(cfg)

    def test_unresolvable_h_rejected(self):
        cfg = config_from_mapping(smoke_mapping(experiment={"h_values": [0.1]}))
        # dx = 0.125 so h = 0.1 < 2*dx
        with pytest.raises(ConfigError, match="unresolvable"):
            run_mollified(cfg)

    def test_degenerate_lebesgue_h_independent(self):
        cfg = config_from_mapping(
            smoke_mapping(experiment={"force_lebesgue": True, "epsilons": [1.0]})
        )
        result = run_mollified(cfg)
        means = {
            (row["h"]): row["value"]
            for row in result.aggregates
            if row["metric"] == "mean_h_minus1_p1"
        }
        assert len(means) == 2
        for value in means.values():
            assert value < 1e-9
        spread_rows = [r for r in result.aggregates if r["metric"].startswith("h_spread")]
        assert spread_rows

    def test_smoke_spread_rows(self):
        cfg = config_from_mapping(smoke_mapping(experiment={"replicas": 4}))
        result = run_mollified(cfg)
        metrics = {row["metric"] for row in result.aggregates}
        assert "h_spread_mean_h_minus1_p1" in metrics
        assert "h_spread_tr_cov" in metrics


class TestHaarRunner:
    def test_smoke_rows(self):
        cfg = config_from_mapping(
            smoke_mapping(experiment={"replicas": 2000, "epsilons": [0.5]})
        )
        result = run_haar_stats(cfg)
        orders = {row["order"] for row in result.records}
        assert orders == {1, 2, 3, 4}
        ratio_rows = [r for r in result.aggregates if r["metric"] == "defect_moment_ratio_p1"]
        assert len(ratio_rows) == 1 and ratio_rows[0]["value"] > 0
        cumulant_rows = [r for r in result.aggregates if r["metric"].startswith("cumulant[")]
        assert len(cumulant_rows) == len(result.records)
        assert all(r["exact"] is not None for r in cumulant_rows)
