import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlslab.grid import Grid, GridField, partition_bump, sobolev_norm
from nlslab.measures import LevySpec, SampledMeasure, deposit_atoms, sample
from nlslab.rng import replica_rng
from nlslab.weights import (
    WeightSequence,
    envelope,
    local_defect_norms,
    unit_cell_masses,
    weighted_l2_norm,
    xn1_norm,
    yns1_norm,
)

GRID = Grid(16.0, 256)


def gaussian(grid=GRID, width=2.0):
    return GridField(grid, np.exp(-grid.x**2 / width**2).astype(complex))


def torus_sequence(values, k_start=-8):
    return WeightSequence(k_start, np.asarray(values, dtype=float))


weight_arrays = arrays(
    float,
    16,
    elements=st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
)


class TestEnvelope:
    def test_zero_sequence_floor(self):
        env = envelope(WeightSequence.zeros(GRID))
        assert np.all(env.envelope_sq == 4.0)

    def test_single_spike_example(self):
        vals = np.zeros(32)
        vals[16] = 3.0  # k = 0 with k_start = -16
        env = envelope(WeightSequence(-16, vals))
        assert env.envelope_sq_at(0) == 13.0
        assert env.envelope_sq_at(5) == 8.0
        assert env.envelope_sq_at(9) == 4.0

    @given(vals=weight_arrays)
    @settings(max_examples=40, deadline=None)
    def test_adjacent_lipschitz(self, vals):
        env = envelope(torus_sequence(vals)).envelope_sq
        gaps = np.abs(np.diff(np.concatenate([env, env[:1]])))
        assert np.max(gaps) <= 1.0 + 1e-12

    @given(vals=weight_arrays)
    @settings(max_examples=40, deadline=None)
    def test_sequence_below_envelope(self, vals):
        z = torus_sequence(vals)
        env = envelope(z)
        assert np.all(vals <= np.sqrt(env.envelope_sq) + 1e-12)

    @given(vals=weight_arrays)
    @settings(max_examples=40, deadline=None)
    def test_comparable_within_three_cells(self, vals):
        env = np.sqrt(envelope(torus_sequence(vals)).envelope_sq)
        n = len(env)
        for shift in (1, 2, 3):
            ratio = env / np.roll(env, shift)
            assert np.max(ratio) <= 4.0 and np.min(ratio) >= 0.25

    @given(vals=weight_arrays)
    @settings(max_examples=25, deadline=None)
    def test_weight_lipschitz_on_grid(self, vals):
        grid = Grid(16.0, 512)
        omega = envelope(torus_sequence(vals)).weight_values(grid)
        gaps = np.abs(np.diff(np.concatenate([omega, omega[:1]])))
        assert np.max(gaps) <= grid.dx + 1e-12

    @given(vals=weight_arrays)
    @settings(max_examples=25, deadline=None)
    def test_weight_linear_growth_bound(self, vals):
        env = envelope(torus_sequence(vals))
        omega = env.weight_values(GRID)
        dist = np.minimum(np.abs(GRID.x), GRID.length - np.abs(GRID.x))
        assert np.all(omega <= env.envelope_sq_at(0) + dist + 1e-10)


class TestWeightedNorm:
    def test_zero_sequence_gives_twice_l2(self):
        f = gaussian()
        assert weighted_l2_norm(f, WeightSequence.zeros(GRID)) == pytest.approx(
            2.0 * f.l2_norm(), rel=1e-12
        )

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=15, deadline=None)
    def test_square_sum_equivalence(self, seed):
        # || f ||^2_{L^2_Z} comparable to sum_k N(k)^2 || rho_k f ||^2 within [1/4, 4]
        rng = np.random.default_rng(seed)
        vals = rng.uniform(0.0, 4.0, 16)
        z = torus_sequence(vals)
        f = GridField(GRID, rng.standard_normal(GRID.size) + 1j * rng.standard_normal(GRID.size))
        norm_sq = weighted_l2_norm(f, z) ** 2
        env = envelope(z)
        total = 0.0
        for k in range(-8, 8):
            piece = GridField(GRID, partition_bump(k, GRID).values.real * f.values)
            total += env.envelope_sq_at(k) * piece.l2_norm() ** 2
        ratio = norm_sq / total
        assert 0.25 <= ratio <= 4.0


class TestMeasureSequences:
    def test_unit_cell_masses_lebesgue(self):
        z = unit_cell_masses(SampledMeasure.lebesgue(GRID))
        assert np.allclose(z.values, 1.0)

    def test_unit_cell_masses_atoms(self):
        pos = np.array([0.2, 0.4, 5.6])
        wts = np.array([1.0, 2.0, 3.0])
        measure = SampledMeasure(
            GRID, 1.0, 0.0, pos, wts, deposit_atoms(GRID, pos, wts)
        )
        z = unit_cell_masses(measure)
        assert z.at(0) == pytest.approx(3.0)  # 0.2 and 0.4 round to cell 0
        assert z.at(6) == pytest.approx(3.0)  # 5.6 rounds to cell 6
        assert z.at(3) == 0.0

    def test_xn1_lebesgue_closed_form(self):
        f = gaussian()
        mu = SampledMeasure.lebesgue(GRID)
        expect = np.sqrt(sobolev_norm(f, 1.0) ** 2 + 5.0 * f.l2_norm() ** 2)
        assert xn1_norm(f, mu) == pytest.approx(expect, rel=1e-12)

    def test_xn1_zero_measure_closed_form(self):
        f = gaussian()
        zero_measure = SampledMeasure(
            GRID, 1.0, 0.0, np.zeros(0), np.zeros(0), np.zeros(GRID.size)
        )
        expect = np.sqrt(sobolev_norm(f, 1.0) ** 2 + 4.0 * f.l2_norm() ** 2)
        assert xn1_norm(f, zero_measure) == pytest.approx(expect, rel=1e-12)

    def test_xn1_monotone_under_added_atom(self):
        f = gaussian()
        pos = np.array([1.3])
        wts = np.array([2.0])
        with_atom = SampledMeasure(
            GRID, 1.0, 1.0, pos, wts, deposit_atoms(GRID, pos, wts) + 1.0
        )
        without = SampledMeasure.lebesgue(GRID)
        assert xn1_norm(f, with_atom) >= xn1_norm(f, without)

    def test_yns1_lebesgue_reduces_to_floor(self):
        # density == 1 makes the defect sequence vanish; only the envelope
        # floor 4 remains in the extra term
        f = gaussian()
        mu = SampledMeasure.lebesgue(GRID)
        expect = np.sqrt(xn1_norm(f, mu) ** 2 + 4.0 * f.l2_norm() ** 2)
        assert yns1_norm(f, mu, 0.75) == pytest.approx(expect, rel=1e-12)
        assert np.allclose(local_defect_norms(mu, 0.75).values, 0.0)

    def test_yns1_definition_recomputation(self):
        # recompute the extra term from its definition as an independent check
        measure = sample(LevySpec.poisson(), 0.5, GRID, replica_rng(3, "w", 0))
        f = gaussian()
        s = 0.75
        z = local_defect_norms(measure, s)
        centered = (measure.cell_density - 1.0) / np.sqrt(measure.epsilon)
        for k in (-3, 0, 4):
            rho = partition_bump(k, GRID).values.real
            direct = sobolev_norm(GridField(GRID, rho * centered), -s)
            assert z.at(k) == pytest.approx(direct, rel=1e-12)
        expect = np.sqrt(xn1_norm(f, measure) ** 2 + weighted_l2_norm(f, z) ** 2)
        assert yns1_norm(f, measure, s) == pytest.approx(expect, rel=1e-12)

    def test_defect_sequence_moments_bounded_in_epsilon(self):
        # E Z_{n,s}(k)^2 stays O(1) as epsilon shrinks
        reps = 200
        for eps in (1.0, 0.1, 0.01):
            sq = []
            for r in range(reps):
                m = sample(LevySpec.poisson(), eps, GRID, replica_rng(5, "zm", int(eps * 100), r))
                sq.append(local_defect_norms(m, 0.75).at(0) ** 2)
            assert np.mean(sq) < 5.0

    def test_sequence_validation(self):
        with pytest.raises(ValueError):
            WeightSequence(0, np.array([1.0, -2.0]))
        with pytest.raises(ValueError):
            weighted_l2_norm(gaussian(Grid(2 * np.pi, 64)), WeightSequence.zeros(GRID))
