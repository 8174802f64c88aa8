import math

import numpy as np
import pytest

from echomem.channel import MemoryParams, efficiency
from echomem.mbsolver import (
    CoherenceField,
    SolverGrid,
    StepSizeError,
    absorb,
    flat_top_pulse,
    gaussian_pulse,
    rephase,
    retrieve,
    run_protocol,
)

from oracles import FROZEN

# reference-resolution grid, trimmed in time where a test only absorbs
REF = SolverGrid(n_z=128, n_t=512, n_delta=256, detuning_halfspan=150.0)
ABSORB_GRID = SolverGrid(n_z=128, n_t=256, n_delta=128, detuning_halfspan=150.0)
ABSORB_GRID_RETRIEVABLE = SolverGrid(n_z=64, n_t=256, n_delta=256, detuning_halfspan=150.0)


@pytest.fixture(scope="module")
def section4_run():
    params = MemoryParams(alpha_l=2.5, chi=0.01, gamma_tau=0.001)
    return params, run_protocol(params, REF)


@pytest.fixture(scope="module")
def transmission_refinement():
    """Absorption-only refinement study at alpha_l = 2.5 (three levels)."""
    errors = []
    grid = SolverGrid(n_z=64, n_t=256, n_delta=192, detuning_halfspan=100.0)
    params = MemoryParams(alpha_l=2.5)
    for _ in range(3):
        profile, _ = absorb(flat_top_pulse(), params, grid)
        errors.append(abs(profile.energy / FROZEN["exp_m25"] - 1.0))
        grid = grid.refined()
    return errors


class TestSolverGrid:
    def test_rejects_nonsense(self):
        with pytest.raises(ValueError):
            SolverGrid(n_z=2)
        with pytest.raises(ValueError):
            SolverGrid(n_delta=1)
        with pytest.raises(ValueError):
            SolverGrid(detuning_halfspan=5.0)

    def test_minimum_resolution_flag(self):
        assert REF.meets_minimum_resolution
        assert not SolverGrid(n_z=8, n_t=64, n_delta=64).meets_minimum_resolution

    def test_refined_doubles_everything_but_span(self):
        fine = REF.refined()
        assert (fine.n_z, fine.n_t, fine.n_delta) == (256, 1024, 512)
        assert fine.detuning_halfspan == REF.detuning_halfspan
        assert fine.revival_period == pytest.approx(2.0 * REF.revival_period, rel=0.01)

    def test_courant_diagnostic(self):
        c = REF.courant(MemoryParams(alpha_l=2.5))
        assert 0.0 < c < 1.0


class TestPulses:
    def test_flat_top_support_and_plateau(self):
        pulse = flat_top_pulse()
        u = np.linspace(-0.5, 1.5, 101)
        vals = pulse(u)
        assert np.all(vals[(u < 0) | (u > 1)] == 0.0)
        assert vals[50] == 1.0

    def test_gaussian_pulse_truncated(self):
        pulse = gaussian_pulse(0.1)
        assert pulse(np.array([-0.01, 0.5, 1.01]))[0] == 0.0
        assert pulse(np.array([0.5]))[0] == 1.0

    def test_bad_shapes_rejected(self):
        with pytest.raises(ValueError):
            flat_top_pulse(0.0)
        with pytest.raises(ValueError):
            gaussian_pulse(0.8)


class TestAbsorb:
    def test_zero_depth_is_transparent(self):
        profile, coh = absorb(flat_top_pulse(), MemoryParams(alpha_l=0.0), ABSORB_GRID)
        assert profile.energy == pytest.approx(1.0, abs=1e-12)
        assert np.all(coh.sigma == 0.0)

    @pytest.mark.parametrize(
        "alpha_l,expected", [(1.0, FROZEN["exp_m1"]), (2.5, FROZEN["exp_m25"])]
    )
    def test_transmission_matches_absorption_law(self, alpha_l, expected):
        profile, _ = absorb(flat_top_pulse(), MemoryParams(alpha_l=alpha_l), ABSORB_GRID)
        assert profile.energy == pytest.approx(expected, rel=0.02)

    def test_coherence_metadata(self):
        profile, coh = absorb(flat_top_pulse(), MemoryParams(alpha_l=1.0), ABSORB_GRID)
        assert coh.clock == 1.25
        assert coh.source_energy == pytest.approx(1.0)
        assert coh.transmission == pytest.approx(profile.energy)

    def test_narrow_window_rejected(self):
        with pytest.raises(ValueError):
            absorb(flat_top_pulse(), MemoryParams(alpha_l=1.0), ABSORB_GRID, window=0.5)

    def test_empty_pulse_rejected(self):
        with pytest.raises(ValueError):
            absorb(lambda u: np.zeros_like(u), MemoryParams(alpha_l=1.0), ABSORB_GRID)

    def test_below_minimum_grid_warns(self):
        grid = SolverGrid(n_z=8, n_t=64, n_delta=64, detuning_halfspan=20.0)
        with pytest.warns(UserWarning, match="below reference minimums"):
            absorb(flat_top_pulse(), MemoryParams(alpha_l=0.5), grid)

    def test_instability_raises_step_size_error(self):
        grid = SolverGrid(n_z=4, n_t=64, n_delta=64, detuning_halfspan=150.0)
        with pytest.raises(StepSizeError), pytest.warns(UserWarning):
            absorb(flat_top_pulse(), MemoryParams(alpha_l=30.0), grid)

    def test_revival_guard(self):
        grid = SolverGrid(n_z=16, n_t=64, n_delta=32, detuning_halfspan=150.0)
        with pytest.raises(StepSizeError, match="revival"):
            absorb(flat_top_pulse(), MemoryParams(alpha_l=1.0), grid)

    def test_bandwidth_validity_warned(self):
        p = MemoryParams(alpha_l=0.5, gamma_tau_bandwidth=4.0)
        with pytest.warns(UserWarning, match="gamma\\*tau"):
            absorb(flat_top_pulse(), p, ABSORB_GRID)


@pytest.fixture(scope="module")
def stored():
    _, coh = absorb(flat_top_pulse(), MemoryParams(alpha_l=1.0), ABSORB_GRID)
    return coh


class TestRephase:
    def test_zero_storage_is_identity(self, stored):
        out = rephase(stored, 0.0, MemoryParams(alpha_l=1.0, gamma_tau=0.2))
        assert np.allclose(out.sigma, stored.sigma, rtol=0, atol=0)

    def test_single_class_phase_rotation(self):
        d = np.array([-4.0, 1.5, 8.0])
        sigma = np.zeros((6, 3), dtype=complex)
        sigma[:, 1] = 1.0 + 0.5j
        coh = CoherenceField(sigma=sigma, detunings=d, weights=np.full(3, 1 / 3))
        out = rephase(coh, 2.25, MemoryParams(alpha_l=1.0))
        expected = (1.0 + 0.5j) * np.exp(-1j * 1.5 * 2.25)
        assert np.allclose(out.sigma[:, 1], expected, rtol=1e-14)

    def test_unitary_without_decay(self, stored):
        out = rephase(stored, 7.0, MemoryParams(alpha_l=1.0, gamma_tau=0.0))
        assert np.allclose(np.abs(out.sigma), np.abs(stored.sigma), rtol=1e-14)

    def test_lumped_decay_default_is_full_storage_time(self, stored):
        p = MemoryParams(alpha_l=1.0, chi=0.4, gamma_tau=0.1)
        out = rephase(stored, 4.0, p)
        assert np.allclose(
            np.abs(out.sigma), np.abs(stored.sigma) * math.exp(-0.2), rtol=1e-12
        )

    def test_explicit_excited_time_overrides(self, stored):
        p = MemoryParams(alpha_l=1.0, chi=0.4, gamma_tau=0.1)
        out = rephase(stored, 4.0, p, time_in_excited_tau=0.0)
        assert np.allclose(np.abs(out.sigma), np.abs(stored.sigma), rtol=1e-14)

    def test_rejects_negative_times(self, stored):
        with pytest.raises(ValueError):
            rephase(stored, -1.0, MemoryParams(alpha_l=1.0))
        with pytest.raises(ValueError):
            rephase(stored, 1.0, MemoryParams(alpha_l=1.0), time_in_excited_tau=-0.5)


class TestRetrieve:
    def test_zero_coherence_zero_echo(self):
        coh = CoherenceField(
            sigma=np.zeros((REF.n_z, REF.n_delta), dtype=complex),
            detunings=REF.detunings(),
            weights=REF.weights(),
        )
        res = retrieve(coh, MemoryParams(alpha_l=1.0), REF)
        assert res.efficiency == 0.0
        assert np.all(res.echo_profile.values == 0.0)

    @pytest.mark.parametrize(
        "alpha_l,expected",
        [(0.5, FROZEN["eff_ideal_05"]), (2.5, FROZEN["eff_ideal_25"])],
    )
    def test_ideal_efficiency_oracle(self, alpha_l, expected):
        p = MemoryParams(alpha_l=alpha_l)
        _, coh = absorb(flat_top_pulse(), p, REF)
        res = retrieve(rephase(coh, 5.0, p), p, REF)
        assert res.efficiency == pytest.approx(expected, rel=0.02)

    def test_grid_mismatch_rejected(self):
        coh = CoherenceField(
            sigma=np.zeros((16, 8), dtype=complex),
            detunings=np.linspace(-10, 10, 8),
            weights=np.full(8, 0.125),
        )
        with pytest.raises(ValueError, match="does not match"):
            retrieve(coh, MemoryParams(alpha_l=1.0), REF)

    def test_linearity_exact(self):
        p = MemoryParams(alpha_l=1.5)
        _, coh = absorb(flat_top_pulse(), p, REF)
        coh_b = rephase(coh, 5.0, p)
        scaled = CoherenceField(
            sigma=3.0 * coh_b.sigma,
            detunings=coh_b.detunings,
            weights=coh_b.weights,
            clock=coh_b.clock,
            storage_tau=coh_b.storage_tau,
        )
        base = retrieve(coh_b, p, REF)
        tripled = retrieve(scaled, p, REF)
        assert np.allclose(
            tripled.echo_profile.values, 3.0 * base.echo_profile.values, rtol=1e-12
        )


class TestRunProtocol:
    def test_section4_efficiency_against_channel(self, section4_run):
        params, res = section4_run
        assert res.efficiency == pytest.approx(efficiency(params), rel=0.02)

    def test_echo_shape_matches_input(self, section4_run):
        _, res = section4_run
        assert res.mode_overlap >= 0.98

    def test_echo_is_real_for_real_symmetric_input(self, section4_run):
        _, res = section4_run
        vals = res.echo_profile.values
        assert np.linalg.norm(vals.imag) <= 1e-10 * np.linalg.norm(vals)

    def test_echo_peak_near_predicted_rephasing_time(self, section4_run):
        # slices re-emit (storage - window) to storage after the flip
        _, res = section4_run
        assert 8.75 <= res.echo_peak_time <= 9.80

    def test_stray_emission_is_small_and_reported(self, section4_run):
        _, res = section4_run
        assert 0.0 <= res.stray_emission < 0.01

    def test_zero_depth_zero_efficiency(self):
        res = run_protocol(MemoryParams(alpha_l=0.0), ABSORB_GRID_RETRIEVABLE)
        assert res.efficiency == 0.0
        assert res.transmission == pytest.approx(1.0, abs=1e-12)

    def test_energy_accounting_no_decay(self):
        p = MemoryParams(alpha_l=1.0)
        res = run_protocol(p, REF)
        total = res.transmission + res.efficiency + res.stray_emission + res.residual_excitation
        assert total == pytest.approx(1.0, abs=0.02)

    def test_storage_time_validation(self):
        with pytest.raises(ValueError, match="storage"):
            run_protocol(MemoryParams(alpha_l=1.0, chi=0.1), REF)  # gamma_tau = 0
        with pytest.raises(ValueError, match="exceed"):
            run_protocol(MemoryParams(alpha_l=1.0), REF, storage_tau=0.5)
        with pytest.raises(ValueError, match="inconsistent"):
            run_protocol(
                MemoryParams(alpha_l=1.0, chi=0.01, gamma_tau=0.001), REF, storage_tau=5.0
            )

    def test_gaussian_pulse_variant(self):
        p = MemoryParams(alpha_l=1.0)
        res = run_protocol(p, REF, pulse_shape=gaussian_pulse(0.125))
        assert res.efficiency == pytest.approx((1 - math.exp(-1.0)) ** 2, rel=0.02)
        assert res.mode_overlap >= 0.98


class TestConvergence:
    def test_error_strictly_decreases(self, transmission_refinement):
        e0, e1, e2 = transmission_refinement
        assert e0 > e1 > e2

    def test_slope_consistent_with_first_order(self, transmission_refinement):
        errors = np.asarray(transmission_refinement)
        levels = np.arange(3)
        slope = np.polyfit(levels * math.log(2.0), -np.log(errors), 1)[0]
        assert 0.5 <= slope <= 1.6

    def test_energy_sum_tightens_under_refinement(self):
        p = MemoryParams(alpha_l=1.0)
        defects = []
        grid = SolverGrid(n_z=64, n_t=256, n_delta=256, detuning_halfspan=150.0)
        for _ in range(2):
            res = run_protocol(p, grid)
            total = (
                res.transmission
                + res.efficiency
                + res.stray_emission
                + res.residual_excitation
            )
            defects.append(abs(total - 1.0))
            grid = grid.refined()
        assert defects[0] <= 0.02
        assert defects[1] < defects[0]
