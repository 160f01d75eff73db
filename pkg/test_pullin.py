"""
Tests for the pull-in models and the pull-in point search.
"""

import numpy as np
import pytest

from errors import ModelValidityError, NoPullInError, ScenarioError, SingularGeometryError
from experiments import find_experiment, preliminary_scenario
from pullin import (LAMBDA_MIN, ActuatorScenario, PullInCurve, PullInResult, beta_analytical, beta_function,
                    beta_simplified, compare_results, dimensionalize, find_pullin, lambda_grid, quasifem_model,
                    run_pullin, simplified_pullin, trace_curve, u_norm)

XI, KAPPA = 0.125, 0.04


def simplified_fn(xi=XI, kappa=KAPPA):
    return lambda lam: beta_simplified(lam, xi, kappa)


class TestSimplifiedModel:
    def test_closed_form_pullin(self, rng):
        for _ in range(100):
            xi = rng.uniform(0.01, 0.5)
            kappa = rng.uniform(0.01, 1.0)
            lam_p, beta_p = simplified_pullin(xi, kappa)
            log_term = np.log(4.0 / xi)
            assert lam_p == pytest.approx(1.0 / 3.0, abs=1e-15)
            assert beta_p == pytest.approx((log_term - 1) / (log_term - 2) * kappa * 4 / 27, rel=1e-10)

    def test_search_finds_closed_form(self, rng):
        for _ in range(20):
            xi, kappa = rng.uniform(0.01, 0.5), rng.uniform(0.01, 1.0)
            fn = simplified_fn(xi, kappa)
            result = find_pullin(trace_curve("simplified", None, beta_fn=fn), fn, xtol=1e-9)
            lam_p, beta_p = simplified_pullin(xi, kappa)
            assert result.lambda_p == pytest.approx(lam_p, abs=1e-7)
            assert result.beta_p == pytest.approx(beta_p, rel=1e-10)

    def test_preliminary_design_value(self):
        _, beta_p = simplified_pullin(XI, KAPPA)
        assert beta_p == pytest.approx(0.009969, rel=1e-3)
        assert np.sqrt(beta_p) == pytest.approx(0.1, abs=1e-3)

    def test_invalid_when_log_term_too_small(self):
        with pytest.raises(ModelValidityError):
            beta_simplified(-0.2, 0.6, KAPPA)
        with pytest.raises(ModelValidityError):
            simplified_pullin(0.6, KAPPA)

    def test_vectorized(self):
        lam = np.array([0.0, -0.5])
        values = beta_simplified(lam, XI, KAPPA)
        assert values[0] == 0.0
        assert values[1] == pytest.approx(beta_simplified(-0.5, XI, KAPPA))


class TestAnalyticalModel:
    def test_calibrated_at_rest(self):
        assert beta_analytical(0.0, XI, KAPPA) == 0.0

    def test_preliminary_pullin(self):
        fn = lambda lam: beta_analytical(lam, XI, KAPPA)
        result = find_pullin(trace_curve("analytical", None, beta_fn=fn), fn, xtol=1e-9)
        assert result.lambda_p == pytest.approx(0.337, abs=0.005)
        assert result.sqrt_beta_p == pytest.approx(0.102, abs=0.001)

    def test_close_to_simplified_model(self):
        lam = np.linspace(-0.4, -0.01, 40)
        analytical = np.sqrt(beta_analytical(lam, XI, KAPPA))
        simplified = np.sqrt(beta_simplified(lam, XI, KAPPA))
        assert np.all(np.abs(analytical - simplified) / simplified < 0.03)

    def test_circuit_below_coil_plane(self):
        with pytest.raises(SingularGeometryError):
            beta_analytical(-30.0, XI, KAPPA)

    def test_invalid_parameters(self):
        with pytest.raises(ModelValidityError):
            beta_analytical(-0.1, 0.0, KAPPA)


class TestCurveSearch:
    def test_lambda_grid(self):
        grid = lambda_grid(15)
        assert grid[0] == 0.0
        assert len(grid) == 15
        assert np.all(np.diff(grid) < 0)
        assert grid[-1] > LAMBDA_MIN

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="n_samples"):
            trace_curve("simplified", None, n_samples=4, beta_fn=simplified_fn())

    def test_failed_samples_are_flagged(self):
        def fn(lam):
            if lam < -0.5:
                raise ModelValidityError("outside model range")
            return beta_simplified(lam, XI, KAPPA)

        curve = trace_curve("simplified", None, n_samples=10, beta_fn=fn)
        assert len(curve.flagged) == 4
        assert len(curve.lam) == 6
        assert find_pullin(curve, fn).lambda_p == pytest.approx(1.0 / 3.0, abs=2e-4)

    def test_monotonic_curve_has_no_pullin(self):
        lam = -np.linspace(0.0, 0.9, 10)
        curve = PullInCurve("test", lam, -lam)
        with pytest.raises(NoPullInError, match="no pull-in detected"):
            find_pullin(curve)

    def test_too_few_valid_samples(self):
        with pytest.raises(NoPullInError):
            find_pullin(PullInCurve("test", np.array([0.0, -0.1]), np.array([0.0, 0.1])))

    def test_parabola_vertex_without_model(self):
        lam = -np.linspace(0.0, 0.6, 7)
        curve = PullInCurve("test", lam, 1.0 - (lam + 0.3) ** 2)
        result = find_pullin(curve)
        assert result.lambda_p == pytest.approx(0.3, abs=1e-12)
        assert result.beta_p == pytest.approx(1.0, abs=1e-12)

    def test_physical_branch(self):
        fn = simplified_fn()
        curve = trace_curve("simplified", None, beta_fn=fn)
        lam, beta = curve.physical_branch
        assert lam[0] == 0.0
        assert np.all(np.diff(beta) > 0)

    def test_unknown_model(self, preliminary_coarse):
        with pytest.raises(ValueError):
            beta_function("lumped", preliminary_coarse)


class TestDimensional:
    def test_voltage_scale(self):
        scenario = find_experiment("2.4").to_scenario(grid_n=9)
        assert u_norm(scenario) == pytest.approx(105.26, abs=0.01)

    def test_requires_mass(self, preliminary_coarse):
        with pytest.raises(ScenarioError):
            u_norm(preliminary_coarse)

    def test_dimensionalize(self):
        scenario = find_experiment("2.4").to_scenario(grid_n=9)
        result = PullInResult("simplified", lambda_p=0.3, beta_p=0.25, sqrt_beta_p=0.5)
        U_p, q_p = dimensionalize(result, scenario)
        assert U_p == pytest.approx(0.5 * u_norm(scenario))
        assert q_p == pytest.approx(30e-6)

    def test_run_pullin_attaches_units(self):
        scenario = find_experiment("2.4").to_scenario(grid_n=9)
        curve, result = run_pullin("simplified", scenario)
        assert result.U_p == pytest.approx(u_norm(scenario) * result.sqrt_beta_p)
        assert result.q_p == pytest.approx(result.lambda_p * scenario.h)
        assert result.runtime_s >= 0.0
        frame = curve.to_frame(scenario)
        assert list(frame.columns) == ["lambda_abs", "beta", "sqrt_beta", "U_volts", "q3_m"]
        assert frame["U_volts"].notna().all()

    def test_curve_without_mass(self, preliminary_coarse):
        curve, result = run_pullin("simplified", preliminary_coarse)
        assert result.U_p is None
        assert result.q_p == pytest.approx(result.lambda_p * 10e-6)
        assert curve.to_frame(preliminary_coarse)["U_volts"].isna().all()


class TestScenario:
    def test_validation(self):
        with pytest.raises(ScenarioError):
            ActuatorScenario(name="bad", disc_radius=1e-3, h_l=2e-4, h=0.0, electrode_area=8e-7,
                             coils=preliminary_scenario().coils)

    def test_derived_groups(self):
        scenario = preliminary_scenario(grid_n=11)
        assert scenario.kappa == pytest.approx(0.04)
        assert scenario.xi == pytest.approx(0.125)
        assert scenario.model_parameters() == pytest.approx((0.125, 0.04))

    def test_tabulated_parameters_preferred(self):
        scenario = find_experiment("2.8").to_scenario(grid_n=9)
        assert scenario.model_parameters() == (0.1, 0.6)
        assert scenario.kappa == pytest.approx(119 / 200)

    def test_with_fidelity(self, preliminary_coarse):
        finer = preliminary_coarse.with_fidelity(grid_n=15)
        assert finer.grid_n == 15
        assert finer.rule == preliminary_coarse.rule
        assert finer != preliminary_coarse


class TestQuasiFem:
    def test_calibration(self, preliminary_coarse):
        model = quasifem_model(preliminary_coarse)
        assert model.eta0 < 0
        assert model.restoring_force(0.0) == pytest.approx(0.0, abs=1e-12)
        assert model.beta(0.0) == pytest.approx(0.0, abs=1e-12)
        assert model.restoring_force(-0.1) > 0

    def test_force_ratio(self, preliminary_coarse):
        model = quasifem_model(preliminary_coarse)
        assert model.force_ratio(0.0) == pytest.approx(1.0, rel=1e-14)
        assert model.force_ratio(-0.2) == pytest.approx(1.0 + model.restoring_force(-0.2), rel=1e-12)
        assert model.force_ratio(-0.2) > 1.0

    def test_model_shared_per_scenario(self, preliminary_coarse):
        assert quasifem_model(preliminary_coarse) is quasifem_model(preliminary_coarse)

    def test_electrode_contact(self, preliminary_coarse):
        with pytest.raises(ModelValidityError):
            quasifem_model(preliminary_coarse).beta(-1.0)

    def test_pullin_near_one_third(self, preliminary_coarse):
        _, result = run_pullin("quasi-fem", preliminary_coarse)
        assert 0.25 < result.lambda_p < 0.45
        assert result.eta0 == quasifem_model(preliminary_coarse).eta0
        assert result.sqrt_beta_p > 0

    def test_sample_count_does_not_move_pullin(self, preliminary_coarse):
        _, coarse = run_pullin("quasi-fem", preliminary_coarse, n_samples=5)
        _, fine = run_pullin("quasi-fem", preliminary_coarse, n_samples=15)
        assert coarse.lambda_p == pytest.approx(fine.lambda_p, abs=2e-4)
        assert coarse.beta_p == pytest.approx(fine.beta_p, rel=1e-5)


def test_compare_results():
    reference = PullInResult("quasi-fem", lambda_p=0.34, beta_p=0.01, sqrt_beta_p=0.1)
    other = PullInResult("simplified", lambda_p=1 / 3, beta_p=0.0121, sqrt_beta_p=0.11)
    frame = compare_results(reference, [other])
    assert frame["model"].tolist() == ["quasi-fem", "simplified"]
    assert frame["delta_lambda"].iloc[0] == 0.0
    assert frame["delta_sqrt_beta"].iloc[1] == pytest.approx(0.1)
