import math

import numpy as np
import pytest

from exceptions import InputError, ModelEvaluationError, NonConvergenceError
from models import ModelSpec, PLACEHOLDER_PK, ZalypsisPkParams, zalypsis_pk_rhs
from ode import DoseEvent, IntegratorConfig, apply_dose, integrate


class Decay(ModelSpec):
    name = "decay"
    state_names = ("x",)
    param_names = ("k",)

    def bind(self, values):
        return float(values["k"])

    def rhs(self, t, y, k):
        return -k * y

    def initial_state(self, k):
        return np.array([1.0])

    def observe(self, states, k):
        return states[:, 0]


class Blowup(Decay):
    def rhs(self, t, y, k):
        return y * y


class NanAfterOne(Decay):
    def rhs(self, t, y, k):
        return np.array([np.nan]) if t > 1.0 else -y


class LinearPk(ModelSpec):
    name = "pk"
    state_names = ("Cp", "Cf", "Csl1", "Csl2")
    param_names = ()

    def __init__(self, rates: ZalypsisPkParams):
        self.rates = rates

    def bind(self, values):
        return self.rates

    def rhs(self, t, y, rates):
        return zalypsis_pk_rhs(y, rates)

    def initial_state(self, rates):
        return np.zeros(4)

    def observe(self, states, rates):
        return states[:, 0]


def test_decay_matches_exponential():
    traj = integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 1.0), [], [1.0], IntegratorConfig())
    assert traj.observations[0] == pytest.approx(math.exp(-1.0), rel=1e-7)


def test_trajectory_is_sampled_exactly_at_observation_times():
    times = [0.0, 0.25, 0.5, 1.7, 3.0]
    traj = integrate(Decay(), {"k": 0.7}, np.array([1.0]), (0.0, 3.0), [], times)
    np.testing.assert_array_equal(traj.times, times)
    np.testing.assert_allclose(traj.observations, np.exp(-0.7 * np.array(times)), rtol=1e-7)


def test_empty_observation_grid_gives_empty_trajectory():
    traj = integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 5.0), [], [])
    assert len(traj) == 0
    assert traj.states.shape == (0, 1)


def test_halving_tolerances_changes_result_less_than_loose_tolerance():
    loose = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8)
    tight = IntegratorConfig(rel_tol=5e-7, abs_tol=5e-9)
    a = integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 5.0), [], [5.0], loose).observations[0]
    b = integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 5.0), [], [5.0], tight).observations[0]
    assert abs(a - b) < 1e-6 * abs(b) + 1e-8


def test_dose_adds_impulse_once():
    dose = DoseEvent(time=1.0, amount=2.0, target=0)
    traj = integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 2.0), [dose], [0.5, 1.0, 2.0])
    expected = [math.exp(-0.5), math.exp(-1.0) + 2.0, math.exp(-2.0) + 2.0 * math.exp(-1.0)]
    np.testing.assert_allclose(traj.observations, expected, rtol=1e-7)


def test_integration_is_deterministic():
    doses = [DoseEvent(0.0, 1.0, 0), DoseEvent(21.0, 1.0, 0)]
    model = LinearPk(PLACEHOLDER_PK)
    first = integrate(model, {}, np.zeros(4), (0.0, 30.0), doses, np.arange(0.0, 30.0, 3.0))
    second = integrate(model, {}, np.zeros(4), (0.0, 30.0), doses, np.arange(0.0, 30.0, 3.0))
    np.testing.assert_array_equal(first.states, second.states)


def test_linear_pk_dose_superposition():
    model = LinearPk(PLACEHOLDER_PK)
    cfg = IntegratorConfig()
    times = np.linspace(0.5, 40.0, 30)
    d1, d2 = DoseEvent(0.0, 1.0, 0), DoseEvent(21.0, 1.0, 0)
    both = integrate(model, {}, np.zeros(4), (0.0, 40.0), [d1, d2], times, cfg).states
    only1 = integrate(model, {}, np.zeros(4), (0.0, 40.0), [d1], times, cfg).states
    only2 = integrate(model, {}, np.zeros(4), (0.0, 40.0), [d2], times, cfg).states
    scale = np.max(np.abs(both))
    np.testing.assert_allclose(both, only1 + only2, atol=100 * cfg.rel_tol * scale + 10 * cfg.abs_tol)


def test_mass_is_conserved_without_clearance():
    rates = ZalypsisPkParams(**{**PLACEHOLDER_PK.to_dict(), "k_cl": 0.0})
    traj = integrate(LinearPk(rates), {}, np.zeros(4), (0.0, 30.0), [DoseEvent(0.0, 3.0, 0)], [1.0, 10.0, 30.0])
    np.testing.assert_allclose(traj.states.sum(axis=1), 3.0, rtol=1e-7)


def test_step_budget_exhaustion_reports_time():
    with pytest.raises(NonConvergenceError) as excinfo:
        integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 100.0), [], [100.0], IntegratorConfig(max_steps=5))
    assert excinfo.value.time is not None


def test_finite_time_blowup_is_non_convergence():
    with pytest.raises(NonConvergenceError) as excinfo:
        integrate(Blowup(), {"k": 1.0}, np.array([1.0]), (0.0, 2.0), [], [2.0])
    assert excinfo.value.time == pytest.approx(1.0, abs=1e-2)


def test_nan_right_hand_side_is_a_model_error():
    with pytest.raises(ModelEvaluationError) as excinfo:
        integrate(NanAfterOne(), {"k": 1.0}, np.array([1.0]), (0.0, 2.0), [], [0.5, 2.0])
    assert 1.0 - 1e-6 <= excinfo.value.time <= 2.0


def test_observation_times_outside_span_are_rejected():
    with pytest.raises(InputError):
        integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 1.0), [], [2.0])


def test_unsorted_doses_are_rejected():
    doses = [DoseEvent(2.0, 1.0, 0), DoseEvent(1.0, 1.0, 0)]
    with pytest.raises(InputError):
        integrate(Decay(), {"k": 1.0}, np.array([1.0]), (0.0, 3.0), doses, [3.0])


@pytest.mark.parametrize(
    "state, dose, expected",
    [
        ((0.0, 0.0, 0.0, 0.0), DoseEvent(0.0, 80.0, 0), (80.0, 0.0, 0.0, 0.0)),
        ((1.0, 2.0), DoseEvent(0.0, 0.5, 1), (1.0, 2.5)),
        ((1.0, 2.0), DoseEvent(0.0, 0.0, 1), (1.0, 2.0)),
    ],
)
def test_apply_dose(state, dose, expected):
    original = np.array(state)
    jumped = apply_dose(original, dose)
    np.testing.assert_array_equal(jumped, expected)
    np.testing.assert_array_equal(original, state)


def test_apply_dose_rejects_bad_target():
    with pytest.raises(IndexError):
        apply_dose(np.zeros(2), DoseEvent(0.0, 1.0, 2))


def test_negative_dose_amount_is_rejected():
    with pytest.raises(InputError):
        DoseEvent(0.0, -1.0, 0)
