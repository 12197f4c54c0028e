import numpy as np
import pytest

from goodweights import dynamics, forecast, sampler, train
from goodweights.dynamics import Trajectory
from goodweights.forecast import (ForecastConfig, forecast_time,
                                  evaluate_model, invariant_histograms,
                                  iterate, l1_histogram_distance)
from goodweights.train import RidgeConfig, SurrogateModel, train_model

CFG = ForecastConfig()
LYAP_STEP = 0.02 * 0.91


def unit_truth(n, scale=1.0):
    states = np.zeros((3, n + 1))
    states[0] = scale
    return Trajectory(states=states, dt=0.02)


def with_relative_errors(truth, rel_sq):
    """Prediction whose relative squared error at step n is rel_sq[n-1]."""
    states = truth.states.copy()
    for n, r in enumerate(rel_sq, start=1):
        norm = np.linalg.norm(truth.states[:, n])
        states[1, n] += np.sqrt(r) * norm
    return Trajectory(states=states, dt=truth.dt)


@pytest.fixture(scope="module")
def trained_model(small_model_data):
    return small_model_data


@pytest.fixture(scope="module")
def small_model_data():
    tr, va = dynamics.generate_dataset(seed=77, n_train=4000, n_valid=600)
    iw = sampler.sample_internal_weights(tr, 128, 1.0, sampler.SamplerConfig(),
                                         seed=7)
    return train_model(iw, tr, RidgeConfig(beta=1e-5)), va


def test_identical_is_censored():
    truth = unit_truth(2000)
    out = forecast_time(truth, truth, CFG)
    assert out.censored
    assert out.tau_f == pytest.approx(1500 * LYAP_STEP)
    assert out.steps == 1500


def test_exceedance_at_first_step():
    truth = unit_truth(10)
    pred = with_relative_errors(truth, [0.06])
    out = forecast_time(pred, truth, CFG)
    assert not out.censored and out.steps == 1
    assert out.tau_f == pytest.approx(LYAP_STEP)


def test_exceedance_staircase():
    truth = unit_truth(10)
    pred = with_relative_errors(truth, [0.0, 0.01, 0.03, 0.06, 0.2])
    out = forecast_time(pred, truth, CFG)
    assert out.steps == 4
    # the first error beyond theta=0.05 sits at sample 4 of this staircase
    assert out.tau_f == pytest.approx(4 * LYAP_STEP)


def test_spec_staircase_example():
    """Errors (0, 0.01, 0.03, 0.06, ...) starting at n=1 exceed at n=3."""
    truth = unit_truth(10)
    pred = with_relative_errors(truth, [0.01, 0.03, 0.06, 0.2])
    out = forecast_time(pred, truth, CFG)
    assert out.tau_f == pytest.approx(3 * LYAP_STEP)
    assert out.tau_f == pytest.approx(0.0546)


def test_tau_nonincreasing_in_theta():
    truth = unit_truth(50)
    rel = np.linspace(0, 0.2, 50) ** 1.5
    pred = with_relative_errors(truth, rel)
    taus = [forecast_time(pred, truth,
                          ForecastConfig(theta=th)).tau_f
            for th in (0.01, 0.05, 0.1, 0.19)]
    assert all(a <= b for a, b in zip(taus, taus[1:]))


def test_tau_scales_with_lambda():
    truth = unit_truth(20)
    pred = with_relative_errors(truth, [0.0, 0.0, 0.1])
    base = forecast_time(pred, truth, ForecastConfig(lambda_max=0.91))
    double = forecast_time(pred, truth, ForecastConfig(lambda_max=1.82))
    assert double.tau_f == pytest.approx(2 * base.tau_f)


def test_shared_prefix_bound():
    truth = unit_truth(30)
    pred = with_relative_errors(truth, [0.0] * 10 + [1.0])
    out = forecast_time(pred, truth, CFG)
    assert out.tau_f >= 10 * 0.02 * CFG.lambda_max


def test_zero_norm_truth_raises():
    states = np.zeros((3, 11))
    states[0] = 1.0
    states[:, 2] = 0.0
    truth = Trajectory(states=states, dt=0.02)
    pred_states = states.copy()
    pred_states[1, 4] = 0.6  # exceedance after the zero-norm sample
    pred = Trajectory(states=pred_states, dt=0.02)
    with pytest.raises(ZeroDivisionError):
        forecast_time(pred, truth, CFG)


def test_forecast_time_preconditions():
    truth = unit_truth(10)
    with pytest.raises(ValueError):
        forecast_time(unit_truth(9), truth, CFG)
    other = Trajectory(states=truth.states.copy(), dt=0.01)
    with pytest.raises(ValueError):
        forecast_time(other, truth, CFG)
    shifted = Trajectory(states=truth.states + 1.0, dt=truth.dt)
    with pytest.raises(ValueError):
        forecast_time(shifted, truth, CFG)


def test_iterate_zero_steps(small_model_data):
    model, _ = small_model_data
    traj = iterate(model, np.array([1.0, 2.0, 3.0]), 0)
    assert traj.n_states == 1


def test_iterate_zero_outer_weights(small_model_data):
    model, _ = small_model_data
    zero = SurrogateModel(iw=model.iw, w_out=np.zeros_like(model.w_out),
                          beta=model.beta)
    traj = iterate(zero, np.array([1.0, 2.0, 3.0]), 5)
    assert np.array_equal(traj.states[:, 1:], np.zeros((3, 5)))


def test_iterate_stays_in_attractor_box(small_model_data):
    model, va = small_model_data
    traj = iterate(model, va.states[:, 0], 50)
    assert traj.states.min() > -30 and traj.states.max() < 60


def test_evaluate_own_rollout_is_censored(small_model_data):
    model, va = small_model_data
    pred = iterate(model, va.states[:, 0], 400)
    out = evaluate_model(model, pred, ForecastConfig(horizon_steps=400))
    assert out.censored


def test_evaluate_model_matches_forecast_time(small_model_data):
    model, va = small_model_data
    out = evaluate_model(model, va, CFG)
    n = min(CFG.horizon_steps, va.n_states - 1)
    pred = iterate(model, va.states[:, 0], n)
    truth = Trajectory(states=va.states[:, :n + 1], dt=va.dt)
    direct = forecast_time(pred, truth, CFG)
    assert out.tau_f == direct.tau_f and out.steps == direct.steps


def test_histogram_constant_zero_model(small_model_data):
    model, _ = small_model_data
    zero = SurrogateModel(iw=model.iw, w_out=np.zeros_like(model.w_out),
                          beta=model.beta)
    edges = tuple(np.linspace(-1, 1, 11) for _ in range(3))
    hist = forecast.invariant_histograms(zero, np.array([0.5, 0.5, 0.5]),
                                         total_time=10.0, bins=10,
                                         burn_in=2.0, edges=edges)
    for c in range(3):
        assert hist.counts[c].sum() == hist.total
        assert hist.counts[c][5] == hist.total  # the bin containing zero


def test_histogram_mass_conservation_reference():
    hist = invariant_histograms(None, np.array([1.0, 1.0, 20.0]),
                                total_time=30.0, bins=40, burn_in=5.0)
    for c in range(3):
        assert hist.counts[c].sum() == hist.total


@pytest.mark.slow
def test_truth_xy_histograms_symmetric():
    """The flow is invariant under (x, y, z) -> (-x, -y, z), so long-run x
    and y marginals are symmetric.  A single 2000-time-unit run still
    carries wing-occupation imbalance of up to ~0.1 in L1, so the
    tolerance is checked on the histogram pooled over several seeds."""
    edges = (np.linspace(-25, 25, 51), np.linspace(-30, 30, 51),
             np.linspace(0, 55, 51))
    pooled = [np.zeros(50), np.zeros(50)]
    starts = [[2.0, 3.0, 25.0], [-5.0, 1.0, 30.0], [1.0, -1.0, 20.0],
              [7.0, 7.0, 22.0], [-3.0, -9.0, 28.0]]
    for u0 in starts:
        hist = invariant_histograms(None, np.array(u0), total_time=2000.0,
                                    bins=50, burn_in=40.0, edges=edges)
        for c in range(2):
            pooled[c] += hist.counts[c] / hist.total / len(starts)
    for c in range(2):
        assert np.abs(pooled[c] - pooled[c][::-1]).sum() < 0.05


def test_l1_distance_requires_shared_edges():
    h1 = invariant_histograms(None, np.array([1.0, 1.0, 20.0]),
                              total_time=12.0, bins=10, burn_in=2.0)
    h2 = invariant_histograms(None, np.array([1.0, 1.0, 20.0]),
                              total_time=12.0, bins=12, burn_in=2.0)
    with pytest.raises(ValueError):
        l1_histogram_distance(h1, h2)


def test_l1_distance_zero_for_identical():
    h = invariant_histograms(None, np.array([1.0, 1.0, 20.0]),
                             total_time=12.0, bins=10, burn_in=2.0)
    assert np.all(l1_histogram_distance(h, h) == 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ForecastConfig(theta=0.0)
    with pytest.raises(ValueError):
        ForecastConfig(horizon_steps=0)
