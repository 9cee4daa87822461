import numpy as np
import pytest

from deltaconsensus.dynamics import SamplingScheme
from deltaconsensus.graph import complete_graph, cycle_graph, path_graph, ring5
from deltaconsensus.switching import scenario_ensemble, single_graph_ensemble
from deltaconsensus.verify import (
    check_almost_sure,
    estimate_mean_consensus,
    estimate_probability_consensus,
    predicted_value,
    run_monte_carlo,
    summarize,
)

PROBS = (0.3, 0.3, 0.2, 0.2)
X0 = np.array([0.2, 0.8, 0.4, -1.0, -2.0])


def test_single_graph_reaches_average():
    e = single_graph_ensemble(path_graph(3))
    stats = estimate_mean_consensus(e, SamplingScheme(0.3, 1), [1.0, 0.0, -4.0], 10, 300, seed=1)
    np.testing.assert_allclose(stats.mean_state, -1.0, atol=1e-12)
    assert stats.predicted == pytest.approx(-1.0, abs=1e-14)


def test_constant_state_has_zero_spread():
    e = scenario_ensemble(ring5(), PROBS)
    stats = estimate_mean_consensus(e, SamplingScheme(0.1, 2), np.full(5, 0.7), 50, 20, seed=2)
    # dwell rows sum to one up to rounding only
    assert np.all(stats.std_error <= 1e-15)
    assert np.all(stats.gap_quantiles <= 1e-14)


def test_k2_gap_halves_each_step():
    e = single_graph_ensemble(complete_graph(2))
    runs = run_monte_carlo(e, SamplingScheme(0.25, 1), [1.0, -1.0], 4, 10, seed=0)
    np.testing.assert_allclose(runs.gaps[0], 2.0 * 0.5 ** np.arange(11), rtol=1e-14)


def test_probability_of_exceedance():
    e = scenario_ensemble(ring5(), PROBS)
    stats = estimate_probability_consensus(e, SamplingScheme(0.1, 1), X0, 200, 400, seed=3,
                                           epsilons=[100.0, 1e-3], checkpoints=[0, 400])
    # gap at t = 0 is 2.8: always above 1e-3, never above 100
    np.testing.assert_array_equal(stats.prob_exceed[0], [0.0, 1.0])
    assert stats.prob_exceed[1][1] <= stats.prob_exceed[0][1]
    with pytest.raises(ValueError):
        estimate_probability_consensus(e, SamplingScheme(0.1, 1), X0, 2, 2, seed=3, epsilons=[0.0])


def test_zero_horizon():
    e = scenario_ensemble(ring5(), PROBS)
    runs = run_monte_carlo(e, SamplingScheme(0.1, 1), X0, 5, 0, seed=3)
    np.testing.assert_array_equal(runs.final, np.tile(X0, (5, 1)))
    assert runs.counts.sum() == 0


def test_almost_sure_consensus():
    e = scenario_ensemble(ring5(), PROBS)
    stats = check_almost_sure(e, SamplingScheme.from_dwell(0.01, 0.1), X0, 100, 500, seed=4)
    assert stats.all_monotone
    assert stats.terminal_below_threshold == 1.0


def test_switch_frequencies():
    e = scenario_ensemble(ring5(), PROBS)
    runs = run_monte_carlo(e, SamplingScheme(0.1, 1), X0, 500, 200, seed=5)
    stats = summarize(runs)
    p = np.array(PROBS)
    sigma = np.sqrt(p * (1 - p) / runs.counts.sum())
    assert np.all(np.abs(stats.switch_frequencies - p) <= 4 * sigma)


def test_empirical_mean_matches_prediction():
    e = scenario_ensemble(ring5(), PROBS)
    stats = estimate_mean_consensus(e, SamplingScheme.from_dwell(0.01, 0.1), X0, 10_000, 200, seed=6)
    assert np.all(np.abs(stats.z_scores) <= 4)


def test_discrete_and_continuous_predictions_agree():
    e = scenario_ensemble(cycle_graph(4), PROBS)
    x0 = [1.0, -1.0, 0.5, 0.0]
    a = estimate_mean_consensus(e, SamplingScheme.from_dwell(0.001, 0.1), x0, 4000, 150, seed=7)
    b = estimate_mean_consensus(e, SamplingScheme.continuous(0.1), x0, 4000, 150, seed=8)
    assert abs(a.predicted - b.predicted) < 1e-3
    se = np.sqrt(a.std_error**2 + b.std_error**2)
    assert np.all(np.abs(a.mean_state - b.mean_state) <= 4 * se + 1e-3)


def test_stats_serialise():
    e = scenario_ensemble(ring5(), PROBS)
    stats = estimate_probability_consensus(e, SamplingScheme(0.1, 1), X0, 20, 30, seed=9, epsilons=[0.1])
    d = stats.to_dict()
    assert d["n_runs"] == 20 and d["seed"] == 9
    assert stats.gap_csv().splitlines()[0] == "checkpoint,q0,q25,q50,q75,q100"
    assert predicted_value(e, SamplingScheme(0.1, 1), X0) == pytest.approx(stats.predicted)


def test_dimension_mismatch():
    e = scenario_ensemble(ring5(), PROBS)
    with pytest.raises(ValueError):
        run_monte_carlo(e, SamplingScheme(0.1, 1), [1.0, 2.0], 2, 2, seed=0)
