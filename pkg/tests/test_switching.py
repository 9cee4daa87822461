import io

import numpy as np
import pytest

from deltaconsensus.dynamics import SamplingScheme, delta_step
from deltaconsensus.errors import HypothesisError, SamplingPeriodError
from deltaconsensus.graph import (
    FaultSpec,
    Graph,
    apply_fault,
    complete_graph,
    cycle_graph,
    path_graph,
    ring5,
)
from deltaconsensus.switching import (
    Scenario,
    SwitchingEnsemble,
    expected_graph,
    sample_switch_sequence,
    scenario_ensemble,
    simulate,
    single_graph_ensemble,
)

PROBS = (0.3, 0.3, 0.2, 0.2)


def test_scenario_ensemble_order():
    e = scenario_ensemble(complete_graph(4), PROBS, (0, 1), "receive")
    assert e.m == 4 and e.base_index == 3
    base = complete_graph(4)
    assert e.graphs[3] == base
    assert e.graphs[0] == apply_fault(base, FaultSpec(receive_disabled={0}))
    assert e.graphs[1] == apply_fault(base, FaultSpec(receive_disabled={1}))
    assert e.graphs[2] == apply_fault(base, FaultSpec(receive_disabled={0, 1}))
    send = scenario_ensemble(base, PROBS, (0, 1), "send")
    assert send.graphs[2] == apply_fault(base, FaultSpec(send_disabled={0, 1}))


def test_scenario_rejects_bad_faulty():
    with pytest.raises(ValueError):
        Scenario("receive", (1, 1))
    with pytest.raises(ValueError):
        Scenario("other", (0, 1))


@pytest.mark.parametrize("probs", [(0.5, 0.5, 0.0, 0.0), (0.3, 0.3, 0.3, 0.3), (1.2, -0.2, 0.0, 0.0)])
def test_invalid_probabilities(probs):
    with pytest.raises(ValueError):
        scenario_ensemble(complete_graph(3), probs)


def test_base_graph_must_be_connected_and_undirected():
    g = Graph.from_edges(3, [(0, 1)], undirected=True)
    with pytest.raises(HypothesisError):
        scenario_ensemble(g, PROBS)
    d = Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)], undirected=False)
    with pytest.raises(HypothesisError):
        scenario_ensemble(d, PROBS)


def test_expected_graph_is_weighted_sum():
    e = scenario_ensemble(ring5(), PROBS)
    ref = sum(p * g.adj for p, g in zip(PROBS, e.graphs))
    np.testing.assert_allclose(expected_graph(e).adj, ref, atol=1e-15)


def test_sampling_period_rejected():
    e = scenario_ensemble(path_graph(3), PROBS)
    with pytest.raises(SamplingPeriodError):
        simulate(e, SamplingScheme(0.5, 1), [1.0, 0.0, 0.0], 2)


def test_switch_frequencies_within_three_sigma():
    e = scenario_ensemble(ring5(), PROBS)
    seq = np.array(sample_switch_sequence(e, 100_000, 1234))
    freq = np.bincount(seq, minlength=4) / seq.size
    p = np.array(PROBS)
    assert np.all(np.abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / seq.size))


def test_simulate_deterministic():
    e = scenario_ensemble(ring5(), PROBS)
    s = SamplingScheme(0.05, 3)
    a = simulate(e, s, [0.2, 0.8, 0.4, -1, -2], 50, seed=42)
    b = simulate(e, s, [0.2, 0.8, 0.4, -1, -2], 50, seed=42)
    assert a.sequence == b.sequence
    np.testing.assert_array_equal(a.states, b.states)
    c = simulate(e, s, [0.2, 0.8, 0.4, -1, -2], 50, seed=43)
    assert c.sequence != a.sequence


def test_single_graph_matches_delta_steps():
    g = path_graph(3)
    e = single_graph_ensemble(g)
    from deltaconsensus.graph import build_laplacian

    lap = build_laplacian(g)
    tr = simulate(e, SamplingScheme(0.3, 1), [1.0, 0.0, -1.0], 20)
    x = np.array([1.0, 0.0, -1.0])
    for k in range(20):
        x = delta_step(x, lap, 0.3).x
        np.testing.assert_array_equal(tr.states[k + 1], x)


def test_constant_initial_state_stays_constant():
    e = scenario_ensemble(ring5(), PROBS)
    tr = simulate(e, SamplingScheme(0.1, 4), np.full(5, 1.5), 30, seed=3)
    assert np.all(tr.states == 1.5)


def test_states_stay_in_convex_hull():
    e = scenario_ensemble(ring5(), PROBS)
    x0 = np.array([0.2, 0.8, 0.4, -1, -2])
    tr = simulate(e, SamplingScheme(0.1, 4), x0, 200, seed=5)
    assert tr.states.min() >= x0.min() - 1e-12
    assert tr.states.max() <= x0.max() + 1e-12
    assert np.all(np.diff(tr.states.max(axis=1)) <= 1e-12)
    assert np.all(np.diff(tr.states.min(axis=1)) >= -1e-12)


def test_replay_reproduces_run():
    e = scenario_ensemble(ring5(), PROBS)
    s = SamplingScheme(0.1, 2)
    a = simulate(e, s, [0.2, 0.8, 0.4, -1, -2], 40, seed=11)
    b = simulate(e, s, [0.2, 0.8, 0.4, -1, -2], 40, sequence=a.sequence)
    np.testing.assert_array_equal(a.states, b.states)


def test_discrete_converges_to_continuous_limit():
    e = scenario_ensemble(cycle_graph(4), PROBS)
    x0 = [1.0, -1.0, 0.5, 0.0]
    cont = simulate(e, SamplingScheme.continuous(0.1), x0, 20, seed=8)
    errs = []
    for h in (0.01, 0.001):
        disc = simulate(e, SamplingScheme.from_dwell(h, 0.1), x0, 20, seed=8)
        assert disc.sequence == cont.sequence
        errs.append(np.abs(disc.final - cont.final).max())
    assert errs[1] < errs[0] / 5


def test_trajectory_csv_layout():
    e = scenario_ensemble(complete_graph(3), PROBS)
    tr = simulate(e, SamplingScheme(0.1, 2), [1.0, 0.0, 0.0], 3, seed=1)
    text = tr.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "t,x_0,x_1,x_2,graph_index"
    assert len(lines) == 1 + 7
    graphs = [int(line.split(",")[-1]) for line in lines[1:]]
    seq = tr.sequence
    assert graphs == [seq[0], seq[0], seq[1], seq[1], seq[2], seq[2], seq[2]]
    buf = io.StringIO()
    tr.to_csv(buf)
    assert buf.getvalue() == text


def test_single_graph_ensemble_probability_one():
    e = single_graph_ensemble(complete_graph(3))
    assert e.probs == (1.0,) or list(e.probs) == [1.0]
    with pytest.raises(ValueError):
        SwitchingEnsemble((complete_graph(3),), (0.5,))
