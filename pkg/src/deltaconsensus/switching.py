"""Randomly switching networks and trajectory simulation.

The active graph is redrawn i.i.d. at every dwell boundary (the first draw
happens at ``t = 0``) and held fixed for ``k_bar`` delta steps, or for one
``exp(-L*delta_t)`` application in the continuous limit.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dynamics import SamplingScheme, as_state, delta_step, dwell_transition
from .errors import HypothesisError
from .graph import FaultSpec, Graph, apply_fault, build_laplacian, is_strongly_connected, max_degree

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    """Two faulty agents ``(a, b)`` that lose their receive or send links.

    The ensemble order is: fault on ``a``, fault on ``b``, both, none.
    """

    kind: str
    faulty: tuple

    def __post_init__(self):
        if self.kind not in ("receive", "send"):
            raise ValueError(f"scenario kind must be 'receive' or 'send', got {self.kind!r}")
        a, b = (int(i) for i in self.faulty)
        if a == b:
            raise ValueError("the two faulty agents must differ")
        object.__setattr__(self, "faulty", (a, b))

    def fault_specs(self) -> list[FaultSpec]:
        a, b = self.faulty
        sets = [{a}, {b}, {a, b}, set()]
        if self.kind == "receive":
            return [FaultSpec(receive_disabled=s) for s in sets]
        return [FaultSpec(send_disabled=s) for s in sets]


@dataclass(frozen=True, eq=False)
class SwitchingEnsemble:
    graphs: tuple
    probs: np.ndarray
    base_index: int = -1
    scenario: Scenario | None = None

    def __post_init__(self):
        graphs = tuple(self.graphs)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if not graphs:
            raise ValueError("ensemble needs at least one graph")
        if len(probs) != len(graphs):
            raise ValueError(f"{len(graphs)} graphs but {len(probs)} probabilities")
        n = graphs[0].n
        if any(g.n != n for g in graphs):
            raise ValueError("all graphs must share the agent count")
        if len(graphs) == 1:
            if probs[0] != 1.0:
                raise ValueError("a single-graph ensemble needs probability 1")
        elif np.any(probs <= 0) or np.any(probs >= 1):
            raise ValueError(f"probabilities must lie strictly in (0, 1), got {probs.tolist()}")
        if abs(probs.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        base_index = self.base_index % len(graphs)
        base = graphs[base_index]
        if not (base.is_undirected and is_strongly_connected(base)):
            raise HypothesisError("the fault-free base graph must be undirected and connected")
        probs.setflags(write=False)
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "base_index", base_index)

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def m(self) -> int:
        return len(self.graphs)

    @property
    def base(self) -> Graph:
        return self.graphs[self.base_index]

    def d_max(self) -> float:
        return max(max_degree(g) for g in self.graphs)

    def check_sampling(self, s: SamplingScheme) -> None:
        s.check_period(self.d_max())

    def to_dict(self) -> dict:
        out = {
            "graphs": [g.to_dict() for g in self.graphs],
            "probs": self.probs.tolist(),
            "base_index": self.base_index,
        }
        if self.scenario is not None:
            out["scenario"] = {"kind": self.scenario.kind, "faulty": list(self.scenario.faulty)}
        return out


def scenario_ensemble(base: Graph, probs, faulty=(0, 1), kind: str = "receive") -> SwitchingEnsemble:
    """Four-graph ensemble (fault a, fault b, both, none) over an undirected base."""
    sc = Scenario(kind, tuple(faulty))
    graphs = tuple(apply_fault(base, f) for f in sc.fault_specs())
    return SwitchingEnsemble(graphs, probs, base_index=3, scenario=sc)


def single_graph_ensemble(g: Graph) -> SwitchingEnsemble:
    return SwitchingEnsemble((g,), [1.0], base_index=0)


def expected_graph(e: SwitchingEnsemble) -> Graph:
    adj = sum(p * g.adj for p, g in zip(e.probs, e.graphs))
    return Graph(adj)


def dwell_matrices(e: SwitchingEnsemble, s: SamplingScheme) -> np.ndarray:
    """Stack of per-graph one-dwell transitions, shape ``(m, n, n)``."""
    e.check_sampling(s)
    return np.stack([dwell_transition(build_laplacian(g), s) for g in e.graphs])


def sample_switch_sequence(e: SwitchingEnsemble, n_intervals: int, seed: int) -> list[int]:
    """i.i.d. graph indices, one per dwell interval, keyed by ``seed``."""
    if n_intervals < 0:
        raise ValueError("n_intervals must be non-negative")
    return rng.draw_indices(int(seed), n_intervals, rng.cumulative(e.probs))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded run. ``switches[k] = (t_k, graph index)`` for dwell interval ``k``."""

    times: np.ndarray
    states: np.ndarray
    switches: list = field(default_factory=list)
    seed: int | None = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def sequence(self) -> list[int]:
        return [g for _, g in self.switches]

    def graph_column(self) -> list[int]:
        """Graph in force over the step that starts at each recorded time.

        The last row repeats the graph of the final interval.
        """
        n_rows = len(self.times)
        if not self.switches:
            return [-1] * n_rows
        per = (n_rows - 1) // len(self.switches)
        col = [self.switches[min(k // per, len(self.switches) - 1)][1] for k in range(n_rows - 1)]
        return col + [self.switches[-1][1]]

    def to_csv(self, fh=None) -> str | None:
        n = self.states.shape[1]
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x_{i}" for i in range(n)] + ["graph_index"])
        for t, x, g in zip(self.times, self.states, self.graph_column()):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [g])
        return fh.getvalue() if own else None


def simulate(e: SwitchingEnsemble, s: SamplingScheme, x0, n_intervals: int, seed: int = 0,
             sequence=None) -> Trajectory:
    """Run system ``delta x = -L_{t_k} x`` over ``n_intervals`` dwell intervals.

    Pass ``sequence`` to replay recorded graph indices instead of drawing.
    Discrete mode records every delta step; the continuous limit records
    dwell boundaries only.
    """
    x = as_state(x0)
    if x.n != e.n:
        raise ValueError(f"dimension mismatch: x0 has {x.n} entries, ensemble has {e.n} agents")
    e.check_sampling(s)
    if sequence is None:
        sequence = sample_switch_sequence(e, n_intervals, seed)
    elif len(sequence) != n_intervals:
        raise ValueError("replayed sequence length differs from n_intervals")
    laps = [build_laplacian(g) for g in e.graphs]
    times = [0.0]
    states = [x.x]
    switches = []
    if s.continuous_limit:
        trans = [dwell_transition(lap, s) for lap in laps]
        for k, g in enumerate(sequence):
            switches.append((k * s.delta_t, int(g)))
            states.append(trans[g] @ states[-1])
            times.append((k + 1) * s.delta_t)
    else:
        step = 0
        for k, g in enumerate(sequence):
            switches.append((step * s.h, int(g)))
            for _ in range(s.k_bar):
                x = delta_step(x, laps[g], s.h)
                step += 1
                states.append(x.x)
                times.append(step * s.h)
    return Trajectory(np.array(times), np.array(states), switches, seed)
