"""Agent networks, fault transformations and Laplacian primitives.

Convention: ``adj[i, j] > 0`` means agent ``i`` receives from agent ``j``.
A receive fault on agent ``i`` therefore zeroes row ``i``; a send fault on
agent ``j`` zeroes column ``j``.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: eigenvalues with magnitude below this count as zero
ZERO_EIG_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted digraph on ``n`` agents stored as a dense adjacency matrix."""

    adj: np.ndarray

    def __post_init__(self):
        adj = _frozen(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise ValueError(f"adjacency must be a non-empty square matrix, got shape {adj.shape}")
        if not np.all(np.isfinite(adj)):
            raise ValueError("adjacency has non-finite entries")
        if np.any(adj < 0):
            raise ValueError("adjacency has negative entries")
        if np.any(np.diag(adj) != 0):
            raise ValueError("adjacency diagonal must be zero (no self loops)")
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def is_undirected(self) -> bool:
        return bool(np.array_equal(self.adj, self.adj.T))

    def __eq__(self, other):
        return isinstance(other, Graph) and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash(self.adj.tobytes())

    @classmethod
    def from_edges(cls, n: int, edges, undirected: bool = True) -> "Graph":
        """Build from ``(i, j)`` or ``(i, j, w)`` triples; ``i`` receives from ``j``."""
        adj = np.zeros((n, n))
        for e in edges:
            if len(e) == 2:
                (i, j), w = e, 1.0
            elif len(e) == 3:
                i, j, w = e
            else:
                raise ValueError(f"edge must be [i, j] or [i, j, w], got {e!r}")
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            if i == j:
                raise ValueError(f"self loop on agent {i}")
            adj[i, j] = float(w)
            if undirected:
                adj[j, i] = float(w)
        return cls(adj)

    @classmethod
    def from_dict(cls, spec: dict) -> "Graph":
        """Parse the JSON graph format ``{"n", "edges", "undirected"}``."""
        try:
            n = int(spec["n"])
            edges = spec.get("edges", [])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed graph spec: {exc}") from exc
        return cls.from_edges(n, edges, undirected=bool(spec.get("undirected", True)))

    def to_dict(self) -> dict:
        undirected = self.is_undirected
        edges = []
        for i, j in zip(*np.nonzero(self.adj)):
            if undirected and i > j:
                continue
            edges.append([int(i), int(j), float(self.adj[i, j])])
        return {"n": self.n, "edges": edges, "undirected": undirected}


def load_graph(path) -> Graph:
    with open(Path(path)) as fh:
        return Graph.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class Laplacian:
    """``L = D - A``; ``degrees`` is the diagonal of ``D``."""

    mat: np.ndarray
    degrees: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class FaultSpec:
    """Agents whose incoming (receive) or outgoing (send) links are cut."""

    receive_disabled: frozenset = frozenset()
    send_disabled: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "receive_disabled", frozenset(int(i) for i in self.receive_disabled))
        object.__setattr__(self, "send_disabled", frozenset(int(i) for i in self.send_disabled))


def build_laplacian(g: Graph) -> Laplacian:
    degrees = g.adj.sum(axis=1)
    mat = np.diag(degrees) - g.adj
    return Laplacian(_frozen(mat), _frozen(degrees))


def apply_fault(g: Graph, f: FaultSpec) -> Graph:
    """Return a copy of ``g`` with faulty agents' rows/columns zeroed."""
    for i in f.receive_disabled | f.send_disabled:
        if not 0 <= i < g.n:
            raise IndexError(f"faulty agent {i} out of range for n={g.n}")
    adj = np.array(g.adj)
    for i in f.receive_disabled:
        adj[i, :] = 0.0
    for j in f.send_disabled:
        adj[:, j] = 0.0
    return Graph(adj)


def _reaches_all(mask: np.ndarray) -> bool:
    n = mask.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in np.flatnonzero(mask[v] & ~seen):
            seen[w] = True
            queue.append(w)
    return bool(seen.all())


def is_strongly_connected(g: Graph) -> bool:
    """Forward and backward reachability sweeps from agent 0."""
    mask = g.adj > 0
    return _reaches_all(mask) and _reaches_all(mask.T)


def max_degree(g: Graph) -> float:
    return float(g.adj.sum(axis=1).max())


def laplacian_spectrum(lap: Laplacian) -> np.ndarray:
    """Eigenvalues sorted by real part (then imaginary part).

    Symmetric Laplacians go through ``eigvalsh`` and come back real.
    """
    mat = lap.mat
    try:
        if np.array_equal(mat, mat.T):
            return np.sort(np.linalg.eigvalsh(mat))
        vals = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:
        from .errors import ConvergenceError

        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def zero_eigenvalue_multiplicity(lap: Laplacian, tol: float = ZERO_EIG_TOL) -> int:
    return int(np.sum(np.abs(laplacian_spectrum(lap)) < tol))


# ---------------------------------------------------------------------------
# small constructors


def complete_graph(n: int) -> Graph:
    return Graph(np.ones((n, n)) - np.eye(n))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def empty_graph(n: int) -> Graph:
    return Graph(np.zeros((n, n)))


def random_connected_graph(n: int, rng: np.random.Generator, p: float = 0.5) -> Graph:
    """Undirected G(n, p) sample, redrawn until connected. Test-suite helper."""
    if n == 1:
        return empty_graph(1)
    while True:
        upper = np.triu(rng.random((n, n)) < p, 1).astype(float)
        g = Graph(upper + upper.T)
        if is_strongly_connected(g):
            return g


#: Five agents on a ring with unit weights. With agents 0 and 1 receive-faulty,
#: probabilities (0.3, 0.3, 0.2, 0.2), h = 0.01 and 10 steps per dwell this
#: yields the published bound 0.0716 and state bound 2.0918.
def ring5() -> Graph:
    return cycle_graph(5)
