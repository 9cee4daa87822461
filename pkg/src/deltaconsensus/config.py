"""Experiment configuration: one JSON document, validated before any work."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import SamplingScheme
from .graph import FaultSpec, Graph, apply_fault, is_strongly_connected, load_graph
from .switching import SwitchingEnsemble, expected_graph, scenario_ensemble

ANALYSES = ("simulate", "bounds", "montecarlo")


class ConfigError(ValueError):
    """The configuration document is malformed or names missing files."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


@dataclass
class ExperimentConfig:
    ensemble: SwitchingEnsemble
    scheme: SamplingScheme
    x0: np.ndarray
    horizon: int = 200
    n_runs: int = 1000
    epsilons: list = field(default_factory=lambda: [0.1, 0.01])
    seed: int = 0
    analyses: tuple = ANALYSES
    terminal_gap: float = 1e-6
    workers: int = 1
    raw: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return digest(self.raw)


def _graph(spec, root: Path) -> Graph:
    if isinstance(spec, str):
        path = root / spec
        if not path.exists():
            raise ConfigError(f"graph file not found: {path}")
        return load_graph(path)
    if isinstance(spec, dict):
        return Graph.from_dict(spec)
    raise ConfigError(f"graph must be an inline object or a file path, got {spec!r}")


def _base(raw: dict, root: Path) -> Graph:
    if "graph" in raw:
        return _graph(raw["graph"], root)
    if "graph_file" in raw:
        return _graph(str(raw["graph_file"]), root)
    raise ConfigError("config needs 'graph', 'graph_file' or 'graphs'")


def build_ensemble(raw: dict, root: Path) -> SwitchingEnsemble:
    """Three layouts are accepted.

    * ``graph`` + ``scenario: {kind, faulty}`` -> fault a, fault b, both, none
    * ``graph`` + ``faults: [{receive: [...], send: [...]}, ...]`` + ``base_index``
    * ``graphs: [...]`` + ``base_index``
    """
    probs = raw.get("probs")
    if probs is None:
        raise ConfigError("config needs 'probs'")
    if "graphs" in raw:
        graphs = [_graph(g, root) for g in raw["graphs"]]
        return SwitchingEnsemble(tuple(graphs), probs, base_index=int(raw.get("base_index", -1)))
    base = _base(raw, root)
    if "scenario" in raw:
        sc = raw["scenario"]
        return scenario_ensemble(base, probs, tuple(sc.get("faulty", (0, 1))), sc.get("kind", "receive"))
    if "faults" in raw:
        graphs = [
            apply_fault(base, FaultSpec(f.get("receive", ()), f.get("send", ())))
            for f in raw["faults"]
        ]
        return SwitchingEnsemble(tuple(graphs), probs, base_index=int(raw.get("base_index", -1)))
    return SwitchingEnsemble((base,), probs, base_index=0)


def build_scheme(raw: dict) -> SamplingScheme:
    if raw.get("continuous_limit", False):
        if "delta_t" not in raw:
            raise ConfigError("continuous_limit needs 'delta_t'")
        return SamplingScheme.continuous(float(raw["delta_t"]))
    if "h" not in raw:
        raise ConfigError("config needs 'h'")
    h = float(raw["h"])
    if "k_bar" in raw:
        return SamplingScheme(h=h, k_bar=int(raw["k_bar"]))
    if "delta_t" in raw:
        return SamplingScheme.from_dwell(h, float(raw["delta_t"]))
    return SamplingScheme(h=h, k_bar=1)


def parse_config(raw: dict, root: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        ensemble = build_ensemble(raw, root)
        scheme = build_scheme(raw)
        x0 = np.asarray(raw["x0"], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if x0.shape != (ensemble.n,):
        raise ConfigError(f"x0 has {x0.size} entries, ensemble has {ensemble.n} agents")
    analyses = raw.get("analyses", "all")
    if analyses == "all":
        analyses = ANALYSES
    elif isinstance(analyses, str):
        analyses = (analyses,)
    bad = [a for a in analyses if a not in ANALYSES]
    if bad:
        raise ConfigError(f"unknown analyses {bad}; choose from {ANALYSES} or 'all'")
    cfg = ExperimentConfig(
        ensemble=ensemble,
        scheme=scheme,
        x0=x0,
        horizon=int(raw.get("horizon", 200)),
        n_runs=int(raw.get("n_runs", 1000)),
        epsilons=[float(v) for v in raw.get("epsilons", [0.1, 0.01])],
        seed=int(raw.get("seed", 0)),
        analyses=tuple(analyses),
        terminal_gap=float(raw.get("terminal_gap", 1e-6)),
        workers=int(raw.get("workers", 1)),
        raw=raw,
    )
    if cfg.horizon < 0 or cfg.n_runs < 1:
        raise ConfigError("need horizon >= 0 and n_runs >= 1")
    if any(not e > 0 for e in cfg.epsilons):
        raise ConfigError("epsilons must be positive")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw, path.parent)


def hypothesis_failures(cfg: ExperimentConfig) -> list[str]:
    """Named precondition checks; empty when all hold."""
    failures = []
    d_max = cfg.ensemble.d_max()
    if not cfg.scheme.continuous_limit and d_max > 0 and cfg.scheme.h >= 1.0 / d_max:
        failures.append(f"sampling-period: h={cfg.scheme.h} >= 1/d_max={1.0 / d_max}")
    if not is_strongly_connected(expected_graph(cfg.ensemble)):
        failures.append("expected-graph-strongly-connected: expected graph is not strongly connected")
    return failures
