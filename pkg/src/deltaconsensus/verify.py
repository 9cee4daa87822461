"""Monte Carlo estimates of consensus in mean, in probability and almost surely.

Runs are independent: run ``r`` draws its switches from
``rng.run_key(seed, r)``, so ``simulate(..., seed=run_key(seed, r))`` replays
it. Chunks of runs may execute on worker threads; results are written back by
run index, so the output does not depend on scheduling.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .analysis import expected_transition, stationary_vector
from .dynamics import SamplingScheme, as_state
from .switching import SwitchingEnsemble, dwell_matrices

MONOTONE_TOL = 1e-12
TERMINAL_GAP = 1e-6
QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True, eq=False)
class MonteCarloRuns:
    final: np.ndarray
    gaps: np.ndarray
    monotone: np.ndarray
    counts: np.ndarray
    seed: int

    @property
    def n_runs(self) -> int:
        return self.final.shape[0]

    @property
    def horizon(self) -> int:
        return self.gaps.shape[1] - 1


def run_monte_carlo(e: SwitchingEnsemble, s: SamplingScheme, x0, n_runs: int, horizon: int,
                    seed: int, workers: int = 1, backend: str | None = None,
                    chunk: int = 2048) -> MonteCarloRuns:
    """Terminal states and dwell-boundary gaps of ``n_runs`` seeded runs."""
    x = as_state(x0).x
    if x.shape[0] != e.n:
        raise ValueError(f"dimension mismatch: x0 has {x.shape[0]} entries, ensemble has {e.n} agents")
    if n_runs < 1 or horizon < 0:
        raise ValueError("need n_runs >= 1 and horizon >= 0")
    impl = kernels.get(backend) if backend else kernels
    trans = np.ascontiguousarray(dwell_matrices(e, s))
    cum = rng.cumulative(e.probs)
    keys = rng.run_keys(seed, n_runs)
    bounds = [(lo, min(lo + chunk, n_runs)) for lo in range(0, n_runs, chunk)]

    def work(span):
        lo, hi = span
        return impl.run_ensemble(trans, cum, x, np.ascontiguousarray(keys[lo:hi]), horizon, MONOTONE_TOL)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    final = np.concatenate([p[0] for p in parts])
    gaps = np.concatenate([p[1] for p in parts])
    mono = np.concatenate([p[2] for p in parts]).astype(bool)
    counts = np.sum([p[3] for p in parts], axis=0)
    return MonteCarloRuns(final, gaps, mono, counts, seed)


def default_checkpoints(horizon: int, count: int = 11) -> list[int]:
    return sorted({int(round(v)) for v in np.linspace(0, horizon, min(count, horizon + 1))})


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    n_runs: int
    horizon: int
    seed: int
    mean_state: np.ndarray
    std_error: np.ndarray
    checkpoints: list
    gap_quantiles: np.ndarray
    per_run_monotone: np.ndarray
    switch_frequencies: np.ndarray
    predicted: float | None = None
    epsilons: list = field(default_factory=list)
    prob_exceed: np.ndarray | None = None
    terminal_gap_threshold: float | None = None
    terminal_below_threshold: float | None = None

    @property
    def deviation(self) -> np.ndarray | None:
        return None if self.predicted is None else self.mean_state - self.predicted

    @property
    def z_scores(self) -> np.ndarray | None:
        """``|mean - predicted| / SE``; zero where both deviation and SE vanish."""
        if self.predicted is None:
            return None
        dev = np.abs(self.deviation)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.std_error > 0, dev / self.std_error, np.where(dev > 0, np.inf, 0.0))
        return z

    @property
    def all_monotone(self) -> bool:
        return bool(self.per_run_monotone.all())

    def to_dict(self) -> dict:
        out = {
            "n_runs": self.n_runs,
            "horizon": self.horizon,
            "seed": self.seed,
            "mean_state": self.mean_state.tolist(),
            "std_error": self.std_error.tolist(),
            "predicted": self.predicted,
            "checkpoints": list(self.checkpoints),
            "quantile_levels": list(QUANTILES),
            "gap_quantiles": self.gap_quantiles.tolist(),
            "all_monotone": self.all_monotone,
            "non_monotone_runs": np.flatnonzero(~self.per_run_monotone).tolist(),
            "switch_frequencies": self.switch_frequencies.tolist(),
        }
        if self.predicted is not None:
            out["deviation"] = self.deviation.tolist()
            out["max_z"] = float(self.z_scores.max())
        if self.prob_exceed is not None:
            out["epsilons"] = list(self.epsilons)
            out["prob_exceed"] = self.prob_exceed.tolist()
        if self.terminal_gap_threshold is not None:
            out["terminal_gap_threshold"] = self.terminal_gap_threshold
            out["terminal_below_threshold"] = self.terminal_below_threshold
        return out

    def gap_csv(self) -> str:
        """Per-checkpoint gap quantiles as CSV."""
        head = "checkpoint," + ",".join(f"q{int(q * 100)}" for q in QUANTILES)
        rows = [f"{c}," + ",".join(repr(float(v)) for v in qs) for c, qs in zip(self.checkpoints, self.gap_quantiles)]
        return "\n".join([head] + rows) + "\n"


def summarize(runs: MonteCarloRuns, predicted: float | None = None, checkpoints=None,
              epsilons=None, terminal_gap: float | None = None) -> EnsembleStats:
    cps = default_checkpoints(runs.horizon) if checkpoints is None else sorted(checkpoints)
    mean = runs.final.mean(axis=0)
    se = runs.final.std(axis=0, ddof=1) / np.sqrt(runs.n_runs) if runs.n_runs > 1 else np.zeros_like(mean)
    sel = runs.gaps[:, cps]
    quant = np.quantile(sel, QUANTILES, axis=0).T
    prob = None
    if epsilons is not None:
        prob = np.array([[float(np.mean(sel[:, j] >= eps)) for eps in epsilons] for j in range(len(cps))])
    below = None
    if terminal_gap is not None:
        below = float(np.mean(runs.gaps[:, -1] < terminal_gap))
    total = runs.counts.sum()
    freqs = runs.counts / total if total else runs.counts.astype(float)
    return EnsembleStats(
        n_runs=runs.n_runs,
        horizon=runs.horizon,
        seed=runs.seed,
        mean_state=mean,
        std_error=se,
        checkpoints=cps,
        gap_quantiles=quant,
        per_run_monotone=runs.monotone,
        switch_frequencies=freqs,
        predicted=predicted,
        epsilons=list(epsilons) if epsilons is not None else [],
        prob_exceed=prob,
        terminal_gap_threshold=terminal_gap,
        terminal_below_threshold=below,
    )


def predicted_value(e: SwitchingEnsemble, s: SamplingScheme, x0) -> float:
    pi = stationary_vector(expected_transition(e, s)).pi
    return float(pi @ as_state(x0).x)


def estimate_mean_consensus(e, s, x0, n_runs: int, horizon: int, seed: int, **kw) -> EnsembleStats:
    """Empirical ``E[x]`` at the horizon against the prediction ``pi^T x0``."""
    runs = run_monte_carlo(e, s, x0, n_runs, horizon, seed, **kw)
    return summarize(runs, predicted=predicted_value(e, s, x0))


def estimate_probability_consensus(e, s, x0, n_runs: int, horizon: int, seed: int, epsilons,
                                   checkpoints=None, **kw) -> EnsembleStats:
    """Empirical ``P{max - min >= eps}`` per checkpoint and ``eps``."""
    if any(not eps > 0 for eps in epsilons):
        raise ValueError("epsilons must be positive")
    runs = run_monte_carlo(e, s, x0, n_runs, horizon, seed, **kw)
    return summarize(runs, predicted=predicted_value(e, s, x0), checkpoints=checkpoints, epsilons=epsilons)


def check_almost_sure(e, s, x0, n_runs: int, horizon: int, seed: int,
                      terminal_gap: float = TERMINAL_GAP, **kw) -> EnsembleStats:
    """Per-run gap monotonicity and terminal gap below ``terminal_gap``."""
    runs = run_monte_carlo(e, s, x0, n_runs, horizon, seed, **kw)
    return summarize(runs, predicted=predicted_value(e, s, x0), terminal_gap=terminal_gap)
