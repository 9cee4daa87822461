"""Expected transitions, Perron vectors and consensus-value error bounds.

Norm conventions follow the squared forms used throughout the error analysis:
``norm_sq_vec(x) = x.x`` and ``norm_sq_mat(A) = lambda_max(A^T A)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import SamplingScheme, as_state, matrix_power
from .errors import ConvergenceError, HypothesisError
from .graph import build_laplacian, is_strongly_connected
from .switching import SwitchingEnsemble, dwell_matrices, expected_graph

ROW_SUM_TOL = 1e-12
ROUTE_TOL = 1e-8
IDENTITY_TOL = 1e-9
SERIES_TOL = 1e-16
SERIES_MAX_TERMS = 100_000
SOUNDNESS_SLACK = 1e-10


def norm_sq_vec(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ x)


def norm_sq_mat(a) -> float:
    """Largest eigenvalue of ``a^T a`` (the squared spectral norm)."""
    a = np.asarray(a, dtype=float)
    try:
        return float(max(np.linalg.eigvalsh(a.T @ a).max(), 0.0))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc


def lambda_bar(a) -> float:
    """``max_i |lambda_i(a)|^2``; symmetric input uses the real symmetric solver."""
    a = np.asarray(a, dtype=float)
    try:
        if np.array_equal(a, a.T):
            vals = np.linalg.eigvalsh(a)
        else:
            vals = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    return float(np.max(np.abs(vals)) ** 2) if vals.size else 0.0


def is_primitive(w) -> bool:
    """Wielandt test: ``w**(n^2 - 2n + 2)`` is entrywise positive."""
    pattern = (np.asarray(w) > 0).astype(float)
    n = pattern.shape[0]
    k = n * n - 2 * n + 2
    result = None
    base = pattern
    while k:
        if k & 1:
            result = base if result is None else np.minimum(result @ base, 1.0)
        k >>= 1
        if k:
            base = np.minimum(base @ base, 1.0)
    return bool(np.all(result > 0))


@dataclass(frozen=True, eq=False)
class ExpectedTransition:
    """Probability-weighted one-dwell transition ``W = sum_i p_i P_i``."""

    w: np.ndarray
    mode: str
    components: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class StationaryVector:
    pi: np.ndarray
    residual: float


def expected_transition(e: SwitchingEnsemble, s: SamplingScheme) -> ExpectedTransition:
    comps = dwell_matrices(e, s)
    w = np.einsum("i,ijk->jk", e.probs, comps)
    mode = "continuous-limit" if s.continuous_limit else "sampled"
    return ExpectedTransition(w, mode, comps, np.array(e.probs))


def _matrix(w) -> np.ndarray:
    return w.w if isinstance(w, ExpectedTransition) else np.asarray(w, dtype=float)


def _check_stochastic(w: np.ndarray) -> None:
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"transition matrix must be square, got {w.shape}")
    if np.any(w < 0):
        raise HypothesisError("transition matrix has negative entries")
    dev = np.abs(w.sum(axis=1) - 1.0).max()
    if dev > ROW_SUM_TOL * max(1, w.shape[0]):
        raise HypothesisError(f"rows do not sum to 1 (max deviation {dev:.2e})")


def _limit_row(w: np.ndarray, max_squarings: int = 64) -> np.ndarray:
    """Row of ``lim w**k`` by repeated squaring with row renormalisation."""
    p = w.copy()
    for _ in range(max_squarings):
        p = p @ p
        p /= p.sum(axis=1, keepdims=True)
        if np.ptp(p, axis=0).max() < 1e-14:
            return p.mean(axis=0)
    raise ConvergenceError("powers of the transition matrix did not converge")


def stationary_vector(w) -> StationaryVector:
    """Positive left Perron vector of a primitive stochastic matrix, summing to 1.

    Solved from ``(W^T - I) pi = 0`` with a normalisation row and checked
    against the limit of ``W**k``.
    """
    w = _matrix(w)
    _check_stochastic(w)
    if not is_primitive(w):
        raise HypothesisError("transition matrix is not primitive (expected graph not strongly connected)")
    n = w.shape[0]
    system = np.vstack([w.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi = np.linalg.lstsq(system, rhs, rcond=None)[0]
    pi = pi / pi.sum()
    other = _limit_row(w)
    gap = np.abs(pi - other).max()
    if gap > ROUTE_TOL:
        raise ConvergenceError(f"linear-solve and power routes disagree by {gap:.2e}")
    if np.any(pi <= 0):
        raise ConvergenceError("stationary vector is not strictly positive")
    residual = float(np.linalg.norm(pi @ w - pi))
    return StationaryVector(pi, residual)


def consensus_value(pi, x0) -> float:
    """Predicted common limit ``pi^T x0`` of the expected state."""
    p = pi.pi if isinstance(pi, StationaryVector) else np.asarray(pi, dtype=float)
    x = as_state(x0).x
    if p.shape != x.shape:
        raise ValueError(f"dimension mismatch: pi {p.shape}, x0 {x.shape}")
    return float(p @ x)


def group_inverse(t, return_terms: bool = False):
    """Group inverse of ``A = I - T`` from the series ``sum_k (T^k - T^inf)``.

    ``T^inf = 1 pi^T``. Since ``T^k - T^inf = (T - T^inf)^k`` for ``k >= 1``,
    terms are accumulated in doubling blocks: ``S_2K = S_K + B^K S_K``.
    Summation stops once a block has ``norm_sq_mat < 1e-16``.
    """
    t = _matrix(t)
    _check_stochastic(t)
    if not is_primitive(t):
        raise HypothesisError("not the transition matrix of a regular chain")
    n = t.shape[0]
    t_inf = np.outer(np.ones(n), stationary_vector(t).pi)
    b = t - t_inf
    total = np.eye(n) - t_inf
    power = b
    terms = 1
    while True:
        block = power @ total
        total = total + block
        terms *= 2
        if norm_sq_mat(block) < SERIES_TOL:
            break
        if terms >= SERIES_MAX_TERMS:
            raise ConvergenceError(f"group-inverse series not converged after {terms} terms")
        power = power @ power
    a = np.eye(n) - t
    for name, lhs, rhs in (
        ("A A# A = A", a @ total @ a, a),
        ("A# A A# = A#", total @ a @ total, total),
        ("A A# = A# A", a @ total, total @ a),
    ):
        err = np.abs(lhs - rhs).max()
        if err > IDENTITY_TOL * max(1.0, np.abs(total).max()):
            raise ConvergenceError(f"group-inverse identity {name} off by {err:.2e}")
    return (total, terms) if return_terms else total


def perturbation_shift(t, pert) -> np.ndarray:
    """``s - s~ = s E A# (I + E A#)^-1`` for ``T~ = T - E``.

    ``s`` and ``s~`` are the stationary vectors of ``T`` and ``T~``.
    """
    t = _matrix(t)
    e = np.asarray(pert, dtype=float)
    if e.shape != t.shape:
        raise ValueError("perturbation shape differs from the transition matrix")
    if np.abs(e.sum(axis=1)).max() > ROW_SUM_TOL:
        raise HypothesisError("perturbation rows must sum to zero")
    t_new = t - e
    _check_stochastic(np.where(np.abs(t_new) < ROW_SUM_TOL, 0.0, t_new))
    if not is_primitive(t_new):
        raise HypothesisError("perturbed matrix is not a regular chain")
    s = stationary_vector(t).pi
    a_sharp = group_inverse(t)
    ea = e @ a_sharp
    m = np.eye(t.shape[0]) + ea
    if np.linalg.cond(m) > 1e12:
        raise HypothesisError("I + E A# is singular")
    return np.linalg.solve(m.T, (s @ ea))


# ---------------------------------------------------------------------------
# error bounds


@dataclass(frozen=True)
class BoundReport:
    """Error bound on ``|pi^T - 1^T/n|`` (squared norm) with its provenance.

    ``bound_e_statement`` uses the alternative probability factor
    ``max{(a+b)^2, (b+g)^2}`` of the two-fault bounds. ``bound_e_rigorous`` is
    ``norm_sq_mat(D) / (1 - sqrt(lambda_bar))**2``, which follows from
    ``e = pi^T D F`` with ``|F|_2 <= 1/(1 - sqrt(lambda_bar))`` and is always
    sound.
    """

    theorem: str
    n: int
    d_norm: float
    lambda_bar: float
    bound_e: float
    measured_e: float
    bound_e_rigorous: float
    consensus_value: float | None = None
    bound_state: float | None = None
    measured_state: float | None = None
    bound_e_statement: float | None = None
    c: float | None = None

    @property
    def sound(self) -> bool:
        return bool(self.bound_e + SOUNDNESS_SLACK >= self.measured_e)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sound"] = self.sound
        return out


def _base_checks(e: SwitchingEnsemble, s: SamplingScheme) -> None:
    e.check_sampling(s)
    if not is_strongly_connected(expected_graph(e)):
        raise HypothesisError("expected graph is not strongly connected")


def _contraction(w_base: np.ndarray) -> float:
    n = w_base.shape[0]
    lb = lambda_bar(w_base - np.full((n, n), 1.0 / n))
    if not 0.0 <= lb < 1.0:
        raise HypothesisError(f"lambda_bar(W_base - 11^T/n) = {lb} is not in [0, 1)")
    return lb


def _with_state(report: dict, pi: np.ndarray, x0) -> dict:
    if x0 is None:
        return report
    x = as_state(x0).x
    n = len(x)
    report["consensus_value"] = consensus_value(pi, x)
    report["bound_state"] = n * report["bound_e"] * norm_sq_vec(x)
    report["measured_state"] = norm_sq_vec(np.full(n, (pi - 1.0 / n) @ x))
    return report


def bound_theorem4(e: SwitchingEnsemble, s: SamplingScheme, x0=None) -> BoundReport:
    """``norm_sq_mat(D) / (1 - lambda_bar(W_base - 11^T/n))``.

    ``D = sum_i p_i (P_i - P_base)`` over the one-dwell transitions.
    """
    _base_checks(e, s)
    et = expected_transition(e, s)
    comps, probs, b = et.components, et.probs, e.base_index
    w_base = comps[b]
    d = sum(p * (c - w_base) for i, (p, c) in enumerate(zip(probs, comps)) if i != b)
    if not isinstance(d, np.ndarray):
        d = np.zeros_like(w_base)
    if np.abs(d.sum(axis=1)).max() > ROW_SUM_TOL * 10:
        raise ConvergenceError("row sums of D are not zero")
    lb = _contraction(w_base)
    d_norm = norm_sq_mat(d)
    pi = stationary_vector(et).pi
    n = e.n
    report = dict(
        theorem="T4-continuous" if s.continuous_limit else "T4-sampled",
        n=n,
        d_norm=d_norm,
        lambda_bar=lb,
        bound_e=d_norm / (1.0 - lb),
        measured_e=norm_sq_vec(pi - 1.0 / n),
        bound_e_rigorous=d_norm / (1.0 - math.sqrt(lb)) ** 2,
    )
    return BoundReport(**_with_state(report, pi, x0))


def _two_fault_bound(e: SwitchingEnsemble, s: SamplingScheme, kind: str, x0) -> BoundReport:
    if s.continuous_limit or s.k_bar != 1:
        raise ValueError("the two-fault bounds need delta_t == h (k_bar = 1)")
    sc = e.scenario
    if sc is None or sc.kind != kind or e.m != 4 or e.base_index != 3:
        raise ValueError(f"ensemble is not in the two-fault {kind}-fault form")
    from .switching import scenario_ensemble

    rebuilt = scenario_ensemble(e.base, e.probs, sc.faulty, kind)
    if any(g != r for g, r in zip(e.graphs, rebuilt.graphs)):
        raise ValueError("ensemble graphs do not match their declared fault scenario")
    t4 = bound_theorem4(e, s)
    lap = build_laplacian(e.base).mat
    a, b = sc.faulty
    if kind == "receive":
        rows = (lap[a, :], lap[b, :])
        prefactor, theorem = 2.0, "T5"
    else:
        rows = (lap[:, a], lap[:, b])
        prefactor, theorem = 4.0, "C1"
    c = s.h**2 * max(math.fsum(v * v for v in rows[0]), math.fsum(v * v for v in rows[1]))
    alpha, beta, gamma, _ = e.probs
    proof_factor = max((alpha + gamma) ** 2, (beta + gamma) ** 2)
    statement_factor = max((alpha + beta) ** 2, (beta + gamma) ** 2)
    denom = 1.0 - t4.lambda_bar
    report = dict(
        theorem=theorem,
        n=e.n,
        d_norm=t4.d_norm,
        lambda_bar=t4.lambda_bar,
        bound_e=prefactor * c * proof_factor / denom,
        bound_e_statement=prefactor * c * statement_factor / denom,
        measured_e=t4.measured_e,
        bound_e_rigorous=t4.bound_e_rigorous,
        c=c,
    )
    if x0 is not None:
        pi = stationary_vector(expected_transition(e, s)).pi
        report = _with_state(report, pi, x0)
    return BoundReport(**report)


def bound_theorem5(e: SwitchingEnsemble, s: SamplingScheme, x0=None) -> BoundReport:
    """Receive-fault bound ``2 c max{(a+g)^2, (b+g)^2} / (1 - lambda_bar)``.

    ``c = h^2 max(sum_j l_aj^2, sum_j l_bj^2)`` over the faulty agents' rows
    of the base Laplacian.
    """
    return _two_fault_bound(e, s, "receive", x0)


def bound_corollary1(e: SwitchingEnsemble, s: SamplingScheme, x0=None) -> BoundReport:
    """Send-fault bound: column sums of squares and prefactor 4."""
    return _two_fault_bound(e, s, "send", x0)


def w_power_gap(w, k: int = 2048) -> float:
    """``|W**k - 1 pi^T|_2`` for the limit check."""
    w = _matrix(w)
    pi = stationary_vector(w).pi
    return float(np.linalg.norm(matrix_power(w, k) - np.outer(np.ones(len(pi)), pi), 2))
