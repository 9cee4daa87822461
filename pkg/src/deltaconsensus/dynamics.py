"""Delta-operator state updates and one-dwell transition matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SamplingPeriodError
from .graph import Laplacian

#: negative rounding noise below this magnitude is clamped to zero
NEG_CLAMP = 1e-12


@dataclass(frozen=True)
class SamplingScheme:
    """Sampling period ``h`` and ``k_bar`` delta steps per dwell interval.

    In the continuous limit only ``delta_t`` drives the dynamics; ``h`` and
    ``k_bar`` are then informational.
    """

    h: float
    k_bar: int = 1
    delta_t: float | None = None
    continuous_limit: bool = False

    def __post_init__(self):
        if self.continuous_limit:
            if self.delta_t is None or not self.delta_t > 0:
                raise ValueError("continuous-limit scheme needs a positive delta_t")
            return
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"sampling period must be positive, got {self.h}")
        if int(self.k_bar) != self.k_bar or self.k_bar < 1:
            raise ValueError(f"k_bar must be a positive integer, got {self.k_bar}")
        object.__setattr__(self, "k_bar", int(self.k_bar))
        expected = self.k_bar * self.h
        if self.delta_t is None:
            object.__setattr__(self, "delta_t", expected)
        elif self.delta_t != expected:
            raise ValueError(f"delta_t={self.delta_t} is not k_bar*h={expected}")

    @classmethod
    def from_dwell(cls, h: float, delta_t: float) -> "SamplingScheme":
        """Derive ``k_bar`` from ``delta_t / h``; non-integer ratios are rejected."""
        ratio = delta_t / h
        k_bar = round(ratio)
        if k_bar < 1 or abs(k_bar * h - delta_t) > 1e-12 * max(1.0, abs(delta_t)):
            raise ValueError(f"delta_t={delta_t} is not an integer multiple of h={h}")
        return cls(h=h, k_bar=k_bar)

    @classmethod
    def continuous(cls, delta_t: float) -> "SamplingScheme":
        return cls(h=0.0, k_bar=1, delta_t=delta_t, continuous_limit=True)

    def check_period(self, d_max: float) -> None:
        """Raise unless ``h < 1/d_max`` (no-op in the continuous limit)."""
        if self.continuous_limit or d_max <= 0:
            return
        if self.h >= 1.0 / d_max:
            raise SamplingPeriodError(
                f"sampling period h={self.h} violates h < 1/d_max = {1.0 / d_max} (d_max={d_max})"
            )

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "k_bar": self.k_bar,
            "delta_t": self.delta_t,
            "continuous_limit": self.continuous_limit,
        }


@dataclass(frozen=True, eq=False)
class StateVector:
    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True).reshape(-1)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0]


def as_state(x) -> StateVector:
    return x if isinstance(x, StateVector) else StateVector(x)


def _lap_mat(lap) -> np.ndarray:
    return lap.mat if isinstance(lap, Laplacian) else np.asarray(lap, dtype=float)


def delta_step(x, lap, h: float) -> StateVector:
    """Advance one sampling period: ``x + h * (-L x)``."""
    s = as_state(x)
    L = _lap_mat(lap)
    if L.shape != (s.n, s.n):
        raise ValueError(f"dimension mismatch: state {s.n}, Laplacian {L.shape}")
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    return StateVector(s.x + h * (-(L @ s.x)), s.t + h)


def matrix_power(a: np.ndarray, k: int) -> np.ndarray:
    """``a**k`` by squaring over the binary expansion of ``k``."""
    if k < 0:
        raise ValueError("negative exponent")
    a = np.asarray(a, dtype=float)
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else result @ base
        k >>= 1
        if k:
            base = base @ base
    return np.eye(a.shape[0]) if result is None else result


# Pade [13/13] coefficients and its scaling threshold for the 1-norm.
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a [13/13] Pade approximant."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    norm1 = np.abs(a).sum(axis=0).max() if n else 0.0
    s = 0
    if norm1 > _THETA13:
        s = int(math.ceil(math.log2(norm1 / _THETA13)))
        a = a / 2.0**s
    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def clamp_stochastic(w: np.ndarray, tol: float = NEG_CLAMP) -> np.ndarray:
    """Zero out rounding-level negatives; anything more negative is an error."""
    w = np.array(w, dtype=float)
    low = w.min() if w.size else 0.0
    if low < -tol:
        raise SamplingPeriodError(f"transition matrix has entry {low:.3e} < 0")
    w[w < 0] = 0.0
    return w


def dwell_transition(lap, s: SamplingScheme) -> np.ndarray:
    """One-dwell transition: ``(I - hL)**k_bar``, or ``exp(-L*delta_t)`` in the limit."""
    L = _lap_mat(lap)
    if s.continuous_limit:
        return clamp_stochastic(expm(-L * s.delta_t))
    degrees = lap.degrees if isinstance(lap, Laplacian) else np.diag(L)
    s.check_period(float(np.max(degrees)) if len(degrees) else 0.0)
    step = np.eye(L.shape[0]) - s.h * L
    return clamp_stochastic(matrix_power(step, s.k_bar))


def lyapunov_delta(x, lap, h: float, x0=None) -> float:
    """Difference quotient ``(V(t+h) - V(t)) / h`` of ``V = |x - mean(x0) 1|^2``.

    ``x0`` is the run's initial state; defaults to ``x`` (the mean is invariant
    under undirected dynamics).
    """
    s = as_state(x)
    ref = s.x if x0 is None else as_state(x0).x
    if ref.shape != s.x.shape:
        raise ValueError("dimension mismatch between x and x0")
    c = ref.mean()
    nu = s.x - c
    nxt = delta_step(s, lap, h).x - c
    return float((nxt @ nxt - nu @ nu) / h)


def lyapunov_quadratic(x, lap, h: float, x0=None) -> float:
    """Closed form ``nu^T (-2L + h L^T L) nu`` of :func:`lyapunov_delta`."""
    s = as_state(x)
    L = _lap_mat(lap)
    ref = s.x if x0 is None else as_state(x0).x
    nu = s.x - ref.mean()
    xi = -2.0 * L + h * (L.T @ L)
    return float(nu @ xi @ nu)


def lyapunov_deltas(states: np.ndarray, lap, h: float, x0=None) -> np.ndarray:
    """Vectorised :func:`lyapunov_delta` over consecutive rows of a trajectory.

    ``states[k+1]`` must be the delta step of ``states[k]``; returns one value
    per step (length ``len(states) - 1``).
    """
    states = np.asarray(states, dtype=float)
    ref = states[0] if x0 is None else np.asarray(x0, dtype=float)
    nu = states - ref.mean()
    v = np.einsum("ij,ij->i", nu, nu)
    return (v[1:] - v[:-1]) / h
