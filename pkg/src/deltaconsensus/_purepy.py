"""NumPy fallback for the compiled kernels in ``_kernels.pyx``.

Same inputs, outputs and draw sequence; floating-point summation order may
differ from the compiled path in the last bits.
"""
import numpy as np

from .rng import units_array


def run_ensemble(trans, cum, x0, keys, horizon, mono_tol):
    trans = np.ascontiguousarray(trans, dtype=float)
    cum = np.asarray(cum, dtype=float)
    keys = np.asarray(keys, dtype=np.uint64)
    R, m = keys.shape[0], trans.shape[0]
    x = np.tile(np.asarray(x0, dtype=float), (R, 1))
    gaps = np.empty((R, horizon + 1))
    gaps[:, 0] = x.max(axis=1) - x.min(axis=1)
    mono = np.ones(R, dtype=bool)
    counts = np.zeros(m, dtype=np.int64)
    for k in range(horizon):
        idx = np.searchsorted(cum[:-1], units_array(keys, k), side="right")
        counts += np.bincount(idx, minlength=m)
        for g in range(m):
            sel = idx == g
            if sel.any():
                x[sel] = x[sel] @ trans[g].T
        gap = x.max(axis=1) - x.min(axis=1)
        mono &= ~(gap > gaps[:, k] + mono_tol)
        gaps[:, k + 1] = gap
    return x, gaps, mono, counts


def delta_trajectory(lap, x0, h, steps):
    lap = np.asarray(lap, dtype=float)
    out = np.empty((steps + 1, lap.shape[0]))
    out[0] = x0
    for k in range(steps):
        out[k + 1] = out[k] + h * (-(lap @ out[k]))
    return out
