"""Backend selection for the hot loops.

The compiled extension is used when importable; setting
``DELTACONSENSUS_PUREPY=1`` forces the NumPy fallback.
"""
import os

from . import _purepy

if os.environ.get("DELTACONSENSUS_PUREPY") == "1":
    _impl = _purepy
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _purepy

BACKEND = "python" if _impl is _purepy else "compiled"
BACKENDS = {"python": _purepy}
if _impl is not _purepy:
    BACKENDS["compiled"] = _impl

run_ensemble = _impl.run_ensemble
delta_trajectory = _impl.delta_trajectory


def get(name: str):
    """Kernel module by backend name (``"compiled"`` or ``"python"``)."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
