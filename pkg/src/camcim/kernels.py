"""Kernel backend selection.

The compiled extension is used when it imports; set ``CAMCIM_PURE_PYTHON=1``
to force the NumPy fallback.  :func:`backend` reports the active choice.
"""

import os

from . import _fallback

_impl = _fallback
if not os.environ.get("CAMCIM_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

gaussian = _impl.gaussian
accumulate_pulse = _impl.accumulate_pulse
mc_error_counts = _impl.mc_error_counts
gaussian_array = _fallback.gaussian_array
round_half_away = _fallback.round_half_away


def backend():
    return _impl.BACKEND


def implementations():
    """Every importable backend, keyed by name (for cross-checks and benchmarks)."""
    impls = {"python": _fallback}
    try:
        from . import _kernels

        impls["cython"] = _kernels
    except ImportError:
        pass
    return impls
