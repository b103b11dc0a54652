"""Backend selection for the denoiser kernels.

The compiled extension is used when it was built; setting the environment
variable ``AMPSI_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("AMPSI_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

bg_eval = _impl.bg_eval
bern_eval = _impl.bern_eval
block_eval = _impl.block_eval


def backends():
    """Map of available backend name to kernel module."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels

        found["compiled"] = _kernels
    except ImportError:
        pass
    return found
