"""Backend selection for the simulation kernels.

The compiled extension is used when it is importable; set
``DDLPV_PURE_PYTHON=1`` to force the pure-Python implementation.
"""
import os

from . import _kernels_py

if os.environ.get("DDLPV_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"
OK = _kernels_py.OK
DIVERGED = _kernels_py.DIVERGED

zoh_step = _impl.zoh_step
sinc = _impl.sinc
rollout_open_loop = _impl.rollout_open_loop
rollout_closed_loop = _impl.rollout_closed_loop
