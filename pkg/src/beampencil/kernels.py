"""Backend selection for the RK4 kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module is used.  Set ``BEAMPENCIL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("BEAMPENCIL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

rk4_sturm = _impl.rk4_sturm
rk4_beam = _impl.rk4_beam

__all__ = ["BACKEND", "rk4_sturm", "rk4_beam"]
