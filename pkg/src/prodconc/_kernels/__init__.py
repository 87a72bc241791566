"""Kernel backend selection.

The compiled extension is used when it imported cleanly; set the environment
variable ``PRODCONC_PURE_PYTHON=1`` to force the NumPy fallback (used by the
benchmark and by backend-parity tests).
"""

import os

if os.environ.get("PRODCONC_PURE_PYTHON"):
    from .fallback import solve_simplex_fw, solve_simplex_fw_smoothed
    BACKEND = "python"
else:
    try:
        from ._fwcore import solve_simplex_fw, solve_simplex_fw_smoothed
        BACKEND = "cython"
    except ImportError:
        from .fallback import solve_simplex_fw, solve_simplex_fw_smoothed
        BACKEND = "python"

__all__ = ["solve_simplex_fw", "solve_simplex_fw_smoothed", "BACKEND"]
