"""Kernel backend selection.

The hot loops (likelihood sweep, compensator sweep, thinning simulation)
exist twice: a Cython extension (`_kernels`) and a pure NumPy/Python
module (`_kernels_py`) with identical call signatures.  The compiled
version is preferred when importable; set LOBHAWKES_PURE=1 to force the
pure backend, e.g. for benchmarking or debugging.
"""

import os

if os.environ.get("LOBHAWKES_PURE", "").strip().lower() in ("1", "true", "yes"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as kernels

        BACKEND = "python"


def backend_name() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND
