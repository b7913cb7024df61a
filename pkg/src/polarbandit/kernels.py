"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``POLARBANDIT_PURE=1`` to force the fallback (used by the benchmark and
the kernel-parity tests).
"""

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("POLARBANDIT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

jacobi_eigh = _impl.jacobi_eigh
chol_update = _impl.chol_update
fj_sweep = _impl.fj_sweep

__all__ = ["BACKEND", "jacobi_eigh", "chol_update", "fj_sweep"]
