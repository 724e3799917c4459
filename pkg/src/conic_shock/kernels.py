"""Kernel selection.

The compiled extension is preferred.  Setting ``CONIC_SHOCK_PURE=1`` in the
environment forces the pure-Python fallback, which is also used automatically
when the extension was not built.
"""

from __future__ import annotations

import os

BACKEND = "python"

if os.environ.get("CONIC_SHOCK_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        from . import _fallback as _impl
else:
    from . import _fallback as _impl

from ._fallback import STATUS_CROSSED, STATUS_DEGENERATE, STATUS_OK, STATUS_STIFF  # noqa: E402

conical_rhs = _impl.conical_rhs
rk4_step = _impl.rk4_step
rk4_conical = _impl.rk4_conical
march_segment = _impl.march_segment

__all__ = [
    "BACKEND",
    "STATUS_OK",
    "STATUS_CROSSED",
    "STATUS_DEGENERATE",
    "STATUS_STIFF",
    "conical_rhs",
    "rk4_step",
    "rk4_conical",
    "march_segment",
]
