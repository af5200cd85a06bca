"""Kernel dispatch: compiled extension when importable, pure Python otherwise.

Set ``TREFFTZ_POLY_PURE=1`` to force the fallback (useful for comparing the
two back ends).
"""
import os

from . import _pykernels

try:
    if os.environ.get("TREFFTZ_POLY_PURE", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl

    COMPILED = True
except ImportError:
    _impl = _pykernels
    COMPILED = False

clip_cells = _impl.clip_cells
polygon_moments = _impl.polygon_moments

__all__ = ["COMPILED", "clip_cells", "polygon_moments"]
