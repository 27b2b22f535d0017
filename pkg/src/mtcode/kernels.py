"""Backend selection for the enumeration kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementations in ``_fallback`` are used. Setting ``MTCODE_PURE_PYTHON=1``
forces the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("MTCODE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback

gf2_syndrome_table = _impl.gf2_syndrome_table
segment_max = _impl.segment_max
segment_argmax = _impl.segment_argmax
segment_argmin_masked = _impl.segment_argmin_masked
gf2_rref = _impl.gf2_rref

__all__ = [
    "BACKEND",
    "gf2_syndrome_table",
    "segment_max",
    "segment_argmax",
    "segment_argmin_masked",
    "gf2_rref",
]
