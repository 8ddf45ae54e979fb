"""Euler-Maruyama stepping kernels with backend selection at import time.

The compiled Cython kernels are used when the extension built successfully;
otherwise (or when ``LONGRUN_NPC_PURE_PYTHON=1``) the pure NumPy steppers take
over.  Both backends share call signatures and semantics; ``BACKEND`` names
the active one.  ``benchmarks/bench_kernels.py`` compares their throughput.
"""

import importlib
import os

from . import _python

__all__ = ["BACKEND", "em_affine", "em_cir", "em_generic", "available_backends"]

_FORCE_PY = os.environ.get("LONGRUN_NPC_PURE_PYTHON", "") not in ("", "0")

_native = None
if not _FORCE_PY:
    try:
        _native = importlib.import_module(__name__ + "._native")
    except ImportError:
        _native = None

_impl = _native if _native is not None else _python
BACKEND = getattr(_impl, "BACKEND", "python")

em_affine = _impl.em_affine
em_cir = _impl.em_cir
# the generic stepper calls back into Python per step; compiling it buys nothing
em_generic = _python.em_generic


def available_backends():
    out = {"python": _python}
    if _native is not None:
        out["native"] = _native
    return out
