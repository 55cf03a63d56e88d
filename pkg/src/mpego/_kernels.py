"""Backend selection for the scan kernel.

The compiled extension is used when it imports; set ``MPEGO_PURE_PYTHON=1``
to force the pure-Python backend.
"""
from __future__ import annotations

import os

from . import _ascent as pure

BACKEND = "python"
ascend = pure.ascend

if not os.environ.get("MPEGO_PURE_PYTHON"):
    try:
        from . import _ascent_ext as compiled
    except ImportError:  # extension not built
        compiled = None
    else:
        BACKEND = "cython"
        ascend = compiled.ascend
else:
    compiled = None


def get_ascend(backend: str | None = None):
    if backend in (None, "auto"):
        return ascend
    if backend == "python":
        return pure.ascend
    if backend == "cython":
        if compiled is None:
            raise RuntimeError("compiled scan kernel is not available; build the package with Cython")
        return compiled.ascend
    raise ValueError(f"unknown backend {backend!r}")
