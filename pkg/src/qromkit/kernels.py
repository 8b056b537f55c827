"""Kernel dispatch: the compiled extension when importable, else pure Python.

Set ``QROMKIT_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

if os.environ.get("QROMKIT_PURE_PYTHON"):
    from . import _pykernels as _impl
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _pykernels as _impl
        BACKEND = "python"

asap_depth = _impl.asap_depth
trajectory_distribution = _impl.trajectory_distribution
run_batch = _impl.run_batch
