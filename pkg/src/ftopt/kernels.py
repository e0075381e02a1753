"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
module is imported. Setting ``FTOPT_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("FTOPT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

trimmed_round = _active.trimmed_round
envelope_bounds = _active.envelope_bounds
displaced_mean = _active.displaced_mean

__all__ = ["BACKEND", "trimmed_round", "envelope_bounds", "displaced_mean",
           "python_backend", "compiled_backend"]
