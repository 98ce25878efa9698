"""Select the kernel implementation at import time.

The compiled extension is preferred; ``KAMLATTICE_BACKEND=python`` forces
the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

kernels = _pykernels
if os.environ.get("KAMLATTICE_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _pykernels

BACKEND = kernels.NAME
