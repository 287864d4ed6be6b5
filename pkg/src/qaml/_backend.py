"""Select the statevector kernel implementation at import time.

Set ``QAML_PURE_PYTHON=1`` to force the numpy fallback even when the
compiled extension is importable.
"""
import os

from . import _pykernels

if os.environ.get("QAML_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"
