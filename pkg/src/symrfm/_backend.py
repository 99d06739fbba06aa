"""Select the kernel-assembly backend at import time.

The compiled ``_ckernels`` extension is used when it imports; setting
``SYMRFM_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

python_kernels = _kernels_py

try:
    if os.environ.get("SYMRFM_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels as compiled_kernels
except ImportError:
    compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"
