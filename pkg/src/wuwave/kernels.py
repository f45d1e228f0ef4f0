"""Backend selection for the dense kernels.

The compiled extension is preferred.  Setting the environment variable
``WUWAVE_PURE=1`` forces the numpy implementation.
"""

import os

from . import _pykernels

if os.environ.get("WUWAVE_PURE", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

hilbert_matrices = _impl.hilbert_matrices
square_kernel_apply = _impl.square_kernel_apply

__all__ = ["BACKEND", "hilbert_matrices", "square_kernel_apply"]
