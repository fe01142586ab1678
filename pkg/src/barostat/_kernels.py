"""Kernel dispatch.

Imports the backend selected by BAROSTAT_NUMBA (see _backend) and exposes
advance_1d / advance_2d plus the resolved backend name.  Both backends
share one calling convention; see _kernels_np for the contract.
"""

from . import _backend

if _backend.use_numba():
    from ._kernels_nb import advance_1d, advance_2d

    BACKEND = "numba"
else:
    from ._kernels_np import advance_1d, advance_2d

    BACKEND = "numpy"

__all__ = ["advance_1d", "advance_2d", "BACKEND"]
