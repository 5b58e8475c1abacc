"""Kernel selection: compiled extension if available, numpy fallback otherwise.

Set ``SMRE_PURE_PYTHON=1`` to force the fallback (useful for benchmarking
and for debugging the compiled path).
"""

import os

if os.environ.get("SMRE_PURE_PYTHON", "") == "1":
    from smre import _kernels_py as _impl
else:
    try:
        from smre import _kernels as _impl
    except ImportError:
        from smre import _kernels_py as _impl

IMPLEMENTATION = _impl.IMPLEMENTATION
dykstra_blocks = _impl.dykstra_blocks
