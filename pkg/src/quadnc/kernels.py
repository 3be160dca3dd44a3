"""Backend selection for the sampling and binning kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is used.  Set ``QUADNC_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QUADNC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def inverse_cdf(u, grid, cdf):
    """Map uniforms ``u`` through the piecewise-linear inverse of ``cdf``."""
    return _impl.inverse_cdf(
        np.ascontiguousarray(u, dtype=np.float64),
        np.ascontiguousarray(grid, dtype=np.float64),
        np.ascontiguousarray(cdf, dtype=np.float64),
    )


def bin_counts(values):
    """Counts in the 160 bins of width 0.1 covering [-8, 8], plus the number dropped."""
    counts, dropped = _impl.bin_counts(np.ascontiguousarray(values, dtype=np.float64))
    return counts, int(dropped)
