"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Set SPECTRALENS_NO_NUMBA=1 to force the numpy path (useful for debugging
and as the reference in benchmarks/bench_kernels.py). The active backend
name is exposed as BACKEND.
"""

import os

_force_numpy = os.environ.get("SPECTRALENS_NO_NUMBA", "").lower() in ("1", "true", "yes")

if not _force_numpy:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:
        from . import _numpy as _impl

        BACKEND = "numpy"
else:
    from . import _numpy as _impl

    BACKEND = "numpy"

truncated_power_sum = _impl.truncated_power_sum
sff_abs2 = _impl.sff_abs2
stieltjes_fixed_point = _impl.stieltjes_fixed_point
