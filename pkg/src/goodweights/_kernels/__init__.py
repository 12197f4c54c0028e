"""Hot-kernel dispatch: compiled Cython core with a pure-Python fallback.

The compiled extension is optional; if it is absent (or the environment
variable ``GOODWEIGHTS_NO_EXT`` is set) the NumPy implementation in
``_ref`` is used instead.  ``HAVE_COMPILED_CORE`` reports which one won.
"""

import os

from . import _ref

if os.environ.get("GOODWEIGHTS_NO_EXT"):
    _impl = _ref
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _ref

HAVE_COMPILED_CORE = bool(_impl.COMPILED)

lorenz_rk4 = _impl.lorenz_rk4
standard_good_rows = _impl.standard_good_rows
row_args_extremes = _impl.row_args_extremes
# The rollout is the one kernel where the fallback wins: NumPy's
# vectorized tanh outruns the scalar libm loop (see benchmarks/).
surrogate_rollout = _ref.surrogate_rollout

__all__ = [
    "HAVE_COMPILED_CORE",
    "lorenz_rk4",
    "standard_good_rows",
    "row_args_extremes",
    "surrogate_rollout",
]
