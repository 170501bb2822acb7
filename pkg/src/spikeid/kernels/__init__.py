"""Kernel backend selection.

The SNN time-stepping kernels exist twice: numba-compiled
(``numba_impl``) and pure numpy (``numpy_impl``). The active backend is
chosen once at import from the SPIKEID_BACKEND environment variable
("numba" or "numpy"); default is numba when importable. The float paths
of the two backends agree to float accumulation order; the fixed-point
paths are bit-identical.
"""

import os

_ENV = "SPIKEID_BACKEND"


def _select():
    choice = os.environ.get(_ENV, "").strip().lower()
    if choice == "numpy":
        from . import numpy_impl
        return numpy_impl, "numpy"
    if choice == "numba":
        from . import numba_impl
        return numba_impl, "numba"
    if choice:
        raise ValueError(f"unknown {_ENV}={choice!r}; use 'numba' or 'numpy'")
    try:
        from . import numba_impl
        return numba_impl, "numba"
    except ImportError:
        from . import numpy_impl
        return numpy_impl, "numpy"


impl, BACKEND = _select()

conv_layer_run = impl.conv_layer_run
dense_layer_run = impl.dense_layer_run
conv_layer_run_fixed = impl.conv_layer_run_fixed
dense_layer_run_fixed = impl.dense_layer_run_fixed

__all__ = [
    "BACKEND",
    "impl",
    "conv_layer_run",
    "dense_layer_run",
    "conv_layer_run_fixed",
    "dense_layer_run_fixed",
]
