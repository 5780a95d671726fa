"""Backend selection for the propagation and gradient hot loops.

The numba backend is the default whenever numba imports; set the environment
variable ``QNNSIM_NO_NUMBA`` to any non-empty value to force the pure-numpy
fallback.  Both backends expose identical functions with identical numerics
(`tests/test_kernels.py` pins the agreement); `benchmarks/bench_kernels.py`
compares their speed.
"""

from __future__ import annotations

import os

from . import numpy_backend

if os.environ.get("QNNSIM_NO_NUMBA", ""):
    _active = numpy_backend
else:
    try:
        from . import numba_backend as _active
    except ImportError:
        _active = numpy_backend


def backend_name() -> str:
    """Name of the active backend: 'numba' or 'numpy'."""
    return _active.NAME


def get_backend(name: str | None = None):
    """Backend module by name; None returns the active one."""
    if name is None:
        return _active
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        from . import numba_backend
        return numba_backend
    raise ValueError(f"unknown backend {name!r}; expected 'numpy' or 'numba'")


def propagate_kernel(*args):
    return _active.propagate_kernel(*args)


def loss_grad_kernel(*args):
    return _active.loss_grad_kernel(*args)
