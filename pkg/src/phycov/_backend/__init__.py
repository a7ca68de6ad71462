"""Kernel backend selection.

The compiled Cython core is used when importable; the pure-Python module is
the fallback with identical (bit-for-bit) semantics. Set ``PHYCOV_BACKEND=python``
to force the fallback, e.g. for benchmarking.
"""

import os

from . import pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

if _ckernels is not None and os.environ.get("PHYCOV_BACKEND", "").lower() != "python":
    kernels = _ckernels
else:
    kernels = pykernels

BACKEND = kernels.NAME


def available_backends():
    """Mapping of backend name -> kernel module for all importable backends."""
    out = {"python": pykernels}
    if _ckernels is not None:
        out["cython"] = _ckernels
    return out
