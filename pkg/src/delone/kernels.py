"""Backend selection for the hot kernels.

The compiled extension is used when importable; setting the environment
variable ``DELONE_PURE_PYTHON=1`` forces the numpy fallback. ``BACKEND``
names the active implementation.
"""

import os

from . import _pykernels

if os.environ.get("DELONE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

nn_query = _impl.nn_query
ball_query = _impl.ball_query
mis_size = _impl.mis_size


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    found = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
