"""Select the integration kernel at import time.

The compiled ``_dopri_ext`` is preferred; set ``WEAKSYNC_PURE_PYTHON=1`` to
force the numpy implementation.
"""
import os

from . import _dopri_py

AVAILABLE = {"python": _dopri_py}

try:
    from . import _dopri_ext
except ImportError:  # extension not built
    _dopri_ext = None
else:
    AVAILABLE["cython"] = _dopri_ext

if os.environ.get("WEAKSYNC_PURE_PYTHON") or _dopri_ext is None:
    backend = _dopri_py
else:
    backend = _dopri_ext

BACKEND = backend.BACKEND


def get(name: str | None = None):
    if name is None:
        return backend
    try:
        return AVAILABLE[name]
    except KeyError:
        raise ValueError(f"integration backend {name!r} is not available (have {sorted(AVAILABLE)})") from None
