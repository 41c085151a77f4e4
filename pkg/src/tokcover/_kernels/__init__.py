"""Kernel backend selection: compiled extension if available, NumPy otherwise.

Set TOKCOVER_FORCE_PURE=1 to force the fallback (used by the parity tests
and the backend benchmark).
"""

import os

from . import pure

try:
    from . import _fast
except ImportError:  # extension not built
    _fast = None

if os.environ.get("TOKCOVER_FORCE_PURE"):
    active = pure
elif _fast is not None:
    active = _fast
else:
    active = pure

BACKEND = active.NAME


def available_backends():
    names = ["pure"]
    if _fast is not None:
        names.insert(0, "fast")
    return names


def get_backend(name=None):
    if name is None:
        return active
    if name == "pure":
        return pure
    if name == "fast":
        if _fast is None:
            raise ValueError("compiled backend is not available")
        return _fast
    raise ValueError(f"unknown backend {name!r}")
