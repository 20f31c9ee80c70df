"""Kernel backend selection: compiled extension when available, NumPy otherwise.

Set ``RDCLAB_PURE_PYTHON=1`` to force the NumPy fallback (used by the parity
tests and the backend benchmark).
"""

from __future__ import annotations

import os

from . import _pure

__all__ = [
    "BACKEND",
    "mutual_information_bits",
    "constraint_values_raw",
    "descent_run",
]


def _select():
    if os.environ.get("RDCLAB_PURE_PYTHON") == "1":
        return "numpy", _pure
    try:
        from rdclab import _speedups

        return "compiled", _speedups
    except ImportError:
        return "numpy", _pure


BACKEND, _impl = _select()

mutual_information_bits = _impl.mutual_information_bits
constraint_values_raw = _impl.constraint_values_raw
descent_run = _impl.descent_run
