"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
NumPy lane is used. Set ``XAICROSS_PURE=1`` to force the fallback (useful for
benchmarks and fallback testing). Both lanes expose the same functions with
identical semantics.
"""

import os

from . import _pure

if os.environ.get("XAICROSS_PURE", "0") not in ("", "0"):
    _active = _pure
else:
    try:
        from . import _core as _active
    except ImportError:
        _active = _pure

BACKEND = _active.NAME

sigmoid = _active.sigmoid
predict_raw = _active.predict_raw
coalition_values = _active.coalition_values
permutation_contributions = _active.permutation_contributions


def get(name):
    """Return a specific lane module: 'pure', 'compiled', or 'active'."""
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _core
        return _core
    if name == "active":
        return _active
    raise ValueError(f"unknown kernel backend {name!r}")
