"""Select the kernel implementation at import time.

The compiled ``_core`` extension is used when it was built; otherwise
the pure-Python module with the same functions is used. Setting
``CGENSEMBLE_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _core_py

if os.environ.get("CGENSEMBLE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _core_py
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _core_py

BACKEND = "python" if _impl is _core_py else "cython"

search = _impl.search
dp_topn = _impl.dp_topn
cover_swap = _impl.cover_swap


def backends() -> dict:
    """All importable implementations keyed by name (used by tests and benchmarks)."""
    found = {"python": _core_py}
    try:
        from . import _core

        found["cython"] = _core
    except ImportError:
        pass
    return found
