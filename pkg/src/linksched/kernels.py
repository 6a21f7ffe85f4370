"""Backend selection for the hot per-slot loops.

The compiled extension (linksched._core, Cython) and the pure-Python driver
in linksched.engine produce bit-identical runs: they consume the same
pre-drawn environment streams and reduce floats in the same order.  The
compiled core is picked automatically when it imported cleanly; set
LINKSCHED_PURE=1 to force the reference path.
"""

from __future__ import annotations

import os

try:
    from . import _core  # noqa: F401
    _HAVE_CORE = True
except ImportError:
    _core = None
    _HAVE_CORE = False

__all__ = ["compiled_available", "select_backend", "default_backend"]


def _forced_pure() -> bool:
    return os.environ.get("LINKSCHED_PURE", "") not in ("", "0")


def compiled_available() -> bool:
    return _HAVE_CORE and not _forced_pure()


def default_backend() -> str:
    return "compiled" if compiled_available() else "pure"


def select_backend(requested: str, have_table: bool) -> str:
    """Resolve a backend request against what this install supports.

    The compiled core needs the enumerated activation table; runs on graphs
    beyond the enumeration guard always take the pure path.
    """
    if requested not in ("auto", "pure", "compiled"):
        raise ValueError(f"unknown backend {requested!r}")
    if requested == "pure":
        return "pure"
    if requested == "compiled":
        if not _HAVE_CORE:
            raise RuntimeError("compiled core is not available in this install")
        if _forced_pure():
            raise RuntimeError("LINKSCHED_PURE is set; compiled backend disabled")
        if not have_table:
            raise RuntimeError("compiled backend needs an enumerable "
                               "activation set")
        return "compiled"
    return "compiled" if (compiled_available() and have_table) else "pure"
