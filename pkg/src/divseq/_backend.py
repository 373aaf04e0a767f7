"""Search-kernel backend selection.

The compiled kernel is picked up automatically when its extension module
imported cleanly; otherwise the pure NumPy implementation is used. Set
``DIVSEQ_BACKEND=python`` to force the fallback or ``DIVSEQ_BACKEND=native``
to require the extension (raising if it is missing). Both backends produce
bit-identical decodes; they differ only in speed.
"""

from __future__ import annotations

import os

try:
    from . import _kernels
except ImportError:
    _kernels = None


def native_available() -> bool:
    """True when the compiled extension imported successfully."""
    return _kernels is not None


def native_enabled() -> bool:
    """Whether decodes should run on the compiled kernel right now."""
    forced = os.environ.get("DIVSEQ_BACKEND", "").strip().lower()
    if forced in ("", "auto"):
        return _kernels is not None
    if forced == "python":
        return False
    if forced == "native":
        if _kernels is None:
            raise RuntimeError(
                "DIVSEQ_BACKEND=native but the compiled kernel is not installed"
            )
        return True
    raise ValueError(f"DIVSEQ_BACKEND must be native, python, or auto; got {forced!r}")


def active_backend() -> str:
    """Name of the backend decodes will use: 'native' or 'python'."""
    return "native" if native_enabled() else "python"


def kernels():
    return _kernels
