"""Kernel backend selection.

The compiled Cython extension is preferred; the pure-numpy implementation
is the fallback. Set DOUBLON_ED_BACKEND=python|cython to force a choice
(forcing cython raises if the extension is missing).
"""

from __future__ import annotations

import os

from .errors import ConfigError
from . import _core_py


def load_backend(name: str | None = None):
    """Return the kernel module for the requested backend."""
    if name in (None, ""):
        try:
            from . import _core  # noqa: PLC0415

            return _core
        except ImportError:
            return _core_py
    if name == "python":
        return _core_py
    if name == "cython":
        try:
            from . import _core  # noqa: PLC0415

            return _core
        except ImportError as exc:
            raise ConfigError("compiled kernels requested but not built") from exc
    raise ConfigError(f"unknown kernel backend {name!r}")


impl = load_backend(os.environ.get("DOUBLON_ED_BACKEND"))
BACKEND = impl.BACKEND
