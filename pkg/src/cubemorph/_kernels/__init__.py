"""Kernel backend selection.

Two interchangeable implementations of the engine hot loop exist: a
compiled Cython extension (``_fast``) and a pure-Python fallback
(``pure``). They produce bit-identical traces from the same seed. The
compiled backend is preferred when the extension built; set the
environment variable ``CUBEMORPH_KERNEL`` to ``pure`` or ``fast`` to
force a choice.
"""

from __future__ import annotations

import os

from . import pure

try:
    from . import _fast
except ImportError:
    _fast = None


def available_backends():
    names = ["pure"]
    if _fast is not None:
        names.append("fast")
    return tuple(names)


def get_backend(name: str | None = None):
    """Resolve a kernel backend module by name, env var, or default."""
    if name is None:
        name = os.environ.get("CUBEMORPH_KERNEL", "").strip().lower() or None
    if name is None:
        return _fast if _fast is not None else pure
    if name == "pure":
        return pure
    if name == "fast":
        if _fast is None:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return _fast
    raise ValueError(f"unknown kernel backend {name!r}")
