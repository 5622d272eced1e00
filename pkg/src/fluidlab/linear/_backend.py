"""Selects the SGD epoch kernel at import time.

FLUIDLAB_SGD_BACKEND=auto|cython|python overrides the default (auto).
`auto` prefers the compiled kernel and silently falls back to the pure
NumPy one when the extension is unavailable.
"""

from __future__ import annotations

import os

from . import _sgd_py

CHOICES = ("auto", "cython", "python")


def _load(choice: str):
    if choice not in CHOICES:
        raise ValueError(f"backend must be one of {CHOICES}, got {choice!r}")
    if choice in ("auto", "cython"):
        try:
            from . import _sgd_kernel

            return "cython", _sgd_kernel.run_epoch
        except ImportError:
            if choice == "cython":
                raise RuntimeError(
                    "compiled SGD kernel requested but not built; "
                    "reinstall the package or set FLUIDLAB_SGD_BACKEND=python"
                ) from None
    return "python", _sgd_py.run_epoch


def resolve(choice: str | None = None):
    """(name, run_epoch) for an explicit choice or the environment default."""
    if choice is None:
        choice = os.environ.get("FLUIDLAB_SGD_BACKEND", "auto").lower()
    return _load(choice)


def available_backends() -> dict:
    """Importable kernels by name, for benchmarks and equivalence tests."""
    out = {"python": _sgd_py.run_epoch}
    try:
        from . import _sgd_kernel

        out["cython"] = _sgd_kernel.run_epoch
    except ImportError:
        pass
    return out


DEFAULT_NAME, DEFAULT_KERNEL = resolve()
