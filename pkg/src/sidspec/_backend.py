"""Kernel backend selection.

The compiled extension is preferred; the pure-numpy module is the
fallback.  ``SIDSPEC_FORCE_PYTHON=1`` forces the fallback (used by the
benchmark to compare both).  Both modules expose the same callables.
"""

from __future__ import annotations

import os

from . import _pykernels

_FORCE_PY = os.environ.get("SIDSPEC_FORCE_PYTHON", "") not in ("", "0")

if not _FORCE_PY:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
else:
    _compiled = None

_active = _compiled if _compiled is not None else _pykernels

KERNEL_NAMES = (
    "mgs_qr", "givens_qr", "householder_qr", "back_substitution",
    "qt_dot", "residual_sumsq", "psd_eval", "trig_eval_many",
)


def backend_name() -> str:
    """Name of the kernel backend in use: 'cython' or 'python'."""
    return _active.BACKEND_NAME


def get_backend(name: str = "auto"):
    """Return a kernel module by name ('auto', 'cython', 'python')."""
    if name == "auto":
        return _active
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


kernels = _active
