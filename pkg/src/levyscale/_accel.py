"""Backend selection for the vectorised exponent kernels.

The compiled extension ``levyscale._kernels`` is used when it was built and
imports cleanly; otherwise the numpy implementation in
``levyscale._kernels_py`` takes over.  Setting the environment variable
``LEVYSCALE_FORCE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"

if os.environ.get("LEVYSCALE_FORCE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"


def psi_grid(model, z):
    """``psi`` on a complex array (double precision)."""
    return _kernels_py.psi_grid(model, z, _impl)


def fq_grid(model, q, phi, a1, z):
    """``1/(a1 (z - phi)) - 1/(psi(z) - q)`` on a complex array."""
    return _kernels_py.fq_grid(model, q, phi, a1, z, _impl)
