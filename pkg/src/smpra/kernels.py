"""Message-update kernels, compiled when available.

The Cython extension ``_ckernels`` is used if it imports; otherwise the numpy
implementation in ``_pykernels`` is used.  Set ``SMPRA_PURE_PYTHON=1`` to force
the numpy backend.  ``BACKEND`` names the active one.
"""
import os

import numpy as np

from . import _pykernels

_ckernels = None
if os.environ.get("SMPRA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None

BACKEND = "cython" if _ckernels is not None else "numpy"


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"cython"``/``"numpy"``), default active."""
    if name is None:
        name = BACKEND
    if name == "numpy":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def _c(a):
    return np.ascontiguousarray(a, dtype=float)


def sn_update(H, Y, l_vs, sigma_sq, clamp, backend=None):
    return get_backend(backend).sn_update(_c(H), _c(Y), _c(l_vs), float(sigma_sq), float(clamp))


def cn_update(l_vc, p_a, clamp, backend=None):
    return get_backend(backend).cn_update(_c(l_vc), float(p_a), float(clamp))


def vn_update(l_s, l_c, prior, clamp, backend=None):
    return get_backend(backend).vn_update(_c(l_s), _c(l_c), float(prior), float(clamp))


def output_llrs(l_s, l_c, prior, backend=None):
    return get_backend(backend).output_llrs(_c(l_s), _c(l_c), float(prior))
