"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation. Both expose ``wave_speed``, ``hyperbolic_rhs`` and
``relax`` with identical signatures.
"""
from __future__ import annotations

import math

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = {"numpy": _kernels_py}
if _kernels_c is not None:
    BACKENDS["cython"] = _kernels_c

_active = _kernels_c if _kernels_c is not None else _kernels_py


def available():
    return tuple(BACKENDS)


def get(name=None):
    """Backend module by name, or the active one."""
    if name is None:
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; "
                         f"have {available()}") from None


def use(name):
    """Switch the process-wide default backend; returns the previous name."""
    global _active
    prev = _active.NAME
    _active = get(name)
    return prev


def active_name():
    return _active.NAME


def pack_consts(params):
    if not math.isclose(params.eos.c**2 * params.eos.rho0, params.eos.p0):
        raise ValueError("inconsistent EOS constants")
    return (float(params.eps), float(params.alpha1), float(params.alpha2),
            float(params.alpha3), float(params.xi), float(params.beta),
            float(params.c_d), float(params.l), float(params.nu),
            float(params.eos.p0), float(params.eos.c**2))
