"""Isothermal equation of state ``p = c**2 * rho``.

All functions accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class EosParams:
    c: float = 1.0
    rho0: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError("c must be > 0")
        if not self.rho0 > 0:
            raise DomainError("rho0 must be > 0")

    @property
    def p0(self) -> float:
        return self.c**2 * self.rho0


def _require_positive(x, message):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError(message)
    return x


def pressure(rho, eos: EosParams = EosParams()):
    rho = _require_positive(rho, "nonpositive density")
    return eos.c**2 * rho


def density_from_pressure(p, eos: EosParams = EosParams()):
    p = _require_positive(p, "nonpositive pressure")
    return p / eos.c**2


def q_of_p(p, eos: EosParams = EosParams()):
    """Compressibility coefficient ``1 / (rho(p) p'(rho(p)))``, i.e. ``1/p`` here."""
    p = _require_positive(p, "nonpositive pressure")
    return 1.0 / (density_from_pressure(p, eos) * eos.c**2)


def s_eq(v, eos: EosParams = EosParams()):
    """Equilibrium specific entropy ``c**2 ln v``; ``ds/dv`` equals the pressure."""
    v = _require_positive(v, "nonpositive specific volume")
    return eos.c**2 * np.log(v)
