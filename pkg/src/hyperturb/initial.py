"""Named initial conditions for the rescaled system.

Flow-carrying tags (``shear-layer``, ``taylor-green``) start from a
divergence-free limit state and are lifted to the compressible system as
well-prepared data, so they are the natural inputs of the low-Mach study.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import Grid
from .incompressible import IncompressibleState, limit_pressure, well_prepared_initial_data
from .model import NVAR, PHI, ModelParams

TAGS = ("rest", "acoustic-pulse", "shear-layer", "taylor-green")


def _unit_coords(grid):
    """Cell centres mapped to ``[0, 2 pi)``."""
    return [2.0 * np.pi / grid.length * x for x in grid.coordinates()]


def limit_state(tag, grid: Grid, params: ModelParams, amplitude=1.0):
    """Divergence-free ``(u, k, pi)`` for the flow-carrying tags."""
    X = _unit_coords(grid)
    u = np.zeros(grid.shape + (3,))
    if tag == "shear-layer":
        if grid.dim == 1:
            u[..., 1] = amplitude * np.sin(X[0])
            k = 1.0 + 0.2 * np.cos(X[0])
        else:
            x, y = X
            u[..., 0] = amplitude * np.sin(y)
            u[..., 1] = 0.5 * amplitude * np.sin(x)
            k = 1.0 + 0.2 * np.cos(x) * np.cos(y)
    elif tag == "taylor-green":
        if grid.dim != 2:
            raise ConfigError("taylor-green needs a 2D grid")
        x, y = X
        u[..., 0] = amplitude * np.sin(x) * np.cos(y)
        u[..., 1] = -amplitude * np.cos(x) * np.sin(y)
        k = np.ones(grid.shape)
    else:
        raise ConfigError(f"{tag!r} has no incompressible counterpart")
    state = IncompressibleState(u, k)
    state.pi = limit_pressure(state, grid, params)
    return state


def initial_field(tag, grid: Grid, params: ModelParams, amplitude=1.0):
    """Rescaled ``grid.shape + (14,)`` field for a named initial condition.

    ``rest`` is the zero state (an exact equilibrium). ``acoustic-pulse``
    is a Gaussian in ``phi`` along x of width ``length / 20`` on a fluid at
    rest with ``k = 0``.
    """
    if tag == "rest":
        return np.zeros(grid.shape + (NVAR,))
    if tag == "acoustic-pulse":
        U = np.zeros(grid.shape + (NVAR,))
        x = grid.coordinates()[0]
        w = grid.length / 20.0
        U[..., PHI] = amplitude * np.exp(-((x - 0.5 * grid.length) / w) ** 2)
        return U
    if tag in ("shear-layer", "taylor-green"):
        return well_prepared_initial_data(limit_state(tag, grid, params, amplitude), grid, params)
    raise ConfigError(f"unknown initial condition {tag!r}; expected one of {TAGS}")
