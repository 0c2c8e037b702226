"""Periodic structured grids and spectral derivative helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Grid:
    """Periodic grid on ``[0, length)^dim``; fields are indexed ``[i, j]`` with x first.

    Cell centres sit at ``(i + 1/2) * dx``.
    """

    shape: tuple
    length: float = 2.0 * math.pi

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        object.__setattr__(self, "shape", shape)
        if len(shape) not in (1, 2):
            raise DomainError("dim must be 1 or 2")
        if any(n < 4 for n in shape):
            raise DomainError("n_cells must be >= 4 per axis")
        if not self.length > 0:
            raise DomainError("length must be > 0")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def dx(self) -> tuple:
        return tuple(self.length / n for n in self.shape)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.dx)

    @property
    def n_cells(self) -> int:
        return math.prod(self.shape)

    def coordinates(self):
        """Cell-centre coordinate arrays, one per axis, each of ``self.shape``."""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.shape, self.dx)]
        return np.meshgrid(*axes, indexing="ij")

    def wavenumbers(self):
        """Angular wavenumbers per axis with the Nyquist mode zeroed."""
        out = []
        for n, h in zip(self.shape, self.dx):
            kk = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
            if n % 2 == 0:
                kk[n // 2] = 0.0
            out.append(kk)
        return np.meshgrid(*out, indexing="ij")


def spectral_derivative(f, grid: Grid, axis: int):
    """``d f / d x_axis`` of a real periodic field (trailing component axes allowed)."""
    if axis >= grid.dim:
        return np.zeros_like(f)
    kk = grid.wavenumbers()[axis]
    spatial = tuple(range(grid.dim))
    fh = np.fft.fftn(f, axes=spatial)
    kk = kk.reshape(kk.shape + (1,) * (np.ndim(f) - grid.dim))
    return np.real(np.fft.ifftn(1j * kk * fh, axes=spatial))


def gradient(f, grid: Grid):
    """Gradient as a trailing 3-vector (zero out-of-plane components)."""
    g = np.zeros(np.shape(f) + (3,))
    for a in range(grid.dim):
        g[..., a] = spectral_derivative(f, grid, a)
    return g


def velocity_gradient(u, grid: Grid):
    """``G[..., i, j] = d u_i / d x_j`` for a 3-vector field ``u``."""
    G = np.zeros(np.shape(u) + (3,))
    for a in range(grid.dim):
        G[..., :, a] = spectral_derivative(u, grid, a)
    return G


def divergence(v, grid: Grid):
    return sum(spectral_derivative(v[..., a], grid, a) for a in range(grid.dim))


def strain_6(u, grid: Grid):
    """Symmetric part ``(grad u + grad u^T) / 2`` packed as a 6-vector."""
    G = velocity_gradient(u, grid)
    S = 0.5 * (G + np.swapaxes(G, -1, -2))
    return np.stack([S[..., 0, 0], S[..., 0, 1], S[..., 0, 2],
                     S[..., 1, 1], S[..., 1, 2], S[..., 2, 2]], axis=-1)


def sym_divergence(s6, grid: Grid):
    """Row divergence ``(div s)_i = d_j s_ij`` of a symmetric 6-vector field."""
    from .model import SYM_INDEX
    out = np.zeros(np.shape(s6)[:-1] + (3,))
    for i in range(3):
        for a in range(grid.dim):
            out[..., i] += spectral_derivative(s6[..., SYM_INDEX[i, a]], grid, a)
    return out
