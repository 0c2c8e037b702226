import math

import numpy as np
import pytest

from hyperturb.errors import DomainError
from hyperturb.grid import Grid, divergence, gradient, spectral_derivative, strain_6


@pytest.mark.parametrize("shape", [(3,), (8, 2), (4, 4, 4)])
def test_invalid_shapes(shape):
    with pytest.raises(DomainError):
        Grid(shape)


def test_geometry():
    g = Grid((8, 16), length=2.0)
    assert g.dim == 2 and g.dx == (0.25, 0.125)
    assert g.cell_volume == 0.25 * 0.125 and g.n_cells == 128
    x, y = g.coordinates()
    assert x[0, 0] == 0.125 and y[0, 1] == 0.1875


def test_spectral_derivative_exact_for_resolved_modes():
    g = Grid((32, 16))
    x, y = g.coordinates()
    f = np.sin(3 * x) * np.cos(2 * y)
    np.testing.assert_allclose(spectral_derivative(f, g, 0), 3 * np.cos(3 * x) * np.cos(2 * y),
                               atol=1e-12)
    np.testing.assert_allclose(spectral_derivative(f, g, 1), -2 * np.sin(3 * x) * np.sin(2 * y),
                               atol=1e-12)


def test_out_of_plane_derivative_is_zero():
    g = Grid((16,))
    assert np.all(spectral_derivative(np.sin(g.coordinates()[0]), g, 1) == 0)


def test_gradient_divergence_and_strain():
    g = Grid((16, 16))
    x, y = g.coordinates()
    u = np.zeros(g.shape + (3,))
    u[..., 0] = np.sin(y)
    assert np.max(np.abs(divergence(u, g))) < 1e-13
    S = strain_6(u, g)
    np.testing.assert_allclose(S[..., 1], 0.5 * np.cos(y), atol=1e-13)
    assert np.max(np.abs(np.delete(S, 1, axis=-1))) < 1e-13
    G = gradient(np.cos(x), g)
    np.testing.assert_allclose(G[..., 0], -np.sin(x), atol=1e-13)
    assert np.all(G[..., 2] == 0)


def test_nyquist_mode_is_dropped():
    g = Grid((8,))
    x = g.coordinates()[0]
    f = np.cos(4 * x + math.pi / 4)
    assert np.max(np.abs(spectral_derivative(f, g, 0))) < 1e-13
