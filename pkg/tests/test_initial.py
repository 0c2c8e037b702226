import numpy as np
import pytest

from hyperturb.errors import ConfigError
from hyperturb.grid import Grid, divergence
from hyperturb.initial import TAGS, initial_field, limit_state
from hyperturb.model import NVAR, PHI, ModelParams, check_rescaled


@pytest.mark.parametrize("tag", TAGS)
def test_fields_are_admissible(tag, params):
    g = Grid((16, 16))
    U = initial_field(tag, g, params)
    assert U.shape == g.shape + (NVAR,)
    check_rescaled(U, params)


def test_rest_is_zero(params):
    assert np.all(initial_field("rest", Grid((8,)), params) == 0)


def test_pulse_peaks_mid_domain(params):
    g = Grid((64,))
    U = initial_field("acoustic-pulse", g, params, amplitude=0.3)
    x = g.coordinates()[0]
    assert abs(x[np.argmax(U[:, PHI])] - np.pi) <= g.dx[0]
    assert U[:, PHI].max() == pytest.approx(0.3, rel=0.05)


@pytest.mark.parametrize("tag, shape", [("shear-layer", (32,)), ("shear-layer", (16, 16)),
                                        ("taylor-green", (16, 16))])
def test_limit_states_divergence_free(tag, shape, params):
    g = Grid(shape)
    s = limit_state(tag, g, params)
    assert np.max(np.abs(divergence(s.u, g))) < 1e-12
    assert abs(s.pi.mean()) < 1e-14


def test_limit_state_errors(params):
    with pytest.raises(ConfigError):
        limit_state("taylor-green", Grid((16,)), params)
    with pytest.raises(ConfigError):
        limit_state("rest", Grid((16,)), params)
    with pytest.raises(ConfigError):
        initial_field("vortex", Grid((16,)), params)


def test_amplitude_scales_velocity():
    g = Grid((16, 16))
    p = ModelParams()
    a = limit_state("taylor-green", g, p, 1.0)
    b = limit_state("taylor-green", g, p, 2.0)
    np.testing.assert_allclose(b.u, 2 * a.u)
    np.testing.assert_allclose(b.pi, 4 * a.pi, atol=1e-14)
