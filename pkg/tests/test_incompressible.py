import math

import numpy as np
import pytest

from hyperturb.errors import ConfigError
from hyperturb.grid import Grid, gradient
from hyperturb.incompressible import (IncompressibleState, k_rhs_prandtl, limit_pressure,
                                      limit_rhs, max_divergence, project_divfree, run_limit,
                                      well_prepared_initial_data)
from hyperturb.model import K, PHI, SIG, VEL, Y, ModelParams


def smooth_random_field(rng, grid, ncomp=3, modes=3):
    x, y = grid.coordinates()
    out = np.zeros(grid.shape + (ncomp,))
    for c in range(ncomp):
        for _ in range(modes):
            a, b = rng.integers(0, 4, 2)
            out[..., c] += rng.normal() * np.cos(a * x + b * y + rng.uniform(0, 2 * np.pi))
    return out


def test_projection_identity_on_divergence_free():
    g = Grid((32, 32))
    x, y = g.coordinates()
    u = np.zeros(g.shape + (3,))
    u[..., 0] = np.sin(x) * np.cos(y)
    u[..., 1] = -np.cos(x) * np.sin(y)
    np.testing.assert_allclose(project_divfree(u, g), u, atol=1e-12)


def test_projection_kills_gradients():
    g = Grid((32, 16))
    x, y = g.coordinates()
    u = gradient(np.sin(2 * x) * np.cos(y) + np.cos(3 * y), g)
    assert np.max(np.abs(project_divfree(u, g))) < 1e-12


def test_projection_idempotent_and_returns_potential(rng):
    g = Grid((24, 24))
    u = smooth_random_field(rng, g)
    once, pot = project_divfree(u, g, return_pressure=True)
    np.testing.assert_allclose(project_divfree(once, g), once, atol=1e-13)
    assert max_divergence(once, g) < 1e-12
    assert abs(pot.mean()) < 1e-14
    np.testing.assert_allclose(once[..., :2] + gradient(pot, g)[..., :2], u[..., :2], atol=1e-12)


def test_limit_rhs_uniform_k(params):
    g = Grid((16, 16))
    s = IncompressibleState(np.zeros(g.shape + (3,)), np.full(g.shape, 1.3))
    du, dk, pi = limit_rhs(s, g, params)
    assert np.max(np.abs(du)) < 1e-14
    np.testing.assert_allclose(dk, -params.c_d * 1.3**1.5 / params.l, rtol=1e-13)
    assert np.max(np.abs(pi)) < 1e-14


def test_limit_rhs_diffusion_of_cosine_bump(params):
    g = Grid((64,))
    x = g.coordinates()[0]
    k0, d = 1.0, 1e-4
    k = k0 + d * np.cos(x)
    s = IncompressibleState(np.zeros(g.shape + (3,)), k)
    _, dk, _ = limit_rhs(s, g, params)
    # hand derivatives of k = k0 + d cos x
    kx, kxx = -d * np.sin(x), -d * np.cos(x)
    nu_t = params.l * np.sqrt(k)
    dnu_t = params.l * kx / (2 * np.sqrt(k))
    expected = (params.nu + nu_t) * kxx + dnu_t * kx - params.c_d * k**1.5 / params.l
    np.testing.assert_allclose(dk, expected, rtol=1e-11, atol=1e-14)


def test_dual_assembly_of_k_equation(rng):
    p = ModelParams(alpha2=2.25, beta=2.25, xi=1.5, alpha3=0.7)
    g = Grid((24, 24))
    for _ in range(50):
        u = project_divfree(smooth_random_field(rng, g), g)
        k = 1.0 + 0.3 * np.tanh(smooth_random_field(rng, g, 1)[..., 0])
        s = IncompressibleState(u, k)
        _, dk_relax, _ = limit_rhs(s, g, p, form="relaxation")
        _, dk_prandtl, _ = limit_rhs(s, g, p, form="prandtl")
        scale = np.max(np.abs(dk_prandtl))
        assert np.max(np.abs(dk_relax - dk_prandtl)) <= 1e-12 * max(scale, 1.0)
        np.testing.assert_array_equal(dk_prandtl, k_rhs_prandtl(u, k, g, p))


def test_incompatible_parameters_rejected():
    g = Grid((8, 8))
    s = IncompressibleState(np.zeros(g.shape + (3,)), np.ones(g.shape))
    with pytest.raises(ConfigError):
        limit_rhs(s, g, ModelParams(beta=2.0))
    # the pressure itself does not need compatibility
    assert limit_pressure(s, g, ModelParams(beta=2.0)).shape == g.shape


def test_uniform_k_decay_matches_closed_form():
    p = ModelParams(c_d=1.0, l=1.0)
    g = Grid((8, 8))
    s = IncompressibleState(np.zeros(g.shape + (3,)), np.ones(g.shape))
    traj = run_limit(s, g, p, 1.0, dt_max=1e-2)
    exact = 1.0 / (1.0 + 0.5) ** 2
    assert traj.times[-1] == 1.0
    np.testing.assert_allclose(traj.final.k, exact, rtol=1e-6)


def test_taylor_green_without_k():
    g = Grid((16, 16))
    x, y = g.coordinates()
    u = np.zeros(g.shape + (3,))
    u[..., 0] = np.sin(x) * np.cos(y)
    u[..., 1] = -np.cos(x) * np.sin(y)
    traj = run_limit(IncompressibleState(u, np.zeros(g.shape)), g, ModelParams(), 0.5,
                     record_every=5)
    assert all(np.all(s.k == 0) for s in traj.states)
    energy = [0.5 * np.sum(s.u**2) for s in traj.states]
    assert all(b <= a for a, b in zip(energy, energy[1:]))


def test_single_mode_viscous_decay():
    # with k = 0 the stress is -nu S, whose divergence is (nu / 2) times the
    # Laplacian, so a unit-wavenumber shear mode decays like exp(-nu t / 2)
    p = ModelParams(nu=0.05)
    g = Grid((16, 16))
    x, y = g.coordinates()
    u = np.zeros(g.shape + (3,))
    u[..., 0] = np.sin(y)
    traj = run_limit(IncompressibleState(u, np.zeros(g.shape)), g, p, 1.0, dt_max=1e-2)
    np.testing.assert_allclose(traj.final.u[..., 0], np.exp(-0.5 * p.nu) * np.sin(y), atol=1e-9)


def test_well_prepared_trivial_state(params):
    g = Grid((8, 8))
    s = IncompressibleState(np.zeros(g.shape + (3,)), np.full(g.shape, 0.4), np.zeros(g.shape))
    U = well_prepared_initial_data(s, g, params)
    assert np.all(U[..., PHI] == 0) and np.all(U[..., SIG] == 0) and np.all(U[..., Y] == 0)
    assert np.all(U[..., K] == 0.4)


def test_well_prepared_shear_profile(params):
    g = Grid((32, 32))
    x, y = g.coordinates()
    u = np.zeros(g.shape + (3,))
    u[..., 0] = np.sin(y)
    k0 = 0.8
    s = IncompressibleState(u, np.full(g.shape, k0))
    U = well_prepared_initial_data(s, g, params, eps=0.04)
    tau = params.l * math.sqrt(k0) + params.nu
    np.testing.assert_allclose(U[..., 5], -(0.2 / 2) * tau * np.cos(y), atol=1e-14)
    assert np.max(np.abs(np.delete(U[..., SIG], 1, axis=-1))) < 1e-14
    np.testing.assert_array_equal(U[..., VEL], u)


def test_well_prepared_sigma_scales_like_sqrt_eps(params, rng):
    g = Grid((16, 16))
    u = project_divfree(smooth_random_field(rng, g), g)
    s = IncompressibleState(u, np.ones(g.shape))
    a = well_prepared_initial_data(s, g, params, eps=0.1)[..., SIG]
    b = well_prepared_initial_data(s, g, params, eps=0.2)[..., SIG]
    np.testing.assert_allclose(b, math.sqrt(2) * a, rtol=1e-14, atol=1e-16)


def test_pressure_balances_momentum(params):
    # pi from the projection makes the forcing divergence-free
    g = Grid((32, 32))
    x, y = g.coordinates()
    u = np.zeros(g.shape + (3,))
    u[..., 0] = np.sin(x) * np.cos(y)
    u[..., 1] = -np.cos(x) * np.sin(y)
    s = IncompressibleState(u, np.ones(g.shape))
    du, _, pi = limit_rhs(s, g, params)
    assert max_divergence(du, g) < 1e-12
    # inviscid Taylor-Green pressure is (cos 2x + cos 2y) / 4
    np.testing.assert_allclose(pi, 0.25 * (np.cos(2 * x) + np.cos(2 * y)), atol=1e-12)
