import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperturb.diagnostics import (CHECKS, ConvergenceReport, convergence_sweep, discrete_norm,
                                   entropy_audit, fit_order, maxwell_residual,
                                   relax_on_frozen_flow, structural_sweep, theorem_error)
from hyperturb.errors import ConfigError, UsageError
from hyperturb.grid import Grid
from hyperturb.incompressible import IncompressibleState, well_prepared_initial_data
from hyperturb.initial import initial_field, limit_state
from hyperturb.model import K, SIG, VEL, ModelParams


# -- norms ---------------------------------------------------------------------

def test_norm_of_zero_field():
    g = Grid((8, 8))
    for m in (0, 1, 2):
        assert discrete_norm(np.zeros(g.shape), g, m) == 0.0


def test_norm_of_constant_on_unit_torus():
    g = Grid((8, 8), length=1.0)
    f = np.full(g.shape, -3.0)
    assert discrete_norm(f, g, 0) == pytest.approx(3.0, rel=1e-15)
    assert discrete_norm(f, g, 1) == pytest.approx(3.0, rel=1e-15)


@pytest.mark.parametrize("n", [8, 16, 64])
def test_norm_discrete_symbol_of_sine(n):
    g = Grid((n,))
    x = g.coordinates()[0]
    f = np.sin(x)
    symbol = (math.sin(g.dx[0]) / g.dx[0]) ** 2
    n0, n1 = discrete_norm(f, g, 0), discrete_norm(f, g, 1)
    assert n1**2 == pytest.approx(n0**2 * (1 + symbol), rel=1e-12)


def test_norm_weights_and_order_validation():
    g = Grid((4, 4))
    f = np.ones(g.shape + (2,))
    # 16 cells of weight 1 + 3 and cell volume (pi / 2)^2
    assert discrete_norm(f, g, 0, weights=(1.0, 3.0)) == pytest.approx(4 * math.pi, rel=1e-15)
    with pytest.raises(UsageError):
        discrete_norm(f, g, 3)


# -- low-Mach error --------------------------------------------------------------

@pytest.fixture(scope="module")
def shear():
    g = Grid((16, 16))
    p = ModelParams(eps=0.2)
    return g, p, limit_state("shear-layer", g, p)


def test_theorem_error_vanishes_on_prepared_data(shear):
    g, p, s = shear
    U = well_prepared_initial_data(s, g, p)
    for m in (0, 1):
        core, relax = theorem_error(U, s, g, p, m=m)
        assert core <= 1e-12 and relax <= 1e-12


def test_theorem_error_homogeneous_in_velocity_gap(shear):
    g, p, s = shear
    U = well_prepared_initial_data(s, g, p)
    gap = np.zeros_like(U)
    gap[..., VEL] = 0.01 * np.cos(g.coordinates()[0])[..., None]
    e1 = theorem_error(U + gap, s, g, p)[0]
    e2 = theorem_error(U + 2 * gap, s, g, p)[0]
    assert e2 == pytest.approx(2 * e1, rel=1e-12)


def test_theorem_error_usage_errors(shear):
    g, p, s = shear
    U = well_prepared_initial_data(s, g, p)
    with pytest.raises(UsageError):
        theorem_error(U[:8], s, g, p)
    with pytest.raises(UsageError):
        theorem_error(U, s, g, p, t=0.1, t_reference=0.2)
    with pytest.raises(UsageError):
        theorem_error(U, IncompressibleState(s.u, s.k), g, p)
    small = Grid((8, 8))
    with pytest.raises(UsageError):
        theorem_error(U, s, small, p)


def test_maxwell_residual_on_prepared_data(shear):
    g, p, s = shear
    U = well_prepared_initial_data(s, g, p)
    rs, ry, qs, qy = maxwell_residual(U, g, p)
    assert rs <= 1e-15 * max(qs, 1) and ry <= 1e-15 * max(qy, 1)
    assert qs > 0 and qy > 0


def test_maxwell_residual_is_linear(shear):
    g, p, s = shear
    U = well_prepared_initial_data(s, g, p)
    U2 = U.copy()
    U2[..., SIG] *= 2.0
    rs, _, qs, _ = maxwell_residual(U2, g, p)
    assert rs == pytest.approx(qs, rel=1e-13)


def test_maxwell_residual_density_choice(shear):
    g, p, s = shear
    U = well_prepared_initial_data(s, g, p)
    local = maxwell_residual(U, g, p, density="local")
    assert 0 < local[0] < 1e-2 * local[2]
    with pytest.raises(UsageError):
        maxwell_residual(U, g, p, density="mean")


def test_frozen_flow_relaxation_reaches_quasi_equilibrium():
    g = Grid((16, 16))
    p = ModelParams(eps=0.1)
    U0 = initial_field("shear-layer", g, p)
    U0[..., SIG] = 0.0
    U, t = relax_on_frozen_flow(U0, g, p, n_times=5)
    rs, _, qs, _ = maxwell_residual(U, g, p)
    k_max = float(np.max(U0[..., K]))
    assert t == pytest.approx(5 * p.eps * p.alpha1 * (p.l * math.sqrt(k_max) + p.nu), rel=1e-14)
    assert rs <= 0.1 * qs
    np.testing.assert_array_equal(U[..., VEL], U0[..., VEL])


def test_entropy_audit_on_prepared_data():
    g = Grid((16, 16))
    p = ModelParams()
    h_min, n_bad = entropy_audit(initial_field("shear-layer", g, p), p)
    assert h_min >= 0 and n_bad == 0


# -- structural sweep ---------------------------------------------------------------

def test_empty_sweep_passes_vacuously():
    rep = structural_sweep(0, 1)
    assert rep.passed and rep.n_samples == 0 and rep.worst == {}


def test_default_sweep_is_clean():
    rep = structural_sweep(1000, 2024)
    assert rep.passed, rep.violations
    assert set(rep.worst) == set(CHECKS)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_sweep_clean_for_any_seed(seed):
    assert structural_sweep(200, seed).passed


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_sweep_clean_for_other_parameters(eps, a1, a3):
    assert structural_sweep(100, 7, ModelParams(eps=eps, alpha1=a1, alpha3=a3)).passed


def test_negated_alpha1_breaks_concavity():
    bad = ModelParams()
    object.__setattr__(bad, "alpha1", -1.0)
    rep = structural_sweep(50, 3, bad)
    assert rep.violations["concavity"] == 50
    assert not rep.passed


def test_sweep_rejects_negative_count():
    with pytest.raises(UsageError):
        structural_sweep(-1)


# -- fitting -----------------------------------------------------------------------

EPS = [0.4, 0.2, 0.1, 0.05]


@pytest.mark.parametrize("power", [1.0, 2.0, 0.5])
def test_fit_exact_power_law(power):
    slope, intercept = fit_order(EPS, [3.0 * e**power for e in EPS])
    assert slope == pytest.approx(power, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-12)


@settings(max_examples=50)
@given(st.floats(0.5, 2.5), st.lists(st.floats(-0.05, 0.05), min_size=4, max_size=4))
def test_fit_jittered_power_law(power, jitter):
    errors = [2.0 * e**power * (1 + j) for e, j in zip(EPS, jitter)]
    assert abs(fit_order(EPS, errors)[0] - power) <= 0.1


@pytest.mark.parametrize("eps, errors", [([0.2, 0.1], [1.0, 0.5]),
                                         ([0.2, 0.1, 0.05], [1.0, 0.0, 0.1]),
                                         ([0.2, 0.1, 0.05], [1.0, -1.0, 0.1]),
                                         ([0.1, 0.2, 0.05], [1.0, 0.5, 0.1])])
def test_fit_usage_errors(eps, errors):
    with pytest.raises(UsageError):
        fit_order(eps, errors)


def test_report_requires_decreasing_eps():
    with pytest.raises(UsageError):
        ConvergenceReport([0.1, 0.2, 0.05], [1, 1, 1], [1, 1, 1])
    rep = ConvergenceReport([0.2, 0.1, 0.05], [3, 2, 1], [3, 2, 1], slope_core=0.9)
    assert rep.passed
    assert not ConvergenceReport([0.2, 0.1, 0.05], [3, 2, 1], [1, 2, 3], slope_core=0.9).passed


def test_sweep_requires_compatible_parameters():
    g = Grid((8, 8))
    p = ModelParams(beta=2.0)
    s = IncompressibleState(np.zeros(g.shape + (3,)), np.ones(g.shape), np.zeros(g.shape))
    with pytest.raises(ConfigError):
        convergence_sweep(s, g, p, [0.2, 0.1, 0.05], 0.1)


def test_sweep_at_zero_horizon_is_exact():
    g = Grid((16, 16))
    p = ModelParams()
    rep = convergence_sweep(limit_state("shear-layer", g, p), g, p, [0.2, 0.1, 0.05], 0.0)
    assert max(rep.e_core + rep.e_relax) <= 1e-12
    assert math.isnan(rep.slope_core) or rep.slope_core == rep.slope_core


def test_small_sweep_rate():
    g = Grid((16, 16))
    p = ModelParams()
    rep = convergence_sweep(limit_state("shear-layer", g, p), g, p, [0.2, 0.1, 0.05], 0.05)
    assert len(rep.e_core) == 3 and all(np.isfinite(rep.e_core))
    assert rep.slope_core > 0.8
