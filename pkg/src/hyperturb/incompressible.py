"""Spectral reference solver for the low-Mach limit system.

The limit is incompressible RANS closed by Prandtl's one-equation model
for ``k``. Everything is pseudo-spectral on the periodic grid; the
pressure ``pi`` is the Lagrange multiplier of the Leray projection,
normalised to zero mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AbortedRun, ConfigError
from .grid import (Grid, divergence, gradient, spectral_derivative, strain_6,
                   sym_divergence)
from .model import (K, PHI, SIG, VEL, Y, ModelParams, NVAR, eddy_viscosity,
                    sym_contract)


@dataclass
class IncompressibleState:
    """Velocity ``u`` (..., 3), zero-mean pressure ``pi`` and ``k`` on a grid."""

    u: np.ndarray
    k: np.ndarray
    pi: np.ndarray = None

    def copy(self):
        return IncompressibleState(self.u.copy(), self.k.copy(),
                                   None if self.pi is None else self.pi.copy())


@dataclass
class LimitTrajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    max_divergence: float = 0.0
    clamp_count: int = 0

    @property
    def final(self) -> IncompressibleState:
        return self.states[-1]


def _require_compatible(params: ModelParams):
    if not params.limit_compatible:
        raise ConfigError("limit system requires alpha2 = beta = xi**2 and rho0 = 1")


def _spatial_axes(grid):
    return tuple(range(grid.dim))


def project_divfree(u, grid: Grid, return_pressure=False):
    """Leray projection of the in-plane velocity components.

    With ``return_pressure`` the zero-mean potential ``p`` such that
    ``u = P u + grad p`` is returned as well.
    """
    u = np.asarray(u, dtype=float)
    axes = _spatial_axes(grid)
    kk = grid.wavenumbers()
    k2 = sum(a * a for a in kk)
    k2_safe = np.where(k2 > 0, k2, 1.0)
    uh = np.fft.fftn(u[..., :grid.dim], axes=axes)
    kdotu = sum(kk[a] * uh[..., a] for a in range(grid.dim))
    out = u.copy()
    for a in range(grid.dim):
        corr = np.where(k2 > 0, kk[a] * kdotu / k2_safe, 0.0)
        out[..., a] = np.real(np.fft.ifftn(uh[..., a] - corr, axes=axes))
    if not return_pressure:
        return out
    ph = np.where(k2 > 0, -1j * kdotu / k2_safe, 0.0)
    return out, np.real(np.fft.ifftn(ph, axes=axes))


def _momentum_forcing(u, k, grid, params):
    """Unprojected ``du/dt`` without the pressure gradient."""
    nu_t, _ = eddy_viscosity(k, params)
    rho0 = params.eos.rho0
    sigma = -(nu_t + params.nu)[..., None] * strain_6(u, grid) / rho0
    adv = np.zeros_like(u)
    for a in range(grid.dim):
        adv += u[..., a:a + 1] * spectral_derivative(u, grid, a)
    return -adv - (sym_divergence(sigma, grid) + 2.0 / 3.0 * gradient(k, grid)) / rho0


def _k_rhs_relaxation_form(u, k, grid, params):
    """k tendency assembled from the limit stresses sigma and fluxes y."""
    p = params
    nu_t, _ = eddy_viscosity(k, p)
    tau = nu_t + p.nu
    rho0 = p.eos.rho0
    sigma = -tau[..., None] * strain_6(u, grid) / rho0
    y = -p.xi * p.alpha3 * tau[..., None] * gradient(k, grid) / rho0
    adv = np.sum(u * gradient(k, grid), axis=-1)
    return (-adv - p.xi / (p.alpha2 * p.alpha3 * rho0) * divergence(y, grid)
            + 2.0 * p.beta / p.alpha2 * nu_t / tau**2 * sym_contract(sigma)
            - p.beta * p.c_d / (p.alpha2 * p.l) * k**1.5)


def k_rhs_prandtl(u, k, grid, params):
    """Prandtl one-equation form of the k tendency."""
    nu_t, _ = eddy_viscosity(k, params)
    S = strain_6(u, grid)
    adv = np.sum(u * gradient(k, grid), axis=-1)
    diff = divergence((params.nu + nu_t)[..., None] * gradient(k, grid), grid)
    return adv * -1.0 + 2.0 * nu_t * sym_contract(S) - params.c_d * k**1.5 / params.l + diff


def limit_rhs(state: IncompressibleState, grid: Grid, params: ModelParams, form="relaxation"):
    """Return ``(du, dk, pi)`` for the limit system.

    ``form`` selects how the k tendency is assembled: ``"relaxation"``
    substitutes the limit sigma and y into the k equation, ``"prandtl"``
    uses the one-equation model directly. They agree for compatible
    parameters.
    """
    _require_compatible(params)
    u = np.asarray(state.u, dtype=float)
    k = np.maximum(np.asarray(state.k, dtype=float), 0.0)
    du, pi = _projected_momentum(u, k, grid, params)
    if form == "relaxation":
        dk = _k_rhs_relaxation_form(u, k, grid, params)
    elif form == "prandtl":
        dk = k_rhs_prandtl(u, k, grid, params)
    else:
        raise ValueError(f"unknown form {form!r}")
    return du, dk, pi


def _projected_momentum(u, k, grid, params):
    F = _momentum_forcing(u, k, grid, params)
    du, grad_part = project_divfree(F, grid, return_pressure=True)
    # F = du + grad(phi_F) and du = F - grad(pi)/rho0, so pi = rho0 * phi_F
    return du, params.eos.rho0 * grad_part


def limit_pressure(state: IncompressibleState, grid: Grid, params: ModelParams):
    """Zero-mean pressure that keeps ``u`` divergence-free."""
    u = np.asarray(state.u, dtype=float)
    k = np.maximum(np.asarray(state.k, dtype=float), 0.0)
    return _projected_momentum(u, k, grid, params)[1]


def max_divergence(u, grid: Grid) -> float:
    return float(np.max(np.abs(divergence(u, grid))))


def stable_dt(state: IncompressibleState, grid: Grid, params: ModelParams, cfl=0.5):
    h = min(grid.dx)
    umax = float(np.max(np.abs(state.u))) + 1e-300
    nu_t, _ = eddy_viscosity(np.maximum(state.k, 0.0), params)
    dmax = float(np.max(nu_t)) + params.nu
    kmax = math.pi / h
    return cfl * min(h / umax, 2.5 / (dmax * kmax**2 * grid.dim))


def run_limit(initial: IncompressibleState, grid: Grid, params: ModelParams, t_final: float,
              dt_max=0.01, cfl=0.5, record_every=None, blowup=1e12):
    """Integrate the limit system with SSP-RK3 and projection at every stage.

    The step is ``min(dt_max, stable_dt)`` with the last step trimmed to
    land on ``t_final``. Returns a :class:`LimitTrajectory`; its states
    carry the pressure evaluated at their own time.
    """
    _require_compatible(params)
    u = project_divfree(initial.u, grid)
    k = np.maximum(np.asarray(initial.k, dtype=float), 0.0).copy()
    traj = LimitTrajectory()

    def snap(t):
        s = IncompressibleState(u.copy(), k.copy())
        s.pi = limit_pressure(s, grid, params)
        traj.times.append(t)
        traj.states.append(s)

    def rhs(uu, kk):
        du, dk, _ = limit_rhs(IncompressibleState(uu, kk), grid, params)
        return du, dk

    t, step = 0.0, 0
    snap(t)
    traj.max_divergence = max_divergence(u, grid)
    while t < t_final * (1 - 1e-14):
        dt = min(dt_max, stable_dt(IncompressibleState(u, k), grid, params, cfl), t_final - t)
        du, dk = rhs(u, k)
        u1, k1 = u + dt * du, np.maximum(k + dt * dk, 0.0)
        du, dk = rhs(u1, k1)
        u2 = 0.75 * u + 0.25 * (u1 + dt * du)
        k2 = np.maximum(0.75 * k + 0.25 * (k1 + dt * dk), 0.0)
        du, dk = rhs(u2, k2)
        u = u / 3.0 + 2.0 / 3.0 * (u2 + dt * du)
        k_new = k / 3.0 + 2.0 / 3.0 * (k2 + dt * dk)
        traj.clamp_count += int(np.count_nonzero(k_new < 0))
        k = np.maximum(k_new, 0.0)
        t += dt
        step += 1
        if not (np.all(np.isfinite(u)) and np.max(np.abs(u)) < blowup):
            raise AbortedRun(f"limit solver blew up at step {step}", step=step)
        traj.max_divergence = max(traj.max_divergence, max_divergence(u, grid))
        if record_every and step % record_every == 0 and t < t_final * (1 - 1e-14):
            snap(t)
    snap(t)
    return traj


def well_prepared_initial_data(state: IncompressibleState, grid: Grid, params: ModelParams,
                               eps=None):
    """Rescaled compressible field built from a limit-system state.

    ``phi = eps pi``, ``u`` and ``k`` copied, and sigma, y set to their
    quasi-equilibrium values with spectral derivatives.
    """
    eps = params.eps if eps is None else eps
    p = params
    rho0 = p.eos.rho0
    u = np.asarray(state.u, dtype=float)
    k = np.asarray(state.k, dtype=float)
    pi = state.pi if state.pi is not None else limit_pressure(state, grid, p)
    tau = p.l * np.sqrt(k) + p.nu
    U = np.zeros(np.shape(k) + (NVAR,))
    U[..., PHI] = eps * pi
    U[..., VEL] = u
    U[..., SIG] = -math.sqrt(eps) / rho0 * tau[..., None] * strain_6(u, grid)
    U[..., K] = k
    U[..., Y] = -math.sqrt(eps) * p.xi * p.alpha3 / rho0 * tau[..., None] * gradient(k, grid)
    return U
