"""Norms, structural checks, relaxation residuals and convergence fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .eos import density_from_pressure
from .errors import ConfigError, HyperturbError, UsageError
from .grid import Grid, gradient, strain_6
from .incompressible import IncompressibleState, run_limit, well_prepared_initial_data
from .model import (K, NVAR, PHI, RHO, SIG, SYM_WEIGHTS, VEL, Y, ModelParams,
                    cdf_variables, dissipation_matrix, eddy_viscosity,
                    entropy_production, flux_jacobian, pd_constraint, pd_threshold,
                    specific_entropy, sym_contract, symmetrizer_diagonal, unscale_map)
from .solver import TimeControls, run_simulation, strang_step, cfl_dt


# -- norms -----------------------------------------------------------------

def _central_diff(f, grid, axis):
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * grid.dx[axis])


def discrete_norm(f, grid: Grid, m=0, weights=None):
    """Discrete Sobolev-type norm of a periodic field.

    ``m = 0`` is the cell-volume weighted l2 norm over all trailing
    components; each higher order adds the l2 norms of all central-difference
    derivatives of that order. ``weights`` scales the squared trailing
    components (use ``SYM_WEIGHTS`` for symmetric tensors stored as
    6-vectors).
    """
    if m not in (0, 1, 2):
        raise UsageError("m must be 0, 1 or 2")
    f = np.asarray(f, dtype=float)
    w = 1.0 if weights is None else np.asarray(weights, dtype=float)

    def sq(g):
        return float(np.sum(w * g * g)) if weights is not None else float(np.sum(g * g))

    total = sq(f)
    layer = [f]
    for _ in range(m):
        layer = [_central_diff(g, grid, a) for g in layer for a in range(grid.dim)]
        total += sum(sq(g) for g in layer)
    return math.sqrt(total * grid.cell_volume)


# -- low-Mach error ----------------------------------------------------------

def quasi_equilibrium(u, k, grid: Grid, params: ModelParams, eps=None, rho=None):
    """Relaxed ``(sigma, y)`` for given ``u, k``.

    ``sigma = -sqrt(eps) (nu_T + nu) S / rho`` and
    ``y = -sqrt(eps) xi alpha3 (nu_T + nu) grad k / rho`` with ``S`` the
    symmetric velocity gradient; ``rho`` defaults to the reference density.
    """
    eps = params.eps if eps is None else eps
    rho = params.eos.rho0 if rho is None else rho
    nu_t, _ = eddy_viscosity(k, params)
    c = math.sqrt(eps) * (nu_t + params.nu) / rho
    sigma = -c[..., None] * strain_6(u, grid)
    y = -(params.xi * params.alpha3) * c[..., None] * gradient(k, grid)
    return sigma, y


def theorem_error(U, reference: IncompressibleState, grid: Grid, params: ModelParams, eps=None,
                  m=0, t=None, t_reference=None, time_tol=1e-12):
    """Low-Mach error groups ``(E_core, E_relax)`` of a compressible field.

    ``E_core`` is the norm of ``(phi - eps pi, u - u_ref, k - k_ref)`` and
    ``E_relax`` that of ``(rho0 sigma + sqrt(eps) (l sqrt(k) + nu) S,
    rho0 y + sqrt(eps) xi alpha3 (l sqrt(k) + nu) grad k)``, with ``S`` and
    ``grad k`` taken spectrally from the reference. Tensors use the
    Frobenius weights.
    """
    eps = params.eps if eps is None else eps
    U = np.asarray(U, dtype=float)
    if U.shape != grid.shape + (NVAR,):
        raise UsageError(f"field shape {U.shape} does not match grid {grid.shape}")
    if np.shape(reference.u) != grid.shape + (3,) or np.shape(reference.k) != grid.shape:
        raise UsageError("reference solution lives on a different grid")
    if t is not None and t_reference is not None and abs(t - t_reference) > time_tol:
        raise UsageError(f"time mismatch: field at {t!r}, reference at {t_reference!r}")
    if reference.pi is None:
        raise UsageError("reference state carries no pressure")
    rho0 = params.eos.rho0
    core = np.concatenate([(U[..., PHI] - eps * reference.pi)[..., None],
                           U[..., VEL] - reference.u,
                           (U[..., K] - reference.k)[..., None]], axis=-1)
    sigma_q, y_q = quasi_equilibrium(reference.u, reference.k, grid, params, eps, rho0)
    relax = np.concatenate([rho0 * (U[..., SIG] - sigma_q), rho0 * (U[..., Y] - y_q)], axis=-1)
    relax_w = np.concatenate([SYM_WEIGHTS, np.ones(3)])
    return discrete_norm(core, grid, m), discrete_norm(relax, grid, m, relax_w)


def maxwell_residual(U, grid: Grid, params: ModelParams, eps=None, density="reference"):
    """``(|sigma - sigma_q|_0, |y - y_q|_0, |sigma_q|_0, |y_q|_0)``.

    The quasi-equilibria come from the field's own ``u`` and ``k``.
    ``density="local"`` uses the density reconstructed from ``phi``
    instead of the reference density.
    """
    eps = params.eps if eps is None else eps
    U = np.asarray(U, dtype=float)
    if density == "reference":
        rho = params.eos.rho0
    elif density == "local":
        rho = density_from_pressure(params.eos.p0 + eps * U[..., PHI], params.eos)
    else:
        raise UsageError("density must be 'reference' or 'local'")
    sigma_q, y_q = quasi_equilibrium(U[..., VEL], U[..., K], grid, params, eps, rho)
    return (discrete_norm(U[..., SIG] - sigma_q, grid, 0, SYM_WEIGHTS),
            discrete_norm(U[..., Y] - y_q, grid, 0),
            discrete_norm(sigma_q, grid, 0, SYM_WEIGHTS),
            discrete_norm(y_q, grid, 0))


def relax_on_frozen_flow(U0, grid: Grid, params: ModelParams, n_times=5.0,
                         controls: TimeControls = TimeControls(), backend=None):
    """Evolve sigma and y while ``phi``, ``u`` and ``k`` are held at ``U0``.

    Runs Strang steps for ``n_times`` of the slowest relaxation time
    ``eps alpha1 (nu_T + nu)`` and restores the frozen components after
    every step. Returns ``(field, elapsed_time)``.
    """
    U0 = np.asarray(U0, dtype=float)
    nu_t, _ = eddy_viscosity(U0[..., K], params)
    t_relax = params.eps * params.alpha1 * (float(np.max(nu_t)) + params.nu)
    t_end = n_times * t_relax
    frozen = [PHI, VEL, K]
    U, t = U0.copy(), 0.0
    while t < t_end:
        dt = min(cfl_dt(U, grid, params, controls.cfl, backend), t_end - t)
        U, _ = strang_step(U, grid, params, dt, controls, backend)
        for idx in frozen:
            U[..., idx] = U0[..., idx]
        t += dt
    return U, t


# -- structural sweep --------------------------------------------------------

CHECKS = ("symmetry", "real_spectrum", "production", "pd_consistency", "concavity")


@dataclass
class SweepReport:
    n_samples: int
    violations: dict = field(default_factory=lambda: {c: 0 for c in CHECKS})
    worst: dict = field(default_factory=dict)  # check -> (metric, sample index)
    n_constraint_violating: int = 0

    @property
    def passed(self) -> bool:
        return not any(self.violations.values())

    def note(self, check, metric, index, bad):
        if bad:
            self.violations[check] += 1
        best = self.worst.get(check)
        if best is None or metric > best[0]:
            self.worst[check] = (float(metric), int(index))


def sample_states(n, rng, params: ModelParams):
    """Rescaled states in the sampling box plus unit directions.

    ``phi`` in [-0.5, 0.5], ``|u| <= 1``, ``|sigma_i| <= 0.3``, ``k`` in
    [0, 2], ``|y_i| <= 0.5``. Directions are uniform on the sphere.
    """
    U = np.zeros((n, NVAR))
    U[:, PHI] = rng.uniform(-0.5, 0.5, n)
    u = rng.normal(size=(n, 3))
    u *= (rng.uniform(0, 1, n) ** (1 / 3) / np.linalg.norm(u, axis=1))[:, None]
    U[:, VEL] = u
    U[:, SIG] = rng.uniform(-0.3, 0.3, (n, 6))
    U[:, K] = rng.uniform(0.0, 2.0, n)
    U[:, Y] = rng.uniform(-0.5, 0.5, (n, 3))
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return U, d


def _physical_from_box(U, params):
    """Read a box sample as a physical state with ``rho`` from ``p0 + eps phi``."""
    W = U.copy()
    W[:, RHO] = density_from_pressure(params.eos.p0 + params.eps * U[:, PHI], params.eos)
    return W


def _entropy_hessian(W, params, h=1e-4):
    """Central-difference Hessian of ``s`` in CDF variables ``(v, u, C, w, y)``."""
    C, w = cdf_variables(W, params)
    z0 = np.concatenate([(1.0 / W[:, RHO])[:, None], W[:, VEL], C, w[:, None], W[:, Y]], axis=1)

    def s(z):
        return specific_entropy(z[:, 0], z[:, 1:4], z[:, 4:10], z[:, 10], z[:, 11:14], params)

    n, d = z0.shape
    H = np.empty((n, d, d))
    eye = np.eye(d) * h
    f0 = s(z0)
    for i in range(d):
        for j in range(i, d):
            if i == j:
                val = (s(z0 + eye[i]) - 2.0 * f0 + s(z0 - eye[i])) / h**2
            else:
                val = (s(z0 + eye[i] + eye[j]) - s(z0 + eye[i] - eye[j])
                       - s(z0 - eye[i] + eye[j]) + s(z0 - eye[i] - eye[j])) / (4 * h * h)
            H[:, i, j] = H[:, j, i] = val
    return H


def _guard(report, check, n, fn):
    """Run one vectorised check; any error counts every sample as a violation."""
    try:
        fn()
    except (HyperturbError, ValueError, ArithmeticError, np.linalg.LinAlgError):
        for i in range(n):
            report.note(check, math.inf, i, True)


def structural_sweep(n_samples, seed=0, params: ModelParams = ModelParams()):
    """Random-state audit of the hyperbolic and dissipative structure.

    Per sample it checks that ``A0 A`` is symmetric (relative 1e-12), the
    spectrum is real (1e-10), the entropy production is >= -1e-14 and the
    dissipation matrix is positive definite when the positivity constraint
    holds, that the constraint violated by a factor >= 2 means an indefinite
    matrix, and that the specific entropy is strictly concave. States that
    violate the constraint get a companion with sigma shrunk into the
    admissible set for the production and definiteness checks.
    """
    if n_samples < 0:
        raise UsageError("n_samples must be >= 0")
    report = SweepReport(n_samples)
    if n_samples == 0:
        return report
    rng = np.random.default_rng(seed)
    U, dirs = sample_states(n_samples, rng, params)
    shrink = rng.uniform(0.0, 1.0, n_samples)
    n = n_samples

    def symmetry():
        A = flux_jacobian(U, dirs, params)
        S = symmetrizer_diagonal(U, params)[..., :, None] * A
        asym = np.max(np.abs(S - np.swapaxes(S, -1, -2)), axis=(-2, -1))
        rel = asym / np.max(np.abs(S), axis=(-2, -1))
        for i, r in enumerate(rel):
            report.note("symmetry", r, i, not r <= 1e-12)

    def real_spectrum():
        A = flux_jacobian(U, dirs, params)
        with np.errstate(invalid="ignore"):
            s = np.sqrt(symmetrizer_diagonal(U, params))
        if not np.all(np.isfinite(s)):
            raise ArithmeticError("symmetrizer not positive")
        lam = np.linalg.eigvals(s[..., :, None] * A / s[..., None, :])
        imag = np.max(np.abs(lam.imag), axis=-1)
        for i, v in enumerate(imag):
            report.note("real_spectrum", v, i, not v <= 1e-10)

    W = _physical_from_box(U, params)
    ok = pd_constraint(W, params)
    report.n_constraint_violating = int(np.count_nonzero(~ok))
    thr = pd_threshold(W[:, K], params)
    ss = sym_contract(W[:, SIG])
    Wc = W.copy()
    scale = np.where(ok, 1.0, shrink * np.sqrt(np.where(ok, 1.0, thr / np.where(ss > 0, ss, 1.0))))
    Wc[:, SIG] *= scale[:, None]

    def production():
        H = entropy_production(Wc, params)
        okc = pd_constraint(Wc, params)
        for i in range(n):
            report.note("production", -H[i], i, bool(okc[i]) and not H[i] >= -1e-14)

    def pd_consistency():
        okc = pd_constraint(Wc, params)
        lam_c = np.linalg.eigvalsh(dissipation_matrix(Wc, params))[:, 0]
        lam_w = np.linalg.eigvalsh(dissipation_matrix(W, params))[:, 0]
        far = ss >= 2.0 * thr
        for i in range(n):
            # constraint => PD, and a two-fold violation => not PD
            bad = (okc[i] and not lam_c[i] > 0) or (far[i] and lam_w[i] > 0)
            report.note("pd_consistency", -lam_c[i] if okc[i] else 0.0, i, bool(bad))

    def concavity():
        H = _entropy_hessian(W, params)
        top = np.linalg.eigvalsh(0.5 * (H + np.swapaxes(H, -1, -2)))[:, -1]
        for i, v in enumerate(top):
            report.note("concavity", v, i, not v < 0)

    for name, fn in zip(CHECKS, (symmetry, real_spectrum, production, pd_consistency, concavity)):
        _guard(report, name, n, fn)
    return report


def entropy_audit(U, params: ModelParams):
    """Pointwise production check on a rescaled field.

    Returns ``(min_H_on_constrained_cells, n_cells_violating_constraint)``
    with ``H`` evaluated on the reconstructed physical state.
    """
    W = unscale_map(U, params).reshape(-1, NVAR)
    ok = pd_constraint(W, params)
    H = entropy_production(W, params)
    h_min = float(np.min(H[ok])) if np.any(ok) else math.inf
    return h_min, int(np.count_nonzero(~ok))


# -- convergence -------------------------------------------------------------

def fit_order(eps_list, errors):
    """Least-squares ``(slope, intercept)`` of ``log(error)`` against ``log(eps)``."""
    e = np.asarray(eps_list, dtype=float)
    err = np.asarray(errors, dtype=float)
    if e.ndim != 1 or e.size < 3 or e.shape != err.shape:
        raise UsageError("need at least 3 (eps, error) pairs")
    if not np.all(np.diff(e) < 0) or np.any(e <= 0):
        raise UsageError("eps values must be positive and strictly decreasing")
    if np.any(~(err > 0)) or not np.all(np.isfinite(err)):
        raise UsageError("errors must be positive and finite")
    slope, intercept = np.polyfit(np.log(e), np.log(err), 1)
    return float(slope), float(intercept)


@dataclass
class ConvergenceReport:
    eps: list
    e_core: list
    e_relax: list
    e_core_m1: list = field(default_factory=list)
    e_relax_m1: list = field(default_factory=list)
    slope_core: float = math.nan
    slope_relax: float = math.nan
    min_slope: float = 0.8

    def __post_init__(self):
        if not all(a > b for a, b in zip(self.eps, self.eps[1:])):
            raise UsageError("eps values must be strictly decreasing")

    @property
    def core_rate_ok(self) -> bool:
        return self.slope_core >= self.min_slope

    @property
    def relax_monotone(self) -> bool:
        return all(a > b for a, b in zip(self.e_relax, self.e_relax[1:]))

    @property
    def passed(self) -> bool:
        return self.core_rate_ok and self.relax_monotone


def convergence_sweep(initial: IncompressibleState, grid: Grid, params: ModelParams, eps_list,
                      t_final, controls: TimeControls = None, reference_dt=1e-3, backend=None):
    """Low-Mach study: one limit run, then one compressible run per ``eps``.

    Each compressible run starts from well-prepared data and is compared to
    the limit solution at ``t_final`` with :func:`theorem_error`.
    """
    if not params.limit_compatible:
        raise ConfigError("limit system requires alpha2 = beta = xi**2 and rho0 = 1")
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ConfigError("sweep requires >= 3 values")
    if controls is None:
        controls = TimeControls(cfl=0.1, scheme="central-rk3")
    controls = replace(controls, t_final=t_final, snapshot_times=())
    ref = run_limit(initial, grid, params, t_final, dt_max=reference_dt).final
    rows = []
    for eps in eps_list:
        pe = params.with_eps(eps)
        U0 = well_prepared_initial_data(initial, grid, pe)
        U = run_simulation(U0, grid, pe, controls, backend=backend).final
        rows.append(theorem_error(U, ref, grid, pe, m=0) + theorem_error(U, ref, grid, pe, m=1))
    rep = ConvergenceReport(eps_list, [r[0] for r in rows], [r[1] for r in rows],
                            [r[2] for r in rows], [r[3] for r in rows])
    if all(e > 0 for e in rep.e_core):
        rep.slope_core = fit_order(eps_list, rep.e_core)[0]
    if all(e > 0 for e in rep.e_relax):
        rep.slope_relax = fit_order(eps_list, rep.e_relax)[0]
    return rep
