"""Time integration of the rescaled quasilinear system on periodic grids.

One step is Strang splitting: half a relaxation step, a transport step,
and another half relaxation step. Transport uses path-conservative
fluctuations with the arithmetic-mean path. Two transport schemes are
available:

``"rusanov"``
    local Lax-Friedrichs viscosity with forward Euler (first order).
``"central-rk3"``
    the same fluctuations without the viscosity term, advanced with
    three-stage SSP Runge-Kutta. Its numerical dissipation does not grow
    like ``1/eps``, which matters for low-Mach runs.

Relaxation decays sigma and y exactly with nu_T frozen over the step, and
integrates k with Heun sub-steps (closed form when sigma is zero).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import AbortedRun, NumericalError, StepRejected
from .grid import Grid
from .model import K, RHO, SIG, VEL, ModelParams, entropy, unscale_map

SCHEMES = ("rusanov", "central-rk3")
RELAXATION_STRATEGIES = ("exact-heun",)


@dataclass(frozen=True)
class TimeControls:
    cfl: float = 0.5
    t_final: float = 1.0
    max_steps: int = 1_000_000
    scheme: str = "rusanov"
    relaxation: str = "exact-heun"
    n_sub: int = 10
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must be in (0, 1)")
        if not self.t_final >= 0.0:
            raise ValueError("t_final must be >= 0")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.relaxation not in RELAXATION_STRATEGIES:
            raise ValueError(f"relaxation must be one of {RELAXATION_STRATEGIES}")
        if self.n_sub < 10:
            raise ValueError("n_sub must be >= 10")


def as_field(U, grid: Grid):
    """View a field as the ``(nx, ny, 14)`` layout the kernels expect."""
    U = np.asarray(U, dtype=float)
    if U.shape != grid.shape + (14,):
        raise ValueError(f"field shape {U.shape} does not match grid {grid.shape}")
    if grid.dim == 1:
        return U[:, None, :]
    return U


def _from_kernel(V, grid):
    return V[:, 0, :] if grid.dim == 1 else V


def _inv_dx(grid):
    return tuple(1.0 / h for h in grid.dx) + ((0.0,) if grid.dim == 1 else ())


def _check_finite(U, what):
    if not np.all(np.isfinite(U)):
        raise NumericalError(f"non-finite state after {what}")


def axis_speeds(U, grid: Grid, params: ModelParams, backend=None):
    """Largest wave speed along each active axis."""
    kern = kernels.get(backend)
    V = as_field(U, grid)
    consts = kernels.pack_consts(params)
    speeds = [float(np.max(kern.wave_speed(V, a, consts))) for a in range(grid.dim)]
    if not all(math.isfinite(s) for s in speeds):
        raise NumericalError("non-finite wave speed")
    return speeds


def cfl_dt(U, grid: Grid, params: ModelParams, cfl=0.5, backend=None):
    """``cfl * min over cells and axes of dx / lambda_max``."""
    if np.size(U) == 0:
        raise ValueError("empty field")
    speeds = axis_speeds(U, grid, params, backend)
    return cfl * min(h / s for h, s in zip(grid.dx, speeds))


def stability_limit(U, grid, params, backend=None):
    """Largest step for which ``dt * sum_a lambda_a / dx_a <= 1``."""
    speeds = axis_speeds(U, grid, params, backend)
    return 1.0 / sum(s / h for h, s in zip(grid.dx, speeds))


def hyperbolic_substep(U, grid: Grid, params: ModelParams, dt, scheme="rusanov",
                       backend=None, check_cfl=True):
    """Advance the transport part by ``dt``; returns ``(field, n_clamped)``."""
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    if check_cfl and dt > stability_limit(U, grid, params, backend) * (1.0 + 1e-12):
        raise StepRejected("time step exceeds the CFL stability limit")
    kern = kernels.get(backend)
    consts = kernels.pack_consts(params)
    inv = _inv_dx(grid)
    V = as_field(U, grid)
    if scheme == "rusanov":
        V = V + dt * kern.hyperbolic_rhs(V, inv, consts, 1.0)
    else:
        def rhs(W):
            return kern.hyperbolic_rhs(W, inv, consts, 0.0)
        V1 = V + dt * rhs(V)
        V2 = 0.75 * V + 0.25 * (V1 + dt * rhs(V1))
        V = V / 3.0 + 2.0 / 3.0 * (V2 + dt * rhs(V2))
    _check_finite(V, "transport step")
    negative = V[..., K] < 0.0
    n_clamped = int(np.count_nonzero(negative))
    if n_clamped:
        V = V.copy()
        V[..., K] = np.where(negative, 0.0, V[..., K])
    return _from_kernel(V, grid), n_clamped


def relaxation_substep(U, params: ModelParams, dt, n_sub=10, backend=None):
    """Integrate ``dU/dt = Q(U)`` cell by cell; returns ``(field, n_clamped)``."""
    U = np.asarray(U, dtype=float)
    if np.any(U[..., K] < 0):
        raise ValueError("relaxation requires k >= 0")
    kern = kernels.get(backend)
    V = U.reshape((-1, 1, 14)) if U.ndim != 3 else U
    out, n_clamped = kern.relax(np.ascontiguousarray(V), float(dt), kernels.pack_consts(params),
                                int(max(n_sub, 10)))
    _check_finite(out, "relaxation step")
    return out.reshape(U.shape), n_clamped


def strang_step(U, grid: Grid, params: ModelParams, dt, controls: TimeControls = TimeControls(),
                backend=None):
    """relaxation(dt/2) then transport(dt) then relaxation(dt/2); returns ``(field, n_clamped)``."""
    U, c1 = relaxation_substep(U, params, 0.5 * dt, controls.n_sub, backend)
    U, c2 = hyperbolic_substep(U, grid, params, dt, controls.scheme, backend)
    U, c3 = relaxation_substep(U, params, 0.5 * dt, controls.n_sub, backend)
    return U, c1 + c2 + c3


# -- diagnostics log -------------------------------------------------------

@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    mass: float
    momentum: tuple
    entropy: float
    max_sigma: float
    clamp_count: int


@dataclass
class Trajectory:
    final: np.ndarray
    t: float
    steps: int
    snapshots: list = field(default_factory=list)  # (time, field)
    log: list = field(default_factory=list)

    @property
    def clamp_count(self) -> int:
        return sum(r.clamp_count for r in self.log)

    @property
    def entropy_series(self):
        return np.array([r.entropy for r in self.log])


def field_totals(U, grid: Grid, params: ModelParams):
    """Reconstructed mass, momentum and entropy integrated over the grid."""
    W = unscale_map(U, params)
    dv = grid.cell_volume
    rho = W[..., RHO]
    mass = float(np.sum(rho)) * dv
    mom = tuple(float(np.sum(rho * W[..., VEL][..., i])) * dv for i in range(3))
    eta = float(np.sum(entropy(W, params))) * dv
    return mass, mom, eta


def _record(step, t, dt, U, grid, params, clamps):
    mass, mom, eta = field_totals(U, grid, params)
    return StepRecord(step, t, dt, mass, mom, eta, float(np.max(np.abs(U[..., SIG]))), clamps)


def run_simulation(U0, grid: Grid, params: ModelParams, controls: TimeControls = TimeControls(),
                   backend=None, blowup=1e12, log_every=1, callback=None):
    """Integrate to ``controls.t_final`` (or ``max_steps``).

    Steps are trimmed to land exactly on every entry of
    ``controls.snapshot_times``; those fields are stored in
    ``Trajectory.snapshots``. ``callback(step, t, field)`` runs after
    every accepted step.
    """
    U = np.array(U0, dtype=float)
    as_field(U, grid)
    t, step = 0.0, 0
    targets = sorted(s for s in controls.snapshot_times if 0.0 <= s <= controls.t_final)
    traj = Trajectory(final=U, t=0.0, steps=0)
    traj.log.append(_record(0, 0.0, 0.0, U, grid, params, 0))
    while targets and targets[0] <= 0.0:
        traj.snapshots.append((targets.pop(0), U.copy()))
    t_end = controls.t_final
    while t < t_end and step < controls.max_steps:
        dt = cfl_dt(U, grid, params, controls.cfl, backend)
        stop = targets[0] if targets else t_end
        hit = False
        if t + dt >= stop * (1.0 - 1e-14):
            dt = stop - t
            hit = True
        if dt <= 0.0:
            raise NumericalError("non-positive time step")
        U, clamps = strang_step(U, grid, params, dt, controls, backend)
        step += 1
        t = stop if hit else t + dt
        if not np.all(np.abs(U) <= blowup):
            raise AbortedRun(f"state exceeded {blowup:g} at step {step}", step=step)
        if callback is not None:
            callback(step, t, U)
        if step % log_every == 0 or hit:
            traj.log.append(_record(step, t, dt, U, grid, params, clamps))
        while targets and targets[0] <= t * (1.0 + 1e-14):
            traj.snapshots.append((targets.pop(0), U.copy()))
    traj.final, traj.t, traj.steps = U, t, step
    return traj
