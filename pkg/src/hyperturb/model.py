"""Closed hyperbolic turbulence model for isothermal compressible flow.

States are packed float arrays whose last axis has length 14, ordered

    (phi, u1, u2, u3, s11, s12, s13, s22, s23, s33, k, y1, y2, y3)

for the rescaled (low-Mach) variables, and

    (rho, u1, u2, u3, s11, s12, s13, s22, s23, s33, k, y1, y2, y3)

for the unscaled physical variables. Leading axes are batch axes; every
function here broadcasts over them. Symmetric tensors are stored as
6-vectors and contracted with :data:`SYM_WEIGHTS`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .eos import EosParams, density_from_pressure, pressure, q_of_p, s_eq
from .errors import DomainError, NumericalError, StateError

NVAR = 14
PHI = 0
RHO = 0
VEL = slice(1, 4)
SIG = slice(4, 10)
K = 10
Y = slice(11, 14)

SYM_WEIGHTS = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])
# (i, j) -> position in the 6-vector
SYM_INDEX = np.array([[0, 1, 2], [1, 3, 4], [2, 4, 5]])
VAR_NAMES = ("phi", "u1", "u2", "u3", "s11", "s12", "s13", "s22", "s23", "s33",
             "k", "y1", "y2", "y3")


@dataclass(frozen=True)
class ModelParams:
    """Closure and scaling constants.

    ``alpha1..3`` weight the non-equilibrium entropy terms, ``xi`` couples
    k and y, ``beta`` weights production/dissipation in the k equation,
    ``c_d`` and ``l`` are the dissipation coefficient and length scale,
    ``nu`` is the shear viscosity and ``eps`` the Mach-number scale.
    """

    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    xi: float = 1.0
    beta: float = 1.0
    c_d: float = 0.08
    l: float = 0.1
    nu: float = 0.01
    eps: float = 0.1
    eos: EosParams = field(default_factory=EosParams)

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "alpha3", "xi", "beta", "c_d", "l", "nu", "eps"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be > 0")
        if self.eps > 1:
            raise DomainError("eps must be <= 1")

    @property
    def limit_compatible(self) -> bool:
        """True when the low-Mach limit is Prandtl's one-equation model."""
        close = lambda a, b: math.isclose(a, b, rel_tol=1e-12, abs_tol=0.0)  # noqa: E731
        return (close(self.alpha2, self.beta) and close(self.beta, self.xi**2)
                and close(self.eos.rho0, 1.0))

    def with_eps(self, eps: float) -> "ModelParams":
        return replace(self, eps=eps)


def pack(phi_or_rho, u=(0.0, 0.0, 0.0), sigma=(0.0,) * 6, k=0.0, y=(0.0, 0.0, 0.0)):
    """Pack components into a state array; all parts broadcast together."""
    phi_or_rho = np.asarray(phi_or_rho, dtype=float)
    u, sigma, y = (np.asarray(a, dtype=float) for a in (u, sigma, y))
    k = np.asarray(k, dtype=float)
    batch = np.broadcast_shapes(phi_or_rho.shape, u.shape[:-1], sigma.shape[:-1],
                                k.shape, y.shape[:-1])
    out = np.empty(batch + (NVAR,))
    out[..., 0] = phi_or_rho
    out[..., VEL] = u
    out[..., SIG] = sigma
    out[..., K] = k
    out[..., Y] = y
    return out


def sym_contract(a, b=None):
    """Double contraction ``a:b`` of symmetric tensors stored as 6-vectors."""
    if b is None:
        b = a
    return np.sum(SYM_WEIGHTS * np.asarray(a) * np.asarray(b), axis=-1)


def sym_to_tensor(s):
    s = np.asarray(s)
    return s[..., SYM_INDEX]


def eddy_viscosity(k, params: ModelParams):
    """Return ``(nu_T, mu_T)`` with ``nu_T = l sqrt(k)`` and ``mu_T = nu_T / nu``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise DomainError("negative turbulent kinetic energy")
    nu_t = params.l * np.sqrt(k)
    return nu_t, nu_t / params.nu


# -- state checks and thermodynamic reconstruction --------------------------

def reconstructed_pressure(U, params: ModelParams):
    return params.eos.p0 + params.eps * np.asarray(U)[..., PHI]


def check_rescaled(U, params: ModelParams):
    U = np.asarray(U, dtype=float)
    if U.shape[-1:] != (NVAR,):
        raise StateError(f"state must have trailing length {NVAR}, got {U.shape}")
    if not np.all(np.isfinite(U)):
        raise StateError("non-finite state")
    if np.any(reconstructed_pressure(U, params) <= 0):
        raise StateError("reconstructed pressure must be > 0")
    if np.any(U[..., K] < 0):
        raise StateError("negative turbulent kinetic energy")
    return U


def check_physical(W, params: ModelParams):
    W = np.asarray(W, dtype=float)
    if W.shape[-1:] != (NVAR,):
        raise StateError(f"state must have trailing length {NVAR}, got {W.shape}")
    if not np.all(np.isfinite(W)):
        raise StateError("non-finite state")
    if np.any(W[..., RHO] <= 0):
        raise StateError("density must be > 0")
    if np.any(W[..., K] < 0):
        raise StateError("negative turbulent kinetic energy")
    return W


def rho_q(U, params: ModelParams):
    """Density and compressibility coefficient reconstructed from ``phi``."""
    p = reconstructed_pressure(U, params)
    return density_from_pressure(p, params.eos), q_of_p(p, params.eos)


# -- scaling ---------------------------------------------------------------

def _eps(params, eps):
    eps = params.eps if eps is None else eps
    if not eps > 0:
        raise DomainError("eps must be > 0")
    return eps


def scale_map(W, params: ModelParams, eps=None):
    """Physical state -> rescaled state at Mach scale ``eps``."""
    eps = _eps(params, eps)
    W = check_physical(W, params)
    U = np.empty_like(W)
    U[..., PHI] = (pressure(W[..., RHO], params.eos) - params.eos.p0) / eps
    U[..., VEL] = W[..., VEL] / eps
    U[..., K] = W[..., K] / eps**2
    U[..., Y] = W[..., Y] / math.sqrt(eps)
    _, mu_t = eddy_viscosity(U[..., K], params)
    U[..., SIG] = (mu_t[..., None] + 1.0) * W[..., SIG] / eps**1.5
    return U


def unscale_map(U, params: ModelParams, eps=None):
    """Rescaled state -> physical state; inverse of :func:`scale_map`."""
    eps = _eps(params, eps)
    U = np.asarray(U, dtype=float)
    if np.any(params.eos.p0 + eps * U[..., PHI] <= 0):
        raise StateError("reconstructed pressure must be > 0")
    W = np.empty_like(U)
    W[..., RHO] = density_from_pressure(params.eos.p0 + eps * U[..., PHI], params.eos)
    W[..., VEL] = eps * U[..., VEL]
    W[..., K] = eps**2 * U[..., K]
    W[..., Y] = math.sqrt(eps) * U[..., Y]
    _, mu_t = eddy_viscosity(U[..., K], params)
    W[..., SIG] = eps**1.5 * U[..., SIG] / (mu_t[..., None] + 1.0)
    return W



# -- quasilinear structure -------------------------------------------------

def _c_matrix(zeta):
    """3x6 divergence block: ``(C s)_i = sum_a zeta_a s_ia``."""
    z1, z2, z3 = (zeta[..., i] for i in range(3))
    C = np.zeros(zeta.shape[:-1] + (3, 6))
    C[..., 0, 0], C[..., 0, 1], C[..., 0, 2] = z1, z2, z3
    C[..., 1, 1], C[..., 1, 3], C[..., 1, 4] = z1, z2, z3
    C[..., 2, 2], C[..., 2, 4], C[..., 2, 5] = z1, z2, z3
    return C


def _d_matrix(zeta):
    """6x3 strain block: ``(D v)_ij = (zeta_j v_i + zeta_i v_j) / 2``."""
    z1, z2, z3 = (zeta[..., i] for i in range(3))
    D = np.zeros(zeta.shape[:-1] + (6, 3))
    D[..., 0, 0] = z1
    D[..., 1, 0], D[..., 1, 1] = 0.5 * z2, 0.5 * z1
    D[..., 2, 0], D[..., 2, 2] = 0.5 * z3, 0.5 * z1
    D[..., 3, 1] = z2
    D[..., 4, 1], D[..., 4, 2] = 0.5 * z3, 0.5 * z2
    D[..., 5, 2] = z3
    return D


def flux_jacobian(U, zeta, params: ModelParams):
    """Directional Jacobian ``sum_j A_j(U) zeta_j`` of the rescaled system."""
    U = check_rescaled(U, params)
    zeta = np.asarray(zeta, dtype=float)
    batch = np.broadcast_shapes(U.shape[:-1], zeta.shape[:-1])
    U = np.broadcast_to(U, batch + (NVAR,))
    zeta = np.broadcast_to(zeta, batch + (3,))
    eps, a1, a2, a3, xi = params.eps, params.alpha1, params.alpha2, params.alpha3, params.xi
    se = math.sqrt(eps)
    rho, q = rho_q(U, params)
    r = rho[..., None]
    z = zeta

    A = np.zeros(batch + (NVAR, NVAR))
    A[..., PHI, VEL] = z / (eps * q[..., None])
    A[..., VEL, PHI] = z / (eps * r)
    A[..., VEL, SIG] = _c_matrix(z) / (se * r[..., None])
    A[..., VEL, K] = 2.0 * z / (3.0 * r)
    A[..., SIG, VEL] = _d_matrix(z) / (se * a1 * r[..., None])
    A[..., K, VEL] = 2.0 * z / (3.0 * a2 * r)
    A[..., K, Y] = xi * z / (se * a2 * a3 * r)
    A[..., Y, K] = xi * z / (se * r)
    un = np.sum(U[..., VEL] * z, axis=-1)
    A += un[..., None, None] * np.eye(NVAR)
    return A


def symmetrizer_diagonal(U, params: ModelParams):
    U = check_rescaled(U, params)
    rho, q = rho_q(U, params)
    d = np.empty(U.shape[:-1] + (NVAR,))
    d[..., PHI] = q / rho
    d[..., VEL] = 1.0
    d[..., SIG] = params.alpha1 * SYM_WEIGHTS
    d[..., K] = params.alpha2
    d[..., Y] = 1.0 / params.alpha3
    return d


def symmetrizer(U, params: ModelParams):
    """Positive-definite diagonal ``A0`` with ``A0 A(U, zeta)`` symmetric."""
    d = symmetrizer_diagonal(U, params)
    return d[..., :, None] * np.eye(NVAR)


def source(U, params: ModelParams):
    """Relaxation source ``Q(U)``; vanishes when sigma, k and y are zero."""
    U = np.asarray(U, dtype=float)
    eps = params.eps
    nu_t, _ = eddy_viscosity(U[..., K], params)
    tau = nu_t + params.nu
    sig = U[..., SIG]
    Q = np.zeros_like(U)
    Q[..., SIG] = -sig / (eps * params.alpha1 * tau[..., None])
    Q[..., K] = (2.0 * params.beta / (eps * params.alpha2) * nu_t / tau**2 * sym_contract(sig)
                 - params.beta * params.c_d / (params.alpha2 * params.l) * U[..., K] ** 1.5)
    Q[..., Y] = -U[..., Y] / (eps * params.alpha3 * tau[..., None])
    return Q


# -- entropy structure (physical variables) --------------------------------

def dissipation_matrix(W, params: ModelParams):
    """10x10 dissipation matrix over (sigma, k, y).

    The sigma block is the plain identity and the coupling column holds the
    raw 6-vector sigma, so positive definiteness is governed by the plain
    Euclidean norm of sigma; :func:`pd_constraint` uses the (larger)
    weighted norm and is therefore a sufficient condition.
    """
    W = check_physical(W, params)
    rho, k, sig = W[..., RHO], W[..., K], W[..., SIG]
    nu, beta = params.nu, params.beta
    nu_t, mu_t = eddy_viscosity(k, params)
    M = np.zeros(W.shape[:-1] + (10, 10))
    a = rho / (nu * (mu_t + 1.0)) * (1.0 + 2.0 * beta * nu_t * k / nu)
    M[..., :6, :6] = a[..., None, None] * np.eye(6)
    b = -2.0 * beta * rho * nu_t / (nu**2 * (mu_t + 1.0))
    M[..., :6, 6] = b[..., None] * sig
    M[..., 6, :6] = b[..., None] * sig
    M[..., 6, 6] = params.c_d * beta * rho * nu_t / params.l**2
    M[..., 7:, 7:] = (rho / (nu + nu_t))[..., None, None] * np.eye(3)
    return M


def pd_threshold(k, params: ModelParams):
    """Largest weighted ``|sigma|^2`` still satisfying :func:`pd_constraint` (inf when nu_T=0)."""
    nu_t, _ = eddy_viscosity(k, params)
    nu, beta = params.nu, params.beta
    rhs = params.c_d * (1.0 + 2.0 * beta * nu_t * np.asarray(k) / nu)
    coeff = 4.0 * beta * nu_t * params.l**2 / (nu**2 * (nu_t + nu))
    with np.errstate(divide="ignore"):
        return np.where(coeff > 0, rhs / np.where(coeff > 0, coeff, 1.0), np.inf)


def pd_constraint(W, params: ModelParams):
    W = check_physical(W, params)
    k = W[..., K]
    nu_t, _ = eddy_viscosity(k, params)
    nu, beta = params.nu, params.beta
    lhs = 4.0 * beta * nu_t * params.l**2 / (nu**2 * (nu_t + nu)) * sym_contract(W[..., SIG])
    return lhs < params.c_d * (1.0 + 2.0 * beta * nu_t * k / nu)


def cdf_variables(W, params: ModelParams):
    """Return ``(C, w)`` from ``(mu_T + 1) sigma = -C / alpha1`` and ``k = -w / alpha2``."""
    W = check_physical(W, params)
    _, mu_t = eddy_viscosity(W[..., K], params)
    C = -params.alpha1 * (mu_t[..., None] + 1.0) * W[..., SIG]
    w = -params.alpha2 * W[..., K]
    return C, w


def specific_entropy(v, u, C, w, y, params: ModelParams):
    """Quadratic non-equilibrium specific entropy in CDF variables."""
    u, C, y = (np.asarray(a, dtype=float) for a in (u, C, y))
    return (s_eq(v, params.eos)
            - 0.5 * np.sum(u * u, axis=-1)
            - sym_contract(C) / (2.0 * params.alpha1)
            - np.asarray(w) ** 2 / (2.0 * params.alpha2)
            - np.sum(y * y, axis=-1) / (2.0 * params.alpha3))


def entropy(W, params: ModelParams):
    """Entropy density ``eta = rho s``."""
    W = check_physical(W, params)
    C, w = cdf_variables(W, params)
    rho = W[..., RHO]
    return rho * specific_entropy(1.0 / rho, W[..., VEL], C, w, W[..., Y], params)


def entropy_variables(W, params: ModelParams):
    """``theta = ((mu_T + 1) sigma, k, -y / alpha3)``, the argument of M."""
    W = check_physical(W, params)
    _, mu_t = eddy_viscosity(W[..., K], params)
    theta = np.empty(W.shape[:-1] + (10,))
    theta[..., :6] = (mu_t[..., None] + 1.0) * W[..., SIG]
    theta[..., 6] = W[..., K]
    theta[..., 7:] = -W[..., Y] / params.alpha3
    return theta


def entropy_production(W, params: ModelParams):
    """Entropy production ``theta . M theta`` with M from :func:`dissipation_matrix`."""
    theta = entropy_variables(W, params)
    M = dissipation_matrix(W, params)
    return np.einsum("...i,...ij,...j->...", theta, M, theta)


def production_rhs(W, params: ModelParams):
    """Relaxation right-hand sides the dissipation matrix is meant to generate.

    Returns the 10-vector ``(rho sigma / nu, -2 beta rho nu_T / nu^2 sigma:sigma
    + beta C_D rho k^{3/2} / l, rho (-y/alpha3) / (nu + nu_T))``. It agrees
    with ``M @ theta`` only where ``mu_T = 0``.
    """
    W = check_physical(W, params)
    rho, k, sig = W[..., RHO], W[..., K], W[..., SIG]
    nu_t, _ = eddy_viscosity(k, params)
    out = np.empty(W.shape[:-1] + (10,))
    out[..., :6] = rho[..., None] * sig / params.nu
    out[..., 6] = (-2.0 * params.beta * rho * nu_t / params.nu**2 * sym_contract(sig)
                   + params.beta * params.c_d * rho / params.l * k**1.5)
    out[..., 7:] = rho[..., None] * (-W[..., Y] / params.alpha3) / (params.nu + nu_t)[..., None]
    return out


# -- wave speeds -----------------------------------------------------------

def symmetrized_jacobian(U, n, params: ModelParams):
    """``A0^{1/2} A A0^{-1/2}``; symmetric, same spectrum as ``A``."""
    A = flux_jacobian(U, n, params)
    d = symmetrizer_diagonal(np.broadcast_to(U, A.shape[:-1]), params)
    if not np.all(d > 0):
        raise NumericalError("symmetrizer is not positive definite")
    s = np.sqrt(d)
    return s[..., :, None] * A / s[..., None, :]


def eigenvalues(U, n, params: ModelParams, imag_tol=1e-10):
    """Sorted real spectrum of ``A(U, n)``.

    Raises :class:`NumericalError` if the symmetrized matrix has eigenvalues
    with imaginary part above ``imag_tol``.
    """
    S = symmetrized_jacobian(U, n, params)
    try:
        lam = np.linalg.eigvals(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-solve failed: {exc}") from exc
    if np.any(np.abs(lam.imag) > imag_tol):
        raise NumericalError("complex wave speeds")
    if not np.all(np.isfinite(lam.real)):
        raise NumericalError("non-finite wave speed")
    return np.sort(lam.real, axis=-1)


def max_wave_speed(U, n, params: ModelParams):
    """Spectral radius of ``A(U, n)`` for a unit direction ``n``."""
    n = np.asarray(n, dtype=float)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-12):
        raise DomainError("direction must be a unit vector")
    return np.max(np.abs(eigenvalues(U, n, params)), axis=-1)


def max_wave_speed_closed_form(U, n, params: ModelParams):
    """Closed-form spectral radius for a unit direction ``n``.

    Only the (phi, u.n, sigma_nn, k, y.n) subsystem reaches the fastest
    speed; its nonzero eigenvalues ``mu`` of ``(A - u.n I)`` satisfy
    ``mu^4 - S mu^2 + (a + b) d = 0``.
    """
    U = np.asarray(U, dtype=float)
    n = np.asarray(n, dtype=float)
    rho, q = rho_q(U, params)
    eps = params.eps
    a = 1.0 / (eps**2 * q * rho)
    b = 1.0 / (eps * params.alpha1 * rho**2)
    c = 4.0 / (9.0 * params.alpha2 * rho**2)
    d = params.xi**2 / (eps * params.alpha2 * params.alpha3 * rho**2)
    s = a + b + c + d
    disc = np.sqrt(np.maximum(s * s - 4.0 * (a + b) * d, 0.0))
    return np.abs(np.sum(U[..., VEL] * n, axis=-1)) + np.sqrt(0.5 * (s + disc))
