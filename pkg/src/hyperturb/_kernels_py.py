"""Pure-numpy kernels; reference implementation for the compiled backend.

Fields are ``(nx, ny, 14)`` float64 arrays (``ny == 1`` in 1D). ``consts``
is the tuple produced by :func:`hyperturb.kernels.pack_consts`:
``(eps, alpha1, alpha2, alpha3, xi, beta, c_d, l, nu, p0, c2)``.
"""
import math

import numpy as np

NAME = "numpy"


def _rho_q(phi, eps, p0, c2):
    p = p0 + eps * phi
    rho = p / c2
    return rho, 1.0 / (rho * c2)


def wave_speed(U, axis, consts):
    """Closed-form spectral radius of ``A(U, e_axis)``."""
    eps, a1, a2, a3, xi, beta, c_d, l, nu, p0, c2 = consts
    rho, q = _rho_q(U[..., 0], eps, p0, c2)
    a = 1.0 / (eps * eps * q * rho)
    r2 = rho * rho
    b = 1.0 / (eps * a1 * r2)
    c = 4.0 / (9.0 * a2 * r2)
    d = xi * xi / (eps * a2 * a3 * r2)
    s = a + b + c + d
    disc = np.sqrt(np.maximum(s * s - 4.0 * (a + b) * d, 0.0))
    return np.abs(U[..., 1 + axis]) + np.sqrt(0.5 * (s + disc))


# sigma 6-vector position of (i, a)
_SI = ((0, 1, 2), (1, 3, 4), (2, 4, 5))


def jacobian_apply(Um, V, axis, consts):
    """``A(Um, e_axis) @ V`` without forming the matrix."""
    eps, a1, a2, a3, xi, beta, c_d, l, nu, p0, c2 = consts
    se = math.sqrt(eps)
    rho, q = _rho_q(Um[..., 0], eps, p0, c2)
    un = Um[..., 1 + axis]
    out = un[..., None] * V
    inv_r = 1.0 / rho
    out[..., 0] += V[..., 1 + axis] / (eps * q)
    out[..., 1 + axis] += V[..., 0] * inv_r / eps + (2.0 / 3.0) * inv_r * V[..., 10]
    for i in range(3):
        out[..., 1 + i] += V[..., 4 + _SI[i][axis]] * inv_r / se
    cs = inv_r / (se * a1)
    # (D v)_ij = (delta_ja v_i + delta_ia v_j) / 2
    for i in range(3):
        for j in range(i, 3):
            if i == j == axis:
                s = V[..., 1 + axis]
            elif i == axis:
                s = 0.5 * V[..., 1 + j]
            elif j == axis:
                s = 0.5 * V[..., 1 + i]
            else:
                continue
            out[..., 4 + _SI[i][j]] += cs * s
    out[..., 10] += (2.0 / (3.0 * a2)) * inv_r * V[..., 1 + axis] \
        + xi / (se * a2 * a3) * inv_r * V[..., 11 + axis]
    out[..., 11 + axis] += xi / se * inv_r * V[..., 10]
    return out


def hyperbolic_rhs(U, inv_dx, consts, dissipation=1.0):
    """Semi-discrete path-conservative operator ``L(U)``.

    Per interface the fluctuations are ``D(+-) = (A(U_avg) dU +- s lambda dU) / 2``
    with ``s = dissipation``; ``s = 1`` is local Lax-Friedrichs (Rusanov),
    ``s = 0`` the centred scheme.
    """
    L = np.zeros_like(U)
    for axis in (0, 1):
        if U.shape[axis] == 1:
            continue
        Ur = np.roll(U, -1, axis=axis)
        dU = Ur - U
        AdU = jacobian_apply(0.5 * (U + Ur), dU, axis, consts)
        if dissipation:
            lam = wave_speed(U, axis, consts)
            lam = np.maximum(lam, np.roll(lam, -1, axis=axis))
            visc = (dissipation * lam)[..., None] * dU
            d_minus = 0.5 * (AdU - visc)
            d_plus = 0.5 * (AdU + visc)
        else:
            d_minus = d_plus = 0.5 * AdU
        L -= inv_dx[axis] * (d_minus + np.roll(d_plus, 1, axis=axis))
    return L


def relax(U, dt, consts, n_sub):
    """Exact sigma/y decay with frozen nu_T; Heun sub-steps (or exact) for k.

    Returns ``(new_field, n_clamped)`` where ``n_clamped`` counts cells whose
    k hit zero inside the sub-stepping.
    """
    eps, a1, a2, a3, xi, beta, c_d, l, nu, p0, c2 = consts
    out = U.copy()
    k0 = U[..., 10]
    nu_t = l * np.sqrt(k0)
    tau = nu_t + nu
    t1 = eps * a1 * tau
    out[..., 4:10] = U[..., 4:10] * np.exp(-dt / t1)[..., None]
    out[..., 11:14] = U[..., 11:14] * np.exp(-dt / (eps * a3 * tau))[..., None]

    s = U[..., 4:10]
    ss0 = s[..., 0]**2 + 2.0 * s[..., 1]**2 + 2.0 * s[..., 2]**2 \
        + s[..., 3]**2 + 2.0 * s[..., 4]**2 + s[..., 5]**2
    gain = 2.0 * beta / (eps * a2) * nu_t / (tau * tau) * ss0
    damp = beta * c_d / (a2 * l)
    # closed form of dk/dt = -damp k^{3/2}
    exact = k0 / (1.0 + 0.5 * damp * np.sqrt(k0) * dt) ** 2

    h = dt / n_sub
    k = k0.copy()
    hit = np.zeros(k.shape, dtype=bool)
    # production decays like exp(-2 t / t1); stepped as a geometric sequence
    r = np.exp(-2.0 * h / t1)
    e1 = np.ones_like(k)
    for m in range(n_sub):
        e0 = e1
        e1 = e0 * r
        sk = np.sqrt(k)
        f0 = gain * e0 - damp * (sk * sk * sk)
        kp = k + h * f0
        hit |= kp < 0.0
        kp = np.maximum(kp, 0.0)
        sk = np.sqrt(kp)
        f1 = gain * e1 - damp * (sk * sk * sk)
        k = k + 0.5 * h * (f0 + f1)
        hit |= k < 0.0
        k = np.maximum(k, 0.0)
    active = ss0 != 0.0
    out[..., 10] = np.where(active, k, exact)
    return out, int(np.count_nonzero(hit & active))
