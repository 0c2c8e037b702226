# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contract as :mod:`hyperturb._kernels_py`."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, fabs

cnp.import_array()

NAME = "cython"

cdef int[3][3] SI = [[0, 1, 2], [1, 3, 4], [2, 4, 5]]


cdef inline double _speed(const double[::1] u, int axis, double eps, double a1, double a2,
                          double a3, double xi, double p0, double c2) nogil:
    cdef double rho = (p0 + eps * u[0]) / c2
    cdef double q = 1.0 / (rho * c2)
    cdef double r2 = rho * rho
    cdef double a = 1.0 / (eps * eps * q * rho)
    cdef double b = 1.0 / (eps * a1 * r2)
    cdef double c = 4.0 / (9.0 * a2 * r2)
    cdef double d = xi * xi / (eps * a2 * a3 * r2)
    cdef double s = a + b + c + d
    cdef double disc = s * s - 4.0 * (a + b) * d
    if disc < 0.0:
        disc = 0.0
    return fabs(u[1 + axis]) + sqrt(0.5 * (s + sqrt(disc)))


def wave_speed(U, int axis, consts):
    cdef double eps = consts[0], a1 = consts[1], a2 = consts[2], a3 = consts[3]
    cdef double xi = consts[4], p0 = consts[9], c2 = consts[10]
    cdef double[:, :, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(nx):
            for j in range(ny):
                o[i, j] = _speed(u[i, j], axis, eps, a1, a2, a3, xi, p0, c2)
    return out


cdef void _fluct(const double[::1] ul, const double[::1] ur, int axis, double lam,
                 double diss, double eps, double se, double a1, double a2, double a3,
                 double xi, double p0, double c2, double* dm, double* dp) nogil:
    """Left (dm) and right (dp) going fluctuations across one interface."""
    cdef double du[14]
    cdef double ad[14]
    cdef double phim = 0.5 * (ul[0] + ur[0])
    cdef double rho = (p0 + eps * phim) / c2
    cdef double inv_r = 1.0 / rho
    cdef double q = 1.0 / (rho * c2)
    cdef double un = 0.5 * (ul[1 + axis] + ur[1 + axis])
    cdef double cs = inv_r / (se * a1)
    cdef int n, i, j
    for n in range(14):
        du[n] = ur[n] - ul[n]
        ad[n] = un * du[n]
    ad[0] += du[1 + axis] / (eps * q)
    ad[1 + axis] += du[0] * inv_r / eps + (2.0 / 3.0) * inv_r * du[10]
    for i in range(3):
        ad[1 + i] += du[4 + SI[i][axis]] * inv_r / se
    for i in range(3):
        for j in range(i, 3):
            if i == axis and j == axis:
                ad[4 + SI[i][j]] += cs * du[1 + axis]
            elif i == axis:
                ad[4 + SI[i][j]] += cs * (0.5 * du[1 + j])
            elif j == axis:
                ad[4 + SI[i][j]] += cs * (0.5 * du[1 + i])
    ad[10] += (2.0 / (3.0 * a2)) * inv_r * du[1 + axis] + xi / (se * a2 * a3) * inv_r * du[11 + axis]
    ad[11 + axis] += xi / se * inv_r * du[10]
    cdef double v = diss * lam
    for n in range(14):
        dm[n] = 0.5 * (ad[n] - v * du[n])
        dp[n] = 0.5 * (ad[n] + v * du[n])


def hyperbolic_rhs(U, inv_dx, consts, double dissipation=1.0):
    cdef double eps = consts[0], a1 = consts[1], a2 = consts[2], a3 = consts[3]
    cdef double xi = consts[4], p0 = consts[9], c2 = consts[10]
    cdef double se = sqrt(eps)
    cdef double[:, :, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j, ir, jr
    cdef double hx = inv_dx[0]
    cdef double hy = inv_dx[1] if len(inv_dx) > 1 else 0.0
    out = np.zeros((nx, ny, 14))
    cdef double[:, :, ::1] L = out
    cdef double dm[14]
    cdef double dp[14]
    cdef double lam, l0, l1
    cdef int n
    with nogil:
        if nx > 1:
            for i in range(nx):
                ir = i + 1 if i + 1 < nx else 0
                for j in range(ny):
                    lam = 0.0
                    if dissipation != 0.0:
                        l0 = _speed(u[i, j], 0, eps, a1, a2, a3, xi, p0, c2)
                        l1 = _speed(u[ir, j], 0, eps, a1, a2, a3, xi, p0, c2)
                        lam = l0 if l0 > l1 else l1
                    _fluct(u[i, j], u[ir, j], 0, lam, dissipation, eps, se, a1, a2, a3,
                           xi, p0, c2, dm, dp)
                    for n in range(14):
                        L[i, j, n] -= hx * dm[n]
                        L[ir, j, n] -= hx * dp[n]
        if ny > 1:
            for i in range(nx):
                for j in range(ny):
                    jr = j + 1 if j + 1 < ny else 0
                    lam = 0.0
                    if dissipation != 0.0:
                        l0 = _speed(u[i, j], 1, eps, a1, a2, a3, xi, p0, c2)
                        l1 = _speed(u[i, jr], 1, eps, a1, a2, a3, xi, p0, c2)
                        lam = l0 if l0 > l1 else l1
                    _fluct(u[i, j], u[i, jr], 1, lam, dissipation, eps, se, a1, a2, a3,
                           xi, p0, c2, dm, dp)
                    for n in range(14):
                        L[i, j, n] -= hy * dm[n]
                        L[i, jr, n] -= hy * dp[n]
    return out


def relax(U, double dt, consts, int n_sub):
    cdef double eps = consts[0], a1 = consts[1], a2 = consts[2], a3 = consts[3]
    cdef double beta = consts[5], c_d = consts[6], l = consts[7], nu = consts[8]
    cdef double[:, :, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j
    out = np.array(u, copy=True)
    cdef double[:, :, ::1] o = out
    cdef double k0, nu_t, tau, t1, ds, dy, ss0, gain, damp, h, k, kp, f0, f1, e0, e1, r
    cdef int n, m
    cdef Py_ssize_t clamped = 0
    cdef bint hit
    damp = beta * c_d / (a2 * l)
    h = dt / n_sub
    with nogil:
        for i in range(nx):
            for j in range(ny):
                k0 = u[i, j, 10]
                nu_t = l * sqrt(k0)
                tau = nu_t + nu
                t1 = eps * a1 * tau
                ds = exp(-dt / t1)
                dy = exp(-dt / (eps * a3 * tau))
                for n in range(4, 10):
                    o[i, j, n] = u[i, j, n] * ds
                for n in range(11, 14):
                    o[i, j, n] = u[i, j, n] * dy
                ss0 = (u[i, j, 4] * u[i, j, 4] + 2.0 * u[i, j, 5] * u[i, j, 5]
                       + 2.0 * u[i, j, 6] * u[i, j, 6] + u[i, j, 7] * u[i, j, 7]
                       + 2.0 * u[i, j, 8] * u[i, j, 8] + u[i, j, 9] * u[i, j, 9])
                if ss0 == 0.0:
                    k = 1.0 + 0.5 * damp * sqrt(k0) * dt
                    o[i, j, 10] = k0 / (k * k)
                    continue
                gain = 2.0 * beta / (eps * a2) * nu_t / (tau * tau) * ss0
                k = k0
                hit = False
                r = exp(-2.0 * h / t1)
                e1 = 1.0
                for m in range(n_sub):
                    e0 = e1
                    e1 = e0 * r
                    f0 = gain * e0 - damp * sqrt(k) * sqrt(k) * sqrt(k)
                    kp = k + h * f0
                    if kp < 0.0:
                        kp = 0.0
                        hit = True
                    f1 = gain * e1 - damp * sqrt(kp) * sqrt(kp) * sqrt(kp)
                    k = k + 0.5 * h * (f0 + f1)
                    if k < 0.0:
                        k = 0.0
                        hit = True
                o[i, j, 10] = k
                if hit:
                    clamped += 1
    return out, int(clamped)
