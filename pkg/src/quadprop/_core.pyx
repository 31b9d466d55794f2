# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Hermite-function recurrence and Crank-Nicolson stepping."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, M_PI

cnp.import_array()


def hermite_functions(int n_max, y):
    cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64).ravel()
    cdef Py_ssize_t m = yy.shape[0], j
    cdef int n
    out = np.empty((n_max + 1, m))
    cdef double[:, ::1] o = out
    cdef double c0 = M_PI ** -0.25, s2 = sqrt(2.0), p, q
    for j in range(m):
        o[0, j] = c0 * exp(-0.5 * yy[j] * yy[j])
        if n_max >= 1:
            o[1, j] = s2 * yy[j] * o[0, j]
    for n in range(2, n_max + 1):
        p = sqrt(2.0 / n)
        q = sqrt((n - 1.0) / n)
        for j in range(m):
            o[n, j] = p * yy[j] * o[n - 1, j] - q * o[n - 2, j]
    return out


def cn_evolve(psi0, x, double dx, double hbar, double dt, coefs):
    cdef double complex[::1] psi = np.array(psi0, dtype=np.complex128)
    cdef double[::1] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] cf = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef Py_ssize_t n = psi.shape[0], j, k, steps = cf.shape[0]
    cdef double complex[::1] up = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] dg = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] rhs = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] cp = np.empty(n, dtype=np.complex128)
    cdef double complex itau = 1j * 0.5 * dt / hbar
    cdef double complex hpsi, lo, denom
    cdef double M, a, bm, half_mc, d, e0, kin, xm
    for k in range(steps):
        M = cf[k, 0]; a = cf[k, 1]; bm = cf[k, 2]
        half_mc = cf[k, 3]; d = cf[k, 4]; e0 = cf[k, 5]
        kin = hbar * hbar / (2.0 * M * dx * dx)
        for j in range(n):
            dg[j] = 2.0 * kin + half_mc * xx[j] * xx[j] + d * xx[j] + e0
            if j < n - 1:
                xm = 0.5 * (xx[j] + xx[j + 1])
                up[j] = -kin + 1j * hbar * (a * xm + 0.5 * bm) / dx
        # rhs = (1 - i tau H) psi
        for j in range(n):
            hpsi = dg[j] * psi[j]
            if j < n - 1:
                hpsi = hpsi + up[j] * psi[j + 1]
            if j > 0:
                hpsi = hpsi + up[j - 1].conjugate() * psi[j - 1]
            rhs[j] = psi[j] - itau * hpsi
        # Thomas sweep on (1 + i tau H)
        denom = 1.0 + itau * dg[0]
        cp[0] = itau * up[0] / denom
        rhs[0] = rhs[0] / denom
        for j in range(1, n):
            lo = itau * up[j - 1].conjugate()
            denom = 1.0 + itau * dg[j] - lo * cp[j - 1]
            if j < n - 1:
                cp[j] = itau * up[j] / denom
            rhs[j] = (rhs[j] - lo * rhs[j - 1]) / denom
        psi[n - 1] = rhs[n - 1]
        for j in range(n - 2, -1, -1):
            psi[j] = rhs[j] - cp[j] * psi[j + 1]
    return np.asarray(psi)
