"""Pure-Python/numpy versions of the hot kernels (fallback for ``_core``)."""
import numpy as np
from scipy.linalg import solve_banded


def hermite_functions(n_max, y):
    """Normalized Hermite functions phi_0..phi_n_max at points y.

    phi_n(y) = H_n(y) exp(-y^2/2) / sqrt(2^n n! sqrt(pi)), via the stable
    three-term recurrence so no factorials are formed.
    """
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    out = np.empty((n_max + 1, y.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * y * y)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for n in range(2, n_max + 1):
        out[n] = np.sqrt(2.0 / n) * y * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out


def cn_evolve(psi0, x, dx, hbar, dt, coefs):
    """Crank-Nicolson steps for a tridiagonal quadratic Hamiltonian.

    ``coefs[k]`` holds (M, a, b/M, M c / 2, d, b^2/(2M) - f) at the midpoint
    of step k.  Homogeneous Dirichlet edges.
    """
    psi = np.array(psi0, dtype=np.complex128)
    x = np.asarray(x, dtype=np.float64)
    n = psi.size
    xm = 0.5 * (x[:-1] + x[1:])
    tau = 0.5 * dt / hbar
    ab = np.zeros((3, n), dtype=np.complex128)
    for M, a, bm, half_mc, d, e0 in np.asarray(coefs, dtype=np.float64):
        kin = hbar * hbar / (2.0 * M * dx * dx)
        diag = 2.0 * kin + half_mc * x * x + d * x + e0
        up = -kin + 1j * hbar * (a * xm + 0.5 * bm) / dx
        lo = np.conj(up)
        hpsi = diag * psi
        hpsi[:-1] += up * psi[1:]
        hpsi[1:] += lo * psi[:-1]
        rhs = psi - 1j * tau * hpsi
        ab[0, 1:] = 1j * tau * up
        ab[1] = 1.0 + 1j * tau * diag
        ab[2, :-1] = 1j * tau * lo
        psi = solve_banded((1, 1), ab, rhs, overwrite_b=True, check_finite=False)
    return psi
