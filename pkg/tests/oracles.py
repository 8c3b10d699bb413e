"""Independent reference computations used by the tests.

Nothing here imports the package's numerics; every value is rebuilt from
textbook formulas, scipy.linalg.expm or brute force.
"""

import cmath
import math

import numpy as np
import scipy.linalg


def spin_matrices(two_I):
    """(Ix, Iy, Iz) from <m+1|I+|m> = sqrt(I(I+1) - m(m+1)), basis m = I, I-1, ..., -I."""
    I = two_I / 2
    ms = [I - k for k in range(two_I + 1)]
    n = len(ms)
    ip = np.zeros((n, n), dtype=complex)
    for col, m in enumerate(ms):
        row = col - 1  # m + 1 sits one row up
        if row >= 0:
            ip[row, col] = math.sqrt(I * (I + 1) - m * (m + 1))
    im = ip.conj().T
    ix = (ip + im) / 2
    iy = (ip - im) / 2j
    iz = np.diag(ms).astype(complex)
    return ix, iy, iz


def quadrupole(two_I):
    I = two_I / 2
    iz = spin_matrices(two_I)[2]
    return iz @ iz - I * (I + 1) / 3 * np.eye(two_I + 1)


def qft(n):
    f = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            f[j, k] = cmath.exp(2j * math.pi * j * k / n) / math.sqrt(n)
    return f


def expm(h, t=1.0):
    return scipy.linalg.expm(-1j * t * np.asarray(h, dtype=complex))


def pulse_unitary(ux, uy, total_time, two_I):
    """Time-ordered product with scipy's expm, last step leftmost."""
    ix, iy, _ = spin_matrices(two_I)
    hq = quadrupole(two_I)
    dt = total_time / len(ux)
    u = np.eye(two_I + 1, dtype=complex)
    for a, b in zip(ux, uy):
        u = expm(hq + a * ix + b * iy, dt) @ u
    return u


def j1(u, ref):
    n = u.shape[0]
    return 0.5 - np.real(np.trace(ref.conj().T @ u)) / (2 * n)


def j2(u, ref):
    n = u.shape[0]
    return 1 - abs(np.trace(ref.conj().T @ u)) / n


def fd_gradient(f, x, h=1e-6):
    g = np.empty_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def phases_from_det(u):
    """All phi in [0, 2 pi) solving det(exp(i phi) U) = 1."""
    n = u.shape[0]
    d = np.linalg.det(u)
    out = []
    for p in range(n):
        # det(e^{i phi} U) = e^{i n phi} det U = 1
        phi = (-cmath.phase(d) + 2 * math.pi * p) / n
        out.append(phi % (2 * math.pi))
    return sorted(out)
