"""Small dense complex linear algebra.

Every exponent in this package is a Hermitian matrix times ``-i t``, so the
matrix exponential is done through the real-eigenvalue spectral
decomposition. LAPACK (``numpy.linalg.eigh``) is used on the hot path; a
cyclic Jacobi solver is kept alongside as an independent eigen-solver.
"""

import numpy as np

TOL = 1e-10


class EigenError(RuntimeError):
    """Raised when the Jacobi iteration does not converge."""

    def __init__(self, sweeps, off_norm):
        super().__init__(f"Jacobi did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")
        self.sweeps = sweeps
        self.off_norm = off_norm


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol=TOL):
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.abs(a - dagger(a)).max() <= tol


def is_unitary(a, tol=TOL):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return np.abs(dagger(a) @ a - np.eye(a.shape[0])).max() <= tol


def is_traceless(a, tol=TOL):
    return abs(np.trace(a)) <= tol


def unitarity_error(a):
    """Max-norm of ``U^dagger U - E``."""
    return float(np.abs(dagger(a) @ a - np.eye(a.shape[-1])).max())


def eig_hermitian(h):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("eig_hermitian needs a Hermitian matrix")
    return np.linalg.eigh(h)


def jacobi_eigh(h, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi diagonalization of a small complex Hermitian matrix.

    Returns ``(w, v)`` with ``w`` ascending, matching ``eig_hermitian``.
    Raises :class:`EigenError` carrying the sweep count if the
    off-diagonal Frobenius norm stays above ``tol`` (relative to the
    matrix norm) after ``max_sweeps``.
    """
    a = np.array(h, dtype=complex)
    if not is_hermitian(a):
        raise ValueError("jacobi_eigh needs a Hermitian matrix")
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1.0)

    mask = ~np.eye(n, dtype=bool)

    def off(m):
        return np.sqrt(np.sum(np.abs(m[mask]) ** 2))

    for sweep in range(max_sweeps):
        if off(a) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                # angle zeroing the (p, q) element after removing its phase
                theta = 0.5 * np.arctan2(2.0 * mag, aqq - app)
                c, s = np.cos(theta), np.sin(theta)
                # diag(1, conj(phase)) makes the block real, then a real rotation
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[p, q] = s
                rot[q, p] = -s * np.conj(phase)
                rot[q, q] = c * np.conj(phase)
                a = dagger(rot) @ a @ rot
                v = v @ rot
    else:
        if off(a) > tol * scale:
            raise EigenError(max_sweeps, off(a))
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def expm_hermitian(h, t=1.0):
    """``exp(-i t H)`` for Hermitian ``H``."""
    w, v = eig_hermitian(h)
    return (v * np.exp(-1j * t * w)) @ dagger(v)


def expm_hermitian_batch(hs, t=1.0):
    """Batched ``exp(-i t H_s)`` over a stack of Hermitian matrices.

    Returns ``(U, w, v)`` so callers can reuse the eigendecomposition.
    No Hermiticity check; callers build the stack from Hermitian parts.
    """
    w, v = np.linalg.eigh(hs)
    u = (v * np.exp(-1j * t * w)[..., None, :]) @ dagger(v)
    return u, w, v
