"""Gate logarithms, eigenvalue-shift families and global phases.

A gate ``U_G = exp(-i K)`` has many logarithms: adding ``2 pi m_k`` to any
eigenvalue of ``K`` leaves the exponential unchanged but changes
``Tr K``. Removing the trace gives a traceless effective Hamiltonian whose
evolution reproduces ``U_G`` only up to the phase ``exp(i Phi_m)``, with
``Phi_m = Tr K_m / N``.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import dagger

TWO_PI = 2 * math.pi
MAX_ENUMERATION_BITS = 20


@dataclass(frozen=True, eq=False)
class GateLog:
    """``K = P diag(lambdas) P^dagger`` with ``exp(-i K) = U_G``.

    ``gate_log`` always returns the principal branch, lambdas in [0, 2 pi).
    ``basis`` records how ``p_basis`` was obtained, because for degenerate
    gates the eigenvectors inside an eigenspace are a choice.
    """

    k_matrix: np.ndarray = field(repr=False)
    p_basis: np.ndarray = field(repr=False)
    lambdas: np.ndarray
    basis: str = "schur"

    @property
    def dim(self):
        return len(self.lambdas)

    def projector(self, k):
        col = self.p_basis[:, k]
        return np.outer(col, col.conj())


@dataclass(frozen=True, eq=False)
class PhaseFamily:
    shifts: tuple
    phi_m: float
    h_eff: np.ndarray = field(repr=False)
    global_phase: float
    total_time: float

    def unitary(self):
        """``exp(-i T h_eff)``, equal to ``exp(i Phi_m) U_G``."""
        w, v = np.linalg.eigh(self.total_time * self.h_eff)
        return (v * np.exp(-1j * w)) @ dagger(v)


def _principal(angles):
    lam = np.mod(angles, TWO_PI)
    # eigenvalue 1 can come back as -1e-17 -> 2 pi
    lam[np.isclose(lam, TWO_PI, rtol=0, atol=1e-12)] = 0.0
    return lam


def gate_log(gate):
    """Principal-branch logarithm of a unitary gate.

    The eigenbasis comes from the complex Schur form, which for a normal
    matrix is diagonal with a unitary ``P`` even on degenerate eigenspaces.
    Columns are ordered by ascending eigenphase (stable, so the Schur order
    decides ties).
    """
    u = getattr(gate, "matrix", gate)
    t, p = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    lam = _principal(-np.angle(np.diag(t)))
    order = np.argsort(lam, kind="stable")
    lam, p = lam[order], p[:, order]
    k = (p * lam) @ dagger(p)
    k = 0.5 * (k + dagger(k))
    return GateLog(k, p, lam, basis="schur")


def phase_set(gate):
    """``phi_0`` and the N admissible global phases ``phi_0 + 2 pi p / N`` (mod 2 pi), ascending.

    ``phi_0`` is the smallest non-negative angle with ``det(exp(i phi_0) U_G) = 1``.
    """
    u = np.asarray(getattr(gate, "matrix", gate))
    n = u.shape[0]
    step = TWO_PI / n
    phi0 = float(np.mod(-np.angle(np.linalg.det(u)) / n, step))
    if math.isclose(phi0, step, abs_tol=1e-12):
        phi0 = 0.0
    phases = [float(np.mod(phi0 + step * p, TWO_PI)) for p in range(n)]
    return phi0, sorted(phases)


def effective_hamiltonian(log, shifts, total_time=1.0):
    shifts = tuple(int(m) for m in shifts)
    n = log.dim
    if len(shifts) != n:
        raise ValueError(f"need {n} shifts, got {len(shifts)}")
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    km = log.k_matrix + sum(TWO_PI * m * log.projector(k) for k, m in enumerate(shifts) if m)
    phi_m = (float(np.sum(log.lambdas)) + TWO_PI * sum(shifts)) / n
    h = (km - phi_m * np.eye(n)) / total_time
    h = 0.5 * (h + dagger(h))
    return PhaseFamily(shifts, phi_m, h, float(np.mod(phi_m, TWO_PI)), float(total_time))


def enumerate_families(log, max_abs_m=1, total_time=1.0):
    """Every shift vector with entries in ``[-max_abs_m, max_abs_m]``."""
    if max_abs_m < 0:
        raise ValueError("max_abs_m must be >= 0")
    bits = log.dim * math.log2(2 * max_abs_m + 1)
    if bits > MAX_ENUMERATION_BITS:
        raise ValueError(f"enumeration of {bits:.1f} bits exceeds the {MAX_ENUMERATION_BITS}-bit guard")
    rng = range(-max_abs_m, max_abs_m + 1)
    return [effective_hamiltonian(log, m, total_time) for m in itertools.product(rng, repeat=log.dim)]


def group_by_phase(families, phases, tol=1e-9):
    """Map each admissible phase to the families realizing it."""
    out = {p: [] for p in phases}
    for fam in families:
        for p in phases:
            d = abs(fam.global_phase - p)
            if min(d, TWO_PI - d) < tol:
                out[p].append(fam)
                break
        else:
            raise ValueError(f"family {fam.shifts} has phase {fam.global_phase} outside the phase set")
    return out


def spectral_norm_time(family):
    """Largest |eigenvalue| of ``T h_eff``."""
    return float(np.abs(np.linalg.eigvalsh(family.total_time * family.h_eff)).max())
