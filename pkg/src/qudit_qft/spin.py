"""Spin-I operators, the quadrupole Hamiltonian and target gates.

Units: hbar = 1, frequencies in units of the quadrupole constant q, times in
1/q. The rf carrier is on resonance, so the ``(w_f - w_0) I_z`` term is
absent.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import is_unitary


@dataclass(frozen=True, eq=False)
class SpinSystem:
    two_I: int
    ix: np.ndarray = field(repr=False)
    iy: np.ndarray = field(repr=False)
    iz: np.ndarray = field(repr=False)
    hq: np.ndarray = field(repr=False)

    @property
    def spin(self):
        return self.two_I / 2

    @property
    def dim(self):
        return self.two_I + 1


@dataclass(frozen=True, eq=False)
class GateTarget:
    matrix: np.ndarray = field(repr=False)
    label: str = "gate"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError("gate matrix must be square with dim >= 2")
        if not is_unitary(m, 1e-12):
            raise ValueError(f"gate {self.label!r} is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def with_phase(self, phi):
        """The same gate multiplied by ``exp(i phi)``."""
        return GateTarget(np.exp(1j * phi) * self.matrix, f"{self.label}*exp(i{phi:.6g})")


def make_spin_system(two_I):
    """Angular-momentum operators and ``H_q = I_z^2 - I(I+1)/3`` for spin ``two_I/2``.

    Basis order is ``|I_z = I>, |I_z = I-1>, ..., |I_z = -I>``.
    """
    if int(two_I) != two_I or two_I <= 0:
        raise ValueError(f"two_I must be a positive integer, got {two_I!r}")
    two_I = int(two_I)
    s = two_I / 2
    m = s - np.arange(two_I + 1)
    # <m+1| I_+ |m> = sqrt(I(I+1) - m(m+1)); row index k holds m[k]
    up = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    jp = np.diag(up, k=1).astype(complex)
    jm = jp.conj().T
    ix = 0.5 * (jp + jm)
    iy = -0.5j * (jp - jm)
    iz = np.diag(m).astype(complex)
    hq = iz @ iz - s * (s + 1) / 3 * np.eye(two_I + 1)
    for a in (ix, iy, iz, hq):
        a.flags.writeable = False
    return SpinSystem(two_I, ix, iy, iz, hq)


def qft_gate(n):
    """Quantum Fourier transform ``F[j, k] = sigma^(jk) / sqrt(n)``, ``sigma = exp(2 pi i / n)``."""
    if int(n) != n or n < 2:
        raise ValueError(f"QFT dimension must be an integer >= 2, got {n!r}")
    n = int(n)
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return GateTarget(np.exp(2j * np.pi * jk / n) / np.sqrt(n), f"F{n}")


def identity_gate(n):
    return GateTarget(np.eye(n, dtype=complex), f"E{n}")


def assemble_hamiltonian(system, ux, uy):
    return system.hq + ux * system.ix + uy * system.iy


GATES = {"qft": qft_gate, "identity": identity_gate}


def make_gate(label, n):
    try:
        return GATES[label](n)
    except KeyError:
        raise ValueError(f"unknown gate {label!r}; choose from {sorted(GATES)}") from None
