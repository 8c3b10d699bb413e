"""Time-optimal quantum Fourier transform control on a single spin-I qudit."""

from .grape import BFGSOptions, ObjectiveSpec, PiecewisePulse, bfgs_minimize, random_initial_pulse
from .pareto import ParetoFront, classify_phase, critical_time, pft_bracket, pft_trace
from .phases import effective_hamiltonian, enumerate_families, gate_log, phase_set
from .spin import GateTarget, make_spin_system, qft_gate

__version__ = "0.1.0"
