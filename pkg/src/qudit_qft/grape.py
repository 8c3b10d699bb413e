"""Piecewise-constant GRAPE with exact gradients and a BFGS driver.

The control vector is ``x = [u_x(t_1..t_S), u_y(t_1..t_S)]``; step ``s``
evolves under ``H_s = H_q + u_x(t_s) I_x + u_y(t_s) I_y`` for
``dt = T / S``. Step derivatives use the eigenbasis (divided-difference)
formula, so gradients are exact up to rounding.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .linalg import dagger, expm_hermitian_batch

STOP_REASONS = ("abs_tol", "rel_tol", "max_iter", "line_search_fail")
DEGENERATE_GAP = 1e-12


@dataclass(frozen=True, eq=False)
class PiecewisePulse:
    total_time: float
    ux: np.ndarray
    uy: np.ndarray

    def __post_init__(self):
        ux = np.array(self.ux, dtype=float)
        uy = np.array(self.uy, dtype=float)
        if ux.ndim != 1 or ux.shape != uy.shape or ux.size < 1:
            raise ValueError("ux and uy must be 1-d arrays of equal length >= 1")
        if not (self.total_time > 0 and math.isfinite(self.total_time)):
            raise ValueError(f"total_time must be positive and finite, got {self.total_time}")
        if not (np.all(np.isfinite(ux)) and np.all(np.isfinite(uy))):
            raise ValueError("pulse amplitudes must be finite")
        ux.flags.writeable = False
        uy.flags.writeable = False
        object.__setattr__(self, "total_time", float(self.total_time))
        object.__setattr__(self, "ux", ux)
        object.__setattr__(self, "uy", uy)

    @property
    def steps(self):
        return self.ux.size

    @property
    def dt(self):
        return self.total_time / self.steps

    def vector(self):
        return np.concatenate([self.ux, self.uy])

    @classmethod
    def from_vector(cls, total_time, x):
        x = np.asarray(x, dtype=float)
        s = x.size // 2
        return cls(total_time, x[:s], x[s:])

    def with_time(self, total_time):
        """Same amplitude sequence stretched to a new duration."""
        return PiecewisePulse(total_time, self.ux, self.uy)

    def refined(self, factor):
        """Each step split into ``factor`` equal steps with the same amplitude."""
        return PiecewisePulse(self.total_time, np.repeat(self.ux, factor), np.repeat(self.uy, factor))


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """``J1`` compares against ``exp(i phase) * target``; ``J2`` ignores the phase."""

    kind: str
    target: object
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("J1", "J2"):
            raise ValueError(f"objective kind must be 'J1' or 'J2', got {self.kind!r}")

    @property
    def dim(self):
        return self.target.dim

    def reference(self):
        if self.kind == "J1":
            return np.exp(1j * self.phase) * self.target.matrix
        return self.target.matrix


@dataclass(frozen=True)
class BFGSOptions:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    max_iter: int = 2000
    armijo_c: float = 1e-4
    wolfe_c: float = 0.9
    max_backtracks: int = 60


@dataclass(eq=False)
class OptimizationRun:
    seed: int
    objective: ObjectiveSpec
    initial: PiecewisePulse
    final: PiecewisePulse
    final_error: float
    iterations: int
    history: list = field(default_factory=list)
    stop_reason: str = "max_iter"


def _hamiltonians(x, system, steps):
    ux = x[:steps, None, None]
    uy = x[steps:, None, None]
    return system.hq[None] + ux * system.ix[None] + uy * system.iy[None]


def _ordered_product(mats):
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    while len(mats) > 1:
        if len(mats) % 2:
            tail = mats[-1:]
            mats = np.concatenate([mats[1:-1:2] @ mats[0:-1:2], tail])
        else:
            mats = mats[1::2] @ mats[0::2]
    return mats[0]


def propagate(pulse, system):
    """Step propagators ``U_s = exp(-i dt H_s)`` and ``U(T) = U_S ... U_1``."""
    x = pulse.vector()
    props, _, _ = expm_hermitian_batch(_hamiltonians(x, system, pulse.steps), pulse.dt)
    return _ordered_product(props), props


def error_from_trace(tr, objective):
    """Gate error from ``Tr(reference^dagger U)``."""
    n = objective.dim
    if objective.kind == "J1":
        val = 0.5 - tr.real / (2 * n)
    else:
        val = 1.0 - abs(tr) / n
    return float(min(max(val, 0.0), 1.0))


def gate_error(u, objective):
    tr = np.vdot(objective.reference(), u)  # Tr(R^dagger U)
    return error_from_trace(tr, objective)


def error_of_pulse(pulse, system, objective):
    return gate_error(propagate(pulse, system)[0], objective)


def _step_derivative_kernel(w, dt):
    """Divided differences of ``f(l) = exp(-i dt l)`` over each step's eigenvalues."""
    e = np.exp(-1j * dt * w)
    dl = w[:, :, None] - w[:, None, :]
    de = e[:, :, None] - e[:, None, :]
    degenerate = np.abs(dl) < DEGENERATE_GAP
    safe = np.where(degenerate, 1.0, dl)
    diag = np.broadcast_to((-1j * dt * e)[:, :, None], de.shape)
    return np.where(degenerate, diag, de / safe)


def value_and_gradient(x, total_time, system, objective):
    """Objective and its gradient with respect to ``[u_x, u_y]``."""
    x = np.asarray(x, dtype=float)
    steps = x.size // 2
    dt = total_time / steps
    n = system.dim
    props, w, v = expm_hermitian_batch(_hamiltonians(x, system, steps), dt)

    # fwd[s] = U_s ... U_1 with fwd[0] = E; bwd[s] = R^dagger U_S ... U_{s+1}
    fwd = np.empty((steps + 1, n, n), dtype=complex)
    fwd[0] = np.eye(n)
    for s in range(steps):
        fwd[s + 1] = props[s] @ fwd[s]
    bwd = np.empty((steps, n, n), dtype=complex)
    bwd[-1] = dagger(objective.reference())
    for s in range(steps - 1, 0, -1):
        bwd[s - 1] = bwd[s] @ props[s]
    tr = np.trace(bwd[0] @ props[0])
    value = error_from_trace(tr, objective)

    kernel = _step_derivative_kernel(w, dt)
    vh = dagger(v)
    # Tr(bwd_s dU_s fwd_{s-1}) = sum_kl W_lk (G o V^dag I_a V)_kl, W = V^dag fwd_{s-1} bwd_s V
    wmat = vh @ fwd[:-1] @ bwd @ v
    wt = np.swapaxes(wmat, -1, -2)
    dtr = np.empty((2, steps), dtype=complex)
    for a, op in enumerate((system.ix, system.iy)):
        m = kernel * (vh @ op @ v)
        dtr[a] = np.sum(wt * m, axis=(-1, -2))
    dtr = dtr.ravel()

    if objective.kind == "J1":
        grad = -dtr.real / (2 * n)
    else:
        mag = abs(tr)
        grad = np.zeros(2 * steps) if mag == 0 else -(np.conj(tr) * dtr).real / (n * mag)
    return value, grad


def gradient(pulse, system, objective):
    return value_and_gradient(pulse.vector(), pulse.total_time, system, objective)[1]


def objective_value(x, total_time, system, objective):
    """Gate error of a flat control vector, without the gradient."""
    x = np.asarray(x, dtype=float)
    steps = x.size // 2
    props, _, _ = expm_hermitian_batch(_hamiltonians(x, system, steps), total_time / steps)
    return gate_error(_ordered_product(props), objective)


def bfgs_minimize(initial, system, objective, options=None, seed=-1):
    """Minimize the gate error from ``initial`` with BFGS.

    Step lengths come from a weak-Wolfe search (Armijo sufficient decrease
    plus a curvature condition), so every accepted step lowers ``J`` and
    keeps the inverse-Hessian update positive definite. Stops when
    ``J < abs_tol``, when an accepted step improves ``J`` by less than
    ``rel_tol * J``, after ``max_iter`` iterations, or when the line search
    fails even along steepest descent.
    """
    opts = options or BFGSOptions()
    T = initial.total_time
    x = initial.vector()
    f, g = value_and_gradient(x, T, system, objective)
    history = [f]
    hinv = None  # None means identity
    reason = "max_iter"
    it = 0

    def vg(z):
        return value_and_gradient(z, T, system, objective)

    if f < opts.abs_tol:
        reason = "abs_tol"
    else:
        while it < opts.max_iter:
            step = _wolfe_search(vg, x, f, g, _direction(hinv, g), opts)
            if step is None and hinv is not None:
                hinv = None
                step = _wolfe_search(vg, x, f, g, -g, opts)
            if step is None:
                reason = "line_search_fail"
                break
            x_new, f_new, g_new = step
            it += 1
            s = x_new - x
            y = g_new - g
            sy = float(s @ y)
            if sy > 0:
                if hinv is None:
                    # initial scaling, Nocedal & Wright (6.20)
                    hinv = np.eye(x.size) * (sy / float(y @ y))
                rho = 1.0 / sy
                hy = hinv @ y
                hinv += (rho * rho * float(y @ hy) + rho) * np.outer(s, s) - rho * (np.outer(hy, s) + np.outer(s, hy))
            else:
                hinv = None
            f_prev = f
            x, f, g = x_new, f_new, g_new
            history.append(f)
            if f < opts.abs_tol:
                reason = "abs_tol"
                break
            if f_prev - f < opts.rel_tol * f_prev:
                reason = "rel_tol"
                break

    final = PiecewisePulse.from_vector(T, x)
    return OptimizationRun(seed, objective, initial, final, f, it, history, reason)


def _direction(hinv, g):
    if hinv is None:
        return -g
    d = -(hinv @ g)
    return d if g @ d < 0 else -g


def _wolfe_search(vg, x, f, g, d, opts):
    """Bisection/expansion search for a step meeting the weak Wolfe conditions.

    Returns ``(x_new, f_new, g_new)`` or ``None``. If the curvature test
    never passes, the best Armijo point found is returned.
    """
    slope = float(g @ d)
    if not slope < 0:
        return None
    lo, hi, beta = 0.0, math.inf, 1.0
    armijo_ok = None
    for _ in range(opts.max_backtracks):
        x_new = x + beta * d
        f_new, g_new = vg(x_new)
        if not (f_new <= f + opts.armijo_c * beta * slope and f_new < f):
            hi = beta
        else:
            armijo_ok = (x_new, f_new, g_new)
            if float(g_new @ d) >= opts.wolfe_c * slope:
                return armijo_ok
            lo = beta
        beta = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * beta
    return armijo_ok


def initial_pulse_splines(seed, total_time, steps=500, knot_stride=50, amp_range=3.0):
    """Natural cubic splines through uniform random knots every ``knot_stride`` steps.

    Knot ``j`` sits at time ``j * knot_stride * dt``; returns ``(spline_x,
    spline_y, knot_times)``.
    """
    if knot_stride <= 0 or knot_stride > steps:
        raise ValueError(f"knot_stride must be in [1, steps], got {knot_stride}")
    if steps % knot_stride:
        raise ValueError(f"steps={steps} is not divisible by knot_stride={knot_stride}")
    rng = np.random.default_rng(seed)
    n_knots = steps // knot_stride + 1
    kx = rng.uniform(-amp_range, amp_range, n_knots)
    ky = rng.uniform(-amp_range, amp_range, n_knots)
    dt = total_time / steps
    knot_times = np.arange(n_knots) * knot_stride * dt
    return CubicSpline(knot_times, kx, bc_type="natural"), CubicSpline(knot_times, ky, bc_type="natural"), knot_times


def random_initial_pulse(seed, total_time, steps=500, knot_stride=50, amp_range=3.0):
    """Random smooth starting pulse sampled at the step midpoints."""
    sx, sy, _ = initial_pulse_splines(seed, total_time, steps, knot_stride, amp_range)
    dt = total_time / steps
    mid = (np.arange(steps) + 0.5) * dt
    return PiecewisePulse(total_time, sx(mid), sy(mid))
