"""Pareto-front tracking, critical times and global-phase classification."""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grape import BFGSOptions, ObjectiveSpec, bfgs_minimize, gate_error, propagate, random_initial_pulse
from .phases import TWO_PI, phase_set

CRITICAL_THRESHOLD = 1e-5
DIVERGENCE_JUMP = 0.3
AMBIGUITY_GAP = 1e-3


@dataclass
class FrontPoint:
    T: float
    J: float
    iterations: int
    stop_reason: str
    pulse: object = field(default=None, repr=False)


@dataclass
class ParetoFront:
    family_label: str
    phase: float
    points: list = field(default_factory=list)
    aborted: bool = False
    threshold: float = CRITICAL_THRESHOLD

    @property
    def samples(self):
        return [(p.T, p.J) for p in self.points]

    @property
    def critical_time(self):
        return critical_time(self, self.threshold)

    def sort(self):
        self.points.sort(key=lambda p: p.T)
        return self


def critical_time(front, threshold=CRITICAL_THRESHOLD):
    """Smallest sampled T with J below ``threshold``, or None."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    below = [T for T, J in front.samples if J < threshold]
    return min(below) if below else None


def _grid(T0, dT, direction, T_min, T_max):
    sign = -1 if direction == "down" else 1
    k = 1
    while True:
        T = round(T0 + sign * k * dT, 12)
        if T < T_min - 1e-12 or T > T_max + 1e-12:
            return
        yield T
        k += 1


def pft_trace(seed_run, system, objective, direction, T_min, T_max, dT=0.01, options=None, label=None, log=None):
    """Warm-started sweep of the control time in one direction.

    Each step keeps the previous optimum's amplitudes, stretches them to
    ``T +- dT`` (same S, new dt) and re-optimizes. The seed point is part of
    the front. A jump in J larger than 0.3 between neighbours aborts the
    trace and sets ``aborted``.
    """
    if direction not in ("down", "up"):
        raise ValueError("direction must be 'down' or 'up'")
    if dT <= 0:
        raise ValueError("dT must be positive")
    T0 = seed_run.final.total_time
    if not T_min - 1e-12 <= T0 <= T_max + 1e-12:
        raise ValueError(f"seed time {T0} outside [{T_min}, {T_max}]")
    front = ParetoFront(label or f"{objective.kind}@{objective.phase:.6f}", objective.phase)
    front.points.append(FrontPoint(T0, seed_run.final_error, seed_run.iterations, seed_run.stop_reason, seed_run.final))
    pulse, prev_J = seed_run.final, seed_run.final_error
    for T in _grid(T0, dT, direction, T_min, T_max):
        run = bfgs_minimize(pulse.with_time(T), system, objective, options, seed=seed_run.seed)
        front.points.append(FrontPoint(T, run.final_error, run.iterations, run.stop_reason, run.final))
        if log:
            log(f"T={T:.4f} J={run.final_error:.3e} it={run.iterations} {run.stop_reason}")
        if run.final_error - prev_J > DIVERGENCE_JUMP:
            front.aborted = True
            break
        pulse, prev_J = run.final, run.final_error
    return front.sort()


def pft_bracket(seed_run, system, objective, T_min, T_max, dT=0.01, options=None, label=None, log=None):
    """Trace down and up from the seed and merge into one front."""
    down = pft_trace(seed_run, system, objective, "down", T_min, T_max, dT, options, label, log)
    up = pft_trace(seed_run, system, objective, "up", T_min, T_max, dT, options, label, log)
    front = ParetoFront(down.family_label, down.phase, aborted=down.aborted or up.aborted)
    front.points = down.points + up.points[1:]
    return front.sort()


@dataclass
class PhaseClass:
    phase: float
    residual: float
    index: int
    ambiguous: bool
    errors: list


def classify_unitary(u, target):
    """Which admissible global phase ``u`` realizes.

    Computes J1 of ``u`` against ``exp(i phi_p) target`` for every phase of
    the phase set and picks the smallest. When the runner-up is within
    1e-3 the result is flagged ambiguous and ``phase`` is None.
    """
    _, phases = phase_set(target)
    errs = [gate_error(u, ObjectiveSpec("J1", target, p)) for p in phases]
    order = np.argsort(errs)
    best = int(order[0])
    ambiguous = len(errs) > 1 and errs[order[1]] - errs[best] < AMBIGUITY_GAP
    return PhaseClass(None if ambiguous else phases[best], errs[best], best, ambiguous, errs)


def phase_zero_error(u, target):
    """J1 against the bare target; equals sin^2(phi/2) when ``u = exp(i phi) target``."""
    return gate_error(u, ObjectiveSpec("J1", target, 0.0))


def classify_phase(run, system, target=None):
    target = target if target is not None else run.objective.target
    return classify_unitary(propagate(run.final, system)[0], target)


@dataclass
class RunBatch:
    runs: list
    T: float
    objective: ObjectiveSpec

    def __post_init__(self):
        self.runs = sorted(self.runs, key=lambda r: (r.final_error, r.seed))

    @property
    def sorted_errors(self):
        return [r.final_error for r in self.runs]


def _one_run(args):
    seed, system, objective, T, steps, knot_stride, amp_range, options = args
    init = random_initial_pulse(seed, T, steps, knot_stride, amp_range)
    return bfgs_minimize(init, system, objective, options, seed=seed)


def run_batch(system, objective, T, seeds, steps=500, knot_stride=50, amp_range=3.0, options=None, workers=1,
              on_result=None):
    """Optimize from one random initial pulse per seed.

    Results depend only on the seeds, never on ``workers``.
    """
    jobs = [(s, system, objective, T, steps, knot_stride, amp_range, options) for s in seeds]
    runs = []
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
            for run in pool.map(_one_run, jobs):
                runs.append(run)
                if on_result:
                    on_result(run)
    else:
        for job in jobs:
            run = _one_run(job)
            runs.append(run)
            if on_result:
                on_result(run)
    return RunBatch(runs, T, objective)


@dataclass
class Step:
    error_level: float
    count: int
    phases: list
    members: list


def batch_step_diagram(errors, phases=None, gap=10.0, floor=1e-8):
    """Group sorted final errors into plateaus.

    A new plateau starts wherever consecutive sorted errors differ by more
    than ``gap`` times. Errors below ``floor`` count as ``floor``, so all
    converged runs share the lowest plateau. ``error_level`` is the
    plateau median. Accepts a :class:`RunBatch` or a plain list of errors.
    """
    if isinstance(errors, RunBatch):
        errors = errors.sorted_errors
    errors = list(errors)
    phases = list(phases) if phases is not None else [None] * len(errors)
    order = sorted(range(len(errors)), key=lambda i: errors[i])
    steps, current = [], []
    prev = None
    for i in order:
        e = max(errors[i], floor)
        if prev is not None and e > gap * prev:
            steps.append(current)
            current = []
        current.append(i)
        prev = e
    if current:
        steps.append(current)
    return [
        Step(float(np.median([errors[i] for i in idx])), len(idx), [phases[i] for i in idx], idx)
        for idx in steps
    ]


@dataclass
class PairReport:
    phase_a: float
    phase_b: float
    max_abs_diff: float
    common_samples: int
    tc_a: float
    tc_b: float

    @property
    def tc_diff(self):
        if self.tc_a is None or self.tc_b is None:
            return math.inf
        return abs(self.tc_a - self.tc_b)


def compare_fronts(fa, fb):
    """Max |J - J'| over shared T samples and both critical times."""
    ja = {round(T, 9): J for T, J in fa.samples}
    jb = {round(T, 9): J for T, J in fb.samples}
    common = sorted(set(ja) & set(jb))
    diff = max((abs(ja[t] - jb[t]) for t in common), default=math.nan)
    return PairReport(fa.phase, fb.phase, diff, len(common), fa.critical_time, fb.critical_time)


def pairing_check(fronts, n):
    """Compare every pair of fronts whose phases differ by pi.

    Only meaningful for even N, where ``exp(i(phi + pi)) U = exp(2 pi i I_z) exp(i phi) U``
    and ``exp(2 pi i I_z) = -E`` costs no time.
    """
    if n % 2:
        raise ValueError(f"phase pairing needs even N, got N={n}")
    reports = []
    for i, fa in enumerate(fronts):
        for fb in fronts[i + 1:]:
            d = (fb.phase - fa.phase) % TWO_PI
            if abs(d - math.pi) < 1e-6:
                reports.append(compare_fronts(fa, fb))
    return reports
