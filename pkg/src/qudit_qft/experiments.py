"""Reusable experiment drivers shared by the CLI, scripts and acceptance tests."""

from dataclasses import dataclass, field

from .grape import ObjectiveSpec, bfgs_minimize, random_initial_pulse
from .pareto import batch_step_diagram, classify_phase, pft_bracket, pft_trace, run_batch
from .spin import make_spin_system, qft_gate


def find_converged_run(system, objective, T, seeds, steps=500, options=None, target_error=1e-8, log=None):
    """First seed whose optimization ends below ``target_error``; None if none does."""
    for seed in seeds:
        run = bfgs_minimize(random_initial_pulse(seed, T, steps), system, objective, options, seed=seed)
        if log:
            log(f"seed {seed}: J={run.final_error:.3e} after {run.iterations} it ({run.stop_reason})")
        if run.final_error < target_error:
            return run
    return None


def seed_search(system, objective, T_start, seeds, steps=500, options=None, T_step=0.25, T_cap=8.0, log=None):
    """Converged run at the smallest T in ``T_start, T_start + T_step, ...`` that yields one."""
    T = T_start
    while T <= T_cap + 1e-12:
        run = find_converged_run(system, objective, round(T, 10), seeds, steps, options, log=log)
        if run is not None:
            return run
        T += T_step
    return None


@dataclass
class CriticalTimeResult:
    two_I: int
    phase: float
    seed_run: object
    front: object

    @property
    def critical_time(self):
        return None if self.front is None else self.front.critical_time


def critical_time_experiment(two_I, phase, T_seed, T_min, T_max=None, dT=0.01, seeds=range(50), steps=500,
                             options=None, bracket=False, T_step=None, above=0.0, log=None):
    """QFT front for one global phase: find a converged seed at ``T_seed`` then trace.

    By default only the downward trace is run (the crossing lies below a
    converged seed); ``bracket=True`` also traces up to ``T_max`` (default:
    ``above`` past the seed time). With
    ``T_step`` the seed time grows in those steps until some seed converges.
    """
    system = make_spin_system(two_I)
    objective = ObjectiveSpec("J1", qft_gate(two_I + 1), phase)
    if T_step:
        seed_run = seed_search(system, objective, T_seed, seeds, steps, options, T_step, log=log)
    else:
        seed_run = find_converged_run(system, objective, T_seed, seeds, steps, options, log=log)
    if seed_run is None:
        return CriticalTimeResult(two_I, phase, None, None)
    T0 = seed_run.final.total_time
    label = f"I={two_I}/2 phase {phase_label(phase)}"
    if bracket:
        front = pft_bracket(seed_run, system, objective, T_min, max(T_max or T0 + above, T0), dT, options, label, log)
    else:
        front = pft_trace(seed_run, system, objective, "down", T_min, T0, dT, options, label, log)
    return CriticalTimeResult(two_I, phase, seed_run, front)


@dataclass
class StepDiagramResult:
    batch: object
    classes: list
    steps: list = field(default_factory=list)


def step_diagram_experiment(two_I, T, seeds, kind="J2", phase=0.0, steps=500, options=None, workers=1, log=None):
    """Random-start batch, phase classification of every run, and plateaus."""
    system = make_spin_system(two_I)
    target = qft_gate(two_I + 1)
    objective = ObjectiveSpec(kind, target, phase)

    def report(run):
        if log:
            log(f"seed {run.seed}: J={run.final_error:.3e} ({run.stop_reason})")

    batch = run_batch(system, objective, T, seeds, steps, options=options, workers=workers, on_result=report)
    classes = [classify_phase(r, system, target) for r in batch.runs]
    diagram = batch_step_diagram(batch.sorted_errors, [c.phase for c in classes])
    return StepDiagramResult(batch, classes, diagram)


def phase_label(phase):
    if phase is None:
        return "ambiguous"
    from .io import pi_fraction

    return pi_fraction(phase)

