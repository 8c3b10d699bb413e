import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qudit_qft.grape import ObjectiveSpec, bfgs_minimize, random_initial_pulse
from qudit_qft.pareto import (FrontPoint, ParetoFront, RunBatch, batch_step_diagram, classify_phase, classify_unitary,
                              compare_fronts, critical_time, pairing_check, pft_bracket, pft_trace, phase_zero_error,
                              run_batch)
from qudit_qft.phases import phase_set
from qudit_qft.spin import make_spin_system, qft_gate

PI = math.pi


def front(samples, phase=0.0):
    return ParetoFront("f", phase, [FrontPoint(T, J, 0, "abs_tol") for T, J in samples])


def test_critical_time_examples():
    assert critical_time(front([(1.0, 1e-3), (1.1, 9e-6)]), 1e-5) == 1.1
    assert critical_time(front([(1.0, 1e-3), (1.1, 2e-3)])) is None
    assert critical_time(front([(1.2, 1e-9), (1.0, 1e-9), (1.1, 1e-9)])) == 1.0
    with pytest.raises(ValueError):
        critical_time(front([(1.0, 0.1)]), 1.5)


@given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(0, 1)), min_size=1, max_size=30),
       st.floats(1e-9, 0.5), st.floats(1e-9, 0.5))
def test_critical_time_monotone_in_threshold(samples, a, b):
    lo, hi = sorted((a, b))
    f = front(samples)
    t_lo, t_hi = critical_time(f, lo), critical_time(f, hi)
    if t_lo is not None:
        assert t_hi is not None and t_hi <= t_lo


def test_classify_exact():
    f = qft_gate(4)
    c = classify_unitary(np.exp(1j * 9 * PI / 8) * f.matrix, f)
    assert abs(c.phase - 9 * PI / 8) < 1e-12 and c.residual < 1e-15 and not c.ambiguous


def test_discriminators():
    f = qft_gate(4)
    published = {PI / 8: 0.038, 9 * PI / 8: 0.962, 5 * PI / 8: 0.691, 13 * PI / 8: 0.309}
    for phi, value in published.items():
        assert abs(phase_zero_error(np.exp(1j * phi) * f.matrix, f) - value) < 5e-4


@pytest.mark.parametrize("n", range(3, 7))
@given(seed=st.integers(0, 2**31), scale=st.floats(0, 1e-3))
def test_classify_robust_to_perturbation(n, seed, scale):
    rng = np.random.default_rng(seed)
    f = qft_gate(n)
    _, phases = phase_set(f)
    for p, phi in enumerate(phases):
        d = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        d *= scale / np.linalg.norm(d, 2)
        c = classify_unitary(np.exp(1j * phi) * f.matrix + d, f)
        assert c.index == p and abs(c.phase - phi) < 1e-12


def test_classify_ambiguous():
    f = qft_gate(3)
    _, ph = phase_set(f)
    # halfway between two admissible phases both give the same J1
    c = classify_unitary(np.exp(1j * (ph[0] + ph[1]) / 2) * f.matrix, f)
    assert c.ambiguous and c.phase is None


def test_step_diagram_examples():
    steps = batch_step_diagram([1e-9, 2e-9, 1e-4, 2e-4])
    assert [s.count for s in steps] == [2, 2]
    assert len(batch_step_diagram([1e-9, 3e-12, 5e-10])) == 1
    assert len(batch_step_diagram([0.1, 0.2, 0.3])) == 1
    assert batch_step_diagram([]) == []
    steps = batch_step_diagram([2e-4, 1e-9], ["b", "a"])
    assert steps[0].phases == ["a"] and steps[1].phases == ["b"]


def test_pairing_guards_and_identity():
    f = front([(1.0, 0.1), (1.1, 1e-6)], PI / 8)
    with pytest.raises(ValueError):
        pairing_check([f], 3)
    r = compare_fronts(f, f)
    assert r.max_abs_diff == 0 and r.tc_diff == 0 and r.common_samples == 2
    g = front([(1.0, 0.1), (1.1, 1e-6)], 9 * PI / 8)
    h = front([(1.0, 0.1)], 5 * PI / 8)
    reports = pairing_check([f, g, h], 4)
    assert len(reports) == 1 and reports[0].tc_diff == 0


def test_batch_sorted_and_worker_independent():
    s = make_spin_system(1)
    obj = ObjectiveSpec("J2", qft_gate(2))
    a = run_batch(s, obj, 1.0, [3, 1, 2], steps=20, knot_stride=5)
    b = run_batch(s, obj, 1.0, [1, 2, 3], steps=20, knot_stride=5, workers=2)
    assert a.sorted_errors == sorted(a.sorted_errors)
    assert [r.seed for r in a.runs] == [r.seed for r in b.runs]
    for ra, rb in zip(a.runs, b.runs):
        assert np.array_equal(ra.final.vector(), rb.final.vector())
    assert isinstance(a, RunBatch)


def test_pft_short_trace_qutrit():
    s = make_spin_system(2)
    obj = ObjectiveSpec("J1", qft_gate(3), 5 * PI / 6)
    run = bfgs_minimize(random_initial_pulse(0, 2.0), s, obj, seed=0)
    assert run.final_error < 1e-8
    fr = pft_bracket(run, s, obj, 1.97, 2.03, 0.01)
    assert [round(T, 6) for T, _ in fr.samples] == [1.97, 1.98, 1.99, 2.0, 2.01, 2.02, 2.03]
    # going up from a converged point never loses the solution
    assert all(J < 1e-5 for T, J in fr.samples if T >= 2.0)
    assert all(p.pulse.steps == 500 for p in fr.points)
    c = classify_phase(run, s)
    assert abs(c.phase - 5 * PI / 6) < 1e-12
    with pytest.raises(ValueError):
        pft_trace(run, s, obj, "sideways", 1.0, 3.0)
    with pytest.raises(ValueError):
        pft_trace(run, s, obj, "down", 2.5, 3.0)


def test_converged_j2_run_classifies_with_small_residual():
    s = make_spin_system(2)
    f = qft_gate(3)
    run = bfgs_minimize(random_initial_pulse(1, 4.0), s, ObjectiveSpec("J2", f), seed=1)
    c = classify_phase(run, s, f)
    assert run.final_error < 1e-8
    assert abs(c.residual - run.final_error) < 1e-6
    assert not c.ambiguous
