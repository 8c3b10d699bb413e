"""Command line entry point: ``qudit-qft <command>``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io as qio
from .grape import error_of_pulse, ObjectiveSpec, propagate
from .linalg import EigenError
from .pareto import (RunBatch, batch_step_diagram, classify_unitary, pairing_check, pft_bracket, pft_trace,
                     run_batch)
from .phases import enumerate_families, gate_log, phase_set
from .qutrit import loglog_slope, trotter_scan, verify_table1
from .spin import qft_gate


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _config(args):
    kv = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        kv.update(qio.read_kv(path.read_text()))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        kv[k.strip()] = v.strip()
    if getattr(args, "out", None):
        kv["output"] = args.out
    try:
        return qio.ExperimentConfig.from_mapping(kv)
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from None


def _phase_str(phase):
    return "ambiguous" if phase is None else qio.pi_fraction(phase)


# ---------------------------------------------------------------- phases

def cmd_phases(args):
    n = args.n
    if not 2 <= n <= 8:
        raise UsageError("N must lie in 2..8")
    f = qft_gate(n)
    phi0, phases = phase_set(f)
    det = np.linalg.det(f.matrix)
    print(f"N = {n}  det(F) = {det.real:+.6f}{det.imag:+.6f}i")
    print(f"phi0 = {qio.pi_multiple(phi0, 2 * n)} ({phi0:.12f})")
    worst = 0.0
    for p, phi in enumerate(phases):
        d = abs(np.linalg.det(np.exp(1j * phi) * f.matrix) - 1.0)
        worst = max(worst, d)
        print(f"phi_{p} = {qio.pi_multiple(phi, 2 * n):>8s}  {phi:.12f}  |det(e^(i phi) F) - 1| = {d:.1e}")
    if worst > 1e-10:
        print(f"determinant check failed ({worst:.2e})", file=sys.stderr)
        return 2
    if args.families:
        fams = enumerate_families(gate_log(f), args.max_abs_m, args.T)
        Path(args.families).write_text(qio.families_jsonl(fams))
        print(f"wrote {len(fams)} families to {args.families}")
    return 0


# ---------------------------------------------------------------- grape

def cmd_grape(args):
    cfg = _config(args)
    out = Path(cfg.output)
    pulses = out / "pulses"
    pulses.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text(runtime=False))
    system, target, objective = cfg.system(), cfg.target(), cfg.objective_spec()
    options = cfg.bfgs_options()

    def path_of(seed):
        return pulses / f"seed_{seed:05d}.txt"

    done = {}
    for seed in cfg.seed_list:
        run = qio.load_or_none(path_of(seed), cfg, seed)
        if run is not None:
            done[seed] = run
    todo = [s for s in cfg.seed_list if s not in done]
    if done:
        print(f"resuming: {len(done)} seeds already on disk, {len(todo)} to run")

    def save(run):
        qio.write_pulse(path_of(run.seed), run, cfg.two_I, cfg.gate)
        print(f"seed {run.seed}: J = {run.final_error:.3e}  it = {run.iterations}  {run.stop_reason}", flush=True)

    fresh = run_batch(system, objective, cfg.T, todo, cfg.S, cfg.knot_stride, cfg.amp_range, options,
                      cfg.workers, save).runs if todo else []
    batch = RunBatch(list(done.values()) + fresh, cfg.T, objective)
    classes = [classify_unitary(propagate(r.final, system)[0], target) for r in batch.runs]
    rows = [(i, r.seed, r.final_error, r.iterations, r.stop_reason, c.phase)
            for i, (r, c) in enumerate(zip(batch.runs, classes))]
    (out / "batch.csv").write_text(qio.batch_text(rows))
    (out / "steps.csv").write_text(qio.steps_text([(i, e, ph) for i, _, e, _, _, ph in rows]))
    artifacts = [out / "config.txt", out / "batch.csv", out / "steps.csv"] + [path_of(s) for s in cfg.seed_list]
    qio.write_manifest(out, cfg, artifacts)

    print(f"{len(batch.runs)} runs at T = {cfg.T} ({cfg.objective}, N = {cfg.two_I + 1})")
    if not batch.runs:
        return 0
    for i, r, c in zip(range(len(rows)), batch.runs, classes):
        print(f"  #{i:<4d} seed {r.seed:<6d} J = {r.final_error:.3e}  phase {_phase_str(c.phase)}")
    steps = batch_step_diagram(batch.sorted_errors, [c.phase for c in classes])
    print(f"step diagram: {len(steps)} plateau(s)")
    for k, st in enumerate(steps):
        counts = {}
        for ph in st.phases:
            key = _phase_str(ph)
            counts[key] = counts.get(key, 0) + 1
        mix = ", ".join(f"{k2} x{v}" for k2, v in sorted(counts.items()))
        print(f"  step {k}: level {st.error_level:.3e}, {st.count} runs, phases: {mix}")
    return 0


# ---------------------------------------------------------------- pft

def plot_fronts(fronts, path, threshold=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for fr in fronts:
        T, J = zip(*fr.samples) if fr.points else ((), ())
        ax.semilogy(T, np.maximum(J, 1e-16), ".-", label=fr.family_label)
        if fr.critical_time is not None:
            ax.axvline(fr.critical_time, lw=0.5, ls=":", color="gray")
    if threshold:
        ax.axhline(threshold, lw=0.5, color="k")
    ax.set_xlabel("T")
    ax.set_ylabel("J")
    ax.legend(fontsize=7)
    fig.tight_layout()
    # no timestamp and fixed ids so that re-running gives identical files
    with matplotlib.rc_context({"svg.hashsalt": "qudit-qft"}):
        fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def cmd_pft(args):
    cfg = _config(args)
    seed_path = Path(args.seed_pulse)
    if not seed_path.exists():
        raise UsageError(f"seed pulse file not found: {seed_path}")
    try:
        rec = qio.read_pulse(seed_path)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if math.isnan(cfg.T_min) or math.isnan(cfg.T_max):
        raise UsageError("pft needs T_min and T_max (config file or --set)")
    system = rec.system
    seed_run = rec.as_run()
    J0 = error_of_pulse(rec.pulse, system, rec.objective)
    seed_run.final_error = J0
    label = args.label or f"{rec.objective.kind} phase {qio.pi_fraction(rec.objective.phase)}"

    def log(msg):
        print(msg, flush=True)

    try:
        if args.direction == "both":
            front = pft_bracket(seed_run, system, rec.objective, cfg.T_min, cfg.T_max, cfg.dT, cfg.bfgs_options(),
                                label, log)
        else:
            front = pft_trace(seed_run, system, rec.objective, args.direction, cfg.T_min, cfg.T_max, cfg.dT,
                              cfg.bfgs_options(), label, log)
    except ValueError as e:
        raise UsageError(str(e)) from None
    front.threshold = cfg.threshold
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text(runtime=False))
    qio.write_front(out / "front.csv", front)
    artifacts = [out / "config.txt", out / "front.csv"]
    if args.plot:
        plot_fronts([front], out / args.plot, cfg.threshold)
        artifacts.append(out / args.plot)
    qio.write_manifest(out, cfg, artifacts)
    tc = front.critical_time
    print(f"front {label}: {len(front.points)} points, aborted = {front.aborted}")
    print(f"critical time = {'none' if tc is None else f'{tc:.4f}'} (threshold {cfg.threshold:g})")
    return 0


# ---------------------------------------------------------------- classify

def cmd_classify(args):
    rows = []
    for p in args.pulses:
        if not Path(p).exists():
            raise UsageError(f"pulse file not found: {p}")
        try:
            rec = qio.read_pulse(p)
        except ValueError as e:
            raise UsageError(str(e)) from None
        u = propagate(rec.pulse, rec.system)[0]
        target = rec.objective.target
        c = classify_unitary(u, target)
        j2 = error_of_pulse(rec.pulse, rec.system, ObjectiveSpec("J2", target))
        rows.append((p, rec.seed, c, j2))
        print(f"{p}: seed {rec.seed}  J2 = {j2:.3e}  phase {_phase_str(c.phase)}  J1 residual = {c.residual:.3e}"
              + ("  (ambiguous)" if c.ambiguous else ""))
    return 0


# ---------------------------------------------------------------- table1

def cmd_table1(args):
    report = verify_table1(tol=args.tol)
    for rc in report.rows:
        status = "PASS" if rc.passed else "FAIL"
        tm = rc.solved.get("T_m", math.nan)
        print(f"{status} Phi_m {qio.pi_fraction(rc.phase):>6s} shifts {tuple(rc.shifts)}  T_m {tm:.4f}"
              f" (printed {rc.printed['T_m']:.2f})  max dev {rc.max_deviation:.2e}"
              f"  identity err {rc.identity_error:.1e}  {rc.note}")
    for name, ok in report.orderings.items():
        print(f"{'PASS' if ok else 'FAIL'} ordering {name}")
    if args.r_scan:
        rs = [int(r) for r in args.r_scan.split(",")]
        for rc in report.rows:
            if rc.params is None:
                continue
            scan = trotter_scan(rc.params, rs)
            errs = "  ".join(f"r={r}:{e:.2e}" for r, e in scan)
            print(f"shifts {tuple(rc.shifts)}  {errs}  slope {loglog_slope(scan):.2f}")
    return 0 if report.passed else 2


# ---------------------------------------------------------------- pairing

def cmd_pairing(args):
    fronts = []
    for p in args.fronts:
        if not Path(p).exists():
            raise UsageError(f"front file not found: {p}")
        fronts.append(qio.read_front(p))
    try:
        reports = pairing_check(fronts, args.n)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if not reports:
        print("no pair of fronts with phases differing by pi")
        return 2
    ok = True
    for r in reports:
        good = r.tc_diff <= args.tc_tol
        ok &= good
        print(f"{'PASS' if good else 'FAIL'} {qio.pi_fraction(r.phase_a)} vs {qio.pi_fraction(r.phase_b)}:"
              f" |dTc| = {r.tc_diff:.4f}, max |dJ| = {r.max_abs_diff:.2e} over {r.common_samples} shared T")
    if args.plot:
        plot_fronts(fronts, args.plot)
    return 0 if ok else 2


def build_parser():
    p = _Parser(prog="qudit-qft", description="Time-optimal QFT control on a single spin-I qudit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("phases", help="admissible global phases and phase families of the QFT")
    s.add_argument("--n", type=int, required=True, help="qudit dimension (2..8)")
    s.add_argument("--families", help="write families as JSON lines to this file")
    s.add_argument("--max-abs-m", type=int, default=1)
    s.add_argument("--T", type=float, default=1.0)
    s.set_defaults(func=cmd_phases)

    def config_args(s):
        s.add_argument("--config", help="key = value config file")
        s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        s.add_argument("--out", help="output directory")

    s = sub.add_parser("grape", help="random-start GRAPE batch with checkpointing")
    config_args(s)
    s.set_defaults(func=cmd_grape)

    s = sub.add_parser("pft", help="trace a Pareto front from a converged pulse")
    config_args(s)
    s.add_argument("--seed-pulse", required=True)
    s.add_argument("--direction", choices=("down", "up", "both"), default="both")
    s.add_argument("--label")
    s.add_argument("--plot", help="file name (inside the output dir) for an SVG/PNG plot")
    s.set_defaults(func=cmd_pft)

    s = sub.add_parser("classify", help="classify the global phase realized by pulse files")
    s.add_argument("pulses", nargs="+")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("table1", help="solve the qutrit sequence parameters and check the printed table")
    s.add_argument("--tol", type=float, default=5e-3)
    s.add_argument("--r-scan", help="comma separated repetition counts, e.g. 1,2,4,8,16")
    s.set_defaults(func=cmd_table1)

    s = sub.add_parser("pairing", help="compare fronts whose phases differ by pi (even N)")
    s.add_argument("fronts", nargs="+")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--tc-tol", type=float, default=0.05)
    s.add_argument("--plot")
    s.set_defaults(func=cmd_pairing)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"qudit-qft: error: {e}", file=sys.stderr)
        return 1
    except (NumericalFailure, EigenError, np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"qudit-qft: numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
