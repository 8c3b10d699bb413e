"""Pareto fronts of the QFT for every admissible global phase of one spin.

For each phase a random-start J1 optimization is repeated over seeds at
T_start (growing T in 0.25 steps until some seed converges below 1e-8),
then the converged pulse is traced down to T_min and a little above its own
time. Writes one front table per phase, a summary and an SVG plot.

Presets reproduce the figures for I = 1, 3/2, 2 and 5/2:

    python scripts/fronts.py --preset spin1       # ~30 min
    python scripts/fronts.py --preset spin3_2     # ~1-2 h
    python scripts/fronts.py --preset spin2       # hours
    python scripts/fronts.py --preset spin5_2     # hours
"""

import argparse
import time
from pathlib import Path

from qudit_qft import io as qio
from qudit_qft.cli import plot_fronts
from qudit_qft.experiments import critical_time_experiment
from qudit_qft.pareto import pairing_check
from qudit_qft.phases import phase_set
from qudit_qft.spin import qft_gate

PRESETS = {
    "spin1": dict(two_I=2, T_start=2.0, T_min=1.5),
    "spin3_2": dict(two_I=3, T_start=2.0, T_min=1.4),
    "spin2": dict(two_I=4, T_start=2.0, T_min=1.6),
    "spin5_2": dict(two_I=5, T_start=2.2, T_min=1.8),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--two-I", type=int)
    ap.add_argument("--T-start", type=float)
    ap.add_argument("--T-min", type=float)
    ap.add_argument("--above", type=float, default=0.3, help="trace this far above the seed time")
    ap.add_argument("--dT", type=float, default=0.01)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--S", type=int, default=500)
    ap.add_argument("--phases", help="comma separated subset, e.g. pi/8,9pi/8")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    cfg = dict(PRESETS.get(args.preset, {}))
    for key in ("two_I", "T_start", "T_min"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if set(cfg) != {"two_I", "T_start", "T_min"}:
        ap.error("give --preset or all of --two-I, --T-start, --T-min")
    n = cfg["two_I"] + 1
    phases = phase_set(qft_gate(n))[1]
    if args.phases:
        phases = [qio.parse_float(p) for p in args.phases.split(",")]

    out = Path(args.out) / (args.preset or f"two_I_{cfg['two_I']}")
    out.mkdir(parents=True, exist_ok=True)
    fronts, lines = [], []
    t0 = time.time()
    for k, phase in enumerate(phases):
        res = critical_time_experiment(cfg["two_I"], phase, cfg["T_start"], cfg["T_min"], dT=args.dT,
                                       seeds=range(args.seeds), steps=args.S, bracket=True, T_step=0.25,
                                       above=args.above, log=lambda m: print(m, flush=True))
        if res.front is None:
            lines.append(f"phase {qio.pi_fraction(phase)}: no converged seed")
            continue
        qio.write_front(out / f"front_{k}.csv", res.front)
        fronts.append(res.front)
        tc = res.critical_time
        lines.append(f"phase {qio.pi_fraction(phase)}: seed {res.seed_run.seed} at T = {res.seed_run.final.total_time:.2f},"
                     f" Tc = {'none' if tc is None else f'{tc:.2f}'}")
        print(lines[-1], f"({time.time() - t0:.0f} s)", flush=True)
    if n % 2 == 0 and len(fronts) > 1:
        for r in pairing_check(fronts, n):
            lines.append(f"pair {qio.pi_fraction(r.phase_a)} / {qio.pi_fraction(r.phase_b)}: |dTc| = {r.tc_diff:.3f}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    if fronts:
        plot_fronts(fronts, out / "fronts.svg", 1e-5)
    print("\n".join(lines))


if __name__ == "__main__":
    main()
