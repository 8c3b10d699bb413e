"""Random-start batch at fixed T, sorted by final error, with phase classification.

Default: spin 3/2, T = 2, J2 objective, 500 seeds. The second panel shows
J1 against the bare QFT recomputed for every run, which separates the
global phases (sin^2(phi/2) for a run realizing phase phi).

    python scripts/step_diagram.py --seeds 500
    python scripts/step_diagram.py --kind J1 --phase pi/8 --seeds 200
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qudit_qft import io as qio
from qudit_qft.experiments import step_diagram_experiment
from qudit_qft.grape import propagate
from qudit_qft.pareto import phase_zero_error
from qudit_qft.spin import make_spin_system, qft_gate


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--two-I", type=int, default=3)
    ap.add_argument("--T", type=float, default=2.0)
    ap.add_argument("--seeds", type=int, default=500)
    ap.add_argument("--kind", choices=("J1", "J2"), default="J2")
    ap.add_argument("--phase", default="0")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/step_diagram")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = step_diagram_experiment(args.two_I, args.T, range(args.seeds), args.kind, qio.parse_float(args.phase),
                                  workers=args.workers, log=lambda m: print(m, flush=True))
    system = make_spin_system(args.two_I)
    f = qft_gate(args.two_I + 1)
    j1_bare = [phase_zero_error(propagate(r.final, system)[0], f) for r in res.batch.runs]

    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_index", "seed", "error", "J1_phase0", "phase"])
        for i, (r, c, j) in enumerate(zip(res.batch.runs, res.classes, j1_bare)):
            w.writerow([i, r.seed, qio.fmt(r.final_error), qio.fmt(j), "ambiguous" if c.phase is None else qio.fmt(c.phase)])

    lines = []
    for k, st in enumerate(res.steps):
        labels = sorted({"ambiguous" if p is None else qio.pi_fraction(p) for p in st.phases})
        lines.append(f"step {k}: {st.count} runs, level {st.error_level:.2e}, phases {', '.join(labels)}")
    (out / "steps.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))

    fig, (a, b) = plt.subplots(2, 1, figsize=(5, 5), sharex=True)
    idx = np.arange(len(j1_bare))
    a.semilogy(idx, np.maximum(res.batch.sorted_errors, 1e-16), ".", ms=3)
    a.set_ylabel(args.kind)
    b.plot(idx, j1_bare, ".", ms=3)
    b.set_ylabel("J1 vs F (phase 0)")
    b.set_xlabel("run (sorted by final error)")
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "qudit-qft"}):
        fig.savefig(out / "step_diagram.svg", metadata={"Date": None})


if __name__ == "__main__":
    main()
