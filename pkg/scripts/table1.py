"""Closed-form qutrit sequence parameters against the published table, plus Trotter scans.

    python scripts/table1.py
"""

import csv
from pathlib import Path

from qudit_qft import io as qio
from qudit_qft.qutrit import TABLE1_FIELDS, loglog_slope, trotter_scan, verify_table1

RS = (1, 2, 4, 8, 16, 32)


def main(out="results/table1"):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rep = verify_table1()
    with open(out / "table1.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Phi_m", "shifts"] + [f"{k}_{s}" for k in TABLE1_FIELDS for s in ("solved", "printed")]
                   + ["identity_error", "passed"])
        for r in rep.rows:
            vals = [qio.fmt(v) for k in TABLE1_FIELDS for v in (r.solved.get(k, float("nan")), r.printed[k])]
            w.writerow([qio.pi_fraction(r.phase), " ".join(map(str, r.shifts))] + vals
                       + [qio.fmt(r.identity_error), r.passed])
    with open(out / "trotter.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["shifts"] + [f"r={r}" for r in RS] + ["slope"])
        for r in rep.rows:
            scan = trotter_scan(r.params, RS)
            w.writerow([" ".join(map(str, r.shifts))] + [qio.fmt(e) for _, e in scan] + [f"{loglog_slope(scan):.3f}"])
            print(f"{str(r.shifts):12s} " + " ".join(f"{e:.2e}" for _, e in scan) + f"  slope {loglog_slope(scan):.2f}")
    for r in rep.rows:
        print(f"{'ok ' if r.passed else 'BAD'} {qio.pi_fraction(r.phase):>6s} {str(r.shifts):12s} "
              + " ".join(f"{k}={r.solved[k]:+.3f}" for k in TABLE1_FIELDS) + f"  {r.note}")
    for name, ok in rep.orderings.items():
        print(f"{'ok ' if ok else 'BAD'} {name}")


if __name__ == "__main__":
    main()
