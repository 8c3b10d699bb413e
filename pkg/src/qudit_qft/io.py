"""Text file formats: configs, pulse files, front tables, batch tables, manifests.

Configs and pulse files share a flat ``key = value`` format. Floats are
written with 17 significant digits, which round-trips IEEE doubles exactly.
"""

import csv
import hashlib
import io
import json
import math
import re
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .grape import BFGSOptions, ObjectiveSpec, OptimizationRun, PiecewisePulse, random_initial_pulse
from .pareto import FrontPoint, ParetoFront
from .spin import make_gate, make_spin_system


def fmt(x):
    return format(float(x), ".17g")


_ANGLE = re.compile(r"^\s*([-+]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_float(text):
    """Float, also accepting multiples of pi such as ``5pi/6`` or ``-pi``."""
    text = str(text).strip()
    m = _ANGLE.match(text)
    if m:
        coef = m.group(1)
        coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        den = float(m.group(2)) if m.group(2) else 1.0
        return coef * math.pi / den
    return float(text)


def pi_fraction(x, max_den=64):
    """``x`` as a multiple of pi, e.g. ``5pi/6``."""
    f = Fraction(x / math.pi).limit_denominator(max_den)
    if f == 0:
        return "0"
    num = "" if f.numerator == 1 else "-" if f.numerator == -1 else str(f.numerator)
    return f"{num}pi" if f.denominator == 1 else f"{num}pi/{f.denominator}"


def pi_multiple(x, den):
    """``x`` written as ``k pi/den`` without reducing the fraction, e.g. ``9pi/6``."""
    k = round(x * den / math.pi)
    if abs(k * math.pi / den - x) > 1e-9:
        return pi_fraction(x)
    if k == 0:
        return "0"
    num = "" if k == 1 else "-" if k == -1 else str(k)
    return f"{num}pi" if den == 1 else f"{num}pi/{den}"


def read_kv(text):
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


# ---------------------------------------------------------------- pulses

def pulse_text(run, two_I, gate="qft"):
    obj = run.objective
    lines = [
        "# qudit-qft pulse file",
        f"two_I = {two_I}",
        f"gate = {gate}",
        f"T = {fmt(run.final.total_time)}",
        f"S = {run.final.steps}",
        f"seed = {run.seed}",
        f"objective = {obj.kind}",
        f"phase = {fmt(obj.phase)}",
        f"final_error = {fmt(run.final_error)}",
        f"iterations = {run.iterations}",
        f"stop_reason = {run.stop_reason}",
        "ux = " + " ".join(fmt(v) for v in run.final.ux),
        "uy = " + " ".join(fmt(v) for v in run.final.uy),
    ]
    return "\n".join(lines) + "\n"


def write_pulse(path, run, two_I, gate="qft"):
    Path(path).write_text(pulse_text(run, two_I, gate))


@dataclass
class PulseRecord:
    two_I: int
    gate: str
    seed: int
    objective: ObjectiveSpec
    pulse: PiecewisePulse
    final_error: float
    iterations: int
    stop_reason: str

    @property
    def system(self):
        return make_spin_system(self.two_I)

    def as_run(self, initial=None):
        return OptimizationRun(self.seed, self.objective, initial or self.pulse, self.pulse, self.final_error,
                               self.iterations, [self.final_error], self.stop_reason)


def read_pulse(path):
    kv = read_kv(Path(path).read_text())
    try:
        two_I = int(kv["two_I"])
        ux = [float(v) for v in kv["ux"].split()]
        uy = [float(v) for v in kv["uy"].split()]
        S = int(kv["S"])
        if len(ux) != S or len(uy) != S:
            raise ValueError(f"{path}: S={S} but {len(ux)}/{len(uy)} amplitudes")
        gate_label = kv.get("gate", "qft")
        target = make_gate(gate_label, two_I + 1)
        obj = ObjectiveSpec(kv["objective"], target, float(kv.get("phase", 0.0)))
        return PulseRecord(two_I, gate_label, int(kv.get("seed", -1)), obj, PiecewisePulse(float(kv["T"]), ux, uy),
                           float(kv.get("final_error", "nan")), int(kv.get("iterations", 0)),
                           kv.get("stop_reason", "max_iter"))
    except KeyError as e:
        raise ValueError(f"{path}: missing field {e.args[0]}") from None


# ---------------------------------------------------------------- config

@dataclass
class ExperimentConfig:
    two_I: int = 2
    gate: str = "qft"
    objective: str = "J1"
    phase: float = 0.0
    T: float = 2.0
    T_min: float = math.nan
    T_max: float = math.nan
    S: int = 500
    seeds: int = 0
    base_seed: int = 0
    dT: float = 0.01
    threshold: float = 1e-5
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    max_iter: int = 2000
    knot_stride: int = 50
    amp_range: float = 3.0
    output: str = "results"
    workers: int = 1

    # excluded from the hash: they never change numeric results
    NON_NUMERIC = ("output", "workers")

    def validate(self):
        if self.two_I < 1:
            raise ValueError("two_I must be >= 1")
        make_gate(self.gate, self.two_I + 1)
        if self.objective not in ("J1", "J2"):
            raise ValueError("objective must be J1 or J2")
        if not self.T > 0:
            raise ValueError("T must be positive")
        for name in ("T_min", "T_max"):
            v = getattr(self, name)
            if not math.isnan(v) and v <= 0:
                raise ValueError(f"{name} must be positive")
        if not math.isnan(self.T_min) and not math.isnan(self.T_max) and self.T_min > self.T_max:
            raise ValueError("T_min exceeds T_max")
        if self.S < 1 or self.knot_stride < 1 or self.knot_stride > self.S or self.S % self.knot_stride:
            raise ValueError("S must be a positive multiple of knot_stride")
        if self.seeds < 0:
            raise ValueError("seeds must be >= 0")
        if not self.dT > 0:
            raise ValueError("dT must be positive")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_iter < 0:
            raise ValueError("tolerances must be positive and max_iter >= 0")
        if self.amp_range < 0:
            raise ValueError("amp_range must be >= 0")
        return self

    @property
    def seed_list(self):
        return list(range(self.base_seed, self.base_seed + self.seeds))

    def system(self):
        return make_spin_system(self.two_I)

    def target(self):
        return make_gate(self.gate, self.two_I + 1)

    def objective_spec(self):
        return ObjectiveSpec(self.objective, self.target(), self.phase)

    def bfgs_options(self):
        return BFGSOptions(abs_tol=self.abs_tol, rel_tol=self.rel_tol, max_iter=self.max_iter)

    def to_text(self, runtime=True):
        """Config file text; ``runtime=False`` drops output and workers."""
        lines = ["# qudit-qft experiment config"]
        for f in fields(self):
            if not runtime and f.name in self.NON_NUMERIC:
                continue
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {fmt(v) if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"

    def config_hash(self):
        text = self.to_text(runtime=False)
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_mapping(cls, kv):
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for key, raw in kv.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            default = getattr(cls, key)
            if isinstance(default, bool):
                values[key] = str(raw).lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                values[key] = int(raw)
            elif isinstance(default, float):
                values[key] = parse_float(raw)
            else:
                values[key] = str(raw)
        return cls(**values).validate()

    @classmethod
    def from_text(cls, text):
        return cls.from_mapping(read_kv(text))

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text())


# ---------------------------------------------------------------- tables

def front_text(front):
    buf = io.StringIO()
    buf.write(f"# family = {front.family_label}\n")
    buf.write(f"# phase = {fmt(front.phase)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["T", "J", "iterations", "stop_reason"])
    for p in front.points:
        w.writerow([fmt(p.T), fmt(p.J), p.iterations, p.stop_reason])
    tc = front.critical_time
    buf.write(f"# threshold = {fmt(front.threshold)}\n")
    buf.write(f"# critical_time = {'none' if tc is None else fmt(tc)}\n")
    buf.write(f"# aborted = {str(front.aborted).lower()}\n")
    return buf.getvalue()


def write_front(path, front):
    Path(path).write_text(front_text(front))


def read_front(path):
    meta, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].partition("=")
            meta[k.strip()] = v.strip()
        elif line.strip():
            rows.append(line)
    reader = csv.DictReader(rows)
    points = [FrontPoint(float(r["T"]), float(r["J"]), int(r["iterations"]), r["stop_reason"]) for r in reader]
    front = ParetoFront(meta.get("family", Path(path).stem), float(meta.get("phase", "nan")), points,
                        meta.get("aborted", "false") == "true", float(meta.get("threshold", 1e-5)))
    return front.sort()


def batch_text(rows):
    """Rows of ``(run_index, seed, error, iterations, stop_reason, phase)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run_index", "seed", "error", "iterations", "stop_reason", "phase"])
    for idx, seed, err, its, reason, phase in rows:
        w.writerow([idx, seed, fmt(err), its, reason, "ambiguous" if phase is None else fmt(phase)])
    return buf.getvalue()


def steps_text(rows):
    """Step-diagram export: ``(run_index, error, phase)`` rows in sorted-error order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run_index", "error", "phase"])
    for idx, err, phase in rows:
        w.writerow([idx, fmt(err), "ambiguous" if phase is None else fmt(phase)])
    return buf.getvalue()


def families_jsonl(families):
    out = []
    for fam in families:
        h = fam.h_eff
        rec = {
            "shifts": list(fam.shifts),
            "phi_m": fam.phi_m,
            "global_phase": fam.global_phase,
            "T": fam.total_time,
            "h_eff": [[[float(z.real), float(z.imag)] for z in row] for row in h],
        }
        out.append(json.dumps(rec))
    return "\n".join(out) + ("\n" if out else "")


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(directory, config, artifacts):
    """``manifest.json``: config hash plus path and sha256 of every artifact."""
    directory = Path(directory)
    entries = {str(Path(p).relative_to(directory)): file_digest(p) for p in sorted(artifacts)}
    data = {"config_hash": config.config_hash(), "artifacts": entries}
    path = directory / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def load_or_none(path, config, seed):
    """A checkpointed run for ``seed`` if its pulse file matches the config."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        rec = read_pulse(path)
    except (ValueError, KeyError):
        return None
    same = (rec.two_I == config.two_I and rec.gate == config.gate and rec.seed == seed
            and rec.objective.kind == config.objective and rec.objective.phase == config.phase
            and rec.pulse.total_time == config.T and rec.pulse.steps == config.S)
    if not same:
        return None
    init = random_initial_pulse(seed, config.T, config.S, config.knot_stride, config.amp_range)
    return rec.as_run(init)


