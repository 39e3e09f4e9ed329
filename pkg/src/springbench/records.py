"""Record CSV + sidecar metadata, sweep summaries, atomic text output."""

from __future__ import annotations

import csv
import dataclasses
import io
import os
import tempfile
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidInputError, RecordError
from .model import BilinearMaterial, LoadTrain, SensorSpec, SpecimenGeometry
from .protocol import FatigueProtocol, MonotonicProtocol
from .simulator import Bench, CycleStats, FatigueOutcome, Termination, TestRecord

RECORD_HEADER = ["t_s", "u_act_m", "dx_m", "dy_m", "F_N"]
SUMMARY_HEADER = ["mean_displacement_m", "amplitude_pp_m", "status", "cycles", "sigma_max_Pa",
                  "sigma_min_Pa", "sigma_mean_Pa", "sigma_amp_Pa", "sigma_ar_Pa", "delta_eps_pl",
                  "damage", "reason"]


def fmt(x):
    """Fixed 9-significant-digit text for floats."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def write_text_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def sidecar_path(csv_path):
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.yaml")


def _asdict(obj):
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}


def _floats(d):
    return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in d.items()}


def record_metadata(record):
    b = record.bench
    meta = {
        "kind": record.kind,
        "units": "SI",
        "seed": b.seed,
        "geometry": _floats(_asdict(b.geometry)),
        "material": _floats(_asdict(b.material)),
        "load_train": _floats(_asdict(b.train)),
        "sensors": _floats(_asdict(b.sensors)),
        "protocol": _floats(_asdict(record.protocol)),
        "termination": _asdict(record.termination),
    }
    if record.outcome is not None:
        meta["outcome"] = outcome_to_dict(record.outcome)
    return meta


def outcome_to_dict(o):
    s = o.stats
    return {"status": o.status, "cycles": int(o.cycles), "reason": o.reason, "damage": float(o.damage),
            "sigma_max": float(s.sigma_max), "sigma_min": float(s.sigma_min),
            "delta_eps_pl": float(s.delta_eps_pl)}


def write_record(record, csv_path):
    rows = zip(record.t, record.u_act, record.dx, record.dy, record.force)
    write_text_atomic(sidecar_path(csv_path), yaml.safe_dump(record_metadata(record), sort_keys=False))
    write_text_atomic(csv_path, csv_text(RECORD_HEADER, rows))


def read_record(csv_path):
    csv_path = Path(csv_path)
    meta_path = sidecar_path(csv_path)
    if not meta_path.exists():
        raise RecordError(f"{csv_path}: metadata sidecar {meta_path.name} not found")
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RECORD_HEADER:
            raise RecordError(f"{csv_path}: row 1: expected header {','.join(RECORD_HEADER)}")
        data = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(RECORD_HEADER):
                raise RecordError(f"{csv_path}: row {i}: expected {len(RECORD_HEADER)} fields, got {len(row)}")
            try:
                data.append([float(v) for v in row])
            except ValueError:
                raise RecordError(f"{csv_path}: row {i}: non-numeric field") from None
    if len(data) < 2:
        raise RecordError(f"{csv_path}: fewer than 2 samples")
    arr = np.asarray(data)
    if np.any(np.diff(arr[:, 0]) <= 0):
        bad = int(np.argmax(np.diff(arr[:, 0]) <= 0)) + 3
        raise RecordError(f"{csv_path}: row {bad}: timestamps not strictly increasing")
    try:
        meta = yaml.safe_load(meta_path.read_text())
        bench = Bench(SpecimenGeometry(**meta["geometry"]), BilinearMaterial(**meta["material"]),
                      LoadTrain(**meta["load_train"]), SensorSpec(**meta["sensors"]))
        proto_cls = FatigueProtocol if meta["kind"] == "fatigue" else MonotonicProtocol
        protocol = proto_cls(**meta["protocol"])
        term = Termination(**meta["termination"])
        outcome = None
        if "outcome" in meta:
            o = meta["outcome"]
            outcome = FatigueOutcome(protocol, o["cycles"], o["status"] == "failed",
                                     CycleStats(o["sigma_max"], o["sigma_min"], o["delta_eps_pl"]),
                                     o["damage"], o["reason"])
    except (KeyError, TypeError, InvalidInputError, yaml.YAMLError) as exc:
        raise RecordError(f"{meta_path}: bad metadata: {exc}") from None
    return TestRecord(bench, protocol, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], term, outcome)


def summary_rows(outcomes, uts):
    for o in outcomes:
        s = o.stats
        yield [o.protocol.mean_displacement, o.protocol.amplitude_pp, o.status, int(o.cycles),
               s.sigma_max, s.sigma_min, s.sigma_mean, s.sigma_amp, o.equivalent_amplitude(uts),
               s.delta_eps_pl, o.damage, o.reason]


def read_summary(path):
    """Sweep summary CSV -> list of FatigueOutcome."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SUMMARY_HEADER:
            raise RecordError(f"{path}: row 1: not a sweep summary")
        for i, row in enumerate(reader, start=2):
            if len(row) != len(SUMMARY_HEADER):
                raise RecordError(f"{path}: row {i}: expected {len(SUMMARY_HEADER)} fields")
            try:
                d, a = float(row[0]), float(row[1])
                proto = FatigueProtocol(d, a, max_cycles=max(int(row[3]), 1))
                stats = CycleStats(float(row[4]), float(row[5]), float(row[9]))
                out.append(FatigueOutcome(proto, int(row[3]), row[2] == "failed", stats, float(row[10]), row[11]))
            except (ValueError, InvalidInputError) as exc:
                raise RecordError(f"{path}: row {i}: {exc}") from None
    return out
