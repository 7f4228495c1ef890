"""Cycle reports and their JSONL / CSV serializations.

Wall time is recorded in memory but kept out of reports.jsonl: the file is
the artifact that must be byte-identical across reruns of the same
(config, seeds), and timing never is. Timings go to a sidecar CSV.
"""

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class CycleReport:
    cycle_index: int
    seed: int
    not_confident_count: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    ece: float
    queried_ids: list
    labeled_count: int
    pool_size: int
    wall_time_seconds: float = 0.0

    def to_json_dict(self):
        # deterministic payload: everything except wall time
        return {
            "cycle_index": self.cycle_index,
            "seed": self.seed,
            "not_confident_count": self.not_confident_count,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "ece": self.ece,
            "queried_ids": list(self.queried_ids),
            "labeled_count": self.labeled_count,
            "pool_size": self.pool_size,
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(wall_time_seconds=0.0, **d)


METRIC_FIELDS = ("not_confident_count", "accuracy", "precision", "recall",
                 "f1", "ece", "labeled_count")


def write_reports_jsonl(path, reports, meta=None):
    with open(path, "w") as fh:
        if meta is not None:
            fh.write(json.dumps({"type": "meta", **meta}, sort_keys=True) + "\n")
        for r in reports:
            fh.write(json.dumps(r.to_json_dict(), sort_keys=True) + "\n")


def read_reports_jsonl(path):
    meta, reports = None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            if d.get("type") == "meta":
                meta = d
            else:
                reports.append(CycleReport.from_json_dict(d))
    return meta, reports


def write_summary_csv(path, reports, header_comments=()):
    cols = ["cycle", "seed", *METRIC_FIELDS, "labeled_fraction"]
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(cols))
    for r in sorted(reports, key=lambda r: (r.seed, r.cycle_index)):
        row = [str(r.cycle_index), str(r.seed)]
        row += [repr(getattr(r, f)) if isinstance(getattr(r, f), float)
                else str(getattr(r, f)) for f in METRIC_FIELDS]
        row.append(repr(r.labeled_count / r.pool_size))
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_timings_csv(path, reports):
    lines = ["cycle,seed,wall_time_seconds"]
    for r in sorted(reports, key=lambda r: (r.seed, r.cycle_index)):
        lines.append(f"{r.cycle_index},{r.seed},{r.wall_time_seconds!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def aggregate_reports(reports):
    """Per-cycle median and IQR of each metric across seeds."""
    by_cycle = {}
    for r in reports:
        by_cycle.setdefault(r.cycle_index, []).append(r)
    out = []
    for cycle in sorted(by_cycle):
        group = by_cycle[cycle]
        entry = {"cycle_index": cycle, "n_seeds": len(group)}
        for f in METRIC_FIELDS:
            values = np.array([getattr(r, f) for r in group], dtype=np.float64)
            q1, q3 = np.percentile(values, [25, 75])
            entry[f"{f}_median"] = float(np.median(values))
            entry[f"{f}_iqr"] = float(q3 - q1)
        out.append(entry)
    return out
