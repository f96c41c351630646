"""Run records and their columnar text serialisation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    """Doubles with 17 significant digits, integers verbatim."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class RunRecord:
    """Outcome of one annealing run.

    ``trace`` maps column names to equal-length arrays. Its first column is
    always ``t`` (sweep index) and is strictly increasing. ``final`` holds
    the final spin configuration (or tour order for the TSP drivers) and
    ``final_energy`` its cost.
    """

    seed: int
    schedule: dict
    sweeps: int
    trace: dict
    final: np.ndarray
    final_energy: float
    extra: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.trace[name])

    def summary(self) -> dict:
        return {"seed": self.seed, "sweeps": self.sweeps,
                "final_energy": self.final_energy}

    def same_as(self, other: "RunRecord") -> bool:
        """Bit-level equality of everything recorded."""
        if (self.seed, self.sweeps, self.schedule) != (other.seed, other.sweeps, other.schedule):
            return False
        if list(self.trace) != list(other.trace):
            return False
        for k in self.trace:
            if not np.array_equal(np.asarray(self.trace[k]), np.asarray(other.trace[k])):
                return False
        return (np.array_equal(self.final, other.final)
                and self.final_energy == other.final_energy)


def write_columns(path, columns: dict, header: dict | None = None) -> None:
    """Whitespace-separated columns under ``# key: value`` manifest lines."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    lines = []
    for k, v in (header or {}).items():
        lines.append(f"# {k}: {json.dumps(v, sort_keys=True)}")
    lines.append(" ".join(names))
    for row in zip(*cols):
        lines.append(" ".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_columns(path) -> tuple[dict, dict]:
    header, names, rows = {}, None, []
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("# "):
            k, _, v = ln[2:].partition(": ")
            header[k] = json.loads(v)
        elif names is None:
            names = ln.split()
        elif ln.strip():
            rows.append([float(x) for x in ln.split()])
    data = np.array(rows, dtype=np.float64).reshape(-1, len(names))
    return {k: data[:, i] for i, k in enumerate(names)}, header


def write_trace(record: RunRecord, path) -> None:
    header = {"seed": record.seed, "schedule": record.schedule, "sweeps": record.sweeps,
              "final_energy": fmt(record.final_energy),
              "final": "".join("+" if v > 0 else "-" for v in record.final)
              if record.final.dtype.kind == "i" and np.all(np.abs(record.final) == 1)
              else " ".join(str(int(v)) for v in record.final)}
    write_columns(path, record.trace, header)


def read_trace(path) -> RunRecord:
    cols, head = read_columns(path)
    fin = head["final"]
    if set(fin) <= {"+", "-"}:
        final = np.array([1 if c == "+" else -1 for c in fin], dtype=np.int8)
    else:
        final = np.array([int(v) for v in fin.split()], dtype=np.int64)
    return RunRecord(head["seed"], head["schedule"], head["sweeps"], cols, final,
                     float(head["final_energy"]))
