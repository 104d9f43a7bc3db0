"""CSV and density-matrix files exchanged between the CLI stages."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .measure import CountRecord, setting
from .qstate import dumps_density, loads_density

COUNTS_FIELDS = ("channel", "label", "count", "expected", "integration_s")
METRICS_FIELDS = (
    "channel", "fidelity_phi_plus", "fidelity_max", "theta_star",
    "concurrence", "purity", "method", "converged",
)
COMPENSATION_FIELDS = ("channel", "theta_estimate", "q1_deg", "q2_deg", "h_deg")
PLAN_FIELDS = ("index", "signal_nm", "idler_nm", "signal_THz", "idler_THz")
SWEEP_FIELDS = (
    "index", "signal_nm", "idler_nm", "hh_counts", "fidelity_phi_plus",
    "fidelity_max", "theta_star", "concurrence", "converged", "error",
)
DRIFT_FIELDS = ("interval", "signal_angle", "idler_angle")


def _fmt(v) -> str:
    # repr round-trips floats exactly, which keeps files byte-stable.
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path, rows, fields, stream=None) -> None:
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row.get(f)) for f in fields])

    if stream is not None:
        _write(stream)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        _write(fh)


def read_csv(path, required=()) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [f for f in required if f not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return list(reader)


def parse_bool(text: str) -> bool:
    return text.strip().lower() in ("true", "1", "yes")


def parse_float(text: str) -> float:
    return float(text) if text not in ("", None) else math.nan


def records_to_rows(records: list[CountRecord]) -> list[dict]:
    return [
        {
            "channel": r.channel,
            "label": r.setting.label,
            "count": r.count,
            "expected": r.expected,
            "integration_s": r.integration_time,
        }
        for r in records
    ]


def read_counts(path) -> dict[int, list[CountRecord]]:
    """Count records grouped by channel, in file order."""
    out: dict[int, list[CountRecord]] = {}
    for row in read_csv(path, COUNTS_FIELDS):
        ch = int(row["channel"])
        out.setdefault(ch, []).append(
            CountRecord(
                setting(row["label"]),
                float(row["count"]),
                float(row["expected"]),
                float(row["integration_s"]),
                ch,
            )
        )
    return out


def rho_path(directory, channel: int) -> Path:
    return Path(directory) / f"rho_ch{channel:02d}.txt"


def write_density(path, rho) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(dumps_density(rho))


def read_density(path) -> np.ndarray:
    return loads_density(Path(path).read_text())


def read_densities(directory) -> dict[int, np.ndarray]:
    out = {}
    for p in sorted(Path(directory).glob("rho_ch*.txt")):
        out[int(p.stem.removeprefix("rho_ch"))] = read_density(p)
    return out
