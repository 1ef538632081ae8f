"""CSV/JSON persistence for run records, reports and entropy traces.

Floats are written with ``repr`` so a read-back reproduces them exactly and
repeated runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Mapping

from .entanglement import EntropyTrace
from .experiments import RunRecord
from .simulator import QaoaParams

__all__ = ["RECORD_COLUMNS", "write_records", "read_records", "write_json", "write_traces", "persist"]

RECORD_COLUMNS = (
    "instance",
    "p",
    "restart",
    "alpha",
    "value",
    "success",
    "i3",
    "s_max",
    "area",
    "family",
    "weight",
    "n_edges",
    "ground_energy",
    "i_ac",
    "i_ad",
    "i_acd",
    "s_c",
    "s_d",
    "evals",
    "converged",
    "initial_betas",
    "initial_gammas",
    "optimal_betas",
    "optimal_gammas",
)

_FLOATS = {"alpha", "value", "i3", "s_max", "area", "ground_energy", "i_ac", "i_ad", "i_acd", "s_c", "s_d"}
_INTS = {"p", "restart", "n_edges", "evals"}
_BOOLS = {"success", "converged"}


def _fmt_floats(values) -> str:
    return ";".join(repr(float(v)) for v in values)


def _parse_floats(text: str) -> list[float]:
    return [float(t) for t in text.split(";")] if text else []


def _row(rec: RunRecord) -> list[str]:
    row = []
    for col in RECORD_COLUMNS:
        if col == "initial_betas":
            row.append(_fmt_floats(rec.initial.betas))
        elif col == "initial_gammas":
            row.append(_fmt_floats(rec.initial.gammas))
        elif col == "optimal_betas":
            row.append(_fmt_floats(rec.optimal.betas))
        elif col == "optimal_gammas":
            row.append(_fmt_floats(rec.optimal.gammas))
        else:
            v = getattr(rec, col)
            if v is None:
                row.append("")
            elif col in _FLOATS or col == "weight":
                row.append(repr(float(v)))
            elif col in _BOOLS:
                row.append("true" if v else "false")
            else:
                row.append(str(v))
    return row


def _atomic_write(path: Path, write) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        write(fh)
    os.replace(tmp, path)


def write_records(records: Iterable[RunRecord], path: str | os.PathLike) -> Path:
    path = Path(path)
    rows = [_row(r) for r in sorted(records, key=lambda r: r.key)]

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        w.writerows(rows)

    _atomic_write(path, write)
    return path


def _record_from_row(row: Mapping[str, str]) -> RunRecord:
    kw = {}
    for col in RECORD_COLUMNS:
        text = row[col]
        if col in _FLOATS:
            kw[col] = float(text)
        elif col in _INTS:
            kw[col] = int(text)
        elif col in _BOOLS:
            if text not in ("true", "false"):
                raise ValueError(f"bad boolean {text!r} in column {col}")
            kw[col] = text == "true"
        elif col == "weight":
            kw[col] = float(text) if text else None
        elif col in ("instance", "family"):
            kw[col] = text
    kw["initial"] = QaoaParams(_parse_floats(row["initial_betas"]), _parse_floats(row["initial_gammas"]))
    kw["optimal"] = QaoaParams(_parse_floats(row["optimal_betas"]), _parse_floats(row["optimal_gammas"]))
    return RunRecord(**kw)


def read_records(path: str | os.PathLike) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {', '.join(sorted(missing))}")
        return [_record_from_row(row) for row in reader]


def write_json(data, path: str | os.PathLike) -> Path:
    path = Path(path)
    _atomic_write(path, lambda fh: fh.write(json.dumps(data, indent=2, sort_keys=True) + "\n"))
    return path


def write_traces(traces: Mapping[tuple[str, int, int], EntropyTrace], output_dir: str | os.PathLike) -> list[Path]:
    out = []
    for (inst, p, k), trace in sorted(traces.items()):
        path = Path(output_dir) / f"trace_{inst}_{p}_{k}.csv"
        trace.to_csv(path)
        out.append(path)
    return out


def persist(
    records: Iterable[RunRecord],
    reports: Mapping[str, object] | None,
    output_dir: str | os.PathLike,
    traces: Mapping | None = None,
    records_name: str = "records.csv",
) -> list[Path]:
    """Write ``records.csv``, one JSON file per report and any traces."""
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [write_records(records, out_dir / records_name)]
    for name, report in (reports or {}).items():
        paths.append(write_json(report, out_dir / name))
    if traces:
        paths += write_traces(traces, out_dir)
    return paths
