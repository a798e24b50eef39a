from __future__ import annotations

import csv
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..schemas import DEFAULT_OUT_DIR, ResultRecord
from ..tools.dynamics_tools import DensityPair, GridWavefunction

NUMBER_FORMAT = "%.17g"
SNAPSHOT_HEADER = ["x", "re_psi", "im_psi", "re_p_pt", "im_p_pt", "re_j_pt", "im_j_pt"]


def _dir(out_dir: Optional[Path | str]) -> Path:
    path = Path(out_dir or DEFAULT_OUT_DIR)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return NUMBER_FORMAT % float(v)


def _flatten(prefix: str, value: Any) -> List[Tuple[str, Any]]:
    if isinstance(value, dict):
        out: List[Tuple[str, Any]] = []
        for k, v in value.items():
            out.extend(_flatten(f"{prefix}.{k}" if prefix else str(k), v))
        return out
    if isinstance(value, (list, tuple)):
        out = []
        for i, v in enumerate(value):
            out.extend(_flatten(f"{prefix}[{i}]", v))
        return out
    return [(prefix, value)]


def _write_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def put_record(record: ResultRecord, out_dir: Optional[Path | str] = None) -> Dict[str, Any]:
    path = _dir(out_dir) / f"{record.command}-{record.record_id}.json"
    path.write_text(record.model_dump_json(indent=2), encoding="utf-8")
    return {"record_id": record.record_id, "path": str(path), "command": record.command}


def put_record_csv(record: ResultRecord, out_dir: Optional[Path | str] = None) -> Dict[str, Any]:
    """Flat section,key,value rendering of a record for spreadsheet use."""
    rows: List[Tuple[str, str, Any]] = []
    for section, block in (
        ("input", record.inputs.model_dump(mode="json")),
        ("result", record.results),
        ("error", record.errors),
    ):
        rows.extend((section, key, value) for key, value in _flatten("", block))
    path = _dir(out_dir) / f"{record.command}-{record.record_id}.csv"
    _write_rows(path, ["section", "key", "value"], rows)
    return {"record_id": record.record_id, "path": str(path), "command": record.command}


def get_record(record_id: str, out_dir: Optional[Path | str] = None) -> ResultRecord:
    hits = sorted(_dir(out_dir).glob(f"*-{record_id}.json"))
    if not hits:
        raise KeyError(f"Unknown record_id: {record_id}")
    return ResultRecord.model_validate_json(hits[0].read_text(encoding="utf-8"))


def put_snapshot_csv(
    psi: GridWavefunction,
    dens: DensityPair,
    tag: str,
    out_dir: Optional[Path | str] = None,
) -> Path:
    """One file per timestamp: x, Re/Im psi, Re/Im P_PT, Re/Im J_PT."""
    cols = [
        psi.grid.xs,
        psi.samples.real,
        psi.samples.imag,
        dens.p_pt.real,
        dens.p_pt.imag,
        dens.j_pt.real,
        dens.j_pt.imag,
    ]
    path = _dir(out_dir) / f"{tag}-t{psi.t:.9f}.csv"
    return _write_rows(path, SNAPSHOT_HEADER, np.column_stack(cols))


def put_series_csv(
    columns: Mapping[str, Sequence[float]],
    name: str,
    out_dir: Optional[Path | str] = None,
) -> Path:
    header = list(columns.keys())
    data = np.column_stack([np.asarray(columns[h], dtype=np.float64) for h in header])
    return _write_rows(_dir(out_dir) / f"{name}.csv", header, data)


def put_table_csv(
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    name: str,
    out_dir: Optional[Path | str] = None,
) -> Path:
    return _write_rows(_dir(out_dir) / f"{name}.csv", header, rows)


def read_csv(path: Path | str) -> List[Dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
