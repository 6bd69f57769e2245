"""Per-row flip reports and machine-readable output writers.

All primary outputs share one metadata convention: JSON-lines files start
with a meta record, CSV files start with ``# key=value`` comment lines.
Wall-clock measurements never appear in primary outputs; the only
run-varying field is the timestamp inside the meta block.
"""

from __future__ import annotations

import csv
import datetime
import importlib.metadata
import json
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

METHODS = (
    "pruned_unflippable",
    "closed_form_flip",
    "mip_certified",
    "oracle_certified",
    "undetermined",
)


def package_version() -> str:
    try:
        return importlib.metadata.version("topkflip")
    except importlib.metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class FlipReport:
    """Certified rank range for one row under one model family.

    ``flippable`` is None only when the certification budget ran out
    before either side was decided (method ``undetermined``); for methods
    ``pruned_unflippable`` and ``closed_form_flip`` the rank fields are
    certified outer bounds, for the certified methods they are exact.
    """

    row_id: str
    baseline_rank: int
    min_rank: int
    max_rank: int
    flippable: bool | None
    method: str
    witness: NDArray[np.float64] | None = None
    witness_kind: str | None = None  # "coef" | "alpha"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 1 <= self.min_rank <= self.max_rank:
            raise ValueError(
                f"rank range [{self.min_rank}, {self.max_rank}] is malformed for row {self.row_id}"
            )
        if self.witness_kind not in (None, "coef", "alpha"):
            raise ValueError(f"unknown witness_kind {self.witness_kind!r}")


def meta_record(**fields) -> dict:
    """Metadata header content; None-valued fields are dropped."""
    meta = {
        "kind": "meta",
        "software": "topkflip",
        "version": package_version(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    for key, value in fields.items():
        if value is not None:
            meta[key] = value
    return meta


def write_reports_jsonl(reports, path, meta: dict) -> None:
    """JSON-lines: the meta record first, then one object per row report.

    A blend-weight witness is emitted as ``witness_alpha``; coefficient
    witnesses stay in memory only.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta) + "\n")
        for rep in reports:
            rec = {
                "row_id": rep.row_id,
                "baseline_rank": rep.baseline_rank,
                "min_rank": rep.min_rank,
                "max_rank": rep.max_rank,
                "flippable": rep.flippable,
                "method": rep.method,
            }
            if rep.witness_kind == "alpha" and rep.witness is not None:
                rec["witness_alpha"] = [float(a) for a in rep.witness]
            fh.write(json.dumps(rec) + "\n")


def read_reports_jsonl(path) -> "tuple[dict, list[FlipReport]]":
    """Inverse of :func:`write_reports_jsonl` (meta, reports)."""
    reports = []
    with open(path, encoding="utf-8") as fh:
        meta = json.loads(fh.readline())
        if meta.get("kind") != "meta":
            raise ValueError(f"{path}: first line is not a meta record")
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            alpha = rec.get("witness_alpha")
            reports.append(
                FlipReport(
                    row_id=rec["row_id"],
                    baseline_rank=rec["baseline_rank"],
                    min_rank=rec["min_rank"],
                    max_rank=rec["max_rank"],
                    flippable=rec["flippable"],
                    method=rec["method"],
                    witness=None if alpha is None else np.array(alpha, dtype=np.float64),
                    witness_kind=None if alpha is None else "alpha",
                )
            )
    return meta, reports


def write_csv_with_meta(path, meta: dict, columns, rows) -> None:
    """CSV with ``# key=value`` comment lines before the header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            if key == "kind":
                continue
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)


def read_csv_with_meta(path) -> "tuple[dict, list[str], list[list[str]]]":
    """Inverse of :func:`write_csv_with_meta` (meta, columns, rows)."""
    meta: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = []
        for line in fh:
            if line.startswith("# ") and "=" in line:
                key, _, value = line[2:].rstrip("\n").partition("=")
                meta[key] = value
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]
