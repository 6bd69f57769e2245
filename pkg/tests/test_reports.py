import json

import numpy as np
import pytest

from topkflip.reports import (
    FlipReport,
    meta_record,
    read_csv_with_meta,
    read_reports_jsonl,
    write_csv_with_meta,
    write_reports_jsonl,
)


def test_meta_record_fields():
    meta = meta_record(command="x", seed=3, skipme=None)
    assert meta["kind"] == "meta"
    assert meta["software"] == "topkflip"
    assert "version" in meta and "timestamp" in meta
    assert meta["command"] == "x" and meta["seed"] == 3
    assert "skipme" not in meta  # None-valued fields are dropped


def test_flip_report_validation():
    with pytest.raises(ValueError):
        FlipReport(row_id="0", baseline_rank=1, min_rank=5, max_rank=2, flippable=False, method="mip_certified")
    with pytest.raises(ValueError):
        FlipReport(row_id="0", baseline_rank=1, min_rank=1, max_rank=2, flippable=False, method="guessed")


def test_jsonl_round_trip(tmp_path):
    reports = [
        FlipReport(row_id="a", baseline_rank=2, min_rank=1, max_rank=4, flippable=True,
                   method="mip_certified", witness=np.array([0.3, 0.7]), witness_kind="alpha"),
        FlipReport(row_id="b", baseline_rank=9, min_rank=8, max_rank=9, flippable=False,
                   method="pruned_unflippable"),
    ]
    p = tmp_path / "r.jsonl"
    write_reports_jsonl(reports, p, meta_record(command="t"))
    meta, back = read_reports_jsonl(p)
    assert meta["command"] == "t"
    assert [r.row_id for r in back] == ["a", "b"]
    assert back[0].flippable is True and back[1].flippable is False
    np.testing.assert_allclose(back[0].witness, [0.3, 0.7])
    assert back[0].witness_kind == "alpha"
    # coefficient witnesses are an in-memory concern only
    first = json.loads(p.read_text().splitlines()[1])
    assert "witness_alpha" in first


def test_coef_witness_not_serialized(tmp_path):
    rep = FlipReport(row_id="c", baseline_rank=1, min_rank=1, max_rank=3, flippable=True,
                     method="closed_form_flip", witness=np.array([1.0, 2.0]), witness_kind="coef")
    p = tmp_path / "c.jsonl"
    write_reports_jsonl([rep], p, meta_record())
    line = json.loads(p.read_text().splitlines()[1])
    assert "witness_alpha" not in line
    _, back = read_reports_jsonl(p)
    assert back[0].witness is None


def test_csv_meta_round_trip(tmp_path):
    p = tmp_path / "m.csv"
    meta = meta_record(command="curve", kappa=7)
    write_csv_with_meta(p, meta, ["a", "b"], [[1, "x"], [2, "y"]])
    got, columns, rows = read_csv_with_meta(p)
    assert got["command"] == "curve" and got["kappa"] == "7"
    assert columns == ["a", "b"]
    assert rows == [["1", "x"], ["2", "y"]]
    # the kind marker is header-only, it never appears as a comment line
    assert "# kind=" not in p.read_text()
