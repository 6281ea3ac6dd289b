import json

import pytest

from sel_lab.sel_path import SelPath, csv_text, format_float


def test_format_float_is_exact():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1 / 3)) == 1 / 3


def test_csv_text_cells():
    text = csv_text(["x", "ok", "note"], [(0.5, True, None), (2, False, "a,b")])
    assert text == 'x,ok,note\n0.5,1,\n2,0,"a,b"\n'


def test_json_and_csv_writers(tmp_path):
    out = SelPath(tmp_path) / "nested" / "run"
    (out / "summary.json").write_json({"mu": 1.0, "ok": True})
    assert json.loads((out / "summary.json").read_text()) == {"mu": 1.0, "ok": True}
    (out / "u.csv").write_csv(["x", "value"], [(0.0, 0.0), (0.5, 0.125)])
    assert (out / "u.csv").read_bytes() == b"x,value\n0,0\n0.5,0.125\n"


def test_partial_suffix(tmp_path):
    path = SelPath(tmp_path) / "u.csv"
    partial = path.as_partial()
    assert partial.name == "u.csv.partial"
    assert partial.is_partial() and not path.is_partial()
    assert partial.as_partial() == partial


def test_output_dir_resolution(monkeypatch, tmp_path):
    monkeypatch.delenv("SEL_OUTPUT_DIR", raising=False)
    assert SelPath.output_dir() == SelPath("sel_output")
    monkeypatch.setenv("SEL_OUTPUT_DIR", str(tmp_path))
    assert SelPath.output_dir() == SelPath(tmp_path)
    assert SelPath.output_dir("explicit") == SelPath("explicit")


def test_delete_and_tempdir():
    with SelPath.tempdir(prefix="sel_") as tmp:
        target = (tmp / "a" / "b.txt").ensure_parent()
        target.write_text("x")
        (tmp / "a").delete()
        assert not (tmp / "a").exists()
        with pytest.raises(FileNotFoundError):
            (tmp / "missing").delete(missing_ok=False)
    assert not tmp.exists()
