from __future__ import annotations

import json
import math
import subprocess
import sys

import pytest

from volratio.cli import main, parse_dims
from volratio.report import (
    CSV_COLUMNS,
    ExperimentReport,
    ReportRow,
    emit_report,
    load_report_csv,
    load_report_json,
    report_csv,
)


def test_empty_report_is_header_only():
    assert report_csv(ExperimentReport("x")) == ",".join(CSV_COLUMNS) + "\n"


def test_json_round_trip(tmp_path):
    rep = ExperimentReport("demo", config={"seed": 3, "dims": [2, 3]},
                           rows=[ReportRow("demo", 2, 0, 3, 0.1 + 0.2, 1e-17, "ok"),
                                 ReportRow("demo", 3, 1, 3, math.pi, 0.0, "approx")],
                           aggregates={"median": 1.5, "bad": math.inf}, notes=["a note"], violations=1)
    path = tmp_path / "r.json"
    emit_report(rep, "json", path)
    back = load_report_json(path)
    assert back.rows == rep.rows and back.config == rep.config and back.notes == rep.notes
    assert back.violations == 1 and back.aggregates["bad"] == "inf"
    emit_report(rep, "csv", tmp_path / "r.csv")
    assert load_report_csv(tmp_path / "r.csv") == rep.rows  # floats round-trip bit-exactly


def test_emit_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report(ExperimentReport("x"), "xml", tmp_path / "x")


def test_parse_dims():
    assert parse_dims("3,4") == [3, 4]
    assert parse_dims("3-5") == [3, 4, 5]
    assert parse_dims("2..4,7") == [2, 3, 4, 7]


def _run(argv, tmp_path, name="out.csv"):
    path = tmp_path / name
    code = main(argv + ["--out", str(path)])
    return code, path


def test_csv_row_count(tmp_path):
    code, path = _run(["det-bound", "--dims", "3,4,5", "--trials", "7", "--seed", "2"], tmp_path)
    assert code == 0
    rows = load_report_csv(path)
    assert len(rows) == 7 * 3
    assert {r.n for r in rows} == {3, 4, 5}


def test_cli_vr_example(tmp_path):
    code, path = _run(["vr", "--body-k", "b2:2", "--body-l", "b1:2", "--seed", "7", "--format", "json"],
                      tmp_path, "vr.json")
    assert code == 0
    rep = load_report_json(path)
    assert rep.rows[0].value == pytest.approx(math.sqrt(math.pi / 2), rel=0.01)
    assert rep.notes


def test_cli_bobkov_example(tmp_path):
    code, path = _run(["bobkov-check", "--body", "b1:4", "--samples", "10000", "--seed", "1",
                       "--format", "json"], tmp_path, "b.json")
    assert code == 0
    assert load_report_json(path).violations == 0


def test_cli_violation_exits_2(tmp_path):
    # tightening the constants past the theorem produces violations
    code, _ = _run(["bobkov-check", "--body", "binf:3", "--samples", "100", "--allowance", "0.2"], tmp_path)
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["vr", "--body-k", "b2:2", "--body-l", "b1:3"],
    ["vr", "--body-k", "nosuch:2", "--body-l", "b1:2"],
    ["vr", "--body-k", "{\"variant\": ", "--body-l", "b1:2"],
    ["vr", "--body-k", "{\"variant\": \"lp_ball\"}", "--body-l", "b1:2"],
    ["gluskin-lower", "--body", "b7"],
    ["det-bound", "--dims", "x"],
    ["det-bound", "--trials", "0"],
    ["nosuch"],
    ["det-bound", "--seed", "-1"],
])
def test_cli_usage_errors_exit_1(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv + ["--out", str(tmp_path / "x")]))
    assert exc.value.code == 1
    assert "error" in capsys.readouterr().err


def test_cli_dimension_mismatch_message(tmp_path, capsys):
    assert main(["vr", "--body-k", "b2:2", "--body-l", "b1:3", "--out", str(tmp_path / "x")]) == 1
    assert "dimension" in capsys.readouterr().err


def test_cli_json_body_file(tmp_path):
    body = tmp_path / "k.json"
    body.write_text(json.dumps({"variant": "lp_ball", "p": 2.0, "n": 2}))
    code, path = _run(["vr", "--body-k", str(body), "--body-l", "b1:2"], tmp_path)
    assert code == 0


@pytest.mark.parametrize("argv", [
    ["gluskin-lower", "--dims", "2,3", "--trials", "3", "--body", "binf"],
    ["det-bound", "--dims", "4", "--trials", "20"],
    ["santalo", "--dims", "2", "--samples", "500"],
    ["chevet-tail", "--dims", "3", "--trials", "30", "--samples", "500"],
    ["sandwich-check", "--dims", "2", "--samples", "200", "--tau", "kyfan:2"],
])
def test_cli_deterministic_across_threads(argv, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    c = tmp_path / "c.csv"
    assert main(argv + ["--seed", "5", "--threads", "1", "--out", str(a)]) == 0
    assert main(argv + ["--seed", "5", "--threads", "3", "--out", str(b)]) == 0
    assert main(argv + ["--seed", "5", "--threads", "1", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "volratio.cli", "det-bound", "--dims", "3", "--trials", "5"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert len(out.stdout.splitlines()) == 6
