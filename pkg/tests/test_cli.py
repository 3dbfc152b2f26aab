import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from monosde.cli import (ConfigError, main, parse_levels, parse_params, parse_reference,
                         parse_schemes, trace_rows)


def _read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    return json.loads(lines[0][2:]), list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_parsers():
    assert parse_levels("6..11") == [6, 7, 8, 9, 10, 11]
    assert parse_levels("6,8") == [6, 8]
    assert parse_params(["mu=0.1,sigma=2", "X0=3"]) == {"mu": 0.1, "sigma": 2.0, "X0": 3.0}
    assert parse_reference("numeric_fine:ssbe:13", "svm32").fine_level == 13
    assert parse_reference(None, "gle").kind == "gle_exact"
    with pytest.raises(ConfigError):
        parse_schemes("")
    with pytest.raises(ConfigError):
        parse_levels("six")
    with pytest.raises(ConfigError):
        parse_params("mu")


def test_run_single_cell(tmp_path, capsys):
    code = main(["run", "--model", "gbm", "--schemes", "em", "--levels", "10", "--samples", "100",
                 "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    echo, rows = _read_csv((tmp_path / "report.csv").read_text())
    assert echo["seed"] == 1 and echo["model"] == "gbm"
    assert len(rows) == 1 and rows[0]["scheme"] == "em" and rows[0]["h_level"] == "10"
    assert float(rows[0]["error"]) > 0
    assert json.loads((tmp_path / "report.json").read_text())["rows"][0]["h_level"] == 10
    assert "fitted order" not in capsys.readouterr().out


def test_run_is_byte_reproducible(tmp_path):
    args = ["run", "--model", "gle", "--schemes", "ssbe,pem", "--levels", "6..7", "--samples", "200",
            "--seed", "4", "--format", "csv"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    a = (tmp_path / "a" / "report.csv").read_bytes()
    assert a == (tmp_path / "b" / "report.csv").read_bytes()
    assert not (tmp_path / "a" / "report.json").exists()


def test_settings_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "gbm", "schemes": "em", "levels": [8], "samples": 150, "seed": 5}))
    monkeypatch.setenv("MONOSDE_SEED", "6")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "env"), "--format", "csv"]) == 0
    assert _read_csv((tmp_path / "env" / "report.csv").read_text())[0]["seed"] == 6
    assert main(["run", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path / "flag"),
                 "--format", "csv"]) == 0
    echo = _read_csv((tmp_path / "flag" / "report.csv").read_text())[0]
    assert echo["seed"] == 7 and echo["samples"] == 150


@pytest.mark.parametrize("argv", [
    ["run", "--levels", "abc"],
    ["run", "--schemes", ""],
    ["run", "--samples", "50"],
    ["run", "--model", "svm32", "--levels", "2"],
    ["run", "--model", "gle", "--reference", "gbm_exact"],
    ["run", "--params", "kappa=1"],
    ["trace", "--schemes", ""],
    ["verify", "resolvent", "--model", "gle", "--params", "sigma=-1"],
])
def test_bad_configuration_exits_1(argv, tmp_path):
    if argv[0] == "run":
        argv = argv + ["--out", str(tmp_path)]
    assert main(argv) == 1


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "nonsense"])
    assert exc.value.code == 1


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"modle": "gle"}))
    assert main(["run", "--config", str(cfg)]) == 1
    cfg.write_text("{not json")
    assert main(["run", "--config", str(cfg)]) == 1


def test_verify_passes_and_mutation_fails(capsys):
    assert main(["verify", "resolvent", "--samples", "20000", "--seed", "7", "--model", "gle"]) == 0
    assert main(["verify", "projection", "--samples", "20000"]) == 0
    capsys.readouterr()
    assert main(["verify", "assumptions", "--samples", "20000", "--model", "gle", "--L-scale", "0.5"]) == 2
    out = capsys.readouterr().out
    assert "[FAIL]" in out and "witness" in out


def test_trace_threshold_and_flags(tmp_path):
    target = tmp_path / "trace.csv"
    assert main(["trace", "--model", "gle", "--schemes", "ssbe,bem,pem", "--level", "6", "--seed", "42",
                 "--out", str(target)]) == 0
    _, rows = _read_csv(target.read_text())
    assert len(rows) == 65
    assert {float(r["threshold"]) for r in rows} == {2**1.5}
    assert rows[0]["pem_projected"] == "0"
    assert float(rows[0]["reference"]) == 2.0


def test_trace_deterministic_ode_matches_exact():
    header, rows = trace_rows("gle", {"sigma": 0.0}, "ssbe", 8, 0, 0)
    data = np.array(rows, dtype=float)
    ssbe, exact = data[:, header.index("ssbe")], data[:, header.index("reference")]
    assert np.max(np.abs(ssbe - exact)) < 2.0**-8 * 10


def test_trace_numerical_failure_exits_3():
    assert main(["trace", "--model", "gle", "--params", "X0=50", "--schemes", "em", "--level", "3"]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "monosde", "run", "--model", "gbm", "--schemes", "em",
                           "--levels", "6", "--samples", "100", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "report.csv").exists()
