import csv
import io
import json
import math

import pytest

from pointleak.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, parse_range, run

SUBCOMMANDS = ["leak", "distribution", "limit", "compose", "rate", "chernoff", "verify", "simulate", "examples"]


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def ternary_path(tmp_path):
    path = tmp_path / "ternary.json"
    assert run(["examples", "--which", "ternary", "--out", str(path)]) == EXIT_OK
    return str(path)


def test_examples_document(ternary_path):
    doc = json.loads(open(ternary_path).read())
    assert doc["prior"] == [0.6, 0.3, 0.1]
    assert doc["channel"][0] == pytest.approx([0.6, 0.2, 0.2])


def test_builtin_aliases(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["examples", "--which", "fig3", "--out", str(a)]) == EXIT_OK
    assert run(["examples", "--which", "ternary", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_chernoff_matrix(ternary_path, capsys):
    assert run(["chernoff", "--system", ternary_path]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 3
    assert all(float(r["chernoff_bits"]) == pytest.approx(0.16355822766945521, abs=1e-12) for r in rows)
    assert all(r["is_min"] == "1" for r in rows)


def test_verify_strict_passes(ternary_path, capsys):
    assert run(["verify", "--metric", '{"kind":"maximal_leakage"}', "--system", ternary_path, "--strict"]) == EXIT_OK
    assert "A5_strict_local_max" in capsys.readouterr().out


def test_verify_strict_failure_exit_code(ternary_path, tmp_path):
    metric = '{"kind": "g_leakage", "gain": [[1, 1, 0], [1, 0, 1], [0, 1, 1]]}'
    out = tmp_path / "report.json"
    code = run(["verify", "--metric", metric, "--system", ternary_path, "--strict", "--out", str(out)])
    assert code == EXIT_CHECK
    doc = json.loads(out.read_text())
    failed = [c for c in doc["checks"] if c["status"] == "fail"]
    assert failed and all(c["witness"] for c in failed)


def test_observed_sequence(capsys):
    assert run(["leak", "--system", "survey", "--observe", "No"]) == EXIT_OK
    assert float(_rows(capsys.readouterr().out)[0]["leakage_bits"]) == pytest.approx(math.log2(5 / 3), abs=1e-12)
    assert run(["leak", "--system", "survey", "--observe", "No,Yes"]) == EXIT_OK
    assert float(_rows(capsys.readouterr().out)[0]["leakage_bits"]) == 0.0


def test_global_leak(capsys):
    assert run(["leak", "--system", "survey", "--metric", '{"kind":"mutual_information"}', "--global"]) == EXIT_OK
    assert float(_rows(capsys.readouterr().out)[0]["global_leakage_bits"]) == pytest.approx(0.3499775783516459)


def test_compose_columns(capsys):
    assert run(["compose", "--system", "ternary", "--ns", "1..3"]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "n,metric,global_leakage_bits,global_limit_bits,gap_bits,l1_to_information_cdf"
    assert [r["n"] for r in _rows(text)] == ["1", "2", "3"]


def test_distribution_sums_to_one(capsys):
    assert run(["distribution", "--system", "ternary", "--n", "4"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert float(rows[-1]["cdf"]) == pytest.approx(1.0)


def test_limit(capsys):
    assert run(["limit", "--system", "ternary", "--metric", '{"kind":"mutual_information"}']) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert float(rows[0]["global_limit_bits"]) == pytest.approx(1.295461844238322)


def test_rate_report(capsys):
    assert run(["rate", "--system", "survey", "--ns", "60..120:20", "--window", "60..120"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4
    assert float(rows[0]["relative_error"]) <= 0.1


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--system", "ternary", "--ns", "1,5", "--trials", "500", "--seed", "99"]
    assert run(args + ["--out", str(a)]) == EXIT_OK
    assert run(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "n,value_bits,empirical_cdf,exact_cdf"


def test_svg_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run(["distribution", "--system", "ternary", "--n", "3", "--format", "both", "--out", str(out)]) == EXIT_OK
    assert a.with_suffix(".svg").read_bytes() == b.with_suffix(".svg").read_bytes()
    assert a.with_suffix(".svg").read_text().lstrip().startswith("<?xml")


def test_svg_needs_out():
    assert run(["distribution", "--system", "ternary", "--format", "svg"]) == EXIT_INPUT


@pytest.mark.parametrize(
    "argv",
    [
        ["leak", "--system", "missing.json"],
        ["leak", "--system", "survey", "--metric", '{"kind": "sibson", "alpha": 0.5}'],
        ["leak", "--system", "survey", "--metric", '{"kind": '],
        ["leak", "--system", "survey", "--observe", "Maybe"],
        ["compose", "--system", "ternary", "--ns", "5..1"],
        ["rate", "--system", "ternary", "--window", "x"],
        ["simulate", "--system", "ternary", "--trials", "0"],
        ["nonsense"],
    ],
)
def test_input_errors(argv, capsys):
    assert run(argv) == EXIT_INPUT


def test_parse_error_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"prior": [0.5,\n')
    assert run(["leak", "--system", str(bad)]) == EXIT_INPUT
    assert f"{bad}:2:1" in capsys.readouterr().err


def test_invalid_system_reported(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"prior": [0.5, 0.6], "channel": [[1, 0], [0, 1]]}))
    assert run(["leak", "--system", str(bad)]) == EXIT_INPUT
    assert "sum" in capsys.readouterr().err


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help(cmd, capsys):
    assert run([cmd, "--help"]) == EXIT_OK
    assert "usage" in capsys.readouterr().out


def test_parse_range():
    assert parse_range("60..100:20") == [60, 80, 100]
    assert parse_range("1,2,5") == [1, 2, 5]
