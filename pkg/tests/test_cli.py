from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from avoidset.cli import CONFIG_SCHEMA, run


def write(path: Path, text: str) -> str:
    path.write_text(text)
    return str(path)


def report(out: Path) -> dict:
    return json.loads((out / "report.json").read_text())


@pytest.fixture()
def clouds(tmp_path):
    return {
        "collinear": write(tmp_path / "col.csv", "coord_0,coord_1\n0,0\n1,1\n2,2\n5,7\n"),
        "free": write(tmp_path / "free.csv", "0,0\n1,0\n3,5\n"),
        "dup": write(tmp_path / "dup.csv", "0,0\n1,0\n0,0\n"),
    }


def test_verify_clean_cloud_exit_zero(tmp_path, clouds):
    assert run(["verify", "--preset", "right_angle", "--cloud", clouds["free"], "--out", str(tmp_path / "o")]) == 0


def test_verify_collinear_witness_exit_one(tmp_path, clouds):
    out = tmp_path / "o"
    assert run(["verify", "--preset", "collinear", "--cloud", clouds["collinear"], "--out", str(out)]) == 1
    rep = report(out)
    triples = [v["indices"] for part in rep["result"]["specs"] for v in part["violations"]]
    assert [0, 1, 2] in triples
    assert rep["status"] == "fail"


def test_schedule_strict_example(tmp_path):
    out = tmp_path / "o"
    assert run(["schedule", "--strict", "--levels", "2", "--n", "1", "--d", "1", "--out", str(out)]) == 0
    levels = report(out)["result"]["schedule"]["levels"]
    assert levels[0]["h"] == "1/10"
    assert float(levels[1]["ln_h"]) <= -100


def test_schedule_explicit_failure(tmp_path):
    assert run(["schedule", "--h", "1/10", "--h", "1/100", "--out", str(tmp_path / "o")]) == 1


def test_relaxed_schedule_reports_but_passes(tmp_path):
    out = tmp_path / "o"
    assert run(["schedule", "--levels", "3", "--out", str(out)]) == 0
    assert report(out)["result"]["validation"]["passed"] is False


def test_stage_outputs(tmp_path):
    out = tmp_path / "o"
    code = run(["stage", "--preset", "right_angle", "--anchor", "0,0", "--anchor", "1,0", "--anchor", "0,1",
                "--h", "15/100", "--perturbations", "200", "--out", str(out)])
    assert code == 0
    rep = report(out)["result"]
    assert rep["stage"]["N"] == 10 and rep["gap"]["passed"]
    assert (out / "points.csv").read_text().splitlines()[0] == "ball_index,coord_0,coord_1"


@pytest.mark.parametrize("name", ["vertex", "right_angle.vertex"])
def test_spec_short_and_full_names(tmp_path, name):
    out = tmp_path / "o"
    assert run(["stage", "--preset", "right_angle", "--spec", name, "--anchor", "0,0", "--anchor", "1,0",
                "--anchor", "0,1", "--h", "15/100", "--perturbations", "10", "--out", str(out)]) == 0
    assert report(out)["result"]["spec"]["name"] == "right_angle.vertex"


def test_stage_too_coarse_is_config_error(tmp_path, capsys):
    code = run(["stage", "--preset", "right_angle", "--anchor", "0,0", "--anchor", "1,0", "--anchor", "0,1",
                "--h", "9/10", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "field 'h'" in capsys.readouterr().err


def test_tree_and_dim(tmp_path):
    out = tmp_path / "t"
    assert run(["tree", "--levels", "3", "--ratio", "1/40", "--mass-trials", "50", "--out", str(out)]) == 0
    tree = json.loads((out / "tree.json").read_text())
    assert tree["counts"] == [2, 2, 1]
    out2 = tmp_path / "d"
    assert run(["dim", "--source", "cantor", "--stages", "6", "--expect", "0.58", "0.68", "--out", str(out2)]) == 0
    assert (out2 / "boxcounts.csv").read_text().startswith("scale,count\n1/3,4\n")
    assert run(["dim", "--source", "cantor", "--expect", "0.9", "1.1", "--out", str(out2)]) == 1


def test_analyze(tmp_path, clouds):
    out = tmp_path / "a"
    assert run(["analyze", "--cloud", clouds["free"], "--target", "1/2", "--out", str(out)]) == 0
    assert set(report(out)["result"]) == {"angles", "distances", "directions"}
    assert run(["analyze", "--cloud", clouds["free"], "--report", "distances", "--excluded", "5", "--out", str(out)]) == 0
    three = write(tmp_path / "t.csv", "0,0\n3,0\n0,4\n")
    assert run(["analyze", "--cloud", three, "--report", "distances", "--excluded", "5", "--out", str(out)]) == 1
    assert run(["analyze", "--report", "falconer", "--sample", "20", "--out", str(out)]) == 0
    assert report(out)["result"]["falconer"]["escapes"] == 0


def test_presets_lists_catalog(tmp_path, capsys):
    assert run(["presets", "--out", str(tmp_path)]) == 0
    cat = json.loads(capsys.readouterr().out)["catalog"]
    assert len({row["preset"] for row in cat}) == 8


def test_config_file_and_flag_override(tmp_path, clouds):
    cfg = write(tmp_path / "c.json", json.dumps({"preset": "collinear", "cloud": clouds["free"], "pruning": "off"}))
    out = tmp_path / "o"
    assert run(["verify", "--config", cfg, "--out", str(out)]) == 0
    assert report(out)["config"]["pruning"] == "off"
    assert run(["verify", "--config", cfg, "--cloud", clouds["collinear"], "--out", str(out)]) == 1
    assert report(out)["config"]["cloud"] == clouds["collinear"]


@pytest.mark.parametrize(
    "text,needle",
    [
        ('{"levels": "x"}', "field 'levels'"),
        ('{"levels": 2,\n  "n": }', ":2:"),
        ('{"bogus": 1}', "(top level)"),
        ('{"mode": "loose"}', "field 'mode'"),
        ('[1, 2]', "top level must be"),
        ('{"command": "verify"}', "field 'command'"),
    ],
)
def test_malformed_config_diagnostics(tmp_path, capsys, text, needle):
    cfg = write(tmp_path / "bad.json", text)
    assert run(["schedule", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert needle in capsys.readouterr().err


def test_usage_errors(tmp_path, clouds, capsys):
    assert run([]) == 2
    assert run(["schedule", "--levels", "0"]) == 2
    assert run(["verify", "--preset", "right_angle", "--cloud", clouds["dup"], "--out", str(tmp_path)]) == 2
    assert "duplicate" in capsys.readouterr().err
    assert run(["verify", "--preset", "right_angle", "--cloud", str(tmp_path / "missing.csv")]) == 2
    assert run(["verify", "--preset", "right_angle", "--n", "3", "--cloud", clouds["free"], "--out", str(tmp_path)]) == 2
    assert run(["stage", "--preset", "right_angle", "--h", "abc"]) == 2


VALID = [
    {"levels": 2, "mode": "strict", "n": 1, "d": 1},
    {"levels": 3, "ratio": "1/4"},
    {"levels": 1, "h1": "1/20", "seed": 7},
    {"scales_h": ["1/10", "1/1000"], "d": 1},
]
INVALID = [
    {"levels": -1},
    {"ratio": "one half"},
    {"seed": -3},
    {"threads": 0},
    {"mode": 3},
    {"levels": 2, "extra": True},
    {"ratio": "3/2"},
]


@settings(max_examples=30)
@given(cfg=st.sampled_from(VALID + INVALID), seed=st.integers(0, 2**32))
def test_exit_code_contract(cfg, seed, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cfg")
    path = write(tmp / "c.json", json.dumps({"seed": seed, **cfg}))
    code = run(["schedule", "--config", path, "--out", str(tmp / "o")])
    if cfg in INVALID:
        assert code == 2
    else:
        assert code in (0, 1)
        assert (tmp / "o" / "report.json").exists()


def test_schema_is_valid_json_schema():
    import jsonschema

    jsonschema.Draft202012Validator.check_schema(CONFIG_SCHEMA)


def test_byte_identical_outputs(tmp_path):
    args = ["tree", "--levels", "2", "--ratio", "1/40", "--mass-trials", "30", "--seed", "11"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    for name in ("tree.json",):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ra, rb = report(a), report(b)
    ra["config"].pop("out"), rb["config"].pop("out")
    assert ra == rb
    assert "timestamp" not in (a / "report.json").read_text()
    assert "timestamp" in json.loads((a / "run_meta.json").read_text())


def test_byte_identical_with_same_out(tmp_path):
    out = tmp_path / "o"
    args = ["dim", "--source", "cantor", "--out", str(out)]
    run(args)
    first = (out / "report.json").read_bytes(), (out / "boxcounts.csv").read_bytes()
    run(args)
    assert first == ((out / "report.json").read_bytes(), (out / "boxcounts.csv").read_bytes())


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "avoidset", "schedule", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
