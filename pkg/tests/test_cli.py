import json
import subprocess
import sys
from importlib import resources

import pytest

from pgclabs.cli import main

MODELS = resources.files("pgclabs") / "models"


def path(name):
    return str(MODELS / name)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_wp_json(capsys):
    code, out, _ = run(capsys, "wp", path("twoflip.pgcl"), "[x=y]")
    assert code == 0
    doc = json.loads(out)
    assert doc["version"] and doc["config"]["expectation"] == "[x=y]"
    assert [v["value"] for v in doc["values"]] == ["1/2"] * 4


def test_wp_inc_text(capsys):
    code, out, _ = run(capsys, "wp", path("inc.pgcl"), "[x=1]", "--format", "text")
    assert code == 0
    assert out.splitlines()[:3] == ["x=0: 1/2", "x=1: 0", "x=2: 1/2"]


def test_wp_abstract(capsys):
    code, out, _ = run(capsys, "wp", path("inc.pgcl"), "[x=0 or x=2]", "--abstract", path("inc.preds"), "--format", "text")
    assert code == 0
    assert out.split() == ["x=0:", "0", "x=1:", "1/2", "x=2:", "0", "x=3:", "1/2"]


def test_missing_file(capsys):
    code, _, err = run(capsys, "wp", "no/such/model.pgcl", "[x=1]")
    assert code == 1 and "cannot read" in err


def test_parse_error_has_location(tmp_path, capsys):
    bad = tmp_path / "bad.pgcl"
    bad.write_text("var x : 0..1;\nx := \n")
    code, _, err = run(capsys, "wp", str(bad), "[x=1]")
    assert code == 1 and "bad.pgcl:" in err


def test_usage_error_exit_code(capsys):
    code, _, err = run(capsys, "wp")
    assert code == 1 and "pgclabs" in err


def test_help(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "export-mdp" in out
    code, out, _ = run(capsys, "rabin", "paper-queries", "--help")
    assert code == 0 and "--oracle-t" in out


def test_check_ip_preserving(capsys):
    code, out, _ = run(capsys, "check", "ip", path("twoflip.pgcl"), path("twoflip.preds"))
    assert code == 0
    assert json.loads(out)["report"]["verdict"] == "preserving"


def test_check_ip_witness(capsys):
    code, out, _ = run(capsys, "check", "ip", path("inc.pgcl"), path("inc.preds"), "--format", "text")
    assert code == 3
    assert "witness" in out


def test_check_ip_needs_predicates(capsys):
    code, _, _ = run(capsys, "check", "ip", path("inc.pgcl"))
    assert code == 1


def test_check_di_swap(capsys):
    code, _, _ = run(capsys, "check", "di", path("swap.pgcl"))
    assert code == 0


def test_mc_quotient(capsys):
    code, out, _ = run(
        capsys, "mc", path("inc_loop.pgcl"), "Pmin=? [true U<=1 x=1 or x=3]", "--quotient", path("inc.preds"),
    )
    assert code == 0
    assert json.loads(out)["initial_optimum"] == "1/2"


def test_mc_horizon_zero_is_indicator(capsys):
    code, out, _ = run(capsys, "mc", path("countdown.pgcl"), 'Pmax=? [true U<=0 "exit"]')
    doc = json.loads(out)
    assert code == 0
    assert [r["value"] for r in doc["initial"]] == ["1", "0", "0", "0"]


def test_mc_reward_inf(capsys):
    code, out, _ = run(capsys, "mc", path("walk.pgcl"), "Rmax=? [F x=4]", "--format", "text")
    assert code == 0 and "optimum: inf" in out


def test_mc_reward_walk(capsys):
    code, out, _ = run(capsys, "mc", path("walk.pgcl"), 'Rmax=? [F "exit"]')
    assert json.loads(out)["initial_optimum"] == "8"


def test_mc_curve_csv(capsys):
    code, out, _ = run(capsys, "mc", path("geometric.pgcl"), 'Pmin=? [true U<=3 "exit"]', "--curve", "3", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["T,pmin", "0,0", "1,0.5", "2,0.75", "3,0.875"]


def test_mc_rejects_non_loop(capsys):
    code, _, err = run(capsys, "mc", path("inc.pgcl"), 'Pmin=? [true U<=1 x=1]')
    assert code == 1 and "loop form" in err


def test_mc_non_cube_target_note(capsys):
    code, out, _ = run(capsys, "mc", path("race.pgcl"), "Pmin=? [true U<=2 x=1]", "--quotient", path("race.preds"))
    assert code == 0 and json.loads(out)["notes"]


def test_export_json_and_prism(tmp_path, capsys):
    code, out, _ = run(capsys, "export-mdp", path("abort_loop.pgcl"))
    assert code == 0 and json.loads(out)["states"] == 4
    prefix = tmp_path / "m"
    code, _, _ = run(capsys, "export-mdp", path("race.pgcl"), "--quotient", path("race.preds"), "--format", "prism", "--out", str(prefix))
    assert code == 0
    assert (tmp_path / "m.tra").read_text().splitlines()[0] == "2 3 5"
    assert (tmp_path / "m.lab").exists() and (tmp_path / "m.sta").exists()


def test_rabin_simulate(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "rabin", "simulate", "--split", "1,0", "--traces", "5", "--trace-out", str(trace))
    doc = json.loads(out)
    assert code == 0 and doc["terminated"] == 5 and doc["max_steps_seen"] == 2
    assert len(trace.read_text().splitlines()) == 3


def test_rabin_abstract_no_tourists(capsys):
    code, out, _ = run(capsys, "rabin", "abstract", "--n", "0", "--t", "0", "--format", "csv")
    assert code == 0 and out.splitlines() == ["T,pmin,pmax", "0,1,1"]


def test_rabin_truncated_tags_overflow(capsys):
    code, out, _ = run(capsys, "rabin", "truncated", "--split", "1,1", "--t", "4", "--cap", "3")
    assert code == 0 and json.loads(out)["tags"] == ["truncated"]
    code, out, _ = run(capsys, "rabin", "truncated", "--split", "1,1", "--t", "4")
    assert json.loads(out)["tags"] == []


def test_rabin_study_queries(capsys):
    code, out, _ = run(capsys, "rabin", "paper-queries", "--n", "2", "--t-max", "4", "--format", "text")
    assert code == 0
    assert out.startswith("T,pmin,pmax\n0,0,0\n")
    assert "step" in out and "sweep" in out


def test_rabin_bad_arguments(capsys):
    assert run(capsys, "rabin", "simulate")[0] == 1
    assert run(capsys, "rabin", "simulate", "--n", "2", "--split", "1,0")[0] == 1
    assert run(capsys, "rabin", "simulate", "--split", "x")[0] == 1


def test_output_is_deterministic(capsys):
    argv = ["rabin", "simulate", "--n", "2", "--traces", "20", "--seed", "3"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pgclabs.cli", "wp", path("inc.pgcl"), "[x=1]", "--format", "text"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("x=0: 1/2")
