import json
import os
import subprocess
import sys

import pytest

from crossnum import cli


def run(capsys, *argv):
    code = cli.run_command(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cache_args(tmp_path):
    return ["--cache-dir", str(tmp_path / "cache")]


def test_cross_generator(capsys, cache_args):
    code, out, _ = run(capsys, *cache_args, "cross", "a1")
    env = json.loads(out)
    assert code == 0
    assert env["schema_version"] == 1 and env["command"] == "cross"
    assert env["payload"]["crossing_number"] == 0 and env["payload"]["stabilized"]
    assert env["timings"] == {}


def test_cross_cache_hit_is_identical(capsys, cache_args):
    _, first, _ = run(capsys, *cache_args, "cross", "a1 b1 A1 b1")
    _, second, _ = run(capsys, *cache_args, "cross", "a1 b1 A1 b1")
    assert first == second
    assert json.loads(first)["payload"]["crossing_number"] == 1


def test_bad_word_is_usage_error(capsys):
    code, out, err = run(capsys, "--no-cache", "cross", "c3")
    assert code == 2 and out == "" and "bad token 'c3'" in err


def test_qm(capsys, cache_args):
    code, out, _ = run(capsys, *cache_args, "--ball-radius", "5", "qm", "--sigma", "a1 a1", "--target", "a1 a1 a1 a1")
    p = json.loads(out)["payload"]
    assert code == 0 and (p["c_sigma"], p["c_sigma_inv"], p["h_sigma"]) == (2, 0, 2)


def test_qm_short_pattern_rejected(capsys):
    code, _, err = run(capsys, "--no-cache", "qm", "--sigma", "a1", "--target", "a1")
    assert code == 2 and "length" in err


def test_refusal_exit_code(capsys, cache_args):
    code, out, err = run(capsys, *cache_args, "certify", "--target", "a1", "--n", "0", "--m", "1..2")
    env = json.loads(out)
    assert code == 1 and "refused" in err
    assert env["payload"] == {"status": "refused", "reason": "crossing number is 0; the bound needs cr(a) > 0"}


def test_resource_cap_exit_code(capsys):
    code, out, err = run(capsys, "--no-cache", "--max-elements", "100", "ball", "--radius", "4")
    assert code == 3 and out == "" and "resource cap" in err


def test_config_errors(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("ball_radius = 12\n")
    assert run(capsys, "--config", str(bad), "ball")[0] == 2
    assert run(capsys, "--config", str(tmp_path / "nope.cfg"), "ball")[0] == 2
    assert run(capsys, "certify", "--target", "a1", "--n", "0", "--m", "3..1")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_config_file_applies(capsys, tmp_path, cache_args):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ball_radius = 4\nseed = 3\n")
    code, out, _ = run(capsys, *cache_args, "--config", str(cfg), "ball")
    env = json.loads(out)
    assert code == 0 and env["payload"]["radius"] == 4 and env["config"]["seed"] == 3
    assert env["payload"]["sphere_sizes"] == [1, 8, 56, 392, 2736]


def test_out_dir_naming_and_stability(capsys, tmp_path, cache_args):
    out = tmp_path / "reports"
    for _ in range(2):
        assert run(capsys, *cache_args, "--out", str(out), "sn", "--n", "0", "--radius", "1")[0] == 0
    files = sorted(out.iterdir())
    assert len(files) == 1 and files[0].name.startswith("sn-") and files[0].suffix == ".json"
    env = json.loads(files[0].read_text())
    assert len(env["payload"]["elements"]) == 8


def test_scaling_writes_csv(capsys, tmp_path, cache_args):
    out = tmp_path / "reports"
    code, _, _ = run(capsys, *cache_args, "--out", str(out), "scaling", "--target", "a1", "--n-list", "0,1", "--m", "1..2")
    assert code == 0
    csv = next(out.glob("scaling-*.csv")).read_text()
    assert csv.splitlines()[0] == "n,m,lower,upper,slope"
    assert "# n=0: crossing number is 0" in csv
    env = json.loads(next(out.glob("scaling-*.json")).read_text())
    assert env["payload"]["rows"] == [] and len(env["payload"]["refusals"]) == 2


def test_schema_violation_writes_nothing(capsys, tmp_path, monkeypatch):
    monkeypatch.setitem(cli.COMMANDS, "ball", lambda args, cfg, cache: ("ball", {"genus": 2}))
    out = tmp_path / "reports"
    code, stdout, err = run(capsys, "--no-cache", "--out", str(out), "ball")
    assert code == 4 and "internal error" in err and stdout == ""
    assert not out.exists() or not any(out.iterdir())


def test_geomcheck(capsys, cache_args):
    code, out, _ = run(capsys, *cache_args, "--ball-radius", "5", "geomcheck")
    p = json.loads(out)["payload"]
    assert code == 0 and p["relator_ok"] and p["lengths_equal"]
    assert len(p["generator_translation_lengths"]) == 8


def test_timings_flag(capsys, cache_args):
    _, out, _ = run(capsys, *cache_args, "--timings", "cross", "a1")
    assert "total_seconds" in json.loads(out)["timings"]


def test_console_script_across_thread_counts(tmp_path):
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads, MKL_NUM_THREADS=threads)
        res = subprocess.run(
            [sys.executable, "-m", "crossnum.cli", "--no-cache", "--cache-dir", str(tmp_path), "--ball-radius", "5",
             "qm", "--sigma", "a1 b1 a1", "--target", "a1 b1 a1 b1 a1"],
            capture_output=True, text=True, env=env, check=True,
        )
        outs.append(res.stdout)
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["payload"]["h_sigma"] == 1
