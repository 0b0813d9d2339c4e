import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fracskellam import analytics as A
from fracskellam import cli
from fracskellam.rates import gm_figure_spec

SUBCOMMANDS = ["simulate", "pmf", "moments", "classify", "hitting", "verify", "tick"]


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_pmf(path):
    rows = [l.split(",") for l in path.read_text().splitlines()[2:]]
    return {int(n): float(p) for n, p in rows}


@pytest.fixture
def gm_file(tmp_path):
    p = tmp_path / "gm.json"
    p.write_text(gm_figure_spec().to_json())
    return p


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_documents_defaults(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "--seed" in text and "default" in text


def test_usage_errors_exit_1(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--variant", "GSP", "--up", "1"])
    assert exc.value.code == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"variant": "GSP", "up": [], "colour": "red"}))
    code, _, err = run(capsys, "moments", "--spec", bad, "--t", 1)
    assert code == 1 and "colour" in err
    code, _, err = run(capsys, "pmf", "--variant", "NGSP", "--up", "1", "--down", "1",
                       "--t", 1, "--backend", "mittag_leffler", "--out", tmp_path)
    assert code == 1 and "backend" in err
    code, _, _ = run(capsys, "verify", "--check", "no_such_check")
    assert code == 1


def test_simulate_is_byte_identical(capsys, tmp_path, gm_file):
    dirs = []
    for workers in (1, 2):
        d = tmp_path / f"w{workers}"
        code, _, _ = run(capsys, "simulate", "--spec", gm_file, "--variant", "ngfsp", "--alpha", 0.8,
                         "--t-end", 1.5, "--paths", 3, "--seed", 7, "--workers", workers, "--out", d)
        assert code == 0
        dirs.append(d)
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == ["path_0000.csv", "path_0001.csv", "path_0002.csv", "path_manifest.json"]
    for n in names:
        assert (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes()
    manifest = json.loads((dirs[0] / "path_manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["spec"]["variant"] == "NGFSP"


def test_simulate_paper_exact_flag(capsys, tmp_path, gm_file):
    code, _, _ = run(capsys, "simulate", "--spec", gm_file, "--variant", "NGFSP", "--alpha", 0.8,
                     "--paper-exact", "--t-end", 1, "--out", tmp_path)
    assert code == 0
    assert json.loads((tmp_path / "path_manifest.json").read_text())["paper_exact"] is True


def test_zero_rate_spec_single_row(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--variant", "GSP", "--up", "0", "--down", "0",
                     "--t-end", 5, "--out", tmp_path)
    assert code == 0
    lines = (tmp_path / "path_0000.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].endswith(",0")


def test_seed_from_environment(tmp_path):
    env = dict(os.environ, FRACSKELLAM_SEED="5")
    cmd = [sys.executable, "-m", "fracskellam", "simulate", "--variant", "GSP", "--up", "2",
           "--down", "1", "--t-end", "3"]
    a = subprocess.run(cmd + ["--out", str(tmp_path / "a")], env=env, capture_output=True)
    b = subprocess.run(cmd + ["--out", str(tmp_path / "b"), "--seed", "5"], capture_output=True)
    assert a.returncode == b.returncode == 0
    assert (tmp_path / "a/path_0000.csv").read_bytes() == (tmp_path / "b/path_0000.csv").read_bytes()
    env["FRACSKELLAM_SEED"] = "x"
    bad = subprocess.run(cmd, env=env, capture_output=True, text=True)
    assert bad.returncode == 1 and "FRACSKELLAM_SEED" in bad.stderr


def test_pmf_symmetric_spec(capsys, tmp_path):
    up = json.dumps([r.to_dict() for r in gm_figure_spec().up])
    code, out, _ = run(capsys, "pmf", "--variant", "NGSP", "--up", up, "--down", up,
                       "--t", 0.1, 0.3, 0.5, "--out", tmp_path)
    assert code == 0
    assert len(json.loads(out)["tables"]) == 3
    p = read_pmf(tmp_path / "pmf_t0.5.csv")
    assert max(abs(p[n] - p[-n]) for n in p if -n in p) < 1e-10


def test_pmf_k1_backends_agree(capsys, tmp_path):
    files = []
    for b in ("convolution", "bessel"):
        code, _, _ = run(capsys, "pmf", "--variant", "GSP", "--up", 1.2, "--down", 0.8, "--t", 1,
                         "--n-min", -15, "--n-max", 15, "--backend", b, "--out", tmp_path, "--prefix", b)
        assert code == 0
        files.append(read_pmf(tmp_path / f"{b}_t1.0.csv"))
    assert files[0].keys() == files[1].keys()
    assert max(abs(files[0][n] - files[1][n]) for n in files[0]) < 1e-10


def test_pmf_nhgfsp_mass(capsys, tmp_path):
    code, out, _ = run(capsys, "pmf", "--variant", "NHGFSP", "--alpha", 0.7, "--up", "0.6,0.3",
                       "--down", "0.4,0.2", "--t", 1, "--out", tmp_path)
    assert code == 0
    tab = json.loads(out)["tables"][0]
    assert tab["mass"] == pytest.approx(1 - tab["tail_bound"], abs=1e-9)


def test_moments_and_classify(capsys):
    code, out, _ = run(capsys, "moments", "--variant", "GSP", "--up", "1,2", "--down", "0.5,0.25", "--t", 0)
    assert code == 0
    d = json.loads(out)
    assert d["mean"] == 0 and d["variance"] == 0
    w = json.dumps([{"kind": "weibull", "params": {"scale": 1.0, "shape": 1.0}}])
    code, out, _ = run(capsys, "classify", "--variant", "NGSP", "--up", w, "--down", w, "--s", 1)
    assert code == 0
    d = json.loads(out)
    assert d["class"] == "LRD" and set(d) == {"class", "theta", "c_of_s", "s", "detail"}


def test_hitting_matches_analytics(capsys):
    code, out, _ = run(capsys, "hitting", "--variant", "GSP", "--up", 1.2, "--down", 0.8, "--n", 2, "--t", 1)
    assert code == 0
    from fracskellam.rates import constant_spec
    ref = A.arrival_time_cdf(constant_spec("GSP", [1.2], [0.8]), 2, 1.0).value
    assert json.loads(out)["arrival_cdf"]["value"] == pytest.approx(ref, abs=1e-14)


def test_verify_exit_codes(capsys):
    code, out, err = run(capsys, "verify", "--check", "bessel_vs_convolution", "--k", 1)
    assert code == 0 and json.loads(out)[0]["verdict"] == "pass"
    code, out, _ = run(capsys, "verify", "--check", "bessel_vs_convolution", "--k", 2)
    assert code == 0 and json.loads(out)[0]["verdict"] == "discrepancy_documented"
    code, out, err = run(capsys, "verify", "--check", "cutoff", "--budget", 2000)
    assert code == 2 and "cutoff" in err


def test_tick_synthetic_and_csv(capsys, tmp_path):
    ticks = tmp_path / "ticks.csv"
    code, out, _ = run(capsys, "tick", "--input", "synthetic", "--variant", "GSP", "--up", "2",
                       "--down", "2", "--t-end", 100, "--write-ticks", ticks)
    assert code == 0
    rep = json.loads(out)
    assert rep["exact"] and rep["up"] == rep["recovered_up"]
    code, out, _ = run(capsys, "tick", "--input", ticks)
    assert code == 0
    again = json.loads(out)
    assert (again["up"], again["down"]) == (rep["up"], rep["down"])
    assert np.isclose(again["fits"]["up"][0]["params"]["rate"], rep["fits"]["up"][0]["params"]["rate"])
    code, _, _ = run(capsys, "tick", "--input", tmp_path / "missing.csv")
    assert code == 1
