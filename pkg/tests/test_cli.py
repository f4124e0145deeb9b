import json

import numpy as np

from syncq.cli import main

MM1_CONFIG = {
    "n": 1, "lambda": 0.5,
    "job_size": {"kind": "deterministic", "k": 1},
    "service": {"kind": "exponential", "rate": 1.0},
    "horizon_jobs": 2000, "seed": 3,
}

EN2_CONFIG = {
    "n": 200, "lambda": 0.05,
    "job_size": {"kind": "mixed_poisson_pareto", "alpha": 3, "beta": 0.6667},
    "truncation": {"kind": "min_cap", "m": 200},
    "service": {"kind": "uniform", "a": 0, "b": 1},
    "horizon_jobs": 4000, "seed": 5,
}


def write_config(tmp_path, data, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_simulate_single_job(tmp_path):
    cfg = dict(MM1_CONFIG, horizon_jobs=1, discipline="syncb")
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["simulate", path, "--out", str(out)]) == 0
    rows = (out / "jobs_syncb.csv").read_text().strip().splitlines()
    assert rows[0] == "job_id,arrival,start,departure,waiting,sojourn"
    assert rows[1].split(",")[4] == "0"      # empty system: zero waiting
    summary = json.loads((out / "summary_syncb.json").read_text())
    assert summary["jobs"] == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert "config_digest" in manifest and manifest["seed"] == 3


def test_malformed_json_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["simulate", str(p)]) == 2
    assert "config" in capsys.readouterr().err


def test_invalid_config_exit_2(tmp_path):
    cfg = dict(MM1_CONFIG)
    cfg["job_size"] = {"kind": "deterministic", "k": 5}    # cap exceeds n = 1
    assert main(["simulate", write_config(tmp_path, cfg)]) == 2
    cfg2 = dict(MM1_CONFIG, discipline="fancy")
    assert main(["simulate", write_config(tmp_path, cfg2)]) == 2


def test_missing_file_exit_2(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.json")]) == 2


def test_crn_comparison(tmp_path):
    path = write_config(tmp_path, MM1_CONFIG)
    out = tmp_path / "out"
    assert main(["simulate", path, "--crn", "--out", str(out)]) == 0
    lines = (out / "comparison.csv").read_text().strip().splitlines()
    assert len(lines) == 4
    # single-piece jobs: synchronized and split-merge runs coincide
    sync = json.loads((out / "summary_syncb.json").read_text())
    merge = json.loads((out / "summary_splitmerge.json").read_text())
    assert sync["mean_sojourn"] == merge["mean_sojourn"]
    multi = json.loads((out / "summary_mgn.json").read_text())
    assert multi["mean_sojourn"] == sync["mean_sojourn"]   # n = 1 coincidence


def test_reruns_byte_identical(tmp_path):
    path = write_config(tmp_path, EN2_CONFIG)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", path, "--crn", "--out", str(a)]) == 0
    assert main(["simulate", path, "--crn", "--out", str(b)]) == 0
    for name in ("jobs_syncb.csv", "jobs_splitmerge.csv", "jobs_mgn.csv",
                 "comparison.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_table1_workers_deterministic(tmp_path):
    a, b = tmp_path / "w1", tmp_path / "w2"
    args = ["table1", "--scale", "50", "--jobs", "800", "--seed", "9", "--no-plots"]
    assert main(args + ["--out", str(a), "--workers", "1"]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert (a / "table1.csv").read_bytes() == (b / "table1.csv").read_bytes()
    rows = (a / "table1.csv").read_text().strip().splitlines()
    assert len(rows) == 10    # header + 3 laws x 3 disciplines


def test_figures_smoke(tmp_path):
    out = tmp_path / "figs"
    rc = main(["figures", "--jobs", "100", "--scale", "20", "--seed", "2",
               "--pool-size", "2000", "--limit-draws", "5000",
               "--out", str(out), "--no-plots"])
    assert rc == 0
    for panel in ("fig3_en2", "fig3_en10"):
        for name in ("ccdf_syncb.csv", "ccdf_splitmerge.csv", "ccdf_limit.csv"):
            lines = (out / panel / name).read_text().strip().splitlines()
            assert lines[0] == "x,ccdf"
            vals = [float(l.split(",")[1]) for l in lines[1:]]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert (out / "running_mean_boundary.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert abs(manifest["boundary_lambda"] - 0.2095) < 1e-3


def test_figures_renders_plots(tmp_path):
    out = tmp_path / "figs"
    rc = main(["figures", "--jobs", "60", "--scale", "50", "--seed", "2",
               "--pool-size", "500", "--limit-draws", "1000", "--out", str(out)])
    assert rc == 0
    assert (out / "fig3_en2" / "tail_en2.png").stat().st_size > 0
    assert (out / "running_mean_boundary.png").stat().st_size > 0


def test_limit_command(tmp_path):
    path = write_config(tmp_path, MM1_CONFIG)
    out = tmp_path / "lim"
    rc = main(["limit", path, "--pool-size", "20000", "--generations", "60",
               "--draws", "20000", "--out", str(out)])
    assert rc == 0
    pool = np.loadtxt(out / "pool.csv")
    assert pool.size == 20000
    assert abs(pool.mean() - 1.0) < 0.05
    assert (out / "ccdf_waiting.csv").exists()
    assert (out / "ccdf_sojourn.csv").exists()


def test_limit_command_size_biased(tmp_path):
    path = write_config(tmp_path, dict(EN2_CONFIG, horizon_jobs=100))
    out = tmp_path / "lim"
    rc = main(["limit", path, "--pool-size", "5000", "--generations", "20",
               "--draws", "5000", "--sizing", "size_biased", "--out", str(out)])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["sizing"] == "size_biased"


def test_asymptotics_mm1(tmp_path):
    path = write_config(tmp_path, MM1_CONFIG)
    out = tmp_path / "asy"
    rc = main(["asymptotics", path, "--samples", "100000", "--out", str(out),
               "--no-plots"])
    assert rc == 0
    res = json.loads((out / "asymptotics.json").read_text())
    assert abs(res["theta"] - 0.5) < 1e-9
    assert abs(res["H"] - 0.5) < 0.05
    assert res["stable"] and res["derivative"] > 0
    lines = (out / "cl_vs_empirical.csv").read_text().strip().splitlines()
    assert lines[0] == "x,cl_tail,empirical_ccdf"


def test_asymptotics_en2_report(tmp_path):
    cfg = dict(EN2_CONFIG)
    cfg["limit"] = {"pool_size": 50000}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "asy2"
    rc = main(["asymptotics", path, "--samples", "200000", "--out", str(out),
               "--no-plots"])
    assert rc == 0
    res = json.loads((out / "asymptotics.json").read_text())
    assert res["stable"] and res["derivative"] > 0
    assert res["ci"][0] > 0                  # H interval excludes zero
    assert res["moment_warning"] is True     # theta above the size-law shape


def test_asymptotics_unstable_exit_3(tmp_path, capsys):
    cfg = dict(EN2_CONFIG)
    cfg["lambda"] = 0.2095
    path = write_config(tmp_path, cfg)
    assert main(["asymptotics", path, "--out", str(tmp_path / "x")]) == 3
    assert "no Cramer root" in capsys.readouterr().err


def test_boundary_command(tmp_path):
    path = write_config(tmp_path, EN2_CONFIG)
    out = tmp_path / "bnd"
    assert main(["boundary", path, "--out", str(out)]) == 0
    res = json.loads((out / "boundary.json").read_text())
    assert abs(res["boundary_lambda"] - 0.2095) < 1e-3
    assert abs(res["margin_at_boundary"] - 1.0) < 1e-4
