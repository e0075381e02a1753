import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from ftopt.cli import CSV_COLUMNS, main

SCEN = Path(__file__).resolve().parent.parent / "scenarios"


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_run_small_clean_scenario(tmp_path):
    res = invoke("run", SCEN / "tiny_f0.toml", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "metrics.csv")
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 2002
    assert float(rows[-1][2]) < 1e-3
    assert {r[4] for r in rows[1:]} <= {"0", "1"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit_status"] == 0 and manifest["checks"]["convergence"] is True
    assert sum(1 for _ in open(tmp_path / "trace.jsonl")) == 2001
    svg = (tmp_path / "convergence.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") == 2


def test_run_rejects_invalid_invariant(tmp_path):
    res = invoke("run", SCEN / "invalid_n6_f2.json", "--out", tmp_path)
    assert res.exit_code == 2
    assert "n > 3f" in res.output


def test_run_zero_iterations(tmp_path):
    res = invoke("run", SCEN / "tiny_f0.toml", "--out", tmp_path, "--iters", 0)
    assert res.exit_code == 0
    assert "skipped" in res.output
    assert len(read_csv(tmp_path / "metrics.csv")) == 2
    assert sum(1 for _ in open(tmp_path / "trace.jsonl")) == 1


def test_run_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert invoke("run", SCEN / "byz_alg3.toml", "--out", tmp_path / d, "--iters", 400).exit_code == 0
    for name in ("trace.jsonl", "metrics.csv", "convergence.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_check_failure_exit_code(tmp_path):
    res = invoke("run", SCEN / "crash_alg2.toml", "--out", tmp_path, "--iters", 5)
    assert res.exit_code == 1
    assert "convergence    FAIL" in res.output
    res = invoke("run", SCEN / "crash_alg2.toml", "--out", tmp_path, "--iters", 5, "--checks", "none")
    assert res.exit_code == 0


def test_run_check_list(tmp_path):
    res = invoke("run", SCEN / "byz_alg3.toml", "--out", tmp_path, "--iters", 100,
                 "--checks", "gradient_hull,weight_bound")
    assert res.exit_code == 0
    assert "gradient_hull" in res.output and "convergence" not in res.output
    assert invoke("run", SCEN / "byz_alg3.toml", "--out", tmp_path, "--checks", "speed").exit_code == 2


def test_run_records_messages(tmp_path):
    res = invoke("run", SCEN / "crash_alg2.toml", "--out", tmp_path, "--iters", 3, "--messages",
                 "--checks", "none")
    assert res.exit_code == 0
    rows = [json.loads(line) for line in open(tmp_path / "trace.jsonl")]
    assert rows[1]["delivered"] and rows[1]["delivered"][0][1]["kind"] == "pair"


def test_run_syntax_error_reports_line(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("n = 4\nprotocol = \n")
    res = invoke("run", p, "--out", tmp_path / "o")
    assert res.exit_code == 2 and "line 2" in res.output


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_validset_identical_functions(tmp_path):
    body = "".join('[[functions]]\nkind = "huber"\ncenter = 0.7\ncurvature = 1.0\ncap = 2.0\n'
                   for _ in range(4))
    p = write(tmp_path, "same.toml", 'n = 4\nf = 1\nprotocol = "alg2"\nmax_iters = 1\n'
              'faulty = [3]\ninit = [0.0, 0.0, 0.0, 0.0]\n' + body)
    res = invoke("validset", p)
    assert res.exit_code == 0
    lo, hi = json.loads(res.output.splitlines()[0])
    assert abs(lo - 0.7) < 1e-8 and abs(hi - 0.7) < 1e-8


def test_validset_crash_oracle(tmp_path):
    p = write(tmp_path, "crash5.toml", 'n = 5\nf = 1\nprotocol = "alg1"\nmax_iters = 1\n'
              'faulty = [4]\nseed = 3\n[generate]\n')
    res = invoke("validset", p, "--oracle", "--weight-res", 0.05)
    assert res.exit_code == 0, res.output
    d = float(res.output.split("hausdorff ")[1].split()[0])
    assert d <= 0.1


def test_validset_oracle_bound_exit(tmp_path):
    p = write(tmp_path, "crash5.toml", 'n = 5\nf = 1\nprotocol = "alg1"\nmax_iters = 1\n'
              'faulty = [4]\nseed = 3\n[generate]\n')
    assert invoke("validset", p, "--oracle", "--bound", 0).exit_code == 1


def test_validset_byzantine_within_honest_hull():
    from ftopt.config import load_scenario
    cfg, _ = load_scenario(SCEN / "byz_alg3.toml")
    res = invoke("validset", SCEN / "byz_alg3.toml")
    lo, hi = json.loads(res.output.splitlines()[0])
    mins = [cfg.functions[i].argmin() for i in cfg.non_faulty]
    assert len(mins) == 5
    assert min(a for a, _ in mins) <= lo <= hi <= max(b for _, b in mins)


def test_sweep_seeds(tmp_path):
    res = invoke("sweep", SCEN / "byz_alg3.toml", "--param", "seed", "--values", "0,1,2,3,4",
                 "--out", tmp_path)
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "sweep.csv")
    assert rows[0] == ["seed", "final_gap", "final_max_dist", "passed"]
    assert len(rows) == 6 and all(r[3] == "1" for r in rows[1:])
    assert (tmp_path / "seed=3" / "metrics.csv").exists()


def test_sweep_strategies(tmp_path):
    res = invoke("sweep", SCEN / "byz_alg3.toml", "--param", "strategy",
                 "--values", "constant,opposite_extreme", "--values", "collude_shift,silent",
                 "--out", tmp_path)
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "sweep.csv")[1:]
    assert [r[0] for r in rows] == ["constant", "opposite_extreme", "collude_shift", "silent"]
    assert all(float(r[2]) < 5e-2 for r in rows)


def test_sweep_n(tmp_path):
    p = write(tmp_path, "gen.toml", 'n = 4\nf = 1\nprotocol = "alg2"\nmax_iters = 3000\n[generate]\n')
    res = invoke("sweep", p, "--param", "n", "--values", "4,6", "--out", tmp_path / "o")
    assert res.exit_code == 0, res.output
    assert invoke("sweep", p, "--param", "n", "--values", "3", "--out", tmp_path / "x").exit_code == 2
    assert invoke("sweep", SCEN / "tiny_f0.toml", "--param", "n", "--values", "4",
                  "--out", tmp_path / "y").exit_code == 2


@pytest.mark.parametrize("args", [
    ("--param", "seed"),
    ("--param", "seed", "--values", " , "),
    ("--param", "seed", "--values", "one"),
    ("--param", "strategy", "--values", "teleport"),
])
def test_sweep_invalid(tmp_path, args):
    assert invoke("sweep", SCEN / "byz_alg3.toml", "--out", tmp_path, *args).exit_code == 2
