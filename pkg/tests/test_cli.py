import csv

import pytest

from ripplecache.cli import main
from ripplecache.config import RunConfig
from ripplecache.experiment import results_csv, run_one, run_points, summary_csv

TINY = """[run]
seeds = 1-5
horizon = 300
mean_session_interval = 100
[topology]
n_consumers = 8
[catalog]
files = 4
segments = 4
"""


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.ini"
    p.write_text(TINY)
    return str(p)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_writes_rows_and_summary(tiny, tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", tiny, "--out", str(out), "--policy", "ce2-lfu", "--trace"]) == 0
    assert len(_rows(out / "results.csv")) == 5
    summary = _rows(out / "summary.csv")
    assert len(summary) == 1 and summary[0]["n_seeds"] == "5"
    assert float(summary[0]["avg_bitrate_ci95"]) >= 0
    assert (out / "trace.csv").read_text().startswith("time,consumer")


def test_sweep_grid(tiny, tmp_path):
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", tiny, "--param", "omega=0.05,0.1,0.2",
               "--policies", "ce2-lru,probcache", "--out", str(out)])
    assert rc == 0
    assert len(_rows(out / "summary.csv")) == 6
    assert len(_rows(out / "results.csv")) == 30


@pytest.mark.parametrize("mode", ["classic", "finder"])
def test_solve_placement(tiny, tmp_path, mode):
    out = tmp_path / "x.csv"
    args = ["solve-placement", "--mode", mode, "--config", tiny, "--out", str(out),
            "--dump-rb", str(tmp_path / "rb.csv")]
    if mode == "finder":
        args += ["--dump-internals", str(tmp_path / "dump")]
    assert main(args) == 0
    assert out.read_text().splitlines()[0] == "router_id,f,k,b"
    assert _rows(tmp_path / "rb.csv")
    if mode == "finder":
        assert (tmp_path / "dump" / "ccts.csv").exists()


def test_gen_topology(tmp_path):
    out = tmp_path / "t.txt"
    assert main(["gen-topology", "--nodes", "42", "--seed", "7", "--out", str(out)]) == 0
    text = out.read_text()
    assert sum(1 for line in text.splitlines() if line.startswith("node ")) == 42


def test_topology_file_config(tmp_path):
    topo = tmp_path / "t.txt"
    main(["gen-topology", "--nodes", "12", "--seed", "3", "--producers", "1",
          "--consumers", "6", "--out", str(topo)])
    cfg = tmp_path / "c.ini"
    cfg.write_text(TINY.replace("seeds = 1-5", "seeds = 1")
                   .replace("n_consumers = 8", f"kind = file\nfile = {topo}"))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--policy", "finder"]) == 0


@pytest.mark.parametrize("argv", [
    ["run", "--config", "/nonexistent.ini", "--out", "x"],
    ["sweep", "--param", "nope=1", "--out", "x"],
    ["sweep", "--param", "omega", "--out", "x"],
    ["run", "--seeds", "a,b", "--out", "x"],
])
def test_errors_exit_nonzero(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_run_one_is_reproducible():
    cfg = RunConfig(files=4, segments=4, horizon=300, mean_session_interval=100, n_consumers=8,
                    policy="finder")
    a = run_one(cfg, 3, check_invariants=True, keep_trace=True)
    b = run_one(cfg, 3, check_invariants=True, keep_trace=True)
    assert a.extra["trace"].to_csv() == b.extra["trace"].to_csv()
    assert a.qoe == b.qoe and a.requests == a.completed + a.aborted


def test_csv_shapes():
    cfg = RunConfig(files=3, segments=3, horizon=200, mean_session_interval=100, n_consumers=4,
                    policy="none", seeds=(1, 2))
    res = run_points([cfg])
    assert results_csv(res).count("\n") == 3
    assert summary_csv(res).count("\n") == 2
