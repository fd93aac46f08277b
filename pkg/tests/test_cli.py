"""Command-line interface: exit codes, outputs, determinism."""

import json
from pathlib import Path

from hasim.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

VALID_CONFIG = {
    "hosts": [{"host_id": "alfa01", "cpu_count": 4, "ram_mb": 8192},
              {"host_id": "alfa02", "cpu_count": 4, "ram_mb": 8192},
              {"host_id": "alfa03", "cpu_count": 4, "ram_mb": 8192},
              {"host_id": "alfa04", "cpu_count": 4, "ram_mb": 8192}],
    "vms": [{"vm_id": "gridce", "mac": "52:54:00:00:00:01",
             "bound_host": "alfa01", "boot_profile": "default"}],
    "profiles": {"default": {}},
}


def write_config(tmp_path, doc=None):
    path = tmp_path / "cluster.json"
    path.write_text(json.dumps(doc if doc is not None else VALID_CONFIG))
    return path


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", str(write_config(tmp_path))]) == 0
    assert capsys.readouterr().out.strip() == "OK"


def test_validate_dangling_ref_exit_1(tmp_path, capsys):
    doc = json.loads(json.dumps(VALID_CONFIG))
    doc["vms"][0]["bound_host"] = "ghost"
    assert main(["validate", str(write_config(tmp_path, doc))]) == 1
    out = capsys.readouterr().out
    assert "ghost" in out


def test_validate_unreadable_exit_2(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_run_scenario_writes_outputs(tmp_path, capsys):
    out_dir = tmp_path / "out"
    rc = main(["run", str(SCENARIOS / "power_glitch.json"),
               "--out", str(out_dir), "--emit-monitor-log"])
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("kind,count,mean_s,stddev_s,min_s,max_s")
    for name in ("trace.txt", "episodes.csv", "report.csv", "summary.txt",
                 "monitor_log.xml", "histogram_power_glitch.csv"):
        assert (out_dir / name).exists(), name
    summary = (out_dir / "summary.txt").read_text()
    assert "gridce" in summary and "alfa04" in summary


def test_run_invalid_scenario_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"cluster": VALID_CONFIG, "horizon_s": 100,
                               "injections": [{"at": 10, "kind": "nope"}]}))
    assert main(["run", str(bad)]) == 1
    assert "kind" in capsys.readouterr().out


def test_run_missing_scenario_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "none.json")]) == 2


def test_run_same_seed_byte_identical(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        rc = main(["run", str(SCENARIOS / "power_glitch.json"),
                   "--out", str(d), "--emit-monitor-log", "--seed", "7"])
        assert rc == 0
    for name in ("trace.txt", "episodes.csv", "report.csv", "summary.txt",
                 "monitor_log.xml", "histogram_power_glitch.csv"):
        a = (dirs[0] / name).read_bytes()
        b = (dirs[1] / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_run_seed_override_changes_outputs(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d, seed in zip(dirs, ["7", "8"]):
        main(["run", str(SCENARIOS / "power_glitch.json"), "--out", str(d),
              "--seed", seed])
    assert (dirs[0] / "trace.txt").read_bytes() != (dirs[1] / "trace.txt").read_bytes()


def test_replicate_small_run(tmp_path, capsys):
    rc = main(["replicate", "nondestructive", "--n", "5", "--seed", "42",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[0] == "kind,count,mean_s,stddev_s,min_s,max_s"
    assert lines[1].startswith("non_destructive_crash,5,")
    episodes = (tmp_path / "out" / "episodes.csv").read_text()
    assert episodes.count("\n") == 6  # header + 5 rows


def test_replicate_single_episode(capsys):
    assert main(["replicate", "destructive", "--n", "1", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert out.strip().split("\n")[1].startswith("destructive_crash,1,")


def test_report_resummarizes_run_dir(tmp_path, capsys):
    out_dir = tmp_path / "out"
    main(["replicate", "nondestructive", "--n", "5", "--seed", "42",
          "--out", str(out_dir)])
    capsys.readouterr()
    rc = main(["report", str(out_dir), "--bin-width", "5"])
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("kind,count,mean_s")
    hist = (out_dir / "histogram_non_destructive_crash.csv").read_text()
    starts = [int(line.split(",")[0]) for line in hist.strip().split("\n")[1:]]
    assert all(s % 5 == 0 for s in starts)


def test_report_missing_dir_exit_2(tmp_path):
    assert main(["report", str(tmp_path / "nowhere")]) == 2
