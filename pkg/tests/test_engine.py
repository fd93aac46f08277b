"""Event-loop semantics: injections, recovery timelines, sampling, statistics."""

import statistics

import numpy as np
import pytest

from hasim.config import parse_cluster_config
from hasim.controller import REBOOT, REINSTALL, RESTART
from hasim.engine import (
    DESTRUCTIVE_CRASH,
    LOAD_SPIKE,
    NON_DESTRUCTIVE_CRASH,
    PHYSICAL_HOST_FAILURE,
    POWER_GLITCH,
    Episode,
    FailureInjection,
    ScenarioError,
    SimReport,
    Simulation,
    run_scenario,
    sample_duration,
    summarize,
)
from hasim.telemetry import UP


def one_host_config(**blocks):
    doc = {
        "hosts": [{"host_id": "node01", "cpu_count": 4, "ram_mb": 8192}],
        "vms": [{"vm_id": "svc01", "mac": "52:54:00:00:00:01",
                 "bound_host": "node01", "boot_profile": "default"}],
        "profiles": {"default": {}},
        "timing": {"boot_jitter_s": 0, "reinstall_jitter_s": 0},
    }
    doc.update(blocks)
    return parse_cluster_config(doc)


def two_host_config():
    return parse_cluster_config({
        "hosts": [{"host_id": "node01", "cpu_count": 4, "ram_mb": 8192},
                  {"host_id": "node02", "cpu_count": 4, "ram_mb": 8192}],
        "vms": [{"vm_id": "svc01", "mac": "52:54:00:00:00:01",
                 "bound_host": "node01", "boot_profile": "default"},
                {"vm_id": "svc02", "mac": "52:54:00:00:00:02",
                 "bound_host": "node01", "boot_profile": "default"}],
        "profiles": {"default": {}},
        "timing": {"boot_jitter_s": 0, "reinstall_jitter_s": 0},
    })


# -- sample_duration ------------------------------------------------------


def test_sample_duration_zero_jitter():
    rng = np.random.default_rng(0)
    assert sample_duration(80, 0, rng) == 80


def test_sample_duration_within_bounds():
    rng = np.random.default_rng(1)
    for _ in range(500):
        assert 70 <= sample_duration(80, 10, rng) <= 90


def test_sample_duration_statistics_oracle():
    rng = np.random.default_rng(2)
    draws = [sample_duration(442, 17, rng) for _ in range(100_000)]
    assert min(draws) == 425
    assert max(draws) == 459
    assert abs(statistics.mean(draws) - 442) < 0.5


def test_sample_duration_consumes_exactly_one_draw():
    a, b = np.random.default_rng(5), np.random.default_rng(5)
    sample_duration(80, 10, a)
    b.integers(70, 91)
    assert a.integers(0, 1 << 30) == b.integers(0, 1 << 30)


# -- single-failure timelines (hand-derived from the scan/staleness rules) --


def test_non_destructive_crash_timeline():
    # Crash at 130; staleness reaches 70 at 200; first scan >= 200 is 240.
    # Reboot at 240 completes 80 s later with zero jitter.
    report = run_scenario(one_host_config(),
                          [FailureInjection(130, NON_DESTRUCTIVE_CRASH, "svc01")],
                          600, seed=1)
    ep = report.episodes[0]
    assert ep.failure_at == 130
    assert ep.detected_at == 240
    assert [(t, a.kind) for t, a in ep.actions] == [(240, REBOOT)]
    assert ep.recovered_at == 320
    assert ep.recovery_s == 190
    assert ep.recovered_on == "node01"


def test_destructive_crash_timeline():
    # Full escalation: reboot at 240, restart at 240+180, reinstall at +360,
    # installation takes 442 s with zero jitter.
    report = run_scenario(one_host_config(),
                          [FailureInjection(130, DESTRUCTIVE_CRASH, "svc01")],
                          1200, seed=1)
    ep = report.episodes[0]
    assert [(t, a.kind) for t, a in ep.actions] == [
        (240, REBOOT), (420, RESTART), (600, REINSTALL)]
    assert ep.detected_at == 240
    assert ep.recovered_at == 600 + 442
    assert ep.recovery_s == 912


def test_non_destructive_episode_has_no_reinstall():
    report = run_scenario(one_host_config(),
                          [FailureInjection(130, NON_DESTRUCTIVE_CRASH, "svc01")],
                          600, seed=3)
    kinds = [a.kind for _, a in report.episodes[0].actions]
    assert REINSTALL not in kinds


def test_destructive_episode_has_exactly_one_reinstall():
    report = run_scenario(one_host_config(),
                          [FailureInjection(130, DESTRUCTIVE_CRASH, "svc01")],
                          1200, seed=3)
    kinds = [a.kind for _, a in report.episodes[0].actions]
    assert kinds.count(REINSTALL) == 1


def test_zero_injections_everything_stays_up():
    sim = Simulation(one_host_config(), [], 600, seed=1)
    report = sim.run()
    assert report.episodes == []
    snap = sim.monitor.snapshot(600)
    assert all(e.verdict == UP for e in snap.entries.values())


def test_detection_window_causality():
    # detected - failed must lie in [latency, latency + heartbeat + scan].
    config = one_host_config()
    for seed, crash_at in enumerate(range(120, 180)):
        report = run_scenario(
            config, [FailureInjection(crash_at, NON_DESTRUCTIVE_CRASH, "svc01")],
            600, seed=seed)
        ep = report.episodes[0]
        assert 70 <= ep.detection_s <= 70 + 10 + 60


def test_physical_host_failure_moves_vms():
    config = two_host_config()
    report = run_scenario(config,
                          [FailureInjection(130, PHYSICAL_HOST_FAILURE, host_id="node01")],
                          900, seed=1, collect_trace=True)
    assert len(report.episodes) == 2
    for ep in report.episodes:
        assert ep.kind == PHYSICAL_HOST_FAILURE
        # No reboot attempt for VMs on a dead host.
        kinds = [a.kind for _, a in ep.actions]
        assert kinds[0] == RESTART
        assert ep.recovered_on == "node02"
        assert ep.recovered_at is not None


def test_power_glitch_host_comes_back_but_vms_need_recovery():
    config = two_host_config()
    sim = Simulation(config,
                     [FailureInjection(130, POWER_GLITCH, hosts=("node01",))],
                     900, seed=1)
    report = sim.run()
    # Host boots itself back (80 s at zero jitter) and beats again.
    snap = sim.monitor.snapshot(900)
    assert snap.entries["node01"].verdict == UP
    assert len(report.episodes) == 2
    assert all(ep.recovered_at is not None for ep in report.episodes)


def test_load_spike_defers_restart_until_it_ends():
    # Destructive crash on a host pinned over threshold: the restart due at
    # t=420 is deferred; the spike ends at 520 and the next scan (540)
    # places the restart; reinstall follows one t2 later.
    config = one_host_config()
    injections = [
        FailureInjection(0, LOAD_SPIKE, host_id="node01", extra_load=6.0,
                         duration_s=520),
        FailureInjection(130, DESTRUCTIVE_CRASH, "svc01"),
    ]
    report = run_scenario(config, injections, 1400, seed=1)
    ep = report.episodes[0]
    assert [(t, a.kind) for t, a in ep.actions] == [
        (240, REBOOT), (420, "defer"), (540, RESTART), (720, REINSTALL)]
    assert ep.recovered_at == 720 + 442


def test_waiting_vm_is_parked_out_of_monitoring():
    config = one_host_config()
    injections = [
        FailureInjection(0, LOAD_SPIKE, host_id="node01", extra_load=6.0,
                         duration_s=3000),
        FailureInjection(130, DESTRUCTIVE_CRASH, "svc01"),
    ]
    sim = Simulation(config, injections, 900, seed=1)
    report = sim.run()
    snap = sim.monitor.snapshot(900)
    assert "svc01" not in snap.entries
    assert report.episodes[0].recovered_at is None  # counted separately


def test_injection_unknown_target_rejected():
    with pytest.raises(ScenarioError):
        run_scenario(one_host_config(),
                     [FailureInjection(10, NON_DESTRUCTIVE_CRASH, "ghost")], 100)


def test_injection_on_non_running_vm_skipped():
    config = one_host_config()
    injections = [
        FailureInjection(130, NON_DESTRUCTIVE_CRASH, "svc01"),
        FailureInjection(140, DESTRUCTIVE_CRASH, "svc01"),
    ]
    report = run_scenario(config, injections, 600, seed=1, collect_trace=True)
    assert len(report.episodes) == 1
    assert any("inject_skipped" in line for line in report.trace)


def test_determinism_same_seed_identical_everything():
    config = two_host_config()
    injections = [FailureInjection(130, POWER_GLITCH, hosts=("node01",))]
    runs = [run_scenario(config, injections, 900, seed=99, collect_trace=True,
                         emit_monitor_log=True) for _ in range(2)]
    assert runs[0].trace == runs[1].trace
    assert runs[0].monitor_log == runs[1].monitor_log
    assert runs[0].episodes == runs[1].episodes


def test_different_seeds_differ():
    config = one_host_config(timing={"boot_jitter_s": 10, "reinstall_jitter_s": 17})
    injections = [FailureInjection(130, NON_DESTRUCTIVE_CRASH, "svc01")]
    a = run_scenario(config, injections, 600, seed=1)
    b = run_scenario(config, injections, 600, seed=2)
    assert a.episodes[0].recovered_at != b.episodes[0].recovered_at


def test_trace_contains_pxe_bind_records():
    report = run_scenario(one_host_config(),
                          [FailureInjection(130, DESTRUCTIVE_CRASH, "svc01")],
                          1200, seed=1, collect_trace=True)
    assert "600 pxe_bind 52:54:00:00:00:01 install:default" in report.trace
    assert "1042 pxe_bind 52:54:00:00:00:01 local" in report.trace


def test_monitor_log_emitted_per_scan():
    report = run_scenario(one_host_config(), [], 300, seed=1,
                          emit_monitor_log=True)
    # Scans at 0, 60, ..., 300.
    assert len(report.monitor_log) == 6
    assert all(line.startswith("<CLUSTER TAKEN_AT=") for line in report.monitor_log)


# -- summarize -------------------------------------------------------------


def make_report(recoveries, kind="non_destructive_crash"):
    episodes = [
        Episode(vm_id=f"v{i}", kind=kind, failure_at=0, detected_at=100,
                recovered_at=r)
        for i, r in enumerate(recoveries)
    ]
    return SimReport(episodes=episodes, horizon_s=1000)


def test_summarize_trivial_pair():
    stats = summarize(make_report([180, 180]))
    assert len(stats) == 1
    assert stats[0].count == 2
    assert stats[0].mean_s == 180.0
    assert stats[0].stddev_s == 0.0


def test_summarize_empty_report():
    assert summarize(SimReport(episodes=[], horizon_s=10)) == []


def test_summarize_matches_naive_reference():
    rng = np.random.default_rng(31)
    recoveries = [int(rng.integers(100, 700)) for _ in range(1000)]
    stats = summarize(make_report(recoveries), bin_width_s=25)[0]
    assert stats.count == len(recoveries)
    assert stats.mean_s == pytest.approx(statistics.fmean(recoveries))
    assert stats.stddev_s == pytest.approx(statistics.pstdev(recoveries))
    assert stats.min_s == min(recoveries)
    assert stats.max_s == max(recoveries)
    # Histogram: independent bin counting.
    expected_bins = {}
    for r in recoveries:
        expected_bins[r // 25 * 25] = expected_bins.get(r // 25 * 25, 0) + 1
    assert sum(c for _, c in stats.histogram) == len(recoveries)
    for bin_start, count in stats.histogram:
        assert count == expected_bins.get(bin_start, 0)


def test_summarize_excludes_unrecovered():
    report = make_report([200, 300])
    report.episodes.append(Episode("vx", "non_destructive_crash", 0))
    stats = summarize(report)
    assert stats[0].count == 2
    assert len(report.unrecovered()) == 1


# -- cross-cutting checks ----------------------------------------------------


def test_pxe_bindings_change_only_through_bind_and_revert():
    # Exhaustive trace inspection: every install binding appears with the
    # reinstall action that set it, every revert with a completed install.
    report = run_scenario(one_host_config(),
                          [FailureInjection(130, DESTRUCTIVE_CRASH, "svc01")],
                          1200, seed=1, collect_trace=True)
    binds = [line for line in report.trace if " pxe_bind " in line]
    reinstall_times = {line.split()[0] for line in report.trace
                       if " action reinstall " in line}
    complete_times = {line.split()[0] for line in report.trace
                      if " install_complete " in line}
    assert binds, "no binding records in trace"
    for line in binds:
        t, _, _, mode = line.split()
        if mode.startswith("install:"):
            assert t in reinstall_times, line
        else:
            assert mode == "local" and t in complete_times, line


def test_random_scenarios_with_per_event_invariants():
    # Full graph invariants after every single event, on a smaller batch.
    rng = np.random.default_rng(555)
    for i in range(200):
        n_hosts = int(rng.integers(1, 5))
        doc = {
            "hosts": [{"host_id": f"h{k}", "cpu_count": int(rng.integers(1, 9)),
                       "ram_mb": 4096} for k in range(n_hosts)],
            "vms": [{"vm_id": f"v{j}", "mac": f"52:54:00:00:01:{j:02x}",
                     "bound_host": f"h{int(rng.integers(0, n_hosts))}",
                     "boot_profile": "p",
                     "load_contribution": int(rng.integers(1, 9)) * 0.25,
                     "reinstall_allowed": bool(rng.random() < 0.8)}
                    for j in range(int(rng.integers(1, 9)))],
            "profiles": {"p": {}},
        }
        config = parse_cluster_config(doc)
        vms = [v["vm_id"] for v in doc["vms"]]
        hosts = [h["host_id"] for h in doc["hosts"]]
        injections = [FailureInjection(
            int(rng.integers(60, 121)),
            [NON_DESTRUCTIVE_CRASH, DESTRUCTIVE_CRASH, PHYSICAL_HOST_FAILURE,
             POWER_GLITCH][int(rng.integers(0, 4))],
            vm_id=vms[int(rng.integers(0, len(vms)))],
            host_id=hosts[int(rng.integers(0, len(hosts)))],
            hosts=(hosts[0],),
        )]
        # Normalize fields the chosen kind does not use.
        inj = injections[0]
        if inj.kind in (NON_DESTRUCTIVE_CRASH, DESTRUCTIVE_CRASH):
            injections = [FailureInjection(inj.at, inj.kind, vm_id=inj.vm_id)]
        elif inj.kind == PHYSICAL_HOST_FAILURE:
            injections = [FailureInjection(inj.at, inj.kind, host_id=inj.host_id)]
        else:
            injections = [FailureInjection(inj.at, inj.kind, hosts=inj.hosts)]
        run_scenario(config, injections, 720, seed=i, invariant_checks="event")
