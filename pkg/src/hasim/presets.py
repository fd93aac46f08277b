"""Checked-in experiment presets: batch crash campaigns and the glitch replay.

The replication presets pin every input of the two headline experiments so
their published numbers are reproducible from explicit parameters:

  nondestructive  one VM is crashed non-destructively per episode; the full
                  escalation config is the default one, so each episode is
                  detect (70 s + up to one scan period) then reboot
                  (80 s +/- 10). Expected recovery: 180 s +/- 30.

  destructive     the VM's system is corrupted, so reboot and restart can
                  never help. The preset disables both lower steps and the
                  controller goes straight to reinstallation at detection:
                  detect then install (442 s +/- 17). Expected recovery:
                  542 s +/- 45.

Each episode runs on a fresh copy of a one-host cluster with its own rng
seeded seed + episode index; the crash instant is uniformly jittered across
one scan period, which is what spreads detection over 70..129 s.

The power-glitch scenario models a machine-room power cut taking down a
loaded host: its VM must be restarted on the one backup host that has
capacity. Builders return plain JSON documents; the checked-in files under
scenarios/ are generated from them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import parse_cluster_config
from .engine import (
    DESTRUCTIVE_CRASH,
    NON_DESTRUCTIVE_CRASH,
    FailureInjection,
    SimReport,
    run_scenario,
)

PRESET_VERSION = "v1"

# One scan period; crash instants are jittered uniformly across it.
CRASH_WINDOW_S = 60
INJECT_BASE_S = 120


@dataclass(frozen=True)
class ReplicationPreset:
    name: str
    kind: str
    horizon_s: int
    cluster_doc: dict


def _single_host_cluster(controller: dict) -> dict:
    return {
        "hosts": [
            {"host_id": "node01", "cpu_count": 4, "ram_mb": 8192},
        ],
        "vms": [
            {"vm_id": "svc01", "mac": "52:54:00:00:00:01", "bound_host": "node01",
             "boot_profile": "default"},
        ],
        "profiles": {"default": {}},
        "controller": controller,
        "telemetry": {},
        "timing": {},
    }


PRESETS = {
    "nondestructive": ReplicationPreset(
        name="nondestructive",
        kind=NON_DESTRUCTIVE_CRASH,
        horizon_s=600,
        cluster_doc=_single_host_cluster({}),
    ),
    "destructive": ReplicationPreset(
        name="destructive",
        kind=DESTRUCTIVE_CRASH,
        horizon_s=900,
        cluster_doc=_single_host_cluster({
            "reboot_step_enabled": False,
            "restart_step_enabled": False,
        }),
    ),
}


def replicate_experiment(name: str, n: int, seed: int) -> SimReport:
    """Run n independent crash episodes under the named preset.

    Episode i runs on a fresh cluster with generator seed + i; the first
    draw places the crash within the scan period, subsequent draws sample
    durations.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown experiment '{name}' "
                         f"(expected one of {', '.join(sorted(PRESETS))})")
    if n < 1:
        raise ValueError("n must be >= 1")
    preset = PRESETS[name]
    config = parse_cluster_config(preset.cluster_doc)
    episodes = []
    vm_id = config.vms[0].vm_id
    for i in range(n):
        rng = np.random.default_rng(seed + i)
        crash_at = INJECT_BASE_S + int(rng.integers(0, CRASH_WINDOW_S))
        injection = FailureInjection(at=crash_at, kind=preset.kind, vm_id=vm_id)
        report = run_scenario(config, [injection], preset.horizon_s, rng=rng)
        episodes.extend(report.episodes)
    return SimReport(episodes=episodes, horizon_s=preset.horizon_s)


def power_glitch_scenario_doc(reboot_step_enabled: bool = True) -> dict:
    """Scenario document for the packaged power-glitch replay.

    Host alfa01 carries the service VM gridce and is pinned over its load
    threshold by a long spike; alfa02 and alfa03 are loaded too close to
    their thresholds to accept gridce, so the placement decision must be
    alfa04. The glitch instant is chosen so the next controller scan falls
    after alfa01 has booted back: the controller then sees only the VM down
    and walks the normal escalation (reboot first when enabled).
    """
    hosts = [
        {"host_id": f"alfa0{i}", "cpu_count": 4, "ram_mb": 16384}
        for i in range(1, 5)
    ]
    vms = [
        {"vm_id": "gridce", "mac": "52:54:00:10:00:01", "bound_host": "alfa01",
         "boot_profile": "compute", "load_contribution": 1.0},
        {"vm_id": "web01", "mac": "52:54:00:10:00:02", "bound_host": "alfa02",
         "boot_profile": "compute", "load_contribution": 1.2},
        {"vm_id": "web02", "mac": "52:54:00:10:00:03", "bound_host": "alfa02",
         "boot_profile": "compute", "load_contribution": 1.2},
        {"vm_id": "web03", "mac": "52:54:00:10:00:04", "bound_host": "alfa02",
         "boot_profile": "compute", "load_contribution": 1.0},
        {"vm_id": "db01", "mac": "52:54:00:10:00:05", "bound_host": "alfa03",
         "boot_profile": "compute", "load_contribution": 2.0},
        {"vm_id": "batch01", "mac": "52:54:00:10:00:06", "bound_host": "alfa03",
         "boot_profile": "compute", "load_contribution": 1.5},
    ]
    return {
        "cluster": {
            "hosts": hosts,
            "vms": vms,
            "profiles": {"compute": {}},
            "controller": {"reboot_step_enabled": reboot_step_enabled},
            "telemetry": {},
            "timing": {},
        },
        "injections": [
            {"at": 0, "kind": "load_spike", "host": "alfa01",
             "extra_load": 6.0, "duration_s": 3600},
            {"at": 291, "kind": "power_glitch", "hosts": ["alfa01"]},
        ],
        "horizon_s": 900,
        "replications": 1,
        "seed": 7,
    }
