"""Deterministic discrete-event engine: failure injection and recovery replay.

The engine owns the event loop and all cluster mutation. Responsive machines
heartbeat every 10 simulated seconds; the controller scans on its own grid,
and its actions are applied with durations sampled from the provisioning
plans. Five failure kinds can be injected:

  non_destructive_crash  VM stops heartbeating but stays reachable; a plain
                         reboot recovers it.
  destructive_crash      VM stops heartbeating and its system is corrupted;
                         reboots and restarts complete but the machine never
                         comes back, only a reinstall recovers it.
  physical_host_failure  host powers off permanently; its VMs halt and must
                         be moved by the controller.
  power_glitch           hosts power off but boot themselves back; hosted
                         VMs still halt and need controller-driven recovery.
  load_spike             extra load on a host for a fixed duration; no crash,
                         but it steers placement decisions.

Time is integer seconds. Identical (config, injections, seed) produce
byte-identical traces, reports and monitor logs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .cluster import (
    BOUND_LIFECYCLES,
    ClusterState,
    PowerState,
    VirtualMachine,
    VmLifecycle,
    check_state_invariants,
    host_load,
    pending_load,
)
from .controller import (
    DEFER,
    REBOOT,
    REINSTALL,
    RESTART,
    Action,
    EscalationRecord,
    HostView,
    VmInfo,
    tick,
)
from .provisioning import DEFAULT_PROFILE, INSTALL, Provisioner
from .telemetry import DOWN, Monitor, serialize_snapshot

if TYPE_CHECKING:
    from .config import ClusterConfig

HEARTBEAT_PERIOD_S = 10

NON_DESTRUCTIVE_CRASH = "non_destructive_crash"
DESTRUCTIVE_CRASH = "destructive_crash"
PHYSICAL_HOST_FAILURE = "physical_host_failure"
POWER_GLITCH = "power_glitch"
LOAD_SPIKE = "load_spike"

INJECTION_KINDS = (
    NON_DESTRUCTIVE_CRASH,
    DESTRUCTIVE_CRASH,
    PHYSICAL_HOST_FAILURE,
    POWER_GLITCH,
    LOAD_SPIKE,
)

# VM fault conditions; the lifecycle alone does not say why a machine is down.
FAULT_HUNG = "hung"          # cleared by any completed boot
FAULT_CORRUPTED = "corrupted"  # cleared only by a completed installation


class ScenarioError(ValueError):
    """A scenario references unknown machines or is otherwise unrunnable."""


@dataclass
class TimingParams:
    """Duration jitter and scheduling knobs of the engine.

    Sampled durations are uniform over [nominal - jitter, nominal + jitter].
    controller_phase_s offsets the controller scan grid within the scan
    period. rng_seed seeds the run unless overridden per run.
    """

    boot_jitter_s: int = 10
    reinstall_jitter_s: int = 17
    controller_phase_s: int = 0
    rng_seed: int = 0

    def validate(self) -> list[str]:
        problems = []
        if self.boot_jitter_s < 0 or self.reinstall_jitter_s < 0:
            problems.append("timing: jitters must be non-negative")
        return problems


@dataclass(frozen=True)
class FailureInjection:
    at: int
    kind: str
    vm_id: str | None = None
    host_id: str | None = None
    hosts: tuple[str, ...] = ()
    extra_load: float = 0.0
    duration_s: int = 0


@dataclass
class Episode:
    """Timing breakdown of one injected failure on one VM."""

    vm_id: str
    kind: str
    failure_at: int
    detected_at: int | None = None
    actions: list[tuple[int, Action]] = field(default_factory=list)
    recovered_at: int | None = None
    recovered_on: str | None = None

    @property
    def recovery_s(self) -> int | None:
        if self.recovered_at is None:
            return None
        return self.recovered_at - self.failure_at

    @property
    def detection_s(self) -> int | None:
        if self.detected_at is None:
            return None
        return self.detected_at - self.failure_at


@dataclass
class SimReport:
    episodes: list[Episode]
    horizon_s: int
    trace: list[str] | None = None
    monitor_log: list[str] | None = None

    def recovered(self) -> list[Episode]:
        return [e for e in self.episodes if e.recovered_at is not None]

    def unrecovered(self) -> list[Episode]:
        return [e for e in self.episodes if e.recovered_at is None]


def sample_duration(nominal_s: int, jitter_s: int, rng: np.random.Generator) -> int:
    """Uniform integer draw from [nominal - jitter, nominal + jitter].

    Consumes exactly one draw from the generator.
    """
    assert 0 <= jitter_s < nominal_s, "jitter must be non-negative and below nominal"
    return int(rng.integers(nominal_s - jitter_s, nominal_s + jitter_s + 1))


class Simulation:
    """One scenario run over a private cluster state.

    invariant_checks: "off", "scan" (default: full graph check at every
    controller scan and action application) or "event" (after every event;
    slow, meant for focused tests).
    """

    def __init__(self, config: "ClusterConfig", injections: list[FailureInjection],
                 horizon_s: int, *, rng: np.random.Generator | None = None,
                 seed: int | None = None, collect_trace: bool = False,
                 emit_monitor_log: bool = False, invariant_checks: str = "scan"):
        self.state: ClusterState = config.build_state()
        self.params = config.controller
        self.timing = config.timing
        self.horizon_s = horizon_s
        if rng is not None:
            self.rng = rng
        else:
            self.rng = np.random.default_rng(
                seed if seed is not None else config.timing.rng_seed)
        self.monitor = Monitor(config.telemetry)
        self.provisioner = Provisioner(
            config.profiles,
            {vm.mac: vm.boot_profile for vm in self.state.vms.values()},
        )
        self.records: dict[str, EscalationRecord] = {}
        self.episodes: list[Episode] = []
        self._open: dict[str, Episode] = {}
        self._fault: dict[str, str | None] = {v: None for v in self.state.vms}
        self._heap: list[tuple[int, int, str, tuple]] = []
        self._seq = 0
        self._boot_ticket: dict[str, int] = {}
        self._beat_ticket: dict[str, int] = {}
        self.now = 0
        self._invariants = invariant_checks
        self.trace: list[str] | None = [] if collect_trace else None
        self.monitor_log: list[str] | None = [] if emit_monitor_log else None

        self._validate_injections(injections)
        for inj in injections:
            self._schedule(inj.at, "inject", (inj,))
        phase = self.timing.controller_phase_s
        assert 0 <= phase < self.params.scan_period_s
        self._schedule(phase, "scan", ())
        for host_id in sorted(self.state.hosts):
            host = self.state.hosts[host_id]
            if host.power_state is PowerState.ON:
                self.monitor.register(host_id, 0, host_load(self.state, host_id))
                self._start_beats(host_id, record_now=False)
            else:
                self.monitor.register(host_id, 0, 0.0)
        for vm_id in sorted(self.state.vms):
            vm = self.state.vms[vm_id]
            if vm.bound_host is not None:
                self.monitor.register(vm_id, 0, vm.load_contribution)
                if vm.lifecycle is VmLifecycle.RUNNING:
                    self._start_beats(vm_id, record_now=False)

    # -- scheduling ------------------------------------------------------

    def _schedule(self, at: int, kind: str, args: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (at, self._seq, kind, args))

    def _trace(self, line: str) -> None:
        if self.trace is not None:
            self.trace.append(f"{self.now} {line}")

    # -- heartbeats ------------------------------------------------------

    def _responsive(self, machine_id: str) -> bool:
        host = self.state.hosts.get(machine_id)
        if host is not None:
            return host.power_state is PowerState.ON
        return self.state.vms[machine_id].lifecycle is VmLifecycle.RUNNING

    def _reported_load(self, machine_id: str) -> float:
        if machine_id in self.state.hosts:
            return host_load(self.state, machine_id)
        return self.state.vms[machine_id].load_contribution

    def _start_beats(self, machine_id: str, record_now: bool = True) -> None:
        ticket = self._beat_ticket.get(machine_id, 0) + 1
        self._beat_ticket[machine_id] = ticket
        if record_now:
            self.monitor.record_heartbeat(machine_id, self.now,
                                          self._reported_load(machine_id))
        self._schedule(self.now + HEARTBEAT_PERIOD_S, "heartbeat", (machine_id, ticket))

    def _silence(self, machine_id: str, final_beat: bool) -> None:
        # The staleness clock runs from the last proof of life; a machine
        # that was healthy until the failure instant gets a final beat there.
        if final_beat:
            self.monitor.record_heartbeat(machine_id, self.now,
                                          self._reported_load(machine_id))
        self._beat_ticket[machine_id] = self._beat_ticket.get(machine_id, 0) + 1

    def _on_heartbeat(self, machine_id: str, ticket: int) -> None:
        if ticket != self._beat_ticket.get(machine_id, 0):
            return
        if not self._responsive(machine_id):
            return
        load = self._reported_load(machine_id)
        self.monitor.record_heartbeat(machine_id, self.now, load)
        self._trace(f"heartbeat {machine_id} {load!r}")
        self._schedule(self.now + HEARTBEAT_PERIOD_S, "heartbeat", (machine_id, ticket))

    # -- episodes --------------------------------------------------------

    def _open_episode(self, vm_id: str, kind: str) -> None:
        if vm_id in self._open:
            return
        ep = Episode(vm_id=vm_id, kind=kind, failure_at=self.now)
        self._open[vm_id] = ep
        self.episodes.append(ep)

    def _close_episode(self, vm_id: str) -> None:
        ep = self._open.pop(vm_id, None)
        if ep is not None:
            ep.recovered_at = self.now
            ep.recovered_on = self.state.vms[vm_id].bound_host
            self._trace(f"recovered {vm_id} {ep.recovered_on}")

    # -- controller scan -------------------------------------------------

    def _build_view(self, snapshot) -> list[HostView]:
        views = []
        for host_id in sorted(self.state.hosts):
            host = self.state.hosts[host_id]
            entry = snapshot.entries.get(host_id)
            views.append(HostView(
                host_id=host_id,
                power_on=host.power_state is PowerState.ON,
                monitor_up=entry is not None and entry.verdict != DOWN,
                load=host_load(self.state, host_id) + pending_load(self.state, host_id),
                vm_count=len(host.hosted_vms),
                load_threshold=host.load_threshold,
            ))
        return views

    def _on_scan(self) -> None:
        snapshot = self.monitor.snapshot(self.now)
        if self.monitor_log is not None:
            self.monitor_log.append(serialize_snapshot(snapshot))
        for vm_id, ep in self._open.items():
            if ep.detected_at is None:
                entry = snapshot.entries.get(vm_id)
                if entry is not None and entry.verdict == DOWN:
                    ep.detected_at = self.now
        view = self._build_view(snapshot)
        infos = [
            VmInfo(vm.vm_id, vm.bound_host, vm.load_contribution, vm.reinstall_allowed)
            for _, vm in sorted(self.state.vms.items())
        ]
        self.records, actions = tick(self.records, snapshot, view, self.now,
                                     self.params, infos)
        self._trace("scan")
        for action in actions:
            self._apply(action)
        if self._invariants != "off":
            check_state_invariants(self.state)
        self._schedule(self.now + self.params.scan_period_s, "scan", ())

    def _apply(self, action: Action) -> None:
        self._trace(f"action {action}")
        ep = self._open.get(action.vm_id)
        if ep is not None:
            ep.actions.append((self.now, action))
        vm = self.state.vms[action.vm_id]
        if action.kind == REBOOT:
            if vm.lifecycle is VmLifecycle.UNRESPONSIVE:
                self._power_cycle(vm)
            else:
                # Halted or unreachable guests cannot execute a reboot.
                self._trace(f"reboot_unreachable {vm.vm_id}")
        elif action.kind == RESTART:
            self._rebind(vm, action.target_host)
            self._power_cycle(vm)
        elif action.kind == REINSTALL:
            self.provisioner.bind_install(vm.mac, vm.boot_profile)
            self._trace(f"pxe_bind {vm.mac} install:{vm.boot_profile}")
            self._rebind(vm, action.target_host)
            self._power_cycle(vm)
        elif action.kind == DEFER:
            self._park(vm)

    def _rebind(self, vm: VirtualMachine, target: str) -> None:
        was_parked = vm.lifecycle is VmLifecycle.WAITING_FOR_CAPACITY
        if vm.bound_host != target:
            if vm.bound_host is not None:
                self.state.hosts[vm.bound_host].hosted_vms.remove(vm.vm_id)
            self.state.hosts[target].hosted_vms.append(vm.vm_id)
            vm.bound_host = target
        if was_parked:
            # Heartbeat history survives parking, so the staleness clock
            # still dates from the original failure.
            self.monitor.register(vm.vm_id, self.now)

    def _park(self, vm: VirtualMachine) -> None:
        if vm.bound_host is not None:
            self.state.hosts[vm.bound_host].hosted_vms.remove(vm.vm_id)
            vm.bound_host = None
        vm.lifecycle = VmLifecycle.WAITING_FOR_CAPACITY
        self._beat_ticket[vm.vm_id] = self._beat_ticket.get(vm.vm_id, 0) + 1
        self._boot_ticket[vm.vm_id] = self._boot_ticket.get(vm.vm_id, 0) + 1
        self.monitor.unregister(vm.vm_id)

    def _power_cycle(self, vm: VirtualMachine) -> None:
        host = self.state.hosts[vm.bound_host]
        assert host.power_state is PowerState.ON, \
            f"boot scheduled for {vm.vm_id} on powered-off host {host.host_id}"
        ticket = self._boot_ticket.get(vm.vm_id, 0) + 1
        self._boot_ticket[vm.vm_id] = ticket
        plan = self.provisioner.boot_outcome(vm.mac)
        if plan.mode == INSTALL:
            duration = sample_duration(plan.total_s, self.timing.reinstall_jitter_s,
                                       self.rng)
            vm.lifecycle = VmLifecycle.INSTALLING
            self._schedule(self.now + duration, "install_complete", (vm.vm_id, ticket))
        else:
            duration = sample_duration(plan.total_s, self.timing.boot_jitter_s,
                                       self.rng)
            vm.lifecycle = VmLifecycle.BOOTING
            self._schedule(self.now + duration, "boot_complete", (vm.vm_id, ticket))
        self._trace(f"boot_start {vm.vm_id} {plan.mode} {duration}")

    # -- boot and install completion --------------------------------------

    def _on_boot_complete(self, machine_id: str, ticket: int) -> None:
        if ticket != self._boot_ticket.get(machine_id, 0):
            return
        host = self.state.hosts.get(machine_id)
        if host is not None:
            host.power_state = PowerState.ON
            self._trace(f"boot_complete {machine_id} up")
            self._start_beats(machine_id)
            return
        vm = self.state.vms[machine_id]
        assert vm.lifecycle is VmLifecycle.BOOTING
        if self._fault[machine_id] == FAULT_CORRUPTED:
            # The boot completes but the corrupted system never comes up.
            vm.lifecycle = VmLifecycle.UNRESPONSIVE
            self._trace(f"boot_complete {machine_id} silent")
            return
        self._fault[machine_id] = None
        vm.lifecycle = VmLifecycle.RUNNING
        self._trace(f"boot_complete {machine_id} running")
        self._start_beats(machine_id)
        self._close_episode(machine_id)

    def _on_install_complete(self, vm_id: str, ticket: int) -> None:
        if ticket != self._boot_ticket.get(vm_id, 0):
            return
        vm = self.state.vms[vm_id]
        assert vm.lifecycle is VmLifecycle.INSTALLING
        self.provisioner.complete_install(vm.mac)
        self._trace(f"pxe_bind {vm.mac} local")
        self._fault[vm_id] = None
        vm.lifecycle = VmLifecycle.RUNNING
        self._trace(f"install_complete {vm_id}")
        self._start_beats(vm_id)
        self._close_episode(vm_id)

    # -- failure injection -------------------------------------------------

    def _validate_injections(self, injections: list[FailureInjection]) -> None:
        for inj in injections:
            if inj.kind not in INJECTION_KINDS:
                raise ScenarioError(f"unknown injection kind '{inj.kind}'")
            if inj.at < 0:
                raise ScenarioError(f"injection at t={inj.at} precedes scenario start")
            if inj.at > self.horizon_s:
                raise ScenarioError(
                    f"injection at t={inj.at} exceeds horizon {self.horizon_s}")
            if inj.kind in (NON_DESTRUCTIVE_CRASH, DESTRUCTIVE_CRASH):
                if inj.vm_id not in self.state.vms:
                    raise ScenarioError(f"injection targets unknown VM '{inj.vm_id}'")
            elif inj.kind in (PHYSICAL_HOST_FAILURE, LOAD_SPIKE):
                if inj.host_id not in self.state.hosts:
                    raise ScenarioError(f"injection targets unknown host '{inj.host_id}'")
            elif inj.kind == POWER_GLITCH:
                for h in inj.hosts:
                    if h not in self.state.hosts:
                        raise ScenarioError(f"injection targets unknown host '{h}'")
            if inj.kind == LOAD_SPIKE and inj.duration_s < 1:
                raise ScenarioError("load_spike duration_s must be >= 1")

    def _on_inject(self, inj: FailureInjection) -> None:
        if inj.kind in (NON_DESTRUCTIVE_CRASH, DESTRUCTIVE_CRASH):
            vm = self.state.vms[inj.vm_id]
            if vm.lifecycle is not VmLifecycle.RUNNING:
                self._trace(f"inject_skipped {inj.kind} {inj.vm_id}")
                return
            self._trace(f"inject {inj.kind} {inj.vm_id}")
            self._silence(inj.vm_id, final_beat=True)
            self._fault[inj.vm_id] = (
                FAULT_HUNG if inj.kind == NON_DESTRUCTIVE_CRASH else FAULT_CORRUPTED)
            vm.lifecycle = VmLifecycle.UNRESPONSIVE
            self._open_episode(inj.vm_id, inj.kind)
        elif inj.kind == PHYSICAL_HOST_FAILURE:
            self._trace(f"inject {inj.kind} {inj.host_id}")
            self._fail_host(inj.host_id, inj.kind)
        elif inj.kind == POWER_GLITCH:
            self._trace(f"inject {inj.kind} {','.join(inj.hosts)}")
            for host_id in sorted(inj.hosts):
                if self._fail_host(host_id, inj.kind):
                    # Power returns: the host boots itself back.
                    ticket = self._boot_ticket.get(host_id, 0)
                    duration = sample_duration(sum(DEFAULT_PROFILE.local_boot_plan()),
                                               self.timing.boot_jitter_s, self.rng)
                    self._schedule(self.now + duration, "boot_complete",
                                   (host_id, ticket))
        elif inj.kind == LOAD_SPIKE:
            self._trace(f"inject {inj.kind} {inj.host_id} {inj.extra_load!r} "
                        f"{inj.duration_s}")
            self.state.extra_load[inj.host_id] = (
                self.state.extra_load.get(inj.host_id, 0.0) + inj.extra_load)
            self._schedule(self.now + inj.duration_s, "spike_end",
                           (inj.host_id, inj.extra_load))

    def _fail_host(self, host_id: str, episode_kind: str) -> bool:
        host = self.state.hosts[host_id]
        if host.power_state is PowerState.OFF:
            self._trace(f"inject_skipped {episode_kind} {host_id}")
            return False
        self._silence(host_id, final_beat=True)
        host.power_state = PowerState.OFF
        self._boot_ticket[host_id] = self._boot_ticket.get(host_id, 0) + 1
        for vm_id in sorted(host.hosted_vms):
            vm = self.state.vms[vm_id]
            if vm.lifecycle is VmLifecycle.RUNNING:
                self._silence(vm_id, final_beat=True)
            else:
                self._silence(vm_id, final_beat=False)
            if vm.lifecycle in BOUND_LIFECYCLES:
                self._boot_ticket[vm_id] = self._boot_ticket.get(vm_id, 0) + 1
                vm.lifecycle = VmLifecycle.HALTED
                self._open_episode(vm_id, episode_kind)
        return True

    def _on_spike_end(self, host_id: str, extra_load: float) -> None:
        remaining = self.state.extra_load.get(host_id, 0.0) - extra_load
        if remaining <= 1e-12:
            self.state.extra_load.pop(host_id, None)
        else:
            self.state.extra_load[host_id] = remaining
        self._trace(f"spike_end {host_id}")

    # -- main loop ---------------------------------------------------------

    def run(self) -> SimReport:
        last = (-1, -1)
        while self._heap:
            at, seq, kind, args = heapq.heappop(self._heap)
            if at > self.horizon_s:
                break
            assert (at, seq) > last, "event order violated"
            last = (at, seq)
            self.now = at
            self.state.clock = at
            if kind == "heartbeat":
                self._on_heartbeat(*args)
            elif kind == "scan":
                self._on_scan()
            elif kind == "inject":
                self._on_inject(*args)
            elif kind == "boot_complete":
                self._on_boot_complete(*args)
            elif kind == "install_complete":
                self._on_install_complete(*args)
            elif kind == "spike_end":
                self._on_spike_end(*args)
            else:  # pragma: no cover
                raise AssertionError(f"unknown event kind {kind}")
            if self._invariants == "event":
                check_state_invariants(self.state)
        if self._invariants != "off":
            check_state_invariants(self.state)
        return SimReport(episodes=self.episodes, horizon_s=self.horizon_s,
                         trace=self.trace, monitor_log=self.monitor_log)


def run_scenario(config: "ClusterConfig", injections: list[FailureInjection],
                 horizon_s: int, *, rng: np.random.Generator | None = None,
                 seed: int | None = None, collect_trace: bool = False,
                 emit_monitor_log: bool = False,
                 invariant_checks: str = "scan") -> SimReport:
    """Run one scenario to its horizon and return the episode report."""
    sim = Simulation(config, injections, horizon_s, rng=rng, seed=seed,
                     collect_trace=collect_trace, emit_monitor_log=emit_monitor_log,
                     invariant_checks=invariant_checks)
    return sim.run()


@dataclass(frozen=True)
class KindStats:
    """Aggregate recovery statistics for one failure kind."""

    kind: str
    count: int
    mean_s: float
    stddev_s: float
    min_s: int
    max_s: int
    histogram: list[tuple[int, int]]


def summarize(report: SimReport, bin_width_s: int = 10) -> list[KindStats]:
    """Per-kind recovery statistics with a fixed-width histogram.

    Only recovered episodes contribute; kinds are sorted for determinism.
    """
    if bin_width_s < 1:
        raise ValueError("bin_width_s must be >= 1")
    by_kind: dict[str, list[int]] = {}
    for ep in report.episodes:
        if ep.recovered_at is not None:
            by_kind.setdefault(ep.kind, []).append(ep.recovery_s)
    stats = []
    for kind in sorted(by_kind):
        times = np.asarray(by_kind[kind], dtype=float)
        lo_bin = int(times.min()) // bin_width_s
        hi_bin = int(times.max()) // bin_width_s
        counts = {b: 0 for b in range(lo_bin, hi_bin + 1)}
        for t in by_kind[kind]:
            counts[t // bin_width_s] += 1
        stats.append(KindStats(
            kind=kind,
            count=len(times),
            mean_s=float(times.mean()),
            stddev_s=float(times.std()),
            min_s=int(times.min()),
            max_s=int(times.max()),
            histogram=[(b * bin_width_s, counts[b]) for b in sorted(counts)],
        ))
    return stats
