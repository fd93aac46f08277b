"""Recovery controller: per-VM escalation state machine and host placement.

The controller runs once per scan period. For every virtual machine it
compares the monitor verdict against the VM's escalation record and emits at
most one action: reboot the guest, restart it on a chosen physical host,
reinstall it from scratch on a chosen host, or defer it until capacity
exists. Escalation moves strictly upward within a failure episode — reboot,
then restart once T1 has elapsed, then reinstall once T2 has elapsed — and a
machine seen Up resets to healthy.

Placement picks the least-loaded powered-on host whose monitor verdict is Up
and which can absorb the VM's load without reaching its threshold, breaking
ties by hosted-VM count and then host id. When several placements happen in
one tick, each placement is visible to the next (sequential fill), so a
single backup host is not oversubscribed by a batch of failovers.

All functions here are pure: they never touch cluster state and return fresh
records. The simulation engine owns all mutation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from .telemetry import DOWN, UP, MonitorSnapshot

REBOOT = "reboot"
RESTART = "restart"
REINSTALL = "reinstall"
DEFER = "defer"
NOOP = "noop"

# Completed restart->reinstall rounds tolerated before giving up on a VM.
MAX_ESCALATION_CYCLES = 3


@dataclass
class ControllerParams:
    """Timing and policy knobs of the escalation loop.

    t1_s is the patience between reboot and restart, t2_s between restart and
    reinstall; both must be at least one scan period or their expiry could
    never be observed. reinstall_patience_s is the post-reinstall patience
    before the cycle restarts at the restart level; it must exceed the
    longest installation or in-flight installs would be cancelled.
    Disabling reboot_step_enabled starts escalation at restart; disabling
    restart_step_enabled as well starts it at reinstall (used when lower
    interventions are known to be futile).
    """

    scan_period_s: int = 60
    t1_s: int = 180
    t2_s: int = 180
    reboot_step_enabled: bool = True
    restart_step_enabled: bool = True
    reinstall_patience_s: int = 600

    def validate(self) -> list[str]:
        problems = []
        if self.scan_period_s < 1:
            problems.append("controller: scan_period_s must be >= 1")
        for name in ("t1_s", "t2_s", "reinstall_patience_s"):
            if getattr(self, name) < self.scan_period_s:
                problems.append(f"controller: {name} must be >= scan_period_s")
        return problems


class Phase(Enum):
    HEALTHY = "healthy"
    REBOOT_ISSUED = "reboot_issued"
    RESTART_ISSUED = "restart_issued"
    REINSTALL_ISSUED = "reinstall_issued"
    AWAITING_CAPACITY = "awaiting_capacity"
    REQUIRES_HUMAN = "requires_human"


@dataclass(frozen=True)
class EscalationRecord:
    """Controller memory for one VM.

    deadline is the scan time at or after which the current phase escalates
    (absent for HEALTHY / AWAITING_CAPACITY / REQUIRES_HUMAN). pending names
    the intervention an AWAITING_CAPACITY VM will receive once placement
    succeeds. cycles counts completed reinstall rounds in this episode.
    """

    vm_id: str
    phase: Phase = Phase.HEALTHY
    deadline: int | None = None
    pending: str | None = None
    cycles: int = 0
    last_seen_up_at: int = 0
    episode_started_at: int | None = None


@dataclass(frozen=True)
class Action:
    kind: str  # REBOOT, RESTART, REINSTALL, DEFER or NOOP
    vm_id: str
    target_host: str | None = None

    def __str__(self) -> str:
        if self.target_host is None:
            return f"{self.kind} {self.vm_id}"
        return f"{self.kind} {self.vm_id} {self.target_host}"


@dataclass
class HostView:
    """Read-only placement facts for one candidate host.

    load includes the committed contributions of VMs currently booting or
    installing on the host, so back-to-back placements against the same view
    cannot oversubscribe it.
    """

    host_id: str
    power_on: bool
    monitor_up: bool
    load: float
    vm_count: int
    load_threshold: float


@dataclass(frozen=True)
class VmInfo:
    """What the controller needs to know about a VM to act on it."""

    vm_id: str
    bound_host: str | None
    load_contribution: float
    reinstall_allowed: bool


def choose_host(view: Iterable[HostView], vm) -> str | None:
    """Pick the host for a restart or reinstall, or None when nothing fits.

    Candidates must be powered on, Up in the monitor, and able to take the
    VM's load while staying strictly under their threshold. The winner is
    minimal by (load, vm_count, host_id).
    """
    best = None
    best_key = None
    for h in view:
        if not h.power_on or not h.monitor_up:
            continue
        if not h.load + vm.load_contribution < h.load_threshold:
            continue
        key = (h.load, h.vm_count, h.host_id)
        if best_key is None or key < best_key:
            best, best_key = h, key
    return best.host_id if best is not None else None


def _commit(working: dict[str, HostView], vm: VmInfo, target: str) -> None:
    """Record a placement in the working view (sequential fill).

    The target absorbs the VM's load immediately; the hosted-VM count moves
    only when the VM actually changes hosts (a same-host restart is already
    counted in vm_count).
    """
    tv = working[target]
    tv.load += vm.load_contribution
    if vm.bound_host != target:
        tv.vm_count += 1
        if vm.bound_host is not None:
            src = working.get(vm.bound_host)
            if src is not None:
                src.vm_count -= 1


def plan_host_failover(failed_host: str, hosted_vms: Sequence[VmInfo],
                       view: Iterable[HostView],
                       params: ControllerParams) -> list[Action]:
    """Restart placements for every VM of a failed physical host.

    No reboot is attempted: a dead host cannot relay one. VMs are placed in
    vm_id order, each placement updating the view seen by the next; a VM
    with no eligible host is deferred.
    """
    working = {h.host_id: replace_view(h) for h in view}
    actions = []
    for vm in sorted(hosted_vms, key=lambda v: v.vm_id):
        target = choose_host(working.values(), vm)
        if target is None:
            actions.append(Action(DEFER, vm.vm_id))
            continue
        actions.append(Action(RESTART, vm.vm_id, target))
        _commit(working, vm, target)
    return actions


def replace_view(h: HostView) -> HostView:
    return HostView(h.host_id, h.power_on, h.monitor_up, h.load, h.vm_count,
                    h.load_threshold)


def _entry_level(params: ControllerParams, vm: VmInfo, host_down: bool) -> str:
    """First intervention for a newly failed VM."""
    if host_down or not params.reboot_step_enabled:
        if params.restart_step_enabled or not vm.reinstall_allowed:
            return RESTART
        return REINSTALL
    return REBOOT


def tick(records: dict[str, EscalationRecord], snapshot: MonitorSnapshot,
         view: Iterable[HostView], now: int, params: ControllerParams,
         vm_infos: Sequence[VmInfo]) -> tuple[dict[str, EscalationRecord], list[Action]]:
    """One controller scan: new records plus the actions to apply.

    Pure function of its inputs; actions come out ordered by vm_id because
    VMs are processed in that order, which is also the sequential-fill order
    for placements.
    """
    assert snapshot.taken_at == now, "snapshot must be taken at the scan instant"
    working = {h.host_id: replace_view(h) for h in view}
    down_hosts = {
        mid for mid, e in snapshot.entries.items()
        if mid in working and e.verdict == DOWN
    }
    out: dict[str, EscalationRecord] = {}
    actions: list[Action] = []

    def place(rec: EscalationRecord, vm: VmInfo, kind: str) -> EscalationRecord:
        target = choose_host(working.values(), vm)
        if target is None:
            if rec.phase is not Phase.AWAITING_CAPACITY:
                actions.append(Action(DEFER, vm.vm_id))
                if vm.bound_host is not None:
                    src = working.get(vm.bound_host)
                    if src is not None:
                        src.vm_count -= 1
            return replace(rec, phase=Phase.AWAITING_CAPACITY, deadline=None,
                           pending=kind)
        actions.append(Action(kind, vm.vm_id, target))
        _commit(working, vm, target)
        if kind == RESTART:
            return replace(rec, phase=Phase.RESTART_ISSUED,
                           deadline=now + params.t2_s, pending=None)
        return replace(rec, phase=Phase.REINSTALL_ISSUED,
                       deadline=now + params.reinstall_patience_s, pending=None)

    for vm in sorted(vm_infos, key=lambda v: v.vm_id):
        rec = records.get(vm.vm_id) or EscalationRecord(vm_id=vm.vm_id)
        entry = snapshot.entries.get(vm.vm_id)

        if entry is not None and entry.verdict == UP:
            out[vm.vm_id] = EscalationRecord(vm_id=vm.vm_id, last_seen_up_at=now)
            continue

        down = entry is not None and entry.verdict == DOWN
        if not down and rec.phase is not Phase.AWAITING_CAPACITY:
            # Not monitored (e.g. parked) and not waiting: nothing to decide.
            out[vm.vm_id] = rec
            continue

        host_down = vm.bound_host is not None and vm.bound_host in down_hosts

        if rec.phase is Phase.HEALTHY:
            rec = replace(rec, episode_started_at=now)
            level = _entry_level(params, vm, host_down)
            if level == REBOOT:
                actions.append(Action(REBOOT, vm.vm_id))
                # The reboot commits the VM's load back to its host; later
                # placements in this tick must not claim that headroom.
                src = working.get(vm.bound_host) if vm.bound_host else None
                if src is not None:
                    src.load += vm.load_contribution
                rec = replace(rec, phase=Phase.REBOOT_ISSUED,
                              deadline=now + params.t1_s)
            elif level == REINSTALL:
                rec = place(rec, vm, REINSTALL)
            else:
                rec = place(rec, vm, RESTART)

        elif rec.phase is Phase.REBOOT_ISSUED:
            if now >= rec.deadline:
                if params.restart_step_enabled or not vm.reinstall_allowed:
                    rec = place(rec, vm, RESTART)
                else:
                    rec = place(rec, vm, REINSTALL)

        elif rec.phase is Phase.RESTART_ISSUED:
            if now >= rec.deadline:
                if vm.reinstall_allowed:
                    rec = place(rec, vm, REINSTALL)
                else:
                    # Reinstall opted out: keep retrying restarts.
                    rec = place(rec, vm, RESTART)

        elif rec.phase is Phase.REINSTALL_ISSUED:
            if now >= rec.deadline:
                cycles = rec.cycles + 1
                if cycles >= MAX_ESCALATION_CYCLES:
                    rec = replace(rec, phase=Phase.REQUIRES_HUMAN,
                                  deadline=None, cycles=cycles)
                else:
                    rec = place(replace(rec, cycles=cycles), vm, RESTART)

        elif rec.phase is Phase.AWAITING_CAPACITY:
            rec = place(rec, vm, rec.pending or RESTART)

        # REQUIRES_HUMAN: excluded until seen Up again.
        out[vm.vm_id] = rec

    return out, actions
