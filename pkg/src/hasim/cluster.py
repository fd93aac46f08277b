"""Cluster domain model: physical hosts, virtual machines and derived load.

ClusterState is the single source of truth the controller and monitor read;
only the simulation engine mutates it. Host load is derived, never stored:
the sum of the load contributions of the host's running VMs plus any
scenario-injected extra load, and zero while the host is powered off.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class PowerState(Enum):
    ON = "on"
    OFF = "off"


class VmLifecycle(Enum):
    RUNNING = "running"
    UNRESPONSIVE = "unresponsive"
    HALTED = "halted"
    BOOTING = "booting"
    INSTALLING = "installing"
    WAITING_FOR_CAPACITY = "waiting_for_capacity"


# Lifecycles that require the VM to be bound to a host.
BOUND_LIFECYCLES = {
    VmLifecycle.RUNNING,
    VmLifecycle.UNRESPONSIVE,
    VmLifecycle.BOOTING,
    VmLifecycle.INSTALLING,
}

MAC_RE = re.compile(r"^([0-9a-f]{2}:){5}[0-9a-f]{2}$")


@dataclass
class PhysicalHost:
    host_id: str
    cpu_count: int
    ram_mb: int
    load_threshold: float
    power_state: PowerState = PowerState.ON
    hosted_vms: list[str] = field(default_factory=list)


@dataclass
class VirtualMachine:
    vm_id: str
    mac: str
    bound_host: str | None
    boot_profile: str
    lifecycle: VmLifecycle = VmLifecycle.RUNNING
    reinstall_allowed: bool = True
    load_contribution: float = 1.0


@dataclass
class ClusterState:
    hosts: dict[str, PhysicalHost]
    vms: dict[str, VirtualMachine]
    clock: int = 0
    extra_load: dict[str, float] = field(default_factory=dict)


def default_threshold(cpu_count: int, per_core_factor: float = 1.0) -> float:
    """Load threshold for a host that does not declare one explicitly."""
    if cpu_count < 1:
        raise ValueError("cpu_count must be >= 1")
    if per_core_factor <= 0:
        raise ValueError("per_core_factor must be > 0")
    return cpu_count * per_core_factor


def host_load(state: ClusterState, host_id: str) -> float:
    """Instantaneous derived load of a host.

    Sum of load contributions of its running VMs plus injected extra load;
    zero for a powered-off host.
    """
    host = state.hosts.get(host_id)
    if host is None:
        raise KeyError(f"unknown host '{host_id}'")
    if host.power_state is PowerState.OFF:
        return 0.0
    total = sum(
        state.vms[vm_id].load_contribution
        for vm_id in host.hosted_vms
        if state.vms[vm_id].lifecycle is VmLifecycle.RUNNING
    )
    return total + state.extra_load.get(host_id, 0.0)


def pending_load(state: ClusterState, host_id: str) -> float:
    """Committed-but-not-yet-running load: contributions of VMs booting or
    installing on the host. Used by placement so in-flight placements count
    against capacity."""
    host = state.hosts[host_id]
    return sum(
        state.vms[vm_id].load_contribution
        for vm_id in host.hosted_vms
        if state.vms[vm_id].lifecycle in (VmLifecycle.BOOTING, VmLifecycle.INSTALLING)
    )


def check_state_invariants(state: ClusterState) -> None:
    """Assert binding and lifecycle consistency of the whole cluster graph.

    Raises AssertionError on the first violation; called by the engine after
    event applications when invariant checking is enabled.
    """
    seen_bound: set[str] = set()
    for host in state.hosts.values():
        assert len(set(host.hosted_vms)) == len(host.hosted_vms), \
            f"host {host.host_id}: duplicate entries in hosted_vms"
        for vm_id in host.hosted_vms:
            vm = state.vms.get(vm_id)
            assert vm is not None, f"host {host.host_id} references unknown VM {vm_id}"
            assert vm.bound_host == host.host_id, \
                f"VM {vm_id} binding ({vm.bound_host}) disagrees with host {host.host_id}"
            assert vm_id not in seen_bound, f"VM {vm_id} hosted by more than one host"
            seen_bound.add(vm_id)
    for vm in state.vms.values():
        if vm.lifecycle in BOUND_LIFECYCLES:
            assert vm.bound_host is not None, \
                f"VM {vm.vm_id} is {vm.lifecycle.value} but unbound"
        if vm.lifecycle is VmLifecycle.WAITING_FOR_CAPACITY:
            assert vm.bound_host is None, \
                f"VM {vm.vm_id} is waiting for capacity but still bound"
        if vm.bound_host is not None:
            host = state.hosts.get(vm.bound_host)
            assert host is not None, f"VM {vm.vm_id} bound to unknown host {vm.bound_host}"
            assert vm.vm_id in host.hosted_vms, \
                f"VM {vm.vm_id} bound to {vm.bound_host} but absent from its hosted_vms"
