"""Heartbeat monitor with staleness-based liveness verdicts.

Every machine in the cluster (physical hosts and bound virtual machines)
reports periodic heartbeats to a central monitor. A machine is judged Down
in a snapshot once the time since its last heartbeat reaches the configured
detection latency. Snapshots serialize to a deterministic XML log format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.etree import ElementTree
from xml.sax.saxutils import quoteattr

UP = "up"
DOWN = "down"


@dataclass
class TelemetryParams:
    """Monitor configuration.

    detection_latency_s: staleness (seconds since last heartbeat) at which a
        machine is declared Down. The boundary is closed: staleness equal to
        the latency is already Down.
    smoothing_alpha: optional exponential smoothing factor applied to
        reported loads (None disables smoothing, the default).
    """

    detection_latency_s: int = 70
    smoothing_alpha: float | None = None

    def validate(self) -> list[str]:
        problems = []
        if self.detection_latency_s < 1:
            problems.append("telemetry: detection_latency_s must be >= 1")
        if self.smoothing_alpha is not None and not (0.0 < self.smoothing_alpha <= 1.0):
            problems.append("telemetry: smoothing alpha must be in (0, 1]")
        return problems


@dataclass(frozen=True)
class SnapshotEntry:
    last_heartbeat_at: int
    reported_load: float
    verdict: str  # UP or DOWN


@dataclass(frozen=True)
class MonitorSnapshot:
    taken_at: int
    entries: dict[str, SnapshotEntry] = field(default_factory=dict)


class HeartbeatOrderError(ValueError):
    """A heartbeat arrived with a timestamp older than the previous one."""


class Monitor:
    """Tracks last-heartbeat times and loads for registered machines.

    Registration controls snapshot membership only; heartbeat history is kept
    for unregistered machines so that a machine parked out of monitoring (a
    VM waiting for capacity) resumes with its original staleness clock when
    it is registered again.
    """

    def __init__(self, params: TelemetryParams | None = None):
        self.params = params or TelemetryParams()
        self._active: set[str] = set()
        self._last_beat: dict[str, int] = {}
        self._load: dict[str, float] = {}

    def register(self, machine_id: str, at: int, load: float = 0.0) -> None:
        """Add a machine to snapshot coverage.

        A machine seen for the first time gets an initial heartbeat at `at`;
        a re-registered machine keeps its existing heartbeat history.
        """
        self._active.add(machine_id)
        if machine_id not in self._last_beat:
            self.record_heartbeat(machine_id, at, load)

    def unregister(self, machine_id: str) -> None:
        self._active.discard(machine_id)

    def registered(self) -> set[str]:
        return set(self._active)

    def record_heartbeat(self, machine_id: str, at: int, load: float) -> None:
        prev = self._last_beat.get(machine_id)
        if prev is not None and at < prev:
            raise HeartbeatOrderError(
                f"heartbeat for {machine_id} at t={at} precedes previous t={prev}"
            )
        self._last_beat[machine_id] = at
        alpha = self.params.smoothing_alpha
        if alpha is not None and machine_id in self._load:
            load = alpha * load + (1.0 - alpha) * self._load[machine_id]
        self._load[machine_id] = load

    def snapshot(self, now: int) -> MonitorSnapshot:
        """Liveness view of all registered machines at time `now`."""
        entries = {}
        for machine_id in self._active:
            last = self._last_beat[machine_id]
            assert now >= last, f"snapshot at t={now} predates heartbeat of {machine_id}"
            verdict = DOWN if now - last >= self.params.detection_latency_s else UP
            entries[machine_id] = SnapshotEntry(last, self._load[machine_id], verdict)
        return MonitorSnapshot(taken_at=now, entries=entries)


def serialize_snapshot(snapshot: MonitorSnapshot) -> str:
    """Render a snapshot as a single-line XML document.

    Entries are sorted by machine name so equal snapshots serialize to
    identical bytes.
    """
    parts = [f'<CLUSTER TAKEN_AT="{snapshot.taken_at}">']
    for name in sorted(snapshot.entries):
        e = snapshot.entries[name]
        parts.append(
            f"<HOST NAME={quoteattr(name)}"
            f' LAST_HEARTBEAT="{e.last_heartbeat_at}"'
            f' LOAD="{e.reported_load!r}"'
            f' VERDICT="{e.verdict.upper()}"/>'
        )
    parts.append("</CLUSTER>")
    return "".join(parts)


def parse_snapshot(text: str) -> MonitorSnapshot:
    """Inverse of serialize_snapshot."""
    root = ElementTree.fromstring(text)
    if root.tag != "CLUSTER":
        raise ValueError(f"expected CLUSTER root element, got {root.tag}")
    entries = {}
    for child in root:
        entries[child.attrib["NAME"]] = SnapshotEntry(
            last_heartbeat_at=int(child.attrib["LAST_HEARTBEAT"]),
            reported_load=float(child.attrib["LOAD"]),
            verdict=child.attrib["VERDICT"].lower(),
        )
    return MonitorSnapshot(taken_at=int(root.attrib["TAKEN_AT"]), entries=entries)
