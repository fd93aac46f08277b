"""CSV and text renditions of simulation reports.

All machine-readable output is CSV with pinned headers:

  report.csv         kind,count,mean_s,stddev_s,min_s,max_s
  histogram_<k>.csv  bin_start_s,count
  episodes.csv       vm_id,kind,failure_at,detected_at,recovered_at,recovery_s,recovered_on

Numbers render via str(), which round-trips floats exactly, so identical
reports serialize to identical bytes.
"""

from __future__ import annotations

import csv
import io

from .engine import Episode, KindStats, SimReport

REPORT_HEADER = "kind,count,mean_s,stddev_s,min_s,max_s"
HISTOGRAM_HEADER = "bin_start_s,count"
EPISODES_HEADER = "vm_id,kind,failure_at,detected_at,recovered_at,recovery_s,recovered_on"


def format_report_csv(stats: list[KindStats]) -> str:
    lines = [REPORT_HEADER]
    for s in stats:
        lines.append(f"{s.kind},{s.count},{s.mean_s},{s.stddev_s},{s.min_s},{s.max_s}")
    return "\n".join(lines) + "\n"


def format_histogram_csv(stats: KindStats) -> str:
    lines = [HISTOGRAM_HEADER]
    for bin_start, count in stats.histogram:
        lines.append(f"{bin_start},{count}")
    return "\n".join(lines) + "\n"


def format_episodes_csv(episodes: list[Episode]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(EPISODES_HEADER.split(","))
    for ep in episodes:
        writer.writerow([
            ep.vm_id,
            ep.kind,
            ep.failure_at,
            "" if ep.detected_at is None else ep.detected_at,
            "" if ep.recovered_at is None else ep.recovered_at,
            "" if ep.recovery_s is None else ep.recovery_s,
            "" if ep.recovered_on is None else ep.recovered_on,
        ])
    return out.getvalue()


def parse_episodes_csv(text: str) -> list[Episode]:
    """Read episodes back from episodes.csv (action lists are not stored)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != EPISODES_HEADER.split(","):
        raise ValueError("not an episodes.csv file")
    episodes = []
    for row in reader:
        vm_id, kind, failure_at, detected_at, recovered_at, _recovery_s, on = row
        episodes.append(Episode(
            vm_id=vm_id,
            kind=kind,
            failure_at=int(failure_at),
            detected_at=int(detected_at) if detected_at else None,
            recovered_at=int(recovered_at) if recovered_at else None,
            recovered_on=on or None,
        ))
    return episodes


def format_actions(episode: Episode) -> str:
    return "; ".join(f"t={t} {a}" for t, a in episode.actions)


def summary_text(report: SimReport, stats: list[KindStats]) -> str:
    """Human-readable account of a run: per-kind aggregates, then episodes."""
    lines = [f"horizon: {report.horizon_s} s",
             f"episodes: {len(report.episodes)} "
             f"({len(report.recovered())} recovered, "
             f"{len(report.unrecovered())} not recovered within the horizon)"]
    for s in stats:
        lines.append(
            f"  {s.kind}: n={s.count} mean={s.mean_s:.1f}s stddev={s.stddev_s:.1f}s "
            f"min={s.min_s}s max={s.max_s}s")
    for ep in report.episodes:
        if ep.recovered_at is None:
            outcome = "NOT RECOVERED"
        else:
            outcome = f"recovered on {ep.recovered_on} at t={ep.recovered_at} " \
                      f"({ep.recovery_s}s after failure)"
        detected = "never detected" if ep.detected_at is None \
            else f"detected at t={ep.detected_at}"
        lines.append(f"  {ep.vm_id} [{ep.kind}] failed at t={ep.failure_at}, "
                     f"{detected}, {outcome}")
        if ep.actions:
            lines.append(f"    actions: {format_actions(ep)}")
    return "\n".join(lines) + "\n"
