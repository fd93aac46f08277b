#!/usr/bin/env python3
"""Reproduce the recovery-time distributions of the two crash campaigns.

Runs the packaged replication presets (1000 independent episodes each, every
episode on a fresh cluster with its own derived seed) and prints the
aggregate table plus a terminal histogram.

Expected shapes:
  nondestructive   detection (70 + 0..59s scan delay) + reboot (80 +/- 10s),
                   so support 140..219s with mean near 180s.
  destructive      detection + reinstallation (442 +/- 17s), so support
                   495..588s with mean near 542s.

Run: python3 demos/02_recovery_distributions.py [n]
"""

import sys

import numpy as np

from hasim import summarize
from hasim.presets import replicate_experiment


def ascii_histogram(stats, width=50):
    peak = max(count for _, count in stats.histogram)
    for bin_start, count in stats.histogram:
        bar = "#" * max(1 if count else 0, round(count / peak * width))
        print(f"  {bin_start:>4}s  {count:>4}  {bar}")


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
    for name in ("nondestructive", "destructive"):
        report = replicate_experiment(name, n, seed=42)
        stats = summarize(report, bin_width_s=10)[0]
        rec = np.array([e.recovery_s for e in report.recovered()])
        det = np.array([e.detection_s for e in report.episodes])
        print(f"=== {name} ({n} episodes) ===")
        print(f"recovery: mean={rec.mean():.1f}s stddev={rec.std():.1f}s "
              f"min={rec.min()}s max={rec.max()}s")
        print(f"detection: mean={det.mean():.1f}s "
              f"support=[{det.min()}, {det.max()}]s")
        ascii_histogram(stats)
        print()


if __name__ == "__main__":
    main()
