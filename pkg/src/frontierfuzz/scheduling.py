"""Frontier-branch scheduling: clocks, top-seed map, and greedy selection.

Each frontier branch carries two monotone clocks: total time spent by
executions that reached it, and the productive fraction that lowered its
running distance minimum.  The branch score is

    productive_time / (total_time * schedule_count_of_top_seed)

and the stage picks the branch with the highest score, handing back the
top seed recorded for it.  The schedule counter of the chosen seed is then
incremented, which discounts repeat selections.

Scores are compared in exact rational arithmetic so selection is free of
floating-point tie ambiguity; the equivalent log-probability is reported
for the campaign log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .distance import BranchDistance, DistanceRecord

__all__ = ["BranchStats", "Selection", "SchedulerState", "StaleSiteError"]


class StaleSiteError(ValueError):
    """An execution was recorded for a site that is not a frontier branch,
    which signals a stale adaptive switch."""


@dataclass
class BranchStats:
    """Clocks and counters for one frontier branch.

    ``pt``/``tt`` are productive/total reach time in nanoseconds; ``ph``/``th``
    are the matching hit counts, kept for stats only.
    """

    record: DistanceRecord
    pt: int = 0
    tt: int = 0
    ph: int = 0
    th: int = 0


@dataclass(frozen=True)
class Selection:
    """Outcome of one scheduling decision."""

    branch: int
    seed: bytes
    logprob: float
    sc: int


class SchedulerState:
    """All per-branch stats plus the per-input schedule counters."""

    def __init__(self):
        self.stats: dict[int, BranchStats] = {}
        self.sc: dict[bytes, int] = {}

    def record_execution(self, site: int, data: bytes, d: BranchDistance,
                         exec_time: int, frontier) -> bool:
        """Fold one reaching execution into the site's clocks.

        Returns whether the execution lowered the distance minimum (a first
        reach always does).
        """
        if site not in frontier:
            raise StaleSiteError(f"site {site} is not a frontier branch")
        stats = self.stats.get(site)
        if stats is None:
            stats = BranchStats(record=DistanceRecord(site))
            self.stats[site] = stats
        lowered = stats.record.update(data, d)
        stats.tt += exec_time
        stats.th += 1
        if lowered:
            stats.pt += exec_time
            stats.ph += 1
        return lowered

    def schedule_count(self, data: bytes) -> int:
        return self.sc.get(data, 1)

    def select_next(self, frontier) -> Selection:
        """Greedy argmax of the discounted score over the frontier.

        Ties break toward the lowest node id.  The winner's top-seed schedule
        counter is incremented.
        """
        if not frontier:
            raise ValueError("cannot select from an empty frontier")
        best_site = None
        best_score: Fraction | None = None
        for site in sorted(frontier):
            stats = self.stats.get(site)
            if stats is None:
                raise StaleSiteError(f"frontier branch {site} has never been reached")
            sc = self.schedule_count(stats.record.best_input)
            score = Fraction(stats.pt, stats.tt * sc)
            if best_score is None or score > best_score:
                best_site = site
                best_score = score
        stats = self.stats[best_site]
        seed = stats.record.best_input
        sc = self.schedule_count(seed)
        logprob = math.log(stats.pt) - math.log(stats.tt) - math.log(sc)
        self.sc[seed] = sc + 1
        return Selection(branch=best_site, seed=seed, logprob=logprob, sc=sc)
