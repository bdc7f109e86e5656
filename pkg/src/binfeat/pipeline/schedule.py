"""Fetch and rescan scheduling over tracked files.

Three rules drive the queue: an initial report fetch within 24 hours of
first submission, a relabeling fetch 90 or more days after, and a forced
rescan for suspected-benign files that have gone 30 days without one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .labeling import SECONDS_PER_DAY, VTReport

INITIAL_FETCH_HOURS = 24
RELABEL_DAYS = 90
FORCED_RESCAN_DAYS = 30

ACTION_FETCH = "fetch"
ACTION_RESCAN = "rescan"


@dataclass(frozen=True)
class Action:
    kind: str  # fetch | rescan
    sha256: str
    due_at: int  # UNIX seconds; actionable once now >= due_at


@dataclass
class TrackedFile:
    """Scheduling state for one file."""

    sha256: str
    first_submission_date: int
    # (retrieved_at, report) pairs, oldest first
    retrievals: list[tuple[int, VTReport]] = field(default_factory=list)
    rescan_requested_at: int | None = None


def run_schedule(files, now: int) -> list[Action]:
    """Actions due at `now`, in a deterministic (due time, hash) order."""
    actions: list[Action] = []
    for tracked in files:
        first = tracked.first_submission_date
        if not tracked.retrievals:
            # initial fetch: due immediately, must land within 24 h
            actions.append(Action(ACTION_FETCH, tracked.sha256, first))
            continue

        latest_at, latest = tracked.retrievals[-1]

        relabel_due = first + RELABEL_DAYS * SECONDS_PER_DAY
        if now >= relabel_due and latest_at < relabel_due:
            actions.append(Action(ACTION_FETCH, tracked.sha256, relabel_due))

        # Suspected benign: still zero detections, but the newest analysis
        # happened before the 30-day mark, so force a rescan ourselves.
        rescan_due = first + FORCED_RESCAN_DAYS * SECONDS_PER_DAY
        if (
            now >= rescan_due
            and not latest.detecting_vendors()
            and latest.last_analysis_date < rescan_due
            and tracked.rescan_requested_at is None
        ):
            actions.append(Action(ACTION_RESCAN, tracked.sha256, rescan_due))

    actions.sort(key=lambda a: (a.due_at, a.sha256, a.kind))
    return [a for a in actions if a.due_at <= now]
