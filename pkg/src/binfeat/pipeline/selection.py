"""Weekly stratified selection with near-duplicate and size exclusions.

Candidates are bucketed by (file_type, label) within one collection week and
drawn uniformly without replacement under per-bucket thresholds. Files over
the size cap are skipped, as is any candidate within TLSH distance 30 of a
file already chosen from that week — across buckets, not just its own.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..records import FILE_TYPES
from ..similarity import is_near_duplicate

WEEK_SECONDS = 7 * 86400
NUM_WEEKS = 64
TRAIN_WEEKS = 52

SPLIT_TRAIN = "train"
SPLIT_TEST = "test"
SPLIT_CHALLENGE = "challenge"

# Weekly per-(file_type, label) inclusion thresholds; label 0 and 1 share
# the same threshold for every format.
DEFAULT_WEEKLY_THRESHOLDS: dict[tuple[str, int], int] = {
    ("Win32", 0): 15000,
    ("Win32", 1): 15000,
    ("Win64", 0): 5000,
    ("Win64", 1): 5000,
    (".NET", 0): 2500,
    (".NET", 1): 2500,
    ("APK", 0): 2000,
    ("APK", 1): 2000,
    ("ELF", 0): 250,
    ("ELF", 1): 250,
    ("PDF", 0): 500,
    ("PDF", 1): 500,
}

MAX_FILE_SIZE = 100 * 1024 * 1024
DEDUP_THRESHOLD = 30


class OutOfWindowError(ValueError):
    """Timestamp falls outside the 64-week collection window."""


def week_of(first_submission: int, collection_start: int) -> int:
    """Zero-based week index of a submission timestamp."""
    if first_submission < collection_start:
        raise OutOfWindowError(
            f"timestamp {first_submission} precedes collection start"
        )
    index = (first_submission - collection_start) // WEEK_SECONDS
    if index >= NUM_WEEKS:
        raise OutOfWindowError(
            f"timestamp {first_submission} is past the {NUM_WEEKS}-week window"
        )
    return int(index)


def split_of_week(week: int) -> str:
    if not 0 <= week < NUM_WEEKS:
        raise OutOfWindowError(f"week {week} outside [0, {NUM_WEEKS})")
    return SPLIT_TRAIN if week < TRAIN_WEEKS else SPLIT_TEST


@dataclass(frozen=True)
class SelectionConfig:
    thresholds: dict = field(
        default_factory=lambda: dict(DEFAULT_WEEKLY_THRESHOLDS)
    )
    max_file_size: int = MAX_FILE_SIZE
    dedup_threshold: int = DEDUP_THRESHOLD
    seed: int = 0

    def threshold(self, file_type: str, label: int) -> int:
        return self.thresholds.get((file_type, label), 0)


@dataclass(frozen=True)
class Candidate:
    """The selection-relevant slice of a file's metadata."""

    sha256: str
    file_type: str
    label: int
    size: int
    week: int
    tlsh: str | None = None


@dataclass
class SelectionResult:
    selected: list[Candidate]
    shortfall: dict  # (file_type, label) -> files short of threshold


def select_week(candidates, config: SelectionConfig | None = None) -> SelectionResult:
    """Threshold-bounded random draw from one week's candidates.

    Deterministic given (candidates, config): the generator is seeded from
    the config seed and the week index, buckets are visited in a fixed
    order, and each bucket is a seeded uniform shuffle consumed in order.
    """
    if config is None:
        config = SelectionConfig()
    candidates = list(candidates)
    weeks = {c.week for c in candidates}
    if len(weeks) > 1:
        raise ValueError(f"candidates span multiple weeks: {sorted(weeks)}")
    week = weeks.pop() if weeks else 0

    buckets: dict[tuple[str, int], list[Candidate]] = {}
    for cand in candidates:
        buckets.setdefault((cand.file_type, cand.label), []).append(cand)

    rng = random.Random(f"{config.seed}:{week}")
    selected: list[Candidate] = []
    selected_digests: list[str] = []
    shortfall: dict[tuple[str, int], int] = {}
    for file_type in FILE_TYPES:
        for label in (0, 1):
            key = (file_type, label)
            threshold = config.threshold(file_type, label)
            # canonical order before the seeded shuffle, so the draw does
            # not depend on how the caller happened to order the candidates
            pool = sorted(buckets.get(key, ()), key=lambda c: c.sha256)
            rng.shuffle(pool)
            taken = 0
            for cand in pool:
                if taken >= threshold:
                    break
                if cand.size > config.max_file_size:
                    continue
                if cand.tlsh is not None and any(
                    is_near_duplicate(cand.tlsh, digest, config.dedup_threshold)
                    for digest in selected_digests
                ):
                    continue
                selected.append(cand)
                if cand.tlsh is not None:
                    selected_digests.append(cand.tlsh)
                taken += 1
            if taken < threshold and pool:
                shortfall[key] = threshold - taken
    return SelectionResult(selected=selected, shortfall=shortfall)


def build_challenge_exclusion(challenge, week_pool, threshold: int = DEDUP_THRESHOLD):
    """Remove same-week near-duplicates of challenge files from a pool.

    Challenge files themselves are also removed, so nothing in the returned
    pool belongs to the challenge set or sits within the distance threshold
    of a challenge file from its own collection week.
    """
    challenge = list(challenge)
    challenge_hashes = {c.sha256 for c in challenge}
    by_week: dict[int, list[Candidate]] = {}
    for cand in challenge:
        by_week.setdefault(cand.week, []).append(cand)

    kept = []
    for cand in week_pool:
        if cand.sha256 in challenge_hashes:
            continue
        same_week = by_week.get(cand.week, ())
        if any(
            is_near_duplicate(cand.tlsh, ch.tlsh, threshold) for ch in same_week
        ):
            continue
        kept.append(cand)
    return kept
