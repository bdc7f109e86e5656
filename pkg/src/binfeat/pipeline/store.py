"""Append-only stores for reports and dataset records.

Both stores are JSON Lines segment files plus a hash-keyed index rebuilt
from the segments on open, so a crash mid-append loses at most the torn
final line. One writer, many readers.
"""

from __future__ import annotations

import json
import os
from collections import Counter

from ..records import (
    FILE_TYPES,
    TAG_CATEGORIES,
    FileMetadataRecord,
    parse_record,
    serialize_record,
)
from .labeling import VTReport

SEGMENT_MAX_BYTES = 64 * 1024 * 1024

# "PE" expands to the three Windows executable formats.
PE_FILE_TYPES = ("Win32", "Win64", ".NET")
_SPLITS = ("train", "test", "challenge")


class StoreError(Exception):
    pass


class _SegmentedLog:
    """Append-only JSONL segments with an in-memory key index."""

    def __init__(self, directory: str, prefix: str):
        self.directory = directory
        self.prefix = prefix
        os.makedirs(directory, exist_ok=True)
        self._index: dict[str, list[tuple[str, int]]] = {}
        self._segments = sorted(
            f
            for f in os.listdir(directory)
            if f.startswith(prefix) and f.endswith(".jsonl")
        )
        for segment in self._segments:
            path = os.path.join(directory, segment)
            with open(path, "r", encoding="utf-8") as fh:
                offset = 0
                for line in fh:
                    stripped = line.strip()
                    if stripped:
                        try:
                            key = json.loads(stripped)["_key"]
                        except (json.JSONDecodeError, KeyError):
                            break  # torn tail; ignore the rest of the segment
                        self._index.setdefault(key, []).append((segment, offset))
                    offset += len(line.encode("utf-8"))

    def _writable_segment(self) -> str:
        if self._segments:
            last = os.path.join(self.directory, self._segments[-1])
            if os.path.getsize(last) < SEGMENT_MAX_BYTES:
                return self._segments[-1]
        name = f"{self.prefix}-{len(self._segments):04d}.jsonl"
        self._segments.append(name)
        return name

    def append(self, key: str, obj: dict) -> None:
        segment = self._writable_segment()
        path = os.path.join(self.directory, segment)
        line = json.dumps({"_key": key, **obj}, ensure_ascii=False)
        offset = os.path.getsize(path) if os.path.exists(path) else 0
        with open(path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(line)
            fh.write("\n")
        self._index.setdefault(key, []).append((segment, offset))

    def entries(self, key: str) -> list[dict]:
        out = []
        for segment, offset in self._index.get(key, ()):
            with open(os.path.join(self.directory, segment), "r", encoding="utf-8") as fh:
                fh.seek(offset)
                out.append(json.loads(fh.readline()))
        return out

    def keys(self):
        return self._index.keys()

    def __iter__(self):
        for segment in self._segments:
            with open(os.path.join(self.directory, segment), "r", encoding="utf-8") as fh:
                for line in fh:
                    stripped = line.strip()
                    if stripped:
                        try:
                            yield json.loads(stripped)
                        except json.JSONDecodeError:
                            break


class ReportStore:
    """Raw analysis reports keyed by sha256, with retrieval timestamps.

    Appends are idempotent in the sense that refetching an already-stored
    report simply records another retrieval; history is preserved.
    """

    def __init__(self, directory: str):
        self._log = _SegmentedLog(directory, "reports")

    def append(self, report: VTReport, retrieved_at: int) -> None:
        self._log.append(
            report.sha256,
            {"retrieved_at": retrieved_at, "report": report.to_dict()},
        )

    def retrievals(self, sha256: str) -> list[tuple[int, VTReport]]:
        return [
            (entry["retrieved_at"], VTReport.from_dict(entry["report"]))
            for entry in self._log.entries(sha256)
        ]

    def latest(self, sha256: str) -> VTReport | None:
        entries = self.retrievals(sha256)
        return entries[-1][1] if entries else None

    def hashes(self):
        return list(self._log.keys())


class RecordStore:
    """Dataset records plus their split assignments.

    Records live in JSONL segments; the (sha256, week, file_type, label,
    split) manifest is a separate append-only TSV so splits can be consumed
    without parsing feature documents.
    """

    MANIFEST = "manifest.tsv"

    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self._records_path = os.path.join(directory, "records.jsonl")
        self._manifest_path = os.path.join(directory, self.MANIFEST)
        self._manifest: dict[str, tuple[int, str, int, str]] = {}
        if os.path.exists(self._manifest_path):
            with open(self._manifest_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.rstrip("\n")
                    if not line or line.startswith("#"):
                        continue
                    sha, week, file_type, label, split = line.split("\t")
                    self._manifest[sha] = (int(week), file_type, int(label), split)

    def add(self, record: FileMetadataRecord, week: int, split: str) -> None:
        if split not in _SPLITS:
            raise StoreError(f"unknown split {split!r}")
        with open(self._records_path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(serialize_record(record))
            fh.write("\n")
        with open(self._manifest_path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(
                f"{record.sha256}\t{week}\t{record.file_type}\t{record.label}\t{split}\n"
            )
        self._manifest[record.sha256] = (week, record.file_type, record.label, split)

    def assignment(self, sha256: str):
        return self._manifest.get(sha256)

    def __iter__(self):
        if not os.path.exists(self._records_path):
            return
        with open(self._records_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield parse_record(line)


def _type_matches(file_type: str, type_filter: str | None) -> bool:
    if type_filter is None or type_filter == "all":
        return True
    if type_filter == "PE":
        return file_type in PE_FILE_TYPES
    return file_type == type_filter


def load_split(
    store: RecordStore,
    split: str | None = None,
    file_type: str | None = None,
    label_kind: str | None = None,
):
    """Stream records matching split, type, and label-kind filters."""
    if split is not None and split not in _SPLITS:
        raise StoreError(f"unknown split filter {split!r}")
    if (
        file_type is not None
        and file_type not in ("all", "PE")
        and file_type not in FILE_TYPES
    ):
        raise StoreError(f"unknown type filter {file_type!r}")
    if (
        label_kind is not None
        and label_kind not in ("all", "malicious-benign", "family-labeled")
        and label_kind not in TAG_CATEGORIES
    ):
        raise StoreError(f"unknown label-kind filter {label_kind!r}")

    for record in store:
        assignment = store.assignment(record.sha256)
        if assignment is None:
            continue
        if split is not None and assignment[3] != split:
            continue
        if not _type_matches(record.file_type, file_type):
            continue
        if label_kind == "family-labeled" and record.family is None:
            continue
        if label_kind in TAG_CATEGORIES and not record.tags(label_kind):
            continue
        yield record


def demographics(records) -> dict:
    """Family histogram and per-tag-category statistics."""
    families: Counter = Counter()
    tagged_files: Counter = Counter()
    distinct_tags: dict[str, set] = {c: set() for c in TAG_CATEGORIES}
    total = 0
    labels: Counter = Counter()
    for record in records:
        total += 1
        labels[record.label] += 1
        if record.family is not None:
            families[record.family] += 1
        for category in TAG_CATEGORIES:
            tags = record.tags(category)
            if tags:
                tagged_files[category] += 1
                distinct_tags[category].update(tags)
    size_histogram = Counter(families.values())
    return {
        "total": total,
        "label_counts": {str(k): v for k, v in sorted(labels.items())},
        "families": dict(families),
        "family_size_histogram": {
            str(size): count for size, count in sorted(size_histogram.items())
        },
        "tags": {
            category: {
                "tagged_files": tagged_files.get(category, 0),
                "distinct_tags": len(distinct_tags[category]),
            }
            for category in TAG_CATEGORIES
        },
    }
