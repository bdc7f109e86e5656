"""Antivirus-vote labeling.

A file is benign when a rescan at least 30 days after first submission shows
zero detections, and malicious when detections span at least five vendor
relationship clusters. Everything else is indeterminate: discarded outright,
or pending when a clean early rescan simply needs more time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

SECONDS_PER_DAY = 86400
BENIGN_RESCAN_DAYS = 30
MIN_MALICIOUS_CLUSTERS = 5

LABEL_BENIGN = "benign"
LABEL_MALICIOUS = "malicious"
LABEL_INDETERMINATE = "indeterminate"
LABEL_INDETERMINATE_PENDING = "indeterminate-pending"

DEFAULT_VENDOR_GRAPH_RESOURCE = "vendor_clusters_v1.tsv"

# Vendor categories that count as "returned a verdict".
_VERDICT_CATEGORIES = frozenset(
    {"malicious", "suspicious", "undetected", "harmless"}
)


@dataclass(frozen=True)
class VTReport:
    """One analysis result: hashes, dates, and per-vendor verdicts."""

    sha256: str
    first_submission_date: int
    last_analysis_date: int
    results: dict = field(default_factory=dict)  # vendor -> {category, result}

    @classmethod
    def from_dict(cls, obj: dict) -> "VTReport":
        attrs = obj.get("data", {}).get("attributes", obj)
        return cls(
            sha256=attrs["sha256"],
            first_submission_date=attrs["first_submission_date"],
            last_analysis_date=attrs["last_analysis_date"],
            results={
                vendor: {
                    "category": verdict.get("category"),
                    "result": verdict.get("result"),
                }
                for vendor, verdict in attrs.get("last_analysis_results", {}).items()
            },
        )

    def to_dict(self) -> dict:
        return {
            "sha256": self.sha256,
            "first_submission_date": self.first_submission_date,
            "last_analysis_date": self.last_analysis_date,
            "last_analysis_results": {
                vendor: dict(verdict) for vendor, verdict in self.results.items()
            },
        }

    def detecting_vendors(self) -> list[str]:
        return [
            vendor
            for vendor, verdict in self.results.items()
            if verdict.get("category") == "malicious"
        ]

    def detection_ratio(self) -> str:
        """"D/T" over vendors that returned any verdict."""
        responded = [
            vendor
            for vendor, verdict in self.results.items()
            if verdict.get("category") in _VERDICT_CATEGORIES
        ]
        return f"{len(self.detecting_vendors())}/{len(responded)}"


class AVVendorGraph:
    """Partition of vendor names into relationship clusters.

    Vendors absent from the table form singleton clusters, so cluster lookup
    is total. Ships as editable configuration (cluster name, vendor per row).
    """

    def __init__(self, clusters: dict[str, list[str]]):
        self._cluster_of: dict[str, str] = {}
        for name, vendors in clusters.items():
            for vendor in vendors:
                if vendor in self._cluster_of:
                    raise ValueError(f"vendor {vendor!r} appears in two clusters")
                self._cluster_of[vendor] = name

    def cluster_of(self, vendor: str) -> str:
        return self._cluster_of.get(vendor, vendor)

    def count_clusters(self, vendors) -> int:
        return len({self.cluster_of(v) for v in vendors})

    @classmethod
    def from_lines(cls, lines) -> "AVVendorGraph":
        clusters: dict[str, list[str]] = {}
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cluster, _, vendor = line.partition("\t")
            if not cluster or not vendor:
                raise ValueError(f"line {lineno}: expected cluster<TAB>vendor")
            clusters.setdefault(cluster, []).append(vendor)
        return cls(clusters)

    @classmethod
    def load(cls, path=None) -> "AVVendorGraph":
        if path is None:
            text = (
                resources.files("binfeat.data")
                .joinpath(DEFAULT_VENDOR_GRAPH_RESOURCE)
                .read_text(encoding="utf-8")
            )
            return cls.from_lines(text.splitlines())
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)


def label_file(initial: VTReport, rescan: VTReport, graph: AVVendorGraph) -> str:
    """One of four outcomes; exhaustive over every (initial, rescan) pair."""
    detections = rescan.detecting_vendors()
    if graph.count_clusters(detections) >= MIN_MALICIOUS_CLUSTERS:
        return LABEL_MALICIOUS
    if not detections:
        elapsed = rescan.last_analysis_date - initial.first_submission_date
        if elapsed >= BENIGN_RESCAN_DAYS * SECONDS_PER_DAY:
            return LABEL_BENIGN
        return LABEL_INDETERMINATE_PENDING
    return LABEL_INDETERMINATE


def is_challenge(initial: VTReport, final_label: str) -> bool:
    """Zero initial detections and a final malicious label."""
    return final_label == LABEL_MALICIOUS and not initial.detecting_vendors()
