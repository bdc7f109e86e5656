"""Document model for per-file metadata records and raw features.

Records are stored one JSON object per line (UTF-8, LF). The key set and
ordering are fixed so that files can be consumed by streaming tools without
schema negotiation. Groups that only apply to PE files are serialized as
empty objects/arrays for other formats rather than being omitted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

FILE_TYPES = ("Win32", "Win64", ".NET", "APK", "ELF", "PDF")

# PE-only raw feature groups and the empty value each takes for non-PE files.
PE_GROUP_EMPTIES: dict[str, Any] = {
    "header": {},
    "section": {},
    "imports": {},
    "exports": [],
    "datadirectories": [],
    "richheader": [],
    "authenticode": {},
    "pefilewarnings": [],
}

# Serialization order for the metadata keys preceding the raw feature groups.
_META_KEYS = (
    "md5",
    "sha1",
    "sha256",
    "tlsh",
    "first_submission_date",
    "last_analysis_date",
    "detection_ratio",
    "label",
    "file_type",
    "family",
    "family_confidence",
    "behavior",
    "file_property",
    "packer",
    "exploit",
    "group",
)

_RAW_KEYS = (
    "histogram",
    "byteentropy",
    "strings",
    "general",
    "header",
    "section",
    "imports",
    "exports",
    "datadirectories",
    "richheader",
    "authenticode",
    "pefilewarnings",
)

TAG_CATEGORIES = ("behavior", "file_property", "packer", "exploit", "group")

DEFAULT_PATTERN_COUNT = 76


class RecordError(Exception):
    """Base class for record parsing/validation failures."""


class RecordSyntaxError(RecordError):
    """The line is not a well-formed JSON object."""


class RecordKeyError(RecordError):
    """A required key is missing."""

    def __init__(self, key: str):
        super().__init__(f"missing required key: {key}")
        self.key = key


class RecordInvariantError(RecordError):
    """A field value violates a record invariant."""

    def __init__(self, violations: list["Violation"]):
        first = violations[0]
        super().__init__(f"invariant violated on field '{first.field}': {first.message}")
        self.field = first.field
        self.violations = violations


@dataclass(frozen=True)
class Violation:
    field: str
    message: str


@dataclass(frozen=True)
class StringFeatures:
    numstrings: int
    avlength: float
    printabledist: tuple[int, ...]
    printables: int
    entropy: float
    string_counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "numstrings": self.numstrings,
            "avlength": self.avlength,
            "printabledist": list(self.printabledist),
            "printables": self.printables,
            "entropy": self.entropy,
            "string_counts": dict(self.string_counts),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "StringFeatures":
        return cls(
            numstrings=obj["numstrings"],
            avlength=obj["avlength"],
            printabledist=tuple(obj["printabledist"]),
            printables=obj["printables"],
            entropy=obj["entropy"],
            string_counts=dict(obj["string_counts"]),
        )


@dataclass(frozen=True)
class GeneralFeatures:
    """Format-agnostic file statistics, plus PE image stats (zero for non-PE)."""

    size: int
    entropy: float
    magic4: tuple[int, int, int, int]
    vsize: int = 0
    has_relocs: int = 0
    has_dynamic_relocs: int = 0
    symbols: int = 0

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "entropy": self.entropy,
            "magic4": list(self.magic4),
            "vsize": self.vsize,
            "has_relocs": self.has_relocs,
            "has_dynamic_relocs": self.has_dynamic_relocs,
            "symbols": self.symbols,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GeneralFeatures":
        return cls(
            size=obj["size"],
            entropy=obj["entropy"],
            magic4=tuple(obj.get("magic4", (0, 0, 0, 0))),
            vsize=obj.get("vsize", 0),
            has_relocs=obj.get("has_relocs", 0),
            has_dynamic_relocs=obj.get("has_dynamic_relocs", 0),
            symbols=obj.get("symbols", 0),
        )


@dataclass(frozen=True)
class RawFeatures:
    """The full per-file raw feature document.

    The four format-agnostic groups are always present. PE-only groups are
    held as plain JSON-shaped containers (see the pe package for the typed
    structures that produce them) and are empty for non-PE inputs.
    """

    histogram: tuple[int, ...]
    byteentropy: tuple[int, ...]
    strings: StringFeatures
    general: GeneralFeatures
    header: dict = field(default_factory=dict)
    section: dict = field(default_factory=dict)
    imports: dict = field(default_factory=dict)
    exports: tuple[str, ...] = ()
    datadirectories: tuple = ()
    richheader: tuple[int, ...] = ()
    authenticode: dict = field(default_factory=dict)
    pefilewarnings: tuple[str, ...] = ()

    @property
    def is_pe(self) -> bool:
        return bool(self.header)

    def to_dict(self) -> dict:
        return {
            "histogram": list(self.histogram),
            "byteentropy": list(self.byteentropy),
            "strings": self.strings.to_dict(),
            "general": self.general.to_dict(),
            "header": _deep_copy_json(self.header),
            "section": _deep_copy_json(self.section),
            "imports": {k: list(v) for k, v in self.imports.items()},
            "exports": list(self.exports),
            "datadirectories": [dict(d) for d in self.datadirectories],
            "richheader": list(self.richheader),
            "authenticode": dict(self.authenticode),
            "pefilewarnings": list(self.pefilewarnings),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RawFeatures":
        return cls(
            histogram=tuple(obj["histogram"]),
            byteentropy=tuple(obj["byteentropy"]),
            strings=StringFeatures.from_dict(obj["strings"]),
            general=GeneralFeatures.from_dict(obj["general"]),
            header=obj.get("header") or {},
            section=obj.get("section") or {},
            imports={k: list(v) for k, v in (obj.get("imports") or {}).items()},
            exports=tuple(obj.get("exports") or ()),
            datadirectories=tuple(dict(d) for d in (obj.get("datadirectories") or ())),
            richheader=tuple(obj.get("richheader") or ()),
            authenticode=dict(obj.get("authenticode") or {}),
            pefilewarnings=tuple(obj.get("pefilewarnings") or ()),
        )


def _deep_copy_json(obj):
    if isinstance(obj, dict):
        return {k: _deep_copy_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_deep_copy_json(v) for v in obj]
    return obj


@dataclass(frozen=True)
class FileMetadataRecord:
    md5: str
    sha1: str
    sha256: str
    tlsh: str | None
    first_submission_date: int
    last_analysis_date: int
    detection_ratio: str
    label: int
    file_type: str
    family: str | None
    family_confidence: float | None
    behavior: tuple[str, ...]
    file_property: tuple[str, ...]
    packer: tuple[str, ...]
    exploit: tuple[str, ...]
    group: tuple[str, ...]
    raw: RawFeatures
    # Unknown keys found on parse; preserved and re-emitted for forward
    # compatibility with future tag categories.
    extra: tuple[tuple[str, Any], ...] = ()

    def tags(self, category: str) -> tuple[str, ...]:
        if category not in TAG_CATEGORIES:
            raise ValueError(f"unknown tag category: {category}")
        return getattr(self, category)


def serialize_record(record: FileMetadataRecord) -> str:
    """Emit one JSON line for a record satisfying the type invariants."""
    obj: dict[str, Any] = {}
    for key in _META_KEYS:
        value = getattr(record, key)
        if isinstance(value, tuple):
            value = list(value)
        obj[key] = value
    obj.update(record.raw.to_dict())
    for key, value in record.extra:
        obj[key] = _deep_copy_json(value)
    return json.dumps(obj, separators=(", ", ": "), ensure_ascii=False)


def parse_record(line: str, pattern_names: tuple[str, ...] | None = None) -> FileMetadataRecord:
    """Parse and validate one JSON line.

    Raises RecordSyntaxError, RecordKeyError, or RecordInvariantError; the
    invariant error names the first violated field.
    """
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise RecordSyntaxError(str(exc)) from exc
    if not isinstance(obj, dict):
        raise RecordSyntaxError("top-level value is not an object")

    for key in _META_KEYS:
        if key not in obj and key not in ("family", "family_confidence"):
            raise RecordKeyError(key)
    for key in _RAW_KEYS:
        if key not in obj:
            raise RecordKeyError(key)

    known = set(_META_KEYS) | set(_RAW_KEYS)
    extra = tuple((k, v) for k, v in obj.items() if k not in known)

    try:
        raw = RawFeatures.from_dict(obj)
    except (KeyError, TypeError) as exc:
        raise RecordSyntaxError(f"malformed raw feature group: {exc}") from exc

    record = FileMetadataRecord(
        md5=obj["md5"],
        sha1=obj["sha1"],
        sha256=obj["sha256"],
        tlsh=obj.get("tlsh"),
        first_submission_date=obj["first_submission_date"],
        last_analysis_date=obj["last_analysis_date"],
        detection_ratio=obj["detection_ratio"],
        label=obj["label"],
        file_type=obj["file_type"],
        family=obj.get("family"),
        family_confidence=obj.get("family_confidence"),
        behavior=tuple(obj["behavior"]),
        file_property=tuple(obj["file_property"]),
        packer=tuple(obj["packer"]),
        exploit=tuple(obj["exploit"]),
        group=tuple(obj["group"]),
        raw=raw,
        extra=extra,
    )
    violations = validate_record(record, pattern_names=pattern_names)
    if violations:
        raise RecordInvariantError(violations)
    return record


def _is_hex(s: str) -> bool:
    return all(c in "0123456789abcdef" for c in s)


def validate_record(
    record: FileMetadataRecord, pattern_names: tuple[str, ...] | None = None
) -> list[Violation]:
    """Return all invariant violations; empty list iff the record is valid."""
    v: list[Violation] = []

    for name, length in (("md5", 32), ("sha1", 40), ("sha256", 64)):
        digest = getattr(record, name)
        if not isinstance(digest, str) or len(digest) != length or not _is_hex(digest):
            v.append(Violation(name, f"must be a {length}-char lowercase hex digest"))

    if record.label not in (0, 1):
        v.append(Violation("label", "must be 0 or 1"))
    if record.family is not None and record.label != 1:
        v.append(Violation("family", "family present requires label 1"))
    if record.family_confidence is not None and not (0.0 <= record.family_confidence <= 1.0):
        v.append(Violation("family_confidence", "must lie in [0, 1]"))
    if record.file_type not in FILE_TYPES:
        v.append(Violation("file_type", f"must be one of {FILE_TYPES}"))

    ratio = record.detection_ratio
    parts = ratio.split("/") if isinstance(ratio, str) else []
    if (
        len(parts) != 2
        or not parts[0].isdigit()
        or not parts[1].isdigit()
        or int(parts[0]) > int(parts[1])
    ):
        v.append(Violation("detection_ratio", 'must be "D/T" with D <= T'))

    if record.tlsh is not None and (
        not isinstance(record.tlsh, str) or len(record.tlsh) < 70
    ):
        v.append(Violation("tlsh", "must be null or a TLSH digest string"))

    for category in TAG_CATEGORIES:
        tags = getattr(record, category)
        if len(set(tags)) != len(tags):
            v.append(Violation(category, "duplicate tags are forbidden"))

    raw = record.raw
    if len(raw.histogram) != 256:
        v.append(Violation("histogram", "must have exactly 256 entries"))
    elif any(c < 0 for c in raw.histogram):
        v.append(Violation("histogram", "entries must be nonnegative"))
    elif sum(raw.histogram) != raw.general.size:
        v.append(Violation("histogram", "must sum to the file size"))

    if len(raw.byteentropy) != 256:
        v.append(Violation("byteentropy", "must have exactly 256 entries"))
    elif any(c < 0 for c in raw.byteentropy):
        v.append(Violation("byteentropy", "entries must be nonnegative"))

    s = raw.strings
    if sum(s.printabledist) != s.printables:
        v.append(Violation("strings", "printabledist must sum to printables"))
    if s.numstrings == 0 and (s.avlength != 0 or s.printables != 0):
        v.append(Violation("strings", "zero strings requires avlength 0 and printables 0"))
    expected_patterns = (
        len(pattern_names) if pattern_names is not None else DEFAULT_PATTERN_COUNT
    )
    if len(s.string_counts) != expected_patterns:
        v.append(
            Violation(
                "strings",
                f"string_counts must have exactly {expected_patterns} pattern names",
            )
        )
    elif pattern_names is not None and set(s.string_counts) != set(pattern_names):
        v.append(Violation("strings", "string_counts keys must match the configured pattern set"))

    pe_presence = {name: bool(getattr(raw, name)) for name in PE_GROUP_EMPTIES}
    if not pe_presence["header"]:
        present = [name for name, p in pe_presence.items() if p]
        if present:
            v.append(
                Violation(
                    present[0], "PE-only groups must all be empty when header is absent"
                )
            )

    if raw.general.size < 0:
        v.append(Violation("general", "size must be nonnegative"))
    if not (0.0 <= raw.general.entropy <= 8.0):
        v.append(Violation("general", "entropy must lie in [0, 8]"))

    return v


def iter_records(path, pattern_names: tuple[str, ...] | None = None):
    """Stream validated records from a JSON Lines file."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parse_record(line, pattern_names=pattern_names)


def write_records(records, path) -> int:
    """Write records to a JSON Lines file; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(serialize_record(record))
            fh.write("\n")
            n += 1
    return n
