"""Conversion of raw feature documents to fixed 2,568-dimension vectors.

The layout table is a frozen, versioned artifact: (group, offset, width)
rows that tile [0, 2568) exactly, with the four format-agnostic groups
occupying [0, 696) so non-PE vectors truncate losslessly to that prefix.
Set-valued groups are embedded with a signed hashing trick; histograms are
normalized by their own sums.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .pe.parser import DOS_FIELDS, OPTIONAL_SCALAR_FIELDS
from .pe.warnings import ParseWarningCatalog, canonicalize_warnings, default_catalog
from .records import RawFeatures

TOTAL_WIDTH = 2568
AGNOSTIC_WIDTH = 696
DEFAULT_LAYOUT_RESOURCE = "layout_v3.tsv"

_AGNOSTIC_GROUPS = ("histogram", "byteentropy", "strings", "general")

# Scalars are clipped to the finite float32 range before casting.
_CLIP = 3.0e38


class MatrixFormatError(ValueError):
    """The file is not a well-formed matrix container."""


@dataclass(frozen=True)
class LayoutGroup:
    name: str
    offset: int
    width: int
    params: dict


class FeatureLayout:
    """Frozen mapping from raw-feature groups to vector index ranges."""

    def __init__(self, groups: list[LayoutGroup]):
        cursor = 0
        for group in groups:
            if group.offset != cursor or group.width <= 0:
                raise ValueError(
                    f"layout ranges must be contiguous; group {group.name} at "
                    f"{group.offset} (expected {cursor})"
                )
            cursor += group.width
        if cursor != TOTAL_WIDTH:
            raise ValueError(f"layout must cover [0, {TOTAL_WIDTH}); covers [0, {cursor})")
        names = tuple(g.name for g in groups)
        if names[: len(_AGNOSTIC_GROUPS)] != _AGNOSTIC_GROUPS:
            raise ValueError(f"layout must begin with {_AGNOSTIC_GROUPS}")
        agnostic_end = groups[len(_AGNOSTIC_GROUPS) - 1]
        if agnostic_end.offset + agnostic_end.width != AGNOSTIC_WIDTH:
            raise ValueError(f"format-agnostic groups must end at {AGNOSTIC_WIDTH}")
        if len(set(names)) != len(names):
            raise ValueError("duplicate group names")
        self._groups = {g.name: g for g in groups}
        self._ordered = tuple(groups)

    @property
    def groups(self) -> tuple[LayoutGroup, ...]:
        return self._ordered

    def __getitem__(self, name: str) -> LayoutGroup:
        return self._groups[name]

    def slice(self, name: str) -> slice:
        g = self._groups[name]
        return slice(g.offset, g.offset + g.width)

    @classmethod
    def from_lines(cls, lines) -> "FeatureLayout":
        groups = []
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4):
                raise ValueError(f"line {lineno}: expected name, offset, width[, params]")
            params = {}
            if len(parts) == 4 and parts[3]:
                for item in parts[3].split(","):
                    key, _, value = item.partition("=")
                    params[key] = int(value)
            groups.append(LayoutGroup(parts[0], int(parts[1]), int(parts[2]), params))
        return cls(groups)

    @classmethod
    def load(cls, path=None) -> "FeatureLayout":
        if path is None:
            text = (
                resources.files("binfeat.data")
                .joinpath(DEFAULT_LAYOUT_RESOURCE)
                .read_text(encoding="utf-8")
            )
            return cls.from_lines(text.splitlines())
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)


_default_layout: FeatureLayout | None = None


def default_layout() -> FeatureLayout:
    global _default_layout
    if _default_layout is None:
        _default_layout = FeatureLayout.load()
    return _default_layout


def hash_embed(items, buckets: int, seed: int = 0) -> np.ndarray:
    """Signed hashing-trick embedding of (key, weight) items.

    Bare keys count as weight 1. The bucket index and the sign bit come from
    independent regions of a keyed blake2b digest, so the embedding is
    deterministic under the seed and permutation-invariant over the items.
    """
    if buckets <= 0:
        raise ValueError("buckets must be positive")
    out = np.zeros(buckets, dtype=np.float32)
    seed_key = seed.to_bytes(8, "little", signed=True)
    for item in items:
        if isinstance(item, tuple):
            key, weight = item
        else:
            key, weight = item, 1.0
        if not isinstance(key, bytes):
            key = str(key).encode("utf-8", "surrogateescape")
        h = hashlib.blake2b(key, digest_size=9, key=seed_key).digest()
        index = int.from_bytes(h[:8], "little") % buckets
        sign = 1.0 if h[8] & 1 else -1.0
        out[index] += np.float32(sign * weight)
    return out


def _scalar(value) -> np.float32:
    return np.float32(min(max(float(value), -_CLIP), _CLIP))


def _normalized(counts, width: int) -> np.ndarray:
    arr = np.asarray(counts, dtype=np.float64)
    total = arr.sum()
    if total <= 0:
        return np.zeros(width, dtype=np.float32)
    return (arr / total).astype(np.float32)


def _strings_block(raw: RawFeatures, group: LayoutGroup) -> np.ndarray:
    s = raw.strings
    size = raw.general.size
    scalars = np.array(
        [
            s.numstrings,
            s.avlength,
            s.printables,
            s.entropy,
            s.printables / size if size else 0.0,
        ],
        dtype=np.float32,
    )
    dist = _normalized(s.printabledist, 96)
    buckets = group.params.get("patterns", 76)
    counts = hash_embed(sorted(s.string_counts.items()), buckets, seed=11)
    return np.concatenate([scalars, dist, counts])


def _general_block(raw: RawFeatures) -> np.ndarray:
    g = raw.general
    return np.array(
        [g.size, g.entropy, int(raw.is_pe), *g.magic4], dtype=np.float32
    )


def _coff_block(header: dict, group: LayoutGroup) -> np.ndarray:
    coff = header["coff"]
    scalars = np.array(
        [
            _scalar(coff["timestamp"]),
            _scalar(coff["number_of_sections"]),
            _scalar(coff["number_of_symbols"]),
            _scalar(coff["sizeof_optional_header"]),
            _scalar(coff["pointer_to_symbol_table"]),
        ],
        dtype=np.float32,
    )
    machine = hash_embed([coff["machine"]], group.params.get("machine", 10), seed=21)
    chars = hash_embed(
        coff["characteristics"], group.params.get("characteristics", 16), seed=22
    )
    return np.concatenate([scalars, machine, chars])


def _optional_block(header: dict, group: LayoutGroup) -> np.ndarray:
    opt = header["optional"]
    scalars = np.array(
        [_scalar(opt[name]) for name in OPTIONAL_SCALAR_FIELDS], dtype=np.float32
    )
    subsystem = hash_embed([opt["subsystem"]], group.params.get("subsystem", 10), seed=23)
    dll = hash_embed(
        opt["dll_characteristics"], group.params.get("dllchars", 16), seed=24
    )
    return np.concatenate([scalars, subsystem, dll])


def _pe_general_block(raw: RawFeatures) -> np.ndarray:
    g = raw.general
    return np.array(
        [g.vsize, g.has_relocs, g.has_dynamic_relocs, g.symbols], dtype=np.float32
    )


def _section_block(section: dict, group: LayoutGroup) -> np.ndarray:
    entries = section.get("sections", [])
    entropies = [e["entropy"] for e in entries]
    size_ratios = [e["size_ratio"] for e in entries]
    vsize_ratios = [e["vsize_ratio"] for e in entries]
    stats = np.array(
        [
            len(entries),
            sum(1 for e in entries if e["size"] == 0),
            sum(1 for e in entries if not e["name"]),
            sum(
                1
                for e in entries
                if "MEM_READ" in e["props"] and "MEM_EXECUTE" in e["props"]
            ),
            sum(1 for e in entries if "MEM_WRITE" in e["props"]),
            sum(1 for e in entries if "MEM_EXECUTE" in e["props"]),
            min(entropies, default=0.0),
            max(entropies, default=0.0),
            min(size_ratios, default=0.0),
            max(size_ratios, default=0.0),
            min(vsize_ratios, default=0.0),
            max(vsize_ratios, default=0.0),
        ],
        dtype=np.float32,
    )
    name_size = hash_embed(
        [(e["name"], _scalar(e["size"])) for e in entries],
        group.params.get("name_size", 50),
        seed=31,
    )
    name_entropy = hash_embed(
        [(e["name"], e["entropy"]) for e in entries],
        group.params.get("name_entropy", 50),
        seed=32,
    )
    name_vsize = hash_embed(
        [(e["name"], _scalar(e["vsize"])) for e in entries],
        group.params.get("name_vsize", 50),
        seed=33,
    )
    props = hash_embed(
        [p for e in entries for p in e["props"]], group.params.get("props", 20), seed=34
    )
    entry_name = hash_embed(
        [section["entry"]] if section.get("entry") else [],
        group.params.get("entry", 12),
        seed=35,
    )
    overlay = section.get("overlay", {})
    overlay_block = np.array(
        [
            _scalar(overlay.get("size", 0)),
            overlay.get("size_ratio", 0.0),
            overlay.get("entropy", 0.0),
        ],
        dtype=np.float32,
    )
    return np.concatenate([stats, name_size, name_entropy, name_vsize, props, entry_name, overlay_block])


def _datadir_block(directories, group: LayoutGroup) -> np.ndarray:
    sizes = hash_embed(
        [(d["name"], _scalar(d["size"])) for d in directories],
        group.params.get("size", 16),
        seed=41,
    )
    vaddrs = hash_embed(
        [(d["name"], _scalar(d["virtual_address"])) for d in directories],
        group.params.get("vaddr", 16),
        seed=42,
    )
    return np.concatenate([sizes, vaddrs])


def _imports_block(imports: dict, group: LayoutGroup) -> np.ndarray:
    libs = sorted(imports)
    counts = np.array(
        [len(libs), sum(len(v) for v in imports.values())], dtype=np.float32
    )
    lib_block = hash_embed(
        [lib.lower() for lib in libs], group.params.get("libs", 256), seed=51
    )
    func_block = hash_embed(
        [f"{lib.lower()}:{func}" for lib in libs for func in imports[lib]],
        group.params.get("funcs", 1024),
        seed=52,
    )
    return np.concatenate([counts, lib_block, func_block])


def _exports_block(exports, group: LayoutGroup) -> np.ndarray:
    count = np.array([len(exports)], dtype=np.float32)
    names = hash_embed(list(exports), group.params.get("names", 128), seed=61)
    return np.concatenate([count, names])


def _richheader_block(entries, group: LayoutGroup) -> np.ndarray:
    pairs = [
        (str(entries[i]), _scalar(entries[i + 1]))
        for i in range(0, len(entries) - 1, 2)
    ]
    count = np.array([len(pairs)], dtype=np.float32)
    hashed = hash_embed(pairs, group.params.get("pairs", 32), seed=71)
    return np.concatenate([count, hashed])


_AUTHENTICODE_FIELDS = (
    "num_certs",
    "self_signed",
    "empty_program_name",
    "no_countersigner",
    "parse_error",
    "chain_max_depth",
    "latest_signing_time",
    "signing_time_diff",
)


def _authenticode_block(summary: dict) -> np.ndarray:
    return np.array(
        [_scalar(summary.get(name, 0)) for name in _AUTHENTICODE_FIELDS],
        dtype=np.float32,
    )


def vectorize(
    raw: RawFeatures,
    layout: FeatureLayout | None = None,
    catalog: ParseWarningCatalog | None = None,
) -> np.ndarray:
    """Deterministic 2,568-entry float32 vector for one raw document."""
    if layout is None:
        layout = default_layout()
    vec = np.zeros(TOTAL_WIDTH, dtype=np.float32)
    vec[layout.slice("histogram")] = _normalized(raw.histogram, 256)
    vec[layout.slice("byteentropy")] = _normalized(raw.byteentropy, 256)
    vec[layout.slice("strings")] = _strings_block(raw, layout["strings"])
    vec[layout.slice("general")] = _general_block(raw)

    if not raw.is_pe:
        return vec

    dos = raw.header.get("dos", {})
    vec[layout.slice("header_dos")] = np.array(
        [_scalar(dos.get(name, 0)) for name in DOS_FIELDS], dtype=np.float32
    )
    vec[layout.slice("header_coff")] = _coff_block(raw.header, layout["header_coff"])
    vec[layout.slice("header_optional")] = _optional_block(
        raw.header, layout["header_optional"]
    )
    vec[layout.slice("pe_general")] = _pe_general_block(raw)
    if raw.section:
        vec[layout.slice("section")] = _section_block(raw.section, layout["section"])
    vec[layout.slice("datadirectories")] = _datadir_block(
        raw.datadirectories, layout["datadirectories"]
    )
    vec[layout.slice("imports")] = _imports_block(raw.imports, layout["imports"])
    vec[layout.slice("exports")] = _exports_block(raw.exports, layout["exports"])
    vec[layout.slice("richheader")] = _richheader_block(
        raw.richheader, layout["richheader"]
    )
    vec[layout.slice("authenticode")] = _authenticode_block(raw.authenticode)
    if catalog is None:
        catalog = default_catalog()
    vec[layout.slice("pefilewarnings")] = canonicalize_warnings(
        raw.pefilewarnings, catalog
    ).astype(np.float32)
    return vec


def truncate_agnostic(vector: np.ndarray) -> np.ndarray:
    """Copy of the 696-entry format-agnostic prefix."""
    return np.array(vector[:AGNOSTIC_WIDTH], dtype=np.float32, copy=True)


# Matrix container: magic, version, dtype code, row/column counts, then one
# float32 label per row followed by the dense row-major float32 payload, all
# little-endian.
_MATRIX_MAGIC = b"BFMX"
_MATRIX_VERSION = 1
_DTYPE_F32 = 0
_HEADER_STRUCT = struct.Struct("<4sHBBQQ")


def write_matrix(vectors, labels, path) -> None:
    x = np.ascontiguousarray(vectors, dtype="<f4")
    y = np.ascontiguousarray(labels, dtype="<f4")
    if x.ndim != 2:
        raise MatrixFormatError("vectors must be a 2-D matrix")
    if y.shape != (x.shape[0],):
        raise MatrixFormatError(
            f"labels shape {y.shape} does not match {x.shape[0]} rows"
        )
    with open(path, "wb") as fh:
        fh.write(
            _HEADER_STRUCT.pack(
                _MATRIX_MAGIC, _MATRIX_VERSION, _DTYPE_F32, 0, x.shape[0], x.shape[1]
            )
        )
        fh.write(y.tobytes())
        fh.write(x.tobytes())


def read_matrix(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER_STRUCT.size)
        if len(header) < _HEADER_STRUCT.size:
            raise MatrixFormatError("truncated header")
        magic, version, dtype_code, _, rows, cols = _HEADER_STRUCT.unpack(header)
        if magic != _MATRIX_MAGIC:
            raise MatrixFormatError(f"bad magic {magic!r}")
        if version != _MATRIX_VERSION:
            raise MatrixFormatError(f"unsupported version {version}")
        if dtype_code != _DTYPE_F32:
            raise MatrixFormatError(f"unsupported element type {dtype_code}")
        payload = fh.read()
    expected = 4 * rows + 4 * rows * cols
    if len(payload) != expected:
        raise MatrixFormatError(
            f"payload is {len(payload)} bytes; expected {expected}"
        )
    y = np.frombuffer(payload[: 4 * rows], dtype="<f4").copy()
    x = (
        np.frombuffer(payload[4 * rows :], dtype="<f4")
        .reshape(rows, cols)
        .copy()
    )
    return x, y
