"""Feature groups computable for every file regardless of format.

Covers the byte histogram, the windowed byte/entropy histogram, printable
string statistics with a configurable pattern set, and general file features
(size, entropy, leading magic bytes).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .records import GeneralFeatures, StringFeatures

# Byte/entropy histogram parameters, unchanged from prior feature versions.
BE_WINDOW = 2048
BE_STRIDE = 1024

# Maximal runs of >= 5 printable characters count as strings.
_STRING_RE = re.compile(rb"[\x20-\x7e]{5,}")

DEFAULT_PATTERNS_RESOURCE = "patterns_v3.tsv"


def byte_histogram(content: bytes) -> np.ndarray:
    """256 counts; entry i is the number of occurrences of byte value i."""
    return np.bincount(np.frombuffer(content, dtype=np.uint8), minlength=256).astype(np.int64)


def shannon_entropy(counts) -> float:
    """Shannon entropy in bits/symbol of a count histogram; all-zero -> 0.0."""
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    if total <= 0:
        return 0.0
    p = c[c > 0] / total
    return float(-np.sum(p * np.log2(p))) + 0.0


def _window_bin_counts(window: np.ndarray) -> tuple[int, np.ndarray]:
    # Entropy is computed over 16 coarse (high-nibble) bins and doubled to
    # compensate for the halved symbol width, then quantized to 16 levels.
    c = np.bincount(window >> 4, minlength=16)
    p = c[c > 0] / c.sum()
    h = float(-np.sum(p * np.log2(p))) * 2.0
    hbin = min(int(h * 2), 15)
    return hbin, c


def byte_entropy_histogram(content: bytes) -> np.ndarray:
    """16x16 (entropy bin, byte high-nibble) counts flattened to 256.

    A 2048-byte window slides with stride 1024; files shorter than one window
    are processed as a single window.
    """
    out = np.zeros((16, 16), dtype=np.int64)
    if not content:
        return out.reshape(-1)
    a = np.frombuffer(content, dtype=np.uint8)
    if a.shape[0] < BE_WINDOW:
        hbin, c = _window_bin_counts(a)
        out[hbin, :] += c
    else:
        for start in range(0, a.shape[0] - BE_WINDOW + 1, BE_STRIDE):
            hbin, c = _window_bin_counts(a[start : start + BE_WINDOW])
            out[hbin, :] += c
    return out.reshape(-1)


@dataclass(frozen=True)
class Pattern:
    name: str
    kind: str
    pattern: str

    def compile(self) -> re.Pattern:
        if self.kind == "literal":
            expr = re.escape(self.pattern.encode("utf-8"))
        elif self.kind == "regex":
            expr = self.pattern.encode("utf-8")
        else:
            raise ValueError(f"unknown pattern kind: {self.kind}")
        return re.compile(expr, re.IGNORECASE)


class PatternSet:
    """Immutable, named set of string patterns loaded from a TSV table.

    File format: one "name<TAB>kind<TAB>pattern" per line, kind in
    {literal, regex}; '#' lines are comments. Matching is case-insensitive.
    """

    def __init__(self, patterns: list[Pattern]):
        names = [p.name for p in patterns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate pattern names")
        self._patterns = tuple(patterns)
        self._compiled = tuple((p.name, p.compile()) for p in patterns)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self._patterns)

    def __len__(self) -> int:
        return len(self._patterns)

    def count_matches(self, content: bytes) -> dict[str, int]:
        """Non-overlapping match counts per pattern over the whole input."""
        return {name: len(rx.findall(content)) for name, rx in self._compiled}

    @classmethod
    def from_lines(cls, lines) -> "PatternSet":
        patterns = []
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected name<TAB>kind<TAB>pattern")
            patterns.append(Pattern(*parts))
        return cls(patterns)

    @classmethod
    def load(cls, path=None) -> "PatternSet":
        if path is None:
            text = (
                resources.files("binfeat.data")
                .joinpath(DEFAULT_PATTERNS_RESOURCE)
                .read_text(encoding="utf-8")
            )
            return cls.from_lines(text.splitlines())
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)


_default_patterns: PatternSet | None = None


def default_patterns() -> PatternSet:
    global _default_patterns
    if _default_patterns is None:
        _default_patterns = PatternSet.load()
    return _default_patterns


def string_features(content: bytes, patterns: PatternSet | None = None) -> StringFeatures:
    """Printable string statistics plus pattern occurrence counts."""
    if patterns is None:
        patterns = default_patterns()
    runs = _STRING_RE.findall(content)
    if runs:
        numstrings = len(runs)
        avlength = sum(len(r) for r in runs) / numstrings
        joined = np.frombuffer(b"".join(runs), dtype=np.uint8) - 0x20
        dist = np.bincount(joined, minlength=96)
        printables = int(dist.sum())
        entropy = shannon_entropy(dist)
    else:
        numstrings = 0
        avlength = 0.0
        dist = np.zeros(96, dtype=np.int64)
        printables = 0
        entropy = 0.0
    return StringFeatures(
        numstrings=numstrings,
        avlength=avlength,
        printabledist=tuple(int(x) for x in dist),
        printables=printables,
        entropy=entropy,
        string_counts=patterns.count_matches(content),
    )


def general_features(content: bytes) -> GeneralFeatures:
    """File size, whole-file entropy, and the first four bytes (zero-padded)."""
    magic = tuple(content[:4]) + (0,) * max(0, 4 - len(content))
    return GeneralFeatures(
        size=len(content),
        entropy=shannon_entropy(byte_histogram(content)) if content else 0.0,
        magic4=magic,  # type: ignore[arg-type]
    )


def extract_agnostic(content: bytes, patterns: PatternSet | None = None) -> dict:
    """All four format-agnostic groups as a raw-feature fragment."""
    return {
        "histogram": byte_histogram(content),
        "byteentropy": byte_entropy_histogram(content),
        "strings": string_features(content, patterns),
        "general": general_features(content),
    }


def entropy_bits_per_byte(content: bytes) -> float:
    if not content:
        return 0.0
    return shannon_entropy(byte_histogram(content))
