"""Canonicalization of parser warning strings into a fixed category vector.

The catalog is a frozen, versioned list of exactly 88 categories, each with
a prefix matching rule. The final category is a catch-all, so every warning
string maps to exactly one category and canonicalization is total.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

CATALOG_SIZE = 88
DEFAULT_CATALOG_RESOURCE = "warning_catalog_v3.tsv"
OTHER_CATEGORY = "other"


@dataclass(frozen=True)
class WarningCategory:
    name: str
    prefix: str  # empty prefix marks the catch-all category


class ParseWarningCatalog:
    """Ordered list of 88 warning categories with first-prefix-wins matching."""

    def __init__(self, categories: list[WarningCategory]):
        if len(categories) != CATALOG_SIZE:
            raise ValueError(
                f"catalog must have exactly {CATALOG_SIZE} categories, got {len(categories)}"
            )
        names = [c.name for c in categories]
        if len(set(names)) != len(names):
            raise ValueError("duplicate category names")
        catch_alls = [i for i, c in enumerate(categories) if not c.prefix]
        if len(catch_alls) != 1:
            raise ValueError("catalog must have exactly one catch-all category")
        self._categories = tuple(categories)
        self._other_index = catch_alls[0]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self._categories)

    def __len__(self) -> int:
        return CATALOG_SIZE

    def category_index(self, warning: str) -> int:
        for i, category in enumerate(self._categories):
            if category.prefix and warning.startswith(category.prefix):
                return i
        return self._other_index

    @classmethod
    def from_lines(cls, lines) -> "ParseWarningCatalog":
        categories = []
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            name, _, prefix = line.partition("\t")
            if not name:
                raise ValueError(f"line {lineno}: missing category name")
            categories.append(WarningCategory(name, prefix))
        return cls(categories)

    @classmethod
    def load(cls, path=None) -> "ParseWarningCatalog":
        if path is None:
            text = (
                resources.files("binfeat.data")
                .joinpath(DEFAULT_CATALOG_RESOURCE)
                .read_text(encoding="utf-8")
            )
            return cls.from_lines(text.splitlines())
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)


_default_catalog: ParseWarningCatalog | None = None


def default_catalog() -> ParseWarningCatalog:
    global _default_catalog
    if _default_catalog is None:
        _default_catalog = ParseWarningCatalog.load()
    return _default_catalog


def canonicalize_warnings(
    warnings, catalog: ParseWarningCatalog | None = None
) -> np.ndarray:
    """88 counts; each warning increments exactly one category."""
    if catalog is None:
        catalog = default_catalog()
    counts = np.zeros(CATALOG_SIZE, dtype=np.int64)
    for warning in warnings:
        counts[catalog.category_index(warning)] += 1
    return counts
