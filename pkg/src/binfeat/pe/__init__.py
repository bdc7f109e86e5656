"""Portable Executable parsing and PE-specific feature extraction."""

from .authenticode import empty_summary, extract_authenticode
from .parser import (
    DataDirectoryEntry,
    GracefulFailure,
    ParsedPE,
    extract_data_directories,
    extract_imports_exports,
    extract_sections,
    parse_pe,
)
from .richheader import extract_rich_header
from .warnings import (
    CATALOG_SIZE,
    ParseWarningCatalog,
    canonicalize_warnings,
    default_catalog,
)

__all__ = [
    "CATALOG_SIZE",
    "DataDirectoryEntry",
    "GracefulFailure",
    "ParseWarningCatalog",
    "ParsedPE",
    "canonicalize_warnings",
    "default_catalog",
    "empty_summary",
    "extract_authenticode",
    "extract_data_directories",
    "extract_imports_exports",
    "extract_rich_header",
    "extract_sections",
    "parse_pe",
]
