"""Whole-file raw feature extraction.

Combines the four format-agnostic groups with the PE-specific groups into a
single RawFeatures document. Inputs that are not parseable PE images still
yield the agnostic groups with all PE groups empty; parsing never raises.
"""

from __future__ import annotations

from .agnostic import PatternSet, extract_agnostic
from .pe import (
    GracefulFailure,
    ParsedPE,
    extract_authenticode,
    extract_data_directories,
    extract_imports_exports,
    extract_rich_header,
    extract_sections,
    parse_pe,
)
from .records import GeneralFeatures, RawFeatures


def _pe_general(agnostic_general: GeneralFeatures, pe: ParsedPE) -> GeneralFeatures:
    opt = pe.optional.values
    return GeneralFeatures(
        size=agnostic_general.size,
        entropy=agnostic_general.entropy,
        magic4=agnostic_general.magic4,
        vsize=opt["sizeof_image"],
        has_relocs=int(pe.directory("BASERELOC") is not None),
        has_dynamic_relocs=int("DYNAMIC_BASE" in pe.optional.dll_characteristics),
        symbols=pe.coff.number_of_symbols,
    )


def extract_raw_features(
    content: bytes, patterns: PatternSet | None = None
) -> RawFeatures:
    """The full feature-version-3 raw document for one file's bytes."""
    agnostic = extract_agnostic(content, patterns)
    parsed = parse_pe(content)
    if isinstance(parsed, GracefulFailure):
        return RawFeatures(
            histogram=tuple(int(x) for x in agnostic["histogram"]),
            byteentropy=tuple(int(x) for x in agnostic["byteentropy"]),
            strings=agnostic["strings"],
            general=agnostic["general"],
        )

    section = extract_sections(parsed)
    directories = extract_data_directories(parsed)
    imports, exports = extract_imports_exports(parsed)
    richheader = extract_rich_header(content, warnings=parsed.warnings)
    authenticode = extract_authenticode(parsed)
    header = {
        "coff": parsed.coff.to_dict(),
        "optional": parsed.optional.to_dict(),
        "dos": parsed.dos.to_dict(),
    }
    return RawFeatures(
        histogram=tuple(int(x) for x in agnostic["histogram"]),
        byteentropy=tuple(int(x) for x in agnostic["byteentropy"]),
        strings=agnostic["strings"],
        general=_pe_general(agnostic["general"], parsed),
        header=header,
        section=section,
        imports={k: list(v) for k, v in imports.items()},
        exports=tuple(exports),
        datadirectories=tuple(d.to_dict() for d in directories),
        richheader=tuple(richheader),
        authenticode=authenticode,
        pefilewarnings=tuple(parsed.warnings),
    )
