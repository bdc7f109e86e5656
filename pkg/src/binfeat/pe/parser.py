"""Structural parser for Windows Portable Executable files.

Parses straight from bytes with struct; malformed input degrades to a
GracefulFailure instead of raising, and every recoverable oddity is recorded
as a warning string so the caller can still emit format-agnostic features.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..agnostic import byte_histogram, shannon_entropy

DOS_MAGIC = 0x5A4D
PE_SIGNATURE = b"PE\0\0"
OPTIONAL_MAGIC_PE32 = 0x10B
OPTIONAL_MAGIC_PE32_PLUS = 0x20B

MAX_DATA_DIRECTORIES = 16
MAX_SECTIONS = 96
MAX_IMPORT_LIBRARIES = 1024
MAX_IMPORTS_PER_LIBRARY = 16384
MAX_EXPORT_NAMES = 16384

MACHINE_NAMES = {
    0x0: "IMAGE_FILE_MACHINE_UNKNOWN",
    0x14C: "IMAGE_FILE_MACHINE_I386",
    0x166: "IMAGE_FILE_MACHINE_R4000",
    0x1A2: "IMAGE_FILE_MACHINE_SH3",
    0x1A6: "IMAGE_FILE_MACHINE_SH4",
    0x1C0: "IMAGE_FILE_MACHINE_ARM",
    0x1C2: "IMAGE_FILE_MACHINE_THUMB",
    0x1C4: "IMAGE_FILE_MACHINE_ARMNT",
    0x200: "IMAGE_FILE_MACHINE_IA64",
    0x266: "IMAGE_FILE_MACHINE_MIPS16",
    0x366: "IMAGE_FILE_MACHINE_MIPSFPU",
    0x466: "IMAGE_FILE_MACHINE_MIPSFPU16",
    0x5032: "IMAGE_FILE_MACHINE_RISCV32",
    0x5064: "IMAGE_FILE_MACHINE_RISCV64",
    0x6232: "IMAGE_FILE_MACHINE_LOONGARCH32",
    0x6264: "IMAGE_FILE_MACHINE_LOONGARCH64",
    0x8664: "IMAGE_FILE_MACHINE_AMD64",
    0x9041: "IMAGE_FILE_MACHINE_M32R",
    0xAA64: "IMAGE_FILE_MACHINE_ARM64",
    0xEBC: "IMAGE_FILE_MACHINE_EBC",
    0x1F0: "IMAGE_FILE_MACHINE_POWERPC",
    0x1F1: "IMAGE_FILE_MACHINE_POWERPCFP",
}

SUBSYSTEM_NAMES = {
    0: "IMAGE_SUBSYSTEM_UNKNOWN",
    1: "IMAGE_SUBSYSTEM_NATIVE",
    2: "IMAGE_SUBSYSTEM_WINDOWS_GUI",
    3: "IMAGE_SUBSYSTEM_WINDOWS_CUI",
    5: "IMAGE_SUBSYSTEM_OS2_CUI",
    7: "IMAGE_SUBSYSTEM_POSIX_CUI",
    8: "IMAGE_SUBSYSTEM_NATIVE_WINDOWS",
    9: "IMAGE_SUBSYSTEM_WINDOWS_CE_GUI",
    10: "IMAGE_SUBSYSTEM_EFI_APPLICATION",
    11: "IMAGE_SUBSYSTEM_EFI_BOOT_SERVICE_DRIVER",
    12: "IMAGE_SUBSYSTEM_EFI_RUNTIME_DRIVER",
    13: "IMAGE_SUBSYSTEM_EFI_ROM",
    14: "IMAGE_SUBSYSTEM_XBOX",
    16: "IMAGE_SUBSYSTEM_WINDOWS_BOOT_APPLICATION",
}

COFF_CHARACTERISTIC_FLAGS = (
    (0x0001, "RELOCS_STRIPPED"),
    (0x0002, "EXECUTABLE_IMAGE"),
    (0x0004, "LINE_NUMS_STRIPPED"),
    (0x0008, "LOCAL_SYMS_STRIPPED"),
    (0x0010, "AGGRESIVE_WS_TRIM"),
    (0x0020, "LARGE_ADDRESS_AWARE"),
    (0x0080, "BYTES_REVERSED_LO"),
    (0x0100, "32BIT_MACHINE"),
    (0x0200, "DEBUG_STRIPPED"),
    (0x0400, "REMOVABLE_RUN_FROM_SWAP"),
    (0x0800, "NET_RUN_FROM_SWAP"),
    (0x1000, "SYSTEM"),
    (0x2000, "DLL"),
    (0x4000, "UP_SYSTEM_ONLY"),
    (0x8000, "BYTES_REVERSED_HI"),
)

DLL_CHARACTERISTIC_FLAGS = (
    (0x0020, "HIGH_ENTROPY_VA"),
    (0x0040, "DYNAMIC_BASE"),
    (0x0080, "FORCE_INTEGRITY"),
    (0x0100, "NX_COMPAT"),
    (0x0200, "NO_ISOLATION"),
    (0x0400, "NO_SEH"),
    (0x0800, "NO_BIND"),
    (0x1000, "APPCONTAINER"),
    (0x2000, "WDM_DRIVER"),
    (0x4000, "GUARD_CF"),
    (0x8000, "TERMINAL_SERVER_AWARE"),
)

SECTION_CHARACTERISTIC_FLAGS = (
    (0x00000008, "TYPE_NO_PAD"),
    (0x00000020, "CNT_CODE"),
    (0x00000040, "CNT_INITIALIZED_DATA"),
    (0x00000080, "CNT_UNINITIALIZED_DATA"),
    (0x00000100, "LNK_OTHER"),
    (0x00000200, "LNK_INFO"),
    (0x00000800, "LNK_REMOVE"),
    (0x00001000, "LNK_COMDAT"),
    (0x00008000, "GPREL"),
    (0x01000000, "LNK_NRELOC_OVFL"),
    (0x02000000, "MEM_DISCARDABLE"),
    (0x04000000, "MEM_NOT_CACHED"),
    (0x08000000, "MEM_NOT_PAGED"),
    (0x10000000, "MEM_SHARED"),
    (0x20000000, "MEM_EXECUTE"),
    (0x40000000, "MEM_READ"),
    (0x80000000, "MEM_WRITE"),
)

DATA_DIRECTORY_NAMES = (
    "EXPORT",
    "IMPORT",
    "RESOURCE",
    "EXCEPTION",
    "SECURITY",
    "BASERELOC",
    "DEBUG",
    "COPYRIGHT",
    "GLOBALPTR",
    "TLS",
    "LOAD_CONFIG",
    "BOUND_IMPORT",
    "IAT",
    "DELAY_IMPORT",
    "COM_DESCRIPTOR",
    "RESERVED",
)

DOS_FIELDS = (
    "e_magic",
    "e_cblp",
    "e_cp",
    "e_crlc",
    "e_cparhdr",
    "e_minalloc",
    "e_maxalloc",
    "e_ss",
    "e_sp",
    "e_csum",
    "e_ip",
    "e_cs",
    "e_lfarlc",
    "e_ovno",
    "e_oemid",
    "e_oeminfo",
    "e_lfanew",
)


@dataclass(frozen=True)
class GracefulFailure:
    """Non-fatal parse outcome; format-agnostic features remain available."""

    reason: str
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class DosHeader:
    values: dict

    def to_dict(self) -> dict:
        return dict(self.values)


@dataclass(frozen=True)
class CoffHeader:
    timestamp: int
    machine: str
    number_of_sections: int
    number_of_symbols: int
    sizeof_optional_header: int
    pointer_to_symbol_table: int
    characteristics: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "machine": self.machine,
            "number_of_sections": self.number_of_sections,
            "number_of_symbols": self.number_of_symbols,
            "sizeof_optional_header": self.sizeof_optional_header,
            "pointer_to_symbol_table": self.pointer_to_symbol_table,
            "characteristics": list(self.characteristics),
        }


OPTIONAL_SCALAR_FIELDS = (
    "magic",
    "major_image_version",
    "minor_image_version",
    "major_linker_version",
    "minor_linker_version",
    "major_operating_system_version",
    "minor_operating_system_version",
    "major_subsystem_version",
    "minor_subsystem_version",
    "sizeof_code",
    "sizeof_headers",
    "sizeof_image",
    "sizeof_initialized_data",
    "sizeof_uninitialized_data",
    "sizeof_stack_reserve",
    "sizeof_stack_commit",
    "sizeof_heap_reserve",
    "sizeof_heap_commit",
    "address_of_entrypoint",
    "base_of_code",
    "base_of_data",
    "image_base",
    "section_alignment",
    "checksum",
    "number_of_rvas_and_sizes",
)


@dataclass(frozen=True)
class OptionalHeader:
    values: dict
    subsystem: str
    dll_characteristics: tuple[str, ...]
    file_alignment: int = 512

    @property
    def is_64bit(self) -> bool:
        return self.values["magic"] == OPTIONAL_MAGIC_PE32_PLUS

    def to_dict(self) -> dict:
        out = {"magic": self.values["magic"], "subsystem": self.subsystem}
        for name in OPTIONAL_SCALAR_FIELDS[1:]:
            out[name] = self.values[name]
        out["dll_characteristics"] = list(self.dll_characteristics)
        return out


@dataclass(frozen=True)
class RawSection:
    name: str
    virtual_size: int
    virtual_address: int
    size_of_raw_data: int
    pointer_to_raw_data: int
    characteristics: int

    def props(self) -> tuple[str, ...]:
        return tuple(
            name for bit, name in SECTION_CHARACTERISTIC_FLAGS if self.characteristics & bit
        )


@dataclass(frozen=True)
class DataDirectoryEntry:
    name: str
    size: int
    virtual_address: int

    def to_dict(self) -> dict:
        return {"name": self.name, "size": self.size, "virtual_address": self.virtual_address}


@dataclass
class ParsedPE:
    content: bytes
    dos: DosHeader
    coff: CoffHeader
    optional: OptionalHeader
    sections: list[RawSection]
    data_directories: list[DataDirectoryEntry]
    warnings: list[str] = field(default_factory=list)

    def rva_to_offset(self, rva: int) -> int | None:
        for sec in self.sections:
            extent = max(sec.virtual_size, sec.size_of_raw_data)
            if sec.virtual_address <= rva < sec.virtual_address + extent:
                delta = rva - sec.virtual_address
                if delta >= sec.size_of_raw_data:
                    return None
                return sec.pointer_to_raw_data + delta
        if rva < self.optional.values["sizeof_headers"]:
            return rva
        return None

    def read_cstring(self, rva: int, limit: int = 4096) -> str | None:
        offset = self.rva_to_offset(rva)
        if offset is None or offset >= len(self.content):
            return None
        end = self.content.find(b"\0", offset, offset + limit)
        if end < 0:
            end = min(offset + limit, len(self.content))
        return self.content[offset:end].decode("latin-1")

    def directory(self, name: str) -> DataDirectoryEntry | None:
        for entry in self.data_directories:
            if entry.name == name:
                return entry
        return None


def _flag_names(value: int, table) -> tuple[str, ...]:
    return tuple(name for bit, name in table if value & bit)


def parse_pe(content: bytes) -> ParsedPE | GracefulFailure:
    """Parse headers, sections, and data directories from raw file bytes."""
    warnings: list[str] = []
    if len(content) < 0x40:
        return GracefulFailure("file too short for a DOS header")
    dos_words = struct.unpack_from("<14H", content, 0)
    e_oemid, e_oeminfo = struct.unpack_from("<2H", content, 0x24)
    (e_lfanew,) = struct.unpack_from("<I", content, 0x3C)
    dos_values = dict(zip(DOS_FIELDS[:14], dos_words))
    dos_values["e_oemid"] = e_oemid
    dos_values["e_oeminfo"] = e_oeminfo
    dos_values["e_lfanew"] = e_lfanew
    dos = DosHeader(dos_values)

    if dos_values["e_magic"] != DOS_MAGIC:
        return GracefulFailure("DOS magic missing")
    if e_lfanew + 4 + 20 > len(content):
        return GracefulFailure("PE signature offset beyond end of file")
    if content[e_lfanew : e_lfanew + 4] != PE_SIGNATURE:
        return GracefulFailure("PE signature missing")

    coff_off = e_lfanew + 4
    (
        machine,
        number_of_sections,
        timestamp,
        ptr_symtab,
        num_symbols,
        sizeof_opt,
        characteristics,
    ) = struct.unpack_from("<2H3I2H", content, coff_off)
    if machine not in MACHINE_NAMES:
        warnings.append(f"Unknown machine type 0x{machine:x}")
    coff = CoffHeader(
        timestamp=timestamp,
        machine=MACHINE_NAMES.get(machine, "IMAGE_FILE_MACHINE_UNKNOWN"),
        number_of_sections=number_of_sections,
        number_of_symbols=num_symbols,
        sizeof_optional_header=sizeof_opt,
        pointer_to_symbol_table=ptr_symtab,
        characteristics=_flag_names(characteristics, COFF_CHARACTERISTIC_FLAGS),
    )

    opt_off = coff_off + 20
    if opt_off + 2 > len(content):
        return GracefulFailure("truncated optional header", tuple(warnings))
    (opt_magic,) = struct.unpack_from("<H", content, opt_off)
    if opt_magic == OPTIONAL_MAGIC_PE32:
        fmt = "<HBB9I6H4I2H6I"
        names = (
            "magic",
            "major_linker_version",
            "minor_linker_version",
            "sizeof_code",
            "sizeof_initialized_data",
            "sizeof_uninitialized_data",
            "address_of_entrypoint",
            "base_of_code",
            "base_of_data",
            "image_base",
            "section_alignment",
            "file_alignment",
            "major_operating_system_version",
            "minor_operating_system_version",
            "major_image_version",
            "minor_image_version",
            "major_subsystem_version",
            "minor_subsystem_version",
            "win32_version",
            "sizeof_image",
            "sizeof_headers",
            "checksum",
            "subsystem",
            "dll_characteristics",
            "sizeof_stack_reserve",
            "sizeof_stack_commit",
            "sizeof_heap_reserve",
            "sizeof_heap_commit",
            "loader_flags",
            "number_of_rvas_and_sizes",
        )
    elif opt_magic == OPTIONAL_MAGIC_PE32_PLUS:
        fmt = "<HBB5IQ2I6H4I2H4Q2I"
        names = (
            "magic",
            "major_linker_version",
            "minor_linker_version",
            "sizeof_code",
            "sizeof_initialized_data",
            "sizeof_uninitialized_data",
            "address_of_entrypoint",
            "base_of_code",
            "image_base",
            "section_alignment",
            "file_alignment",
            "major_operating_system_version",
            "minor_operating_system_version",
            "major_image_version",
            "minor_image_version",
            "major_subsystem_version",
            "minor_subsystem_version",
            "win32_version",
            "sizeof_image",
            "sizeof_headers",
            "checksum",
            "subsystem",
            "dll_characteristics",
            "sizeof_stack_reserve",
            "sizeof_stack_commit",
            "sizeof_heap_reserve",
            "sizeof_heap_commit",
            "loader_flags",
            "number_of_rvas_and_sizes",
        )
    else:
        return GracefulFailure(f"unknown optional header magic 0x{opt_magic:x}", tuple(warnings))

    if opt_off + struct.calcsize(fmt) > len(content):
        return GracefulFailure("truncated optional header", tuple(warnings))
    opt_values = dict(zip(names, struct.unpack_from(fmt, content, opt_off)))
    if opt_magic == OPTIONAL_MAGIC_PE32_PLUS:
        # 64-bit images have no base-of-data field on disk
        opt_values["base_of_data"] = 0
    subsystem_value = opt_values.pop("subsystem")
    if subsystem_value not in SUBSYSTEM_NAMES:
        warnings.append(f"Unknown subsystem 0x{subsystem_value:x}")
    dll_flags = opt_values.pop("dll_characteristics")
    win32_version = opt_values.pop("win32_version", 0)
    opt_values.pop("loader_flags", None)
    file_alignment = opt_values.pop("file_alignment", 512)
    optional = OptionalHeader(
        values=opt_values,
        subsystem=SUBSYSTEM_NAMES.get(subsystem_value, "IMAGE_SUBSYSTEM_UNKNOWN"),
        dll_characteristics=_flag_names(dll_flags, DLL_CHARACTERISTIC_FLAGS),
        file_alignment=file_alignment,
    )

    n_dirs = opt_values["number_of_rvas_and_sizes"]
    if n_dirs > MAX_DATA_DIRECTORIES:
        warnings.append(
            f"Suspicious NumberOfRvaAndSizes {n_dirs}; clamping to {MAX_DATA_DIRECTORIES}"
        )
        n_dirs = MAX_DATA_DIRECTORIES
    dirs_off = opt_off + struct.calcsize(fmt)
    directories: list[DataDirectoryEntry] = []
    for i in range(n_dirs):
        off = dirs_off + i * 8
        if off + 8 > len(content):
            warnings.append("Data directory table truncated")
            break
        vaddr, size = struct.unpack_from("<2I", content, off)
        if size or vaddr:
            directories.append(DataDirectoryEntry(DATA_DIRECTORY_NAMES[i], size, vaddr))

    sec_off = opt_off + sizeof_opt
    n_sections = number_of_sections
    if n_sections > MAX_SECTIONS:
        warnings.append(f"Suspicious NumberOfSections {n_sections}; clamping to {MAX_SECTIONS}")
        n_sections = MAX_SECTIONS
    sections: list[RawSection] = []
    for i in range(n_sections):
        off = sec_off + i * 40
        if off + 40 > len(content):
            warnings.append("Section table truncated; keeping parseable prefix")
            break
        (name_raw, vsize, vaddr, raw_size, raw_ptr, _, _, _, _, sec_chars) = struct.unpack_from(
            "<8s6I2HI", content, off
        )
        name = name_raw.rstrip(b"\0").decode("latin-1", errors="replace")
        if raw_ptr + raw_size > len(content):
            warnings.append(f"Section {name!r} extends beyond end of file")
        sections.append(
            RawSection(
                name=name,
                virtual_size=vsize,
                virtual_address=vaddr,
                size_of_raw_data=raw_size,
                pointer_to_raw_data=raw_ptr,
                characteristics=sec_chars,
            )
        )

    pe = ParsedPE(
        content=content,
        dos=dos,
        coff=coff,
        optional=optional,
        sections=sections,
        data_directories=directories,
        warnings=warnings,
    )
    _lint(
        pe,
        coff_characteristics=characteristics,
        dll_flags=dll_flags,
        win32_version=win32_version,
        sizeof_opt=sizeof_opt,
        expected_opt_size=struct.calcsize(fmt) + n_dirs * 8,
    )
    return pe


_KNOWN_COFF_BITS = sum(bit for bit, _ in COFF_CHARACTERISTIC_FLAGS)
_KNOWN_DLL_BITS = sum(bit for bit, _ in DLL_CHARACTERISTIC_FLAGS)
_KNOWN_SECTION_BITS = sum(bit for bit, _ in SECTION_CHARACTERISTIC_FLAGS) | 0x00F00000


def _lint(
    pe: ParsedPE,
    coff_characteristics: int,
    dll_flags: int,
    win32_version: int,
    sizeof_opt: int,
    expected_opt_size: int,
) -> None:
    """Structural sanity checks; each finding becomes one warning string."""
    warn = pe.warnings.append
    opt = pe.optional.values
    size = len(pe.content)

    if pe.dos.values["e_lfanew"] < 0x40:
        warn("DOS stub is truncated")
    if pe.dos.values["e_lfanew"] % 4:
        warn("PE signature is not dword aligned")
    if sizeof_opt != expected_opt_size:
        warn("Optional header size differs from expected")
    if pe.coff.timestamp == 0:
        warn("Timestamp is zero")
    if pe.coff.number_of_symbols and pe.coff.pointer_to_symbol_table == 0:
        warn("NumberOfSymbols is nonzero but PointerToSymbolTable is zero")
    if pe.coff.pointer_to_symbol_table > size:
        warn("PointerToSymbolTable extends beyond end of file")
    if coff_characteristics & ~_KNOWN_COFF_BITS:
        warn("Unknown COFF characteristic bits")
    if dll_flags & ~_KNOWN_DLL_BITS:
        warn("Unknown DLL characteristic bits")
    if win32_version:
        warn("Win32VersionValue is nonzero")

    if opt["checksum"] == 0:
        warn("Optional header checksum is zero")
    if opt["sizeof_headers"] == 0:
        warn("SizeOfHeaders is zero")
    falign = pe.optional.file_alignment
    if falign == 0 or falign & (falign - 1):
        warn("FileAlignment is not a power of two")
    if opt["section_alignment"] < falign:
        warn("SectionAlignment is smaller than FileAlignment")
    if opt["image_base"] % 0x10000:
        warn("ImageBase is not 64K aligned")

    entry = opt["address_of_entrypoint"]
    if entry == 0:
        warn("AddressOfEntryPoint is zero")
    elif not any(
        s.virtual_address <= entry < s.virtual_address + max(s.virtual_size, s.size_of_raw_data)
        for s in pe.sections
    ):
        warn("AddressOfEntryPoint does not map to any section")

    names = [s.name for s in pe.sections]
    if any(not n for n in names):
        warn("Empty section name")
    if len(set(names)) != len(names):
        warn("Duplicate section name")
    vaddrs = [s.virtual_address for s in pe.sections]
    if vaddrs != sorted(vaddrs):
        warn("Section virtual addresses are not ascending")
    last_extent = 0
    extents = []
    for sec in pe.sections:
        if sec.size_of_raw_data == 0:
            warn("Section with zero raw size")
        if sec.virtual_size == 0:
            warn("Section virtual size is zero")
        if falign and not (falign & (falign - 1)) and sec.pointer_to_raw_data % falign:
            warn("Section raw pointer is not aligned to FileAlignment")
        if sec.characteristics & ~_KNOWN_SECTION_BITS:
            warn("Unknown section characteristic bits")
        if sec.size_of_raw_data:
            extents.append((sec.pointer_to_raw_data, sec.pointer_to_raw_data + sec.size_of_raw_data))
        last_extent = max(last_extent, sec.virtual_address + sec.virtual_size)
    extents.sort()
    if any(nxt[0] < prev[1] for prev, nxt in zip(extents, extents[1:])):
        warn("Overlapping section file extents")
    if opt["sizeof_image"] < last_extent:
        warn("SizeOfImage is smaller than the last section's virtual extent")

    for entry_dir in pe.data_directories:
        if entry_dir.name == "RESERVED":
            warn("RESERVED data directory is populated")
        elif entry_dir.name == "COPYRIGHT":
            warn("COPYRIGHT data directory is populated")
        elif entry_dir.name == "GLOBALPTR" and entry_dir.size:
            warn("GLOBALPTR data directory has nonzero size")
        if entry_dir.name == "SECURITY":
            # Security entry holds a file offset, checked by its extractor.
            continue
        offset = pe.rva_to_offset(entry_dir.virtual_address)
        if offset is None:
            warn(f"{entry_dir.name} data directory does not map to the file")
        elif offset + entry_dir.size > size:
            warn(f"{entry_dir.name} data directory extends beyond end of file")


def _section_bytes(pe: ParsedPE, sec: RawSection) -> bytes:
    start = sec.pointer_to_raw_data
    end = min(start + sec.size_of_raw_data, len(pe.content))
    if start >= len(pe.content):
        return b""
    return pe.content[start:end]


def extract_sections(pe: ParsedPE, file_size: int | None = None) -> dict:
    """Entry section name, per-section stats, and overlay info."""
    if file_size is None:
        file_size = len(pe.content)
    entry_rva = pe.optional.values["address_of_entrypoint"]
    entry = ""
    for sec in pe.sections:
        extent = max(sec.virtual_size, sec.size_of_raw_data)
        if sec.virtual_address <= entry_rva < sec.virtual_address + extent:
            entry = sec.name
            break
    if not entry:
        for sec in pe.sections:
            if sec.characteristics & 0x20000000:  # MEM_EXECUTE
                entry = sec.name
                break

    section_entries = []
    for sec in pe.sections:
        data = _section_bytes(pe, sec)
        entropy = shannon_entropy(byte_histogram(data)) if data else 0.0
        section_entries.append(
            {
                "name": sec.name,
                "size": sec.size_of_raw_data,
                "entropy": entropy,
                "vsize": sec.virtual_size,
                "size_ratio": sec.size_of_raw_data / file_size if file_size else 0.0,
                "vsize_ratio": (
                    sec.size_of_raw_data / sec.virtual_size if sec.virtual_size else 0.0
                ),
                "props": list(sec.props()),
            }
        )

    data_end = pe.optional.values["sizeof_headers"]
    for sec in pe.sections:
        end = sec.pointer_to_raw_data + sec.size_of_raw_data
        data_end = max(data_end, min(end, file_size))
    overlay_bytes = pe.content[data_end:] if data_end < file_size else b""
    overlay = {
        "size": len(overlay_bytes),
        "size_ratio": len(overlay_bytes) / file_size if file_size else 0.0,
        "entropy": shannon_entropy(byte_histogram(overlay_bytes)) if overlay_bytes else 0.0,
    }
    return {"entry": entry, "sections": section_entries, "overlay": overlay}


def extract_data_directories(pe: ParsedPE) -> list[DataDirectoryEntry]:
    return list(pe.data_directories)


def extract_imports_exports(pe: ParsedPE) -> tuple[dict[str, list[str]], list[str]]:
    """Imports as library -> symbol names; exports in table order."""
    imports: dict[str, list[str]] = {}
    import_dir = pe.directory("IMPORT")
    thunk_size = 8 if pe.optional.is_64bit else 4
    ordinal_bit = 1 << (thunk_size * 8 - 1)
    if import_dir is not None:
        base = pe.rva_to_offset(import_dir.virtual_address)
        if base is None:
            pe.warnings.append("Import directory RVA does not map to the file")
        else:
            for i in range(MAX_IMPORT_LIBRARIES):
                off = base + i * 20
                if off + 20 > len(pe.content):
                    pe.warnings.append("Import descriptor table runs past end of file")
                    break
                oft, _, _, name_rva, ft = struct.unpack_from("<5I", pe.content, off)
                if oft == 0 and name_rva == 0 and ft == 0:
                    break
                lib = pe.read_cstring(name_rva) if name_rva else None
                if not lib:
                    pe.warnings.append("Import descriptor with unreadable library name")
                    continue
                names: list[str] = []
                thunk_rva = oft or ft
                for j in range(MAX_IMPORTS_PER_LIBRARY):
                    toff = pe.rva_to_offset(thunk_rva + j * thunk_size)
                    if toff is None or toff + thunk_size > len(pe.content):
                        pe.warnings.append(
                            f"Import thunk chain for {lib} is malformed; truncating"
                        )
                        break
                    (thunk,) = struct.unpack_from(
                        "<Q" if thunk_size == 8 else "<I", pe.content, toff
                    )
                    if thunk == 0:
                        break
                    if thunk & ordinal_bit:
                        names.append(f"ordinal{thunk & 0xFFFF}")
                    else:
                        sym = pe.read_cstring((thunk & (ordinal_bit - 1)) + 2)
                        if sym is None:
                            pe.warnings.append(
                                f"Import name entry for {lib} does not map to the file"
                            )
                            break
                        names.append(sym)
                if names and all(n.startswith("ordinal") for n in names):
                    pe.warnings.append("Import by ordinal only")
                imports[lib] = names

    exports: list[str] = []
    export_dir = pe.directory("EXPORT")
    if export_dir is not None:
        base = pe.rva_to_offset(export_dir.virtual_address)
        if base is None or base + 40 > len(pe.content):
            pe.warnings.append("Export directory does not map to the file")
        else:
            (_, _, _, _, _, _, _, n_names, _, names_rva, _) = struct.unpack_from(
                "<2I2H7I", pe.content, base
            )
            if n_names == 0:
                pe.warnings.append("Export table empty despite EXPORT directory")
            if n_names > MAX_EXPORT_NAMES:
                pe.warnings.append(f"Suspicious export name count {n_names}; clamping")
                n_names = MAX_EXPORT_NAMES
            for i in range(n_names):
                noff = pe.rva_to_offset(names_rva + i * 4)
                if noff is None or noff + 4 > len(pe.content):
                    pe.warnings.append("Export name pointer table truncated")
                    break
                (name_rva,) = struct.unpack_from("<I", pe.content, noff)
                sym = pe.read_cstring(name_rva)
                if sym is None:
                    pe.warnings.append("Export name entry does not map to the file")
                    break
                exports.append(sym)

    return imports, exports
