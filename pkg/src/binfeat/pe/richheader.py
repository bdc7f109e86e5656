"""Rich header decoding.

The Rich header is an undocumented, XOR-obfuscated region between the DOS
stub and the PE signature that records toolchain product ids and use counts.
The XOR key doubles as a checksum over the DOS header and the decoded
entries; a mismatch is reported as a warning but does not suppress output.
"""

from __future__ import annotations

import struct

_RICH_MARKER = b"Rich"
_DANS = 0x536E6144  # "DanS"
_SEARCH_LIMIT = 0x1000


def _rol32(value: int, count: int) -> int:
    count &= 31
    return ((value << count) | (value >> (32 - count))) & 0xFFFFFFFF


def _checksum(content: bytes, dans_offset: int, pairs: list[tuple[int, int]]) -> int:
    total = dans_offset
    for i in range(dans_offset):
        if 0x3C <= i < 0x40:  # e_lfanew is treated as zero
            continue
        total = (total + _rol32(content[i], i)) & 0xFFFFFFFF
    for compid, count in pairs:
        total = (total + _rol32(compid, count)) & 0xFFFFFFFF
    return total


def extract_rich_header(content: bytes, warnings: list[str] | None = None) -> list[int]:
    """Flattened (compid, count) pairs, XOR-decoded; [] when absent."""
    limit = min(len(content), _SEARCH_LIMIT)
    rich_at = content.find(_RICH_MARKER, 0x40, limit)
    if rich_at < 0 or rich_at + 8 > len(content):
        return []
    if rich_at % 4 != 0:
        if warnings is not None:
            warnings.append("Rich header is not dword aligned")
        return []
    (key,) = struct.unpack_from("<I", content, rich_at + 4)

    # Walk backwards one dword at a time until the decoded "DanS" start.
    dans_at = -1
    off = rich_at - 4
    while off >= 0x40:
        (word,) = struct.unpack_from("<I", content, off)
        if word ^ key == _DANS:
            dans_at = off
            break
        off -= 4
    if dans_at < 0:
        if warnings is not None:
            warnings.append("Rich header marker without a DanS start")
        return []

    pairs: list[tuple[int, int]] = []
    # Three padding dwords follow "DanS"; entries are (compid, count) pairs.
    for off in range(dans_at + 16, rich_at, 8):
        compid, count = struct.unpack_from("<2I", content, off)
        pairs.append((compid ^ key, count ^ key))

    if warnings is not None and _checksum(content, dans_at, pairs) != key:
        warnings.append("Rich header checksum mismatch")

    out: list[int] = []
    for compid, count in pairs:
        out.append(compid)
        out.append(count)
    return out
