"""Structural inspection of Authenticode signatures.

Summarizes the PKCS#7 blob in the security data directory: certificate
count, self-signing, chain depth, program-name presence, countersigner
presence, and signing times. No cryptographic verification is attempted.
"""

from __future__ import annotations

import struct
from datetime import datetime, timezone

from cryptography import x509
from cryptography.hazmat.primitives.serialization import pkcs7

from .parser import ParsedPE

WIN_CERT_REVISION_2_0 = 0x0200
WIN_CERT_TYPE_PKCS_SIGNED_DATA = 0x0002

# DER-encoded OIDs located by byte scan inside the signature blob.
_OID_SIGNING_TIME = bytes.fromhex("06092a864886f70d010905")
_OID_COUNTERSIGNATURE = bytes.fromhex("06092a864886f70d010906")
_OID_RFC3161_COUNTERSIGN = bytes.fromhex("060a2b060104018237030301")
_OID_SPC_SP_OPUS_INFO = bytes.fromhex("060a2b06010401823702010c")

_EMPTY_SUMMARY = {
    "num_certs": 0,
    "self_signed": 0,
    "empty_program_name": 0,
    "no_countersigner": 0,
    "parse_error": 0,
    "chain_max_depth": 0,
    "latest_signing_time": 0,
    "signing_time_diff": 0,
}


def empty_summary() -> dict:
    return dict(_EMPTY_SUMMARY)


def _read_der_element(blob: bytes, off: int) -> tuple[int, bytes] | None:
    """(tag, contents) of the DER element at off, or None if malformed."""
    if off + 2 > len(blob):
        return None
    tag = blob[off]
    length = blob[off + 1]
    off += 2
    if length & 0x80:
        n = length & 0x7F
        if n == 0 or n > 4 or off + n > len(blob):
            return None
        length = int.from_bytes(blob[off : off + n], "big")
        off += n
    if off + length > len(blob):
        return None
    return tag, blob[off : off + length]


def _parse_asn1_time(tag: int, data: bytes) -> int | None:
    try:
        text = data.decode("ascii")
        if tag == 0x17:  # UTCTime YYMMDDHHMMSSZ
            dt = datetime.strptime(text, "%y%m%d%H%M%SZ")
        elif tag == 0x18:  # GeneralizedTime YYYYMMDDHHMMSSZ
            dt = datetime.strptime(text, "%Y%m%d%H%M%SZ")
        else:
            return None
    except ValueError:
        return None
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def _signing_times(blob: bytes) -> list[int]:
    """All signingTime attribute values found anywhere in the blob."""
    times: list[int] = []
    start = 0
    while True:
        at = blob.find(_OID_SIGNING_TIME, start)
        if at < 0:
            break
        start = at + 1
        # Attribute shape: SEQ { OID, SET { UTCTime | GeneralizedTime } }
        set_at = at + len(_OID_SIGNING_TIME)
        if set_at < len(blob) and blob[set_at] == 0x31:
            element = _read_der_element(blob, set_at)
            if element is not None:
                inner = _read_der_element(element[1], 0)
                if inner is not None:
                    ts = _parse_asn1_time(*inner)
                    if ts is not None:
                        times.append(ts)
    return times


def _opus_program_name_present(blob: bytes) -> bool:
    """True iff an SpcSpOpusInfo attribute carries a nonempty programName."""
    at = blob.find(_OID_SPC_SP_OPUS_INFO)
    if at < 0:
        return False
    set_at = at + len(_OID_SPC_SP_OPUS_INFO)
    if set_at >= len(blob) or blob[set_at] != 0x31:
        return False
    element = _read_der_element(blob, set_at)
    if element is None:
        return False
    opus = _read_der_element(element[1], 0)  # SpcSpOpusInfo SEQUENCE
    if opus is None or not opus[1]:
        return False
    # programName is the [0] EXPLICIT field; absent means no name.
    name = _read_der_element(opus[1], 0)
    return name is not None and (opus[1][0] & 0x1F) == 0 and len(name[1]) > 0


def _chain_max_depth(certs) -> int:
    by_subject: dict[bytes, list] = {}
    for cert in certs:
        by_subject.setdefault(cert.subject.public_bytes(), []).append(cert)

    def depth(cert, seen: frozenset) -> int:
        issuer = cert.issuer.public_bytes()
        subject = cert.subject.public_bytes()
        if issuer == subject:
            return 1
        best = 1
        for parent in by_subject.get(issuer, []):
            key = parent.subject.public_bytes()
            if key in seen:
                continue
            best = max(best, 1 + depth(parent, seen | {key}))
        return best

    return max((depth(c, frozenset({c.subject.public_bytes()})) for c in certs), default=0)


def extract_authenticode(pe: ParsedPE) -> dict:
    """AuthenticodeSummary for a parsed image; unsigned files are all-zero."""
    summary = empty_summary()
    security = pe.directory("SECURITY")
    if security is None:
        return summary

    # The SECURITY entry's address is a file offset, not an RVA.
    start = security.virtual_address
    end = start + security.size
    if start + 8 > len(pe.content):
        pe.warnings.append("Security directory extends beyond end of file")
        summary["parse_error"] = 1
        return summary
    if end > len(pe.content):
        pe.warnings.append("Security directory extends beyond end of file")
        end = len(pe.content)

    blobs: list[bytes] = []
    off = start
    while off + 8 <= end:
        length, revision, cert_type = struct.unpack_from("<IHH", pe.content, off)
        if length < 8 or off + length > end:
            pe.warnings.append("Security directory entry truncated")
            summary["parse_error"] = 1
            break
        if revision != WIN_CERT_REVISION_2_0:
            pe.warnings.append(f"Unsupported certificate revision 0x{revision:x}")
        if cert_type != WIN_CERT_TYPE_PKCS_SIGNED_DATA:
            pe.warnings.append(f"Unsupported certificate type 0x{cert_type:x}")
        blobs.append(pe.content[off + 8 : off + length])
        # Entries are aligned to 8-byte boundaries.
        off += (length + 7) & ~7

    certs: list[x509.Certificate] = []
    signed = False
    for blob in blobs:
        try:
            certs.extend(pkcs7.load_der_pkcs7_certificates(blob))
            signed = True
        except ValueError:
            pe.warnings.append("Authenticode signature could not be parsed")
            summary["parse_error"] = 1
            continue
        times = _signing_times(blob)
        if times:
            summary["latest_signing_time"] = max(
                summary["latest_signing_time"], max(times)
            )
        if (
            _OID_COUNTERSIGNATURE not in blob
            and _OID_RFC3161_COUNTERSIGN not in blob
        ):
            summary["no_countersigner"] = 1
        if not _opus_program_name_present(blob):
            summary["empty_program_name"] = 1

    summary["num_certs"] = len(certs)
    if any(c.issuer == c.subject for c in certs):
        summary["self_signed"] = 1
    summary["chain_max_depth"] = _chain_max_depth(certs)
    if signed and summary["latest_signing_time"]:
        summary["signing_time_diff"] = summary["latest_signing_time"] - pe.coff.timestamp
    return summary
