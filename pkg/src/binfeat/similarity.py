"""Locality-sensitive digests and distances for near-duplicate detection.

Implements the TLSH algorithm (1-byte checksum, 128 effective buckets,
32-byte body) with the "T1" textual digest form. Digests are deterministic;
inputs that are too short or too low-variance yield no digest.
"""

from __future__ import annotations

import math

# Pearson permutation table used by the TLSH bucket and checksum hashes.
_PEARSON = (
    1, 87, 49, 12, 176, 178, 102, 166, 121, 193, 6, 84, 249, 230, 44, 163,
    14, 197, 213, 181, 161, 85, 218, 80, 64, 239, 24, 226, 236, 142, 38, 200,
    110, 177, 104, 103, 141, 253, 255, 50, 77, 101, 81, 18, 45, 96, 31, 222,
    25, 107, 190, 70, 86, 237, 240, 34, 72, 242, 20, 214, 244, 227, 149, 235,
    97, 234, 57, 22, 60, 250, 82, 175, 208, 5, 127, 199, 111, 62, 135, 248,
    174, 169, 211, 58, 66, 154, 106, 195, 245, 171, 17, 187, 182, 179, 0, 243,
    132, 56, 148, 75, 128, 133, 158, 100, 130, 126, 91, 13, 153, 246, 216, 219,
    119, 68, 223, 78, 83, 88, 201, 99, 122, 11, 92, 32, 136, 114, 52, 10,
    138, 30, 48, 183, 156, 35, 61, 26, 143, 74, 251, 94, 129, 162, 63, 152,
    170, 7, 115, 167, 241, 206, 3, 150, 55, 59, 151, 220, 90, 53, 23, 131,
    125, 173, 15, 238, 79, 95, 89, 16, 105, 137, 225, 224, 217, 160, 37, 123,
    118, 73, 2, 157, 46, 116, 9, 145, 134, 228, 207, 212, 202, 215, 69, 229,
    27, 188, 67, 124, 168, 252, 42, 4, 29, 108, 21, 247, 19, 205, 39, 203,
    233, 40, 186, 147, 198, 192, 155, 33, 164, 191, 98, 204, 165, 180, 117, 76,
    140, 36, 210, 172, 41, 54, 159, 8, 185, 232, 113, 196, 231, 47, 146, 120,
    51, 65, 28, 144, 254, 221, 93, 189, 194, 139, 112, 43, 71, 109, 184, 209,
)

_WINDOW = 5
_EFF_BUCKETS = 128
_CODE_SIZE = 32  # bytes of body, 4 buckets per byte
MIN_DIGEST_LENGTH = 50

_LOG_1_1 = 0.095310180
_LOG_1_3 = 0.26236426
_LOG_1_5 = 0.4054651

DIGEST_PREFIX = "T1"
DIGEST_HEX_LEN = 70


class NullDigestError(ValueError):
    """Raised when a distance is requested for a null digest."""


def _b_mapping(salt: int, i: int, j: int, k: int) -> int:
    h = _PEARSON[salt]
    h = _PEARSON[h ^ i]
    h = _PEARSON[h ^ j]
    h = _PEARSON[h ^ k]
    return h


def _l_capturing(length: int) -> int:
    if length <= 656:
        i = int(math.floor(math.log(length) / _LOG_1_5))
    elif length <= 3199:
        i = int(math.floor(math.log(length) / _LOG_1_3 - 8.72777))
    else:
        i = int(math.floor(math.log(length) / _LOG_1_1 - 62.5472))
    return i & 0xFF


def _swap_nibbles(b: int) -> int:
    return ((b & 0xF0) >> 4) | ((b & 0x0F) << 4)


def digest(content: bytes) -> str | None:
    """TLSH digest in "T1..." form, or None for undigestable input."""
    n = len(content)
    if n < MIN_DIGEST_LENGTH:
        return None

    buckets = [0] * 256
    checksum = 0
    for i in range(4, n):
        b0 = content[i]
        b1 = content[i - 1]
        b2 = content[i - 2]
        b3 = content[i - 3]
        b4 = content[i - 4]
        checksum = _b_mapping(0, b0, b1, checksum)
        buckets[_b_mapping(2, b0, b1, b2)] += 1
        buckets[_b_mapping(3, b0, b1, b3)] += 1
        buckets[_b_mapping(5, b0, b2, b3)] += 1
        buckets[_b_mapping(7, b0, b2, b4)] += 1
        buckets[_b_mapping(11, b0, b1, b4)] += 1
        buckets[_b_mapping(13, b0, b3, b4)] += 1

    eff = buckets[:_EFF_BUCKETS]
    nonzero = sum(1 for c in eff if c > 0)
    if nonzero <= _EFF_BUCKETS // 2:
        return None

    ordered = sorted(eff)
    q1 = ordered[_EFF_BUCKETS // 4 - 1]
    q2 = ordered[_EFF_BUCKETS // 2 - 1]
    q3 = ordered[_EFF_BUCKETS - _EFF_BUCKETS // 4 - 1]
    if q3 == 0:
        return None

    code = bytearray(_CODE_SIZE)
    for i in range(_CODE_SIZE):
        h = 0
        for j in range(4):
            k = eff[4 * i + j]
            if k > q3:
                h += 3 << (j * 2)
            elif k > q2:
                h += 2 << (j * 2)
            elif k > q1:
                h += 1 << (j * 2)
        code[i] = h

    q1_ratio = int(q1 * 100 / q3) % 16
    q2_ratio = int(q2 * 100 / q3) % 16
    header = bytes(
        (
            _swap_nibbles(checksum),
            _swap_nibbles(_l_capturing(n)),
            _swap_nibbles((q2_ratio << 4) | q1_ratio),
        )
    )
    body = bytes(code[::-1])
    return DIGEST_PREFIX + (header + body).hex().upper()


def _decode(d: str) -> tuple[int, int, int, int, bytes]:
    if d.upper().startswith(DIGEST_PREFIX):
        d = d[len(DIGEST_PREFIX) :]
    if len(d) != DIGEST_HEX_LEN:
        raise ValueError(f"digest must be {DIGEST_HEX_LEN} hex chars: {d!r}")
    raw = bytes.fromhex(d)
    checksum = _swap_nibbles(raw[0])
    lvalue = _swap_nibbles(raw[1])
    q = _swap_nibbles(raw[2])
    q1_ratio = q & 0x0F
    q2_ratio = (q & 0xF0) >> 4
    body = raw[3:][::-1]
    return checksum, lvalue, (q1_ratio), (q2_ratio), body


def _mod_diff(a: int, b: int, rng: int) -> int:
    d = abs(a - b)
    return min(d, rng - d)


def distance(a: str | None, b: str | None, length_diff: bool = True) -> int:
    """TLSH distance between two non-null digests; symmetric, 0 on identity."""
    if a is None or b is None:
        raise NullDigestError("cannot compute distance for a null digest")
    ca, la, q1a, q2a, body_a = _decode(a)
    cb, lb, q1b, q2b, body_b = _decode(b)

    diff = 0
    if length_diff:
        ldiff = _mod_diff(la, lb, 256)
        if ldiff > 1:
            diff += ldiff * 12
        else:
            diff += ldiff

    for qa, qb in ((q1a, q1b), (q2a, q2b)):
        qdiff = _mod_diff(qa, qb, 16)
        if qdiff <= 1:
            diff += qdiff
        else:
            diff += (qdiff - 1) * 12

    if ca != cb:
        diff += 1

    for xa, xb in zip(body_a, body_b):
        for _ in range(4):
            d = abs((xa & 3) - (xb & 3))
            diff += 6 if d == 3 else d
            xa >>= 2
            xb >>= 2
    return diff


def is_near_duplicate(a: str | None, b: str | None, threshold: int = 30) -> bool:
    """True iff both digests exist and their distance is <= threshold.

    Undigestable (null) inputs never count as duplicates, so they can never
    block a selection decision.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if a is None or b is None:
        return False
    return distance(a, b) <= threshold
