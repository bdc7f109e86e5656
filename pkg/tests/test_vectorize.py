import hashlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from binfeat.extract import extract_raw_features
from binfeat.vectorize import (
    AGNOSTIC_WIDTH,
    TOTAL_WIDTH,
    FeatureLayout,
    MatrixFormatError,
    default_layout,
    hash_embed,
    read_matrix,
    truncate_agnostic,
    vectorize,
    write_matrix,
)
from peemit import EmitSection, EmitSpec, build_pe


def test_layout_covers_everything():
    layout = default_layout()
    assert sum(g.width for g in layout.groups) == TOTAL_WIDTH
    assert layout.groups[0].name == "histogram" and layout.groups[0].offset == 0
    general = layout["general"]
    assert general.offset + general.width == AGNOSTIC_WIDTH
    assert [g.name for g in layout.groups[:4]] == [
        "histogram",
        "byteentropy",
        "strings",
        "general",
    ]


@pytest.mark.parametrize(
    "rows",
    [
        ["histogram\t0\t256"],  # incomplete coverage
        ["histogram\t0\t256", "byteentropy\t300\t256"],  # gap
        ["general\t0\t696", "rest\t696\t1872"],  # wrong leading groups
    ],
)
def test_layout_validation_rejects_bad_tables(rows):
    with pytest.raises(ValueError):
        FeatureLayout.from_lines(rows)


def test_vector_width_and_zero_suffix_non_pe():
    vec = vectorize(extract_raw_features(b"just words and bytes " * 40))
    assert vec.shape == (TOTAL_WIDTH,)
    assert vec.dtype == np.float32
    assert not vec[AGNOSTIC_WIDTH:].any()


def test_pe_vector_suffix_nonzero():
    img = build_pe(
        EmitSpec(
            sections=[EmitSection(b".text", bytes(range(256)) * 4)],
            imports={b"KERNEL32.dll": [b"CloseHandle"]},
        )
    )
    vec = vectorize(extract_raw_features(img))
    assert vec[AGNOSTIC_WIDTH:].any()


def test_all_zero_raw_gives_zero_vector():
    vec = vectorize(extract_raw_features(b""))
    assert not vec.any()


def test_histogram_normalization():
    vec = vectorize(extract_raw_features(b"abcabcabc"))
    assert vec[:256].sum() == pytest.approx(1.0, abs=1e-6)
    assert vec[256:512].sum() == pytest.approx(1.0, abs=1e-6)


def test_determinism():
    img = build_pe(EmitSpec(rich_pairs=[(9, 1)], exports=[b"Fn"]))
    raw = extract_raw_features(img)
    a = vectorize(raw)
    b = vectorize(raw)
    assert np.array_equal(a, b)


def naive_hash_embed(items, buckets, seed):
    out = [0.0] * buckets
    for item in items:
        key, weight = item if isinstance(item, tuple) else (item, 1.0)
        if not isinstance(key, bytes):
            key = str(key).encode("utf-8", "surrogateescape")
        h = hashlib.blake2b(
            key, digest_size=9, key=seed.to_bytes(8, "little", signed=True)
        ).digest()
        index = int.from_bytes(h[:8], "little") % buckets
        sign = 1.0 if h[8] & 1 else -1.0
        out[index] += np.float32(sign * weight)
    return np.array(out, dtype=np.float32)


def test_hash_embed_empty():
    assert not hash_embed([], 16).any()


def test_hash_embed_repeated_key():
    out = hash_embed(["samekey"] * 7, 32, seed=3)
    assert np.abs(out).sum() == 7
    assert np.count_nonzero(out) == 1


def test_hash_embed_matches_naive_oracle(rng):
    keys = ["k%d" % rng.randrange(10**6) for _ in range(1000)]
    items = [(k, rng.uniform(-5, 5)) for k in keys]
    got = hash_embed(items, 64, seed=17)
    want = naive_hash_embed(items, 64, seed=17)
    assert np.allclose(got, want, atol=0)


def test_hash_embed_permutation_invariant(rng):
    items = [("key%d" % i, float(i)) for i in range(50)]
    shuffled = list(items)
    rng.shuffle(shuffled)
    assert np.array_equal(hash_embed(items, 30, 5), hash_embed(shuffled, 30, 5))


def test_hash_embed_rejects_bad_buckets():
    with pytest.raises(ValueError):
        hash_embed(["x"], 0)


def test_truncate_agnostic():
    vec = vectorize(extract_raw_features(b"non pe content here " * 10))
    prefix = truncate_agnostic(vec)
    assert prefix.shape == (AGNOSTIC_WIDTH,)
    assert np.array_equal(prefix, vec[:AGNOSTIC_WIDTH])


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=1500))
def test_non_pe_zero_suffix_property(content):
    raw = extract_raw_features(content)
    if raw.is_pe:
        return
    vec = vectorize(raw)
    assert not vec[AGNOSTIC_WIDTH:].any()


def test_matrix_round_trip(tmp_path):
    x = np.random.RandomState(3).rand(3, TOTAL_WIDTH).astype(np.float32)
    y = np.array([0.0, 1.0, 1.0], dtype=np.float32)
    path = tmp_path / "m.bin"
    write_matrix(x, y, path)
    x2, y2 = read_matrix(path)
    assert np.array_equal(x, x2)
    assert np.array_equal(y, y2)


def test_matrix_file_size_arithmetic(tmp_path):
    rows, cols = 500, AGNOSTIC_WIDTH
    x = np.zeros((rows, cols), dtype=np.float32)
    y = np.zeros(rows, dtype=np.float32)
    path = tmp_path / "m.bin"
    write_matrix(x, y, path)
    assert path.stat().st_size == 24 + 4 * rows + 4 * rows * cols
    x2, y2 = read_matrix(path)
    assert x2.shape == (rows, cols) and y2.shape == (rows,)


def test_matrix_wrong_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 40)
    with pytest.raises(MatrixFormatError):
        read_matrix(path)


def test_matrix_truncated_payload(tmp_path):
    path = tmp_path / "m.bin"
    write_matrix(np.ones((2, 4), np.float32), np.ones(2, np.float32), path)
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(MatrixFormatError):
        read_matrix(path)


def test_matrix_label_shape_mismatch(tmp_path):
    with pytest.raises(MatrixFormatError):
        write_matrix(
            np.ones((2, 4), np.float32), np.ones(3, np.float32), tmp_path / "x.bin"
        )


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 20),
    st.integers(1, 30),
    st.integers(0, 2**32 - 1),
)
def test_matrix_round_trip_fuzzed(tmp_path_factory, rows, cols, seed):
    rng = np.random.RandomState(seed % 2**32)
    x = rng.rand(rows, cols).astype(np.float32)
    y = rng.randint(0, 2, size=rows).astype(np.float32)
    path = tmp_path_factory.mktemp("mx") / "m.bin"
    write_matrix(x, y, path)
    x2, y2 = read_matrix(path)
    assert np.array_equal(x, x2) and np.array_equal(y, y2)
