import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from prompate.data import (
    Split,
    SplitFractions,
    SyntheticSpec,
    decode_tensor,
    encode_tensor,
    generate,
    generate_arrays,
    load_csv,
    load_dataset,
    load_tensor,
    partition,
    save_dataset,
    save_tensor,
    split,
)
from prompate.data.synthetic import class_mean_distance
from prompate.errors import (
    BadMagic,
    CrcMismatch,
    InvalidSpec,
    TooManyTeachers,
    TruncatedFile,
    VersionUnsupported,
)


def test_scalar_roundtrip():
    out = decode_tensor(encode_tensor(np.float64(3.25)))
    assert out.shape == () and out == 3.25


def test_small_fixture_roundtrip(tmp_path):
    a = np.arange(6, dtype=np.float64).reshape(2, 3) / 7
    save_tensor(tmp_path / "a.ptns", a)
    b = load_tensor(tmp_path / "a.ptns")
    assert b.dtype == np.float64 and b.tobytes() == a.tobytes()


def test_header_layout():
    data = encode_tensor(np.zeros((2, 5), dtype=np.uint16))
    assert data[:4] == b"PTNS"
    assert struct.unpack_from("<HBB", data, 4) == (1, 2, 2)
    assert struct.unpack_from("<2I", data, 8) == (2, 5)
    payload = data[16:16 + 20]
    assert struct.unpack("<I", data[-4:])[0] == zlib.crc32(payload)
    assert len(data) == 16 + 20 + 4


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(st.sampled_from([np.float32, np.float64, np.uint16]),
                  hnp.array_shapes(min_dims=0, max_dims=4, max_side=5)))
def test_roundtrip_bitwise(arr):
    out = decode_tensor(encode_tensor(arr))
    assert out.dtype == arr.dtype and out.shape == arr.shape
    assert out.tobytes() == arr.tobytes()


def test_every_payload_byte_flip_detected():
    data = bytearray(encode_tensor(np.random.default_rng(0).normal(size=(3, 4))))
    start = 8 + 2 * 4
    for pos in range(start, len(data) - 4):
        corrupt = bytearray(data)
        corrupt[pos] ^= 0xFF
        with pytest.raises(CrcMismatch):
            decode_tensor(bytes(corrupt))


def test_format_errors():
    good = encode_tensor(np.ones(4))
    with pytest.raises(BadMagic):
        decode_tensor(b"XTNS" + good[4:])
    with pytest.raises(VersionUnsupported):
        decode_tensor(good[:4] + struct.pack("<H", 2) + good[6:])
    with pytest.raises(TruncatedFile):
        decode_tensor(good[:-1])
    with pytest.raises(TruncatedFile):
        decode_tensor(good[:3])
    with pytest.raises(TruncatedFile):
        decode_tensor(good + b"\0")
    with pytest.raises(TypeError):
        encode_tensor(np.ones(2, dtype=np.int32))


def test_generate_balance_small():
    ds = generate(SyntheticSpec(classes=5, count=10, seed=0))
    assert np.bincount(ds.labels).tolist() == [2, 2, 2, 2, 2]


@settings(max_examples=20, deadline=None)
@given(classes=st.integers(2, 12), extra=st.integers(0, 40), seed=st.integers(0, 2**32),
       family=st.sampled_from(["blobs", "stripes", "checker", "mixed"]),
       gap=st.floats(0, 1), channels=st.integers(1, 3))
def test_generate_invariants(classes, extra, seed, family, gap, channels):
    spec = SyntheticSpec(classes=classes, dims=(channels, 8, 8), family=family, gap_knob=gap,
                         count=classes + extra, seed=seed, base_family="blobs")
    x, y = generate_arrays(spec)
    counts = np.bincount(y, minlength=classes)
    assert counts.max() - counts.min() <= 1
    assert x.min() >= 0 and x.max() <= 1
    x2, y2 = generate_arrays(spec)
    assert x.tobytes() == x2.tobytes() and np.array_equal(y, y2)


def test_source_spec_defaults_to_its_own_family():
    spec = SyntheticSpec(family="checker", count=20, classes=2)
    assert spec.base_family == "checker"


def test_gap_distance_monotone():
    src = SyntheticSpec(classes=6, family="mixed", count=600, seed=1, noise_level=0.0)
    xs, ys = generate_arrays(src)
    dists = []
    for gap in (0.0, 0.5, 1.0):
        tgt = SyntheticSpec(classes=6, family="stripes", base_family="mixed", gap_knob=gap,
                            count=600, seed=2, noise_level=0.0)
        xt, yt = generate_arrays(tgt)
        dists.append(class_mean_distance(xs, ys, xt, yt, 6))
    assert dists[0] < dists[1] < dists[2]


@pytest.mark.parametrize("kwargs", [
    {"classes": 1}, {"classes": 5, "count": 4}, {"dims": (1, 0, 4)},
    {"family": "waves"}, {"gap_knob": 1.5}, {"noise_level": -0.1},
])
def test_invalid_spec(kwargs):
    with pytest.raises(InvalidSpec):
        SyntheticSpec(**kwargs)


def test_partition_examples():
    assert sorted(partition(10, 3, seed=0).sizes(), reverse=True) == [4, 3, 3]
    assert partition(10, 3, seed=0).sizes() == [4, 3, 3]
    assert partition(7, 7, seed=1).sizes() == [1] * 7
    with pytest.raises(TooManyTeachers):
        partition(3, 4, seed=0)


@given(n=st.integers(1, 500), k=st.integers(1, 60), seed=st.integers(0, 2**32))
def test_partition_properties(n, k, seed):
    if k > n:
        return
    plan = partition(n, k, seed)
    slices = [set(plan.slice_indices(t).tolist()) for t in range(k)]
    assert set().union(*slices) == set(range(n))
    assert sum(len(s) for s in slices) == n
    sizes = plan.sizes()
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes, reverse=True)
    assert np.array_equal(plan.assignment, partition(n, k, seed).assignment)


def test_splits_are_disjoint_and_cover():
    ds = generate(SyntheticSpec(classes=4, count=200, seed=3))
    parts = split(ds, SplitFractions(), seed=9)
    idx = {k: set(v.indices.tolist()) for k, v in parts.items()}
    assert len(parts[Split.PRIVATE_TRAIN]) == 140
    assert len(parts[Split.PUBLIC_POOL]) == 40
    assert len(parts[Split.TEST]) == 20
    assert not (idx[Split.PRIVATE_TRAIN] & idx[Split.PUBLIC_POOL])
    assert not (idx[Split.PRIVATE_TRAIN] & idx[Split.TEST])
    assert not (idx[Split.PUBLIC_POOL] & idx[Split.TEST])
    assert set().union(*idx.values()) == set(range(200))
    assert all(v.split_id is k for k, v in parts.items())
    for part in parts.values():
        assert np.array_equal(part.images, ds.images[part.indices])


def test_split_fractions_validated():
    with pytest.raises(InvalidSpec):
        SplitFractions(0.5, 0.5, 0.5)


def test_csv_import(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text("p0,p1,p2,p3,label\n0,0.5,1,0.25,1\n1,1,0,0,0\n")
    ds = load_csv(path, (1, 2, 2))
    assert ds.images.shape == (2, 1, 2, 2)
    assert ds.labels.tolist() == [1, 0]
    assert ds.images[0, 0, 0, 1] == 0.5
    with pytest.raises(InvalidSpec):
        load_csv(path, (1, 3, 3))


def test_dataset_directory_roundtrip(tmp_path):
    ds = generate(SyntheticSpec(classes=3, count=12, seed=5))
    save_dataset(tmp_path / "d", ds)
    back = load_dataset(tmp_path / "d")
    assert back.images.tobytes() == ds.images.tobytes()
    assert np.array_equal(back.labels, ds.labels)
    assert back.provenance == ds.provenance
