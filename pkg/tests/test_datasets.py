import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advrobust.datasets import (
    Dataset,
    gen_gaussian_mixture,
    load_idx,
    split,
    write_idx,
)
from advrobust.errors import (
    ArgumentError,
    CountMismatchError,
    DimensionError,
    IdxError,
    TruncatedFileError,
    WrongMagicError,
)

from conftest import FIXTURES


def test_mixture_shape_and_range():
    d = gen_gaussian_mixture(3, 5, 4, 0.1, seed=1)
    assert d.features.shape == (12, 5)
    assert d.labels.tolist() == [0] * 4 + [1] * 4 + [2] * 4
    assert d.class_count == 3
    assert d.features.min() >= 0.0 and d.features.max() <= 1.0


def test_mixture_is_seeded():
    a = gen_gaussian_mixture(4, 8, 10, 0.2, seed=5)
    b = gen_gaussian_mixture(4, 8, 10, 0.2, seed=5)
    c = gen_gaussian_mixture(4, 8, 10, 0.2, seed=6)
    assert np.array_equal(a.features, b.features)
    assert not np.array_equal(a.features, c.features)


def test_small_spread_clusters_near_means():
    d = gen_gaussian_mixture(2, 3, 50, 1e-9, seed=2)
    for c in range(2):
        rows = d.features[d.labels == c]
        assert np.ptp(rows, axis=0).max() < 1e-7
        assert np.all((rows > 0.2 - 1e-6) & (rows < 0.8 + 1e-6))


@pytest.mark.parametrize("args", [(1, 3, 5, 0.1), (2, 1, 5, 0.1), (2, 3, 0, 0.1), (2, 3, 5, 0.0)])
def test_mixture_rejects_bad_arguments(args):
    with pytest.raises(ArgumentError):
        gen_gaussian_mixture(*args, seed=0)


def test_dataset_validation():
    with pytest.raises(DimensionError):
        Dataset(np.zeros(3), np.zeros(3), 1)
    with pytest.raises(DimensionError):
        Dataset(np.zeros((3, 2)), np.zeros(2), 1)
    with pytest.raises(ArgumentError):
        Dataset(np.zeros((2, 2)), np.array([0, 2]), 2)
    with pytest.raises(ArgumentError):
        Dataset(np.full((2, 2), 1.5), np.array([0, 1]), 2)


@given(st.integers(2, 200), st.floats(0.05, 0.95), st.integers(0, 1000))
def test_split_partitions(n, frac, seed):
    d = Dataset(np.linspace(0, 1, n)[:, None], np.zeros(n, dtype=int), 1)
    train, test = split(d, frac, seed)
    assert len(test) == round(n * frac)
    both = np.concatenate([train.features[:, 0], test.features[:, 0]])
    assert np.array_equal(np.sort(both), d.features[:, 0])


def test_split_rejects_bad_fraction():
    d = gen_gaussian_mixture(2, 2, 2, 0.1, seed=0)
    for frac in (0.0, 1.0, -0.1):
        with pytest.raises(ArgumentError):
            split(d, frac, 0)


# Four 2x3 images; the expected floats are pixel / 255 computed by hand.
KNOWN_PIXELS = np.array(
    [
        [[0, 255, 128], [1, 2, 3]],
        [[255, 255, 255], [0, 0, 0]],
        [[51, 102, 153], [204, 17, 34]],
        [[7, 0, 0], [0, 0, 250]],
    ],
    dtype=np.uint8,
)
KNOWN_LABELS = [3, 0, 7, 3]


def test_committed_idx_fixture_loads_exactly():
    d = load_idx(FIXTURES / "known4-images.idx3-ubyte", FIXTURES / "known4-labels.idx1-ubyte")
    assert d.features.shape == (4, 6)
    assert d.labels.tolist() == KNOWN_LABELS
    assert d.class_count == 8
    assert d.features[0].tolist() == [0.0, 1.0, 128 / 255, 1 / 255, 2 / 255, 3 / 255]
    assert d.features[2].tolist() == [0.2, 0.4, 0.6, 0.8, 17 / 255, 34 / 255]


def test_idx_round_trip(tmp_path):
    write_idx(tmp_path / "i", tmp_path / "l", KNOWN_PIXELS, KNOWN_LABELS)
    d = load_idx(tmp_path / "i", tmp_path / "l")
    assert np.array_equal(d.features, KNOWN_PIXELS.reshape(4, 6) / 255.0)


@pytest.mark.parametrize(
    "images,labels,error",
    [
        ("bad-magic-images.idx3-ubyte", "known4-labels.idx1-ubyte", WrongMagicError),
        ("known4-images.idx3-ubyte", "bad-magic-labels.idx1-ubyte", WrongMagicError),
        ("truncated-images.idx3-ubyte", "known4-labels.idx1-ubyte", TruncatedFileError),
        ("truncated-header.idx3-ubyte", "known4-labels.idx1-ubyte", TruncatedFileError),
        ("known4-images.idx3-ubyte", "truncated-labels.idx1-ubyte", TruncatedFileError),
        ("known4-images.idx3-ubyte", "three-labels.idx1-ubyte", CountMismatchError),
    ],
)
def test_corrupt_idx_fixtures(images, labels, error):
    with pytest.raises(error) as info:
        load_idx(FIXTURES / images, FIXTURES / labels)
    assert isinstance(info.value, IdxError)


def test_idx_errors_are_distinct():
    kinds = {WrongMagicError, TruncatedFileError, CountMismatchError}
    for a in kinds:
        for b in kinds - {a}:
            assert not issubclass(a, b)


def test_idx_header_bytes_are_big_endian():
    raw = (FIXTURES / "known4-images.idx3-ubyte").read_bytes()
    assert struct.unpack(">4I", raw[:16]) == (0x803, 4, 2, 3)
