import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from setverify.texture import (ZIGZAG_8X8, dct2, dct_descriptor, enumerate_blocks,
                               image_descriptors, zigzag_order)

from _oracles import dct_by_summation

blocks_8x8 = arrays(np.float64, (8, 8),
                    elements=st.floats(-4, 4, allow_nan=False, width=32))


def test_zigzag_table_matches_diagonal_walk():
    assert list(ZIGZAG_8X8) == zigzag_order(8)
    assert len(set(ZIGZAG_8X8)) == 64
    assert ZIGZAG_8X8[0] == (0, 0)


def test_block_enumeration_counts():
    img = np.zeros((64, 64))
    blocks = enumerate_blocks(img, 8, 4)
    assert len(blocks) == 225  # 15 positions per axis
    assert (blocks[0].x, blocks[0].y) == (0, 0)
    assert (blocks[-1].x, blocks[-1].y) == (56, 56)
    # row-major: x advances first
    assert (blocks[1].x, blocks[1].y) == (4, 0)

    assert len(enumerate_blocks(np.zeros((8, 8)), 8, 4)) == 1
    assert len(enumerate_blocks(np.zeros((9, 9)), 8, 1)) == 4


def test_block_too_large():
    with pytest.raises(ValueError):
        enumerate_blocks(np.zeros((4, 4)), 8, 4)


def test_constant_block_gives_zero_descriptor():
    d = dct_descriptor(np.full((8, 8), 0.5))
    assert d.shape == (15,)
    np.testing.assert_array_equal(d, 0.0)


@given(blocks_8x8, st.floats(-2, 2, allow_nan=False, width=32))
def test_additive_illumination_invariance(block, c):
    base = dct_descriptor(block)
    shifted = dct_descriptor(block + c)
    np.testing.assert_allclose(shifted, base, atol=1e-12)


@given(blocks_8x8, blocks_8x8,
       st.floats(-3, 3, allow_nan=False, width=16),
       st.floats(-3, 3, allow_nan=False, width=16))
def test_linearity(b1, b2, a, b):
    lhs = dct_descriptor(a * b1 + b * b2)
    rhs = a * dct_descriptor(b1) + b * dct_descriptor(b2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@given(blocks_8x8)
@settings(max_examples=25)
def test_parseval_on_full_transform(block):
    coeffs = dct2(block)
    assert abs((coeffs ** 2).sum() - (block ** 2).sum()) < 1e-10


def test_single_frequency_block_matches_summation_oracle():
    x = np.arange(8)
    block = np.tile(np.cos(np.pi * (2 * x + 1) / 16), (8, 1))
    d = dct_descriptor(block)
    oracle = dct_by_summation(block)
    # only the first horizontal frequency is excited; it is zigzag entry 1,
    # i.e. descriptor entry 0 after DC removal
    expected = oracle[0, 1]
    assert abs(d[0] - expected) < 1e-12
    np.testing.assert_allclose(d[1:], 0.0, atol=1e-12)
    assert abs(expected - 4.0 * np.sqrt(2.0)) < 1e-12


def test_descriptor_against_oracle_random_block():
    rng = np.random.default_rng(3)
    block = rng.random((8, 8))
    oracle = dct_by_summation(block)
    zz = [oracle[r, c] for r, c in ZIGZAG_8X8]
    np.testing.assert_allclose(dct_descriptor(block), zz[1:16], atol=1e-12)


def test_image_descriptors_matches_per_block_path():
    rng = np.random.default_rng(4)
    img = rng.random((32, 24))
    batch = image_descriptors(img, 8, 4, 15)
    blocks = enumerate_blocks(img, 8, 4)
    assert batch.shape == (len(blocks), 15)
    for row, blk in zip(batch, blocks):
        np.testing.assert_allclose(row, dct_descriptor(blk), atol=1e-12)


def test_unit_variance_flag():
    rng = np.random.default_rng(5)
    img = rng.random((16, 16))
    d = image_descriptors(img, 8, 4, 15, unit_variance=True)
    np.testing.assert_allclose(d.std(axis=1), 1.0, atol=1e-12)
    # constant blocks stay all-zero instead of dividing by zero
    flat = image_descriptors(np.zeros((16, 16)), 8, 4, 15, unit_variance=True)
    np.testing.assert_array_equal(flat, 0.0)


def test_descriptor_rejects_bad_blocks():
    with pytest.raises(ValueError):
        dct_descriptor(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        dct_descriptor(np.full((8, 8), np.nan))
