"""Block decomposition and DCT-based texture descriptors.

An image is cut into small overlapping square blocks.  Each block is
transformed with the orthonormal 2-D type-II DCT, the coefficients are read
in zigzag order, the DC coefficient is dropped (making the descriptor
invariant to additive illumination offsets) and the next ``descriptor_dim``
coefficients form the texture descriptor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn

# Standard 8x8 zigzag scan order as (row, col) pairs.  Entry 0 is the DC
# coefficient; descriptors use entries 1..descriptor_dim.
ZIGZAG_8X8 = (
    (0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2),
    (2, 1), (3, 0), (4, 0), (3, 1), (2, 2), (1, 3), (0, 4), (0, 5),
    (1, 4), (2, 3), (3, 2), (4, 1), (5, 0), (6, 0), (5, 1), (4, 2),
    (3, 3), (2, 4), (1, 5), (0, 6), (0, 7), (1, 6), (2, 5), (3, 4),
    (4, 3), (5, 2), (6, 1), (7, 0), (7, 1), (6, 2), (5, 3), (4, 4),
    (3, 5), (2, 6), (1, 7), (2, 7), (3, 6), (4, 5), (5, 4), (6, 3),
    (7, 2), (7, 3), (6, 4), (5, 5), (4, 6), (3, 7), (4, 7), (5, 6),
    (6, 5), (7, 4), (7, 5), (6, 6), (5, 7), (6, 7), (7, 6), (7, 7),
)

_ZZ_ROWS = np.array([rc[0] for rc in ZIGZAG_8X8])
_ZZ_COLS = np.array([rc[1] for rc in ZIGZAG_8X8])


def zigzag_order(n: int) -> list[tuple[int, int]]:
    """Generate the zigzag scan for an n x n grid (diagonal walk)."""
    order = []
    for s in range(2 * n - 1):
        diag = [(i, s - i) for i in range(max(0, s - n + 1), min(s, n - 1) + 1)]
        # even diagonals are walked bottom-left to top-right
        order.extend(diag if s % 2 else reversed(diag))
    return order


@dataclass(frozen=True)
class Block:
    x: int
    y: int
    values: np.ndarray  # (size, size) intensities


def enumerate_blocks(image: np.ndarray, block_size: int = 8, step: int = 4) -> list[Block]:
    """All fully-contained blocks at top-left positions that are multiples
    of ``step``, in row-major order."""
    h, w = image.shape
    if block_size > w or block_size > h:
        raise ValueError(f"block size {block_size} exceeds image {w}x{h}")
    if step < 1:
        raise ValueError("step must be >= 1")
    return [
        Block(x, y, image[y:y + block_size, x:x + block_size])
        for y in range(0, h - block_size + 1, step)
        for x in range(0, w - block_size + 1, step)
    ]


def block_grid(image: np.ndarray, block_size: int = 8, step: int = 4) -> np.ndarray:
    """All blocks stacked as a (ny, nx, size, size) array (same order and
    positions as :func:`enumerate_blocks`)."""
    h, w = image.shape
    if block_size > w or block_size > h:
        raise ValueError(f"block size {block_size} exceeds image {w}x{h}")
    windows = np.lib.stride_tricks.sliding_window_view(image, (block_size, block_size))
    return windows[::step, ::step]


def dct2(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D type-II DCT of one square block."""
    return dctn(np.asarray(block, dtype=np.float64), type=2, norm="ortho")


def dct_descriptor(block, n_coeffs: int = 15, unit_variance: bool = False) -> np.ndarray:
    """Texture descriptor of one 8x8 block.

    The DC coefficient is discarded, so adding a constant to every pixel
    leaves the descriptor unchanged.  With ``unit_variance`` the remaining
    coefficients are rescaled to unit standard deviation (no-op for
    constant blocks, whose AC coefficients are all zero).
    """
    values = block.values if isinstance(block, Block) else np.asarray(block)
    if values.shape != (8, 8):
        raise ValueError(f"expected an 8x8 block, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("block contains non-finite values")
    coeffs = dct2(values)[_ZZ_ROWS, _ZZ_COLS][1:n_coeffs + 1]
    if unit_variance:
        coeffs = _unit_variance(coeffs)
    return coeffs


def image_descriptors(image: np.ndarray, block_size: int = 8, step: int = 4,
                      n_coeffs: int = 15, unit_variance: bool = False) -> np.ndarray:
    """Descriptors for every block of an image, as an (n_blocks, n_coeffs)
    array in row-major block order."""
    blocks = block_grid(image, block_size, step)
    ny, nx = blocks.shape[:2]
    spectra = dctn(np.asarray(blocks, dtype=np.float64), type=2, norm="ortho", axes=(2, 3))
    coeffs = spectra[:, :, _ZZ_ROWS, _ZZ_COLS][:, :, 1:n_coeffs + 1]
    coeffs = coeffs.reshape(ny * nx, n_coeffs)
    if unit_variance:
        coeffs = _unit_variance(coeffs)
    return coeffs


def _unit_variance(coeffs: np.ndarray) -> np.ndarray:
    std = coeffs.std(axis=-1, keepdims=True)
    return np.divide(coeffs, std, out=np.zeros_like(coeffs), where=std > 0)
