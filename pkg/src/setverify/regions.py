"""Dense direct regions, compound regions, and their descriptors.

A direct region is a p x p window whose descriptor is the average of the
posterior histograms of all blocks fully contained in it; averaging is done
through a summed-area table over the block-histogram grid.  A compound
region aggregates 3 aligned direct regions (horizontal or vertical) or 5
(cross) by elementwise sum, with the outer cell centers placed ``offset``
pixels from the middle cell center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SHAPES = ("horizontal", "vertical", "cross")


@dataclass(frozen=True)
class RegionSpec:
    x: int
    y: int
    size: int


@dataclass(frozen=True)
class CompoundSpec:
    shape: str          # horizontal | vertical | cross
    x: int              # top-left of the middle cell
    y: int
    size: int
    offset: int         # distance between adjacent cell centers, in pixels

    def cells(self) -> tuple[RegionSpec, ...]:
        p, o = self.size, self.offset
        mid = RegionSpec(self.x, self.y, p)
        left = RegionSpec(self.x - o, self.y, p)
        right = RegionSpec(self.x + o, self.y, p)
        top = RegionSpec(self.x, self.y - o, p)
        bottom = RegionSpec(self.x, self.y + o, p)
        if self.shape == "horizontal":
            return (left, mid, right)
        if self.shape == "vertical":
            return (top, mid, bottom)
        if self.shape == "cross":
            return (mid, left, right, top, bottom)
        raise ValueError(f"unknown compound shape: {self.shape}")


def enumerate_direct(width: int, height: int, size: int, stride: int = 1) -> list[RegionSpec]:
    """All fully-contained positions with x, y multiples of stride, row-major."""
    if size > width or size > height:
        raise ValueError(f"region size {size} exceeds image {width}x{height}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    return [RegionSpec(x, y, size)
            for y in range(0, height - size + 1, stride)
            for x in range(0, width - size + 1, stride)]


def enumerate_compound(width: int, height: int, size: int,
                       offsets: tuple[int, ...], stride: int = 1) -> list[CompoundSpec]:
    """Compound regions ordered by shape, then offset, then row-major middle
    cell.  Every cell must be a valid direct-region position, so offsets that
    are not multiples of the stride (or too large) yield no placements."""
    if not offsets:
        raise ValueError("offsets must not be empty")
    max_x = width - size
    max_y = height - size
    if max_x < 0 or max_y < 0:
        raise ValueError(f"region size {size} exceeds image {width}x{height}")
    out = []
    for shape in SHAPES:
        for o in offsets:
            if o % stride != 0:
                continue
            x_lo = o if shape in ("horizontal", "cross") else 0
            x_hi = max_x - o if shape in ("horizontal", "cross") else max_x
            y_lo = o if shape in ("vertical", "cross") else 0
            y_hi = max_y - o if shape in ("vertical", "cross") else max_y
            for y in range(y_lo, y_hi + 1, stride):
                for x in range(x_lo, x_hi + 1, stride):
                    out.append(CompoundSpec(shape, x, y, size, o))
    return out


class BlockHistogramTable:
    """Summed-area table over the block-histogram grid of one image.

    ``histograms`` is (ny, nx, G) where cell (by, bx) holds the posterior
    histogram of the block whose top-left pixel is (bx*step, by*step).
    """

    def __init__(self, histograms: np.ndarray, block_size: int, step: int):
        if histograms.ndim != 3:
            raise ValueError("expected (ny, nx, G) block histograms")
        self.histograms = histograms
        self.block_size = block_size
        self.step = step
        ny, nx, g = histograms.shape
        self.sat = np.zeros((ny + 1, nx + 1, g))
        np.cumsum(histograms, axis=0, out=self.sat[1:, 1:])
        np.cumsum(self.sat[1:, 1:], axis=1, out=self.sat[1:, 1:])

    def block_index_range(self, start: int, extent: int) -> tuple[int, int]:
        """Inclusive index range of blocks fully inside [start, start+extent)
        along one axis."""
        lo = -(-start // self.step)  # ceil
        hi = (start + extent - self.block_size) // self.step
        return lo, hi

    def region_average(self, spec: RegionSpec) -> np.ndarray:
        """Average histogram over all blocks fully inside the region."""
        x_lo, x_hi = self.block_index_range(spec.x, spec.size)
        y_lo, y_hi = self.block_index_range(spec.y, spec.size)
        ny, nx = self.histograms.shape[:2]
        x_hi = min(x_hi, nx - 1)
        y_hi = min(y_hi, ny - 1)
        if x_hi < x_lo or y_hi < y_lo:
            raise ValueError(f"region at ({spec.x},{spec.y}) contains no blocks")
        n = (x_hi - x_lo + 1) * (y_hi - y_lo + 1)
        s = (self.sat[y_hi + 1, x_hi + 1] - self.sat[y_lo, x_hi + 1]
             - self.sat[y_hi + 1, x_lo] + self.sat[y_lo, x_lo])
        return s / n

    def region_averages(self, specs: list[RegionSpec]) -> np.ndarray:
        """Vectorized :meth:`region_average` over many regions, (n, G)."""
        ny, nx = self.histograms.shape[:2]
        xs = np.array([s.x for s in specs])
        ys = np.array([s.y for s in specs])
        sizes = np.array([s.size for s in specs])
        x_lo = -(-xs // self.step)
        y_lo = -(-ys // self.step)
        x_hi = np.minimum((xs + sizes - self.block_size) // self.step, nx - 1)
        y_hi = np.minimum((ys + sizes - self.block_size) // self.step, ny - 1)
        if np.any(x_hi < x_lo) or np.any(y_hi < y_lo):
            raise ValueError("some regions contain no blocks")
        counts = (x_hi - x_lo + 1) * (y_hi - y_lo + 1)
        s = (self.sat[y_hi + 1, x_hi + 1] - self.sat[y_lo, x_hi + 1]
             - self.sat[y_hi + 1, x_lo] + self.sat[y_lo, x_lo])
        return s / counts[:, None]


def direct_descriptor(table: BlockHistogramTable, spec: RegionSpec) -> np.ndarray:
    """Average posterior histogram of one direct region (sums to 1)."""
    return table.region_average(spec)


def compound_descriptor(direct_descriptors: dict | np.ndarray, spec: CompoundSpec,
                        layout: "RegionLayout | None" = None,
                        normalize: bool = False) -> np.ndarray:
    """Elementwise sum over the constituent cells' direct descriptors.

    ``direct_descriptors`` is either a mapping {(x, y): histogram} or the
    (n_direct, G) array aligned with ``layout.direct``.  Without
    normalization the entries sum to the number of cells.
    """
    parts = []
    for cell in spec.cells():
        if isinstance(direct_descriptors, dict):
            try:
                parts.append(direct_descriptors[(cell.x, cell.y)])
            except KeyError:
                raise KeyError(f"missing direct descriptor for cell at "
                               f"({cell.x},{cell.y})") from None
        else:
            if layout is None:
                raise ValueError("array form requires the layout")
            parts.append(direct_descriptors[layout.direct_index(cell.x, cell.y)])
    total = np.sum(parts, axis=0)
    return total / len(parts) if normalize else total


class RegionLayout:
    """The fixed, ordered list of all regions: direct ones first (row-major),
    then compound ones (by shape, offset, row-major middle cell)."""

    def __init__(self, width: int, height: int, size: int, stride: int,
                 offsets: tuple[int, ...]):
        self.width = width
        self.height = height
        self.size = size
        self.stride = stride
        self.offsets = tuple(offsets)
        self.direct = enumerate_direct(width, height, size, stride)
        self.compound = enumerate_compound(width, height, size, self.offsets, stride)
        self.nx = (width - size) // stride + 1
        self.ny = (height - size) // stride + 1
        # direct-index lookups for every compound cell, grouped by cell count
        # so descriptor pooling stays vectorized
        idx3, rows3, idx5, rows5 = [], [], [], []
        for row, spec in enumerate(self.compound):
            cells = [self.direct_index(c.x, c.y) for c in spec.cells()]
            if len(cells) == 3:
                idx3.append(cells)
                rows3.append(row)
            else:
                idx5.append(cells)
                rows5.append(row)
        self._idx3 = np.array(idx3, dtype=np.intp).reshape(-1, 3)
        self._rows3 = np.array(rows3, dtype=np.intp)
        self._idx5 = np.array(idx5, dtype=np.intp).reshape(-1, 5)
        self._rows5 = np.array(rows5, dtype=np.intp)

    @classmethod
    def from_config(cls, cfg) -> "RegionLayout":
        return cls(cfg.image_size, cfg.image_size, cfg.region_size,
                   cfg.region_stride, cfg.compound_offsets)

    @property
    def n_direct(self) -> int:
        return len(self.direct)

    @property
    def n_compound(self) -> int:
        return len(self.compound)

    @property
    def n_regions(self) -> int:
        return self.n_direct + self.n_compound

    def direct_index(self, x: int, y: int) -> int:
        if x % self.stride or y % self.stride:
            raise ValueError(f"({x},{y}) is not on the stride-{self.stride} grid")
        ix, iy = x // self.stride, y // self.stride
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise ValueError(f"({x},{y}) is outside the direct-region grid")
        return iy * self.nx + ix

    def region(self, j: int) -> RegionSpec | CompoundSpec:
        if not 0 <= j < self.n_regions:
            raise IndexError(f"region index {j} out of range (0..{self.n_regions - 1})")
        return self.direct[j] if j < self.n_direct else self.compound[j - self.n_direct]

    def region_descriptors(self, table: BlockHistogramTable,
                           normalize_compound: bool = False) -> np.ndarray:
        """Descriptors for every region of one image, (n_regions, G)."""
        direct = table.region_averages(self.direct)
        g = direct.shape[1]
        comp = np.empty((self.n_compound, g))
        if len(self._rows3):
            comp[self._rows3] = direct[self._idx3].sum(axis=1)
        if len(self._rows5):
            comp[self._rows5] = direct[self._idx5].sum(axis=1)
        if normalize_compound:
            cells = np.empty((self.n_compound, 1))
            cells[self._rows3] = 3.0
            cells[self._rows5] = 5.0
            comp = comp / cells
        return np.concatenate([direct, comp], axis=0)

    def region_mask(self, j: int) -> np.ndarray:
        """Boolean (H, W) coverage of region j (union of cells for compounds)."""
        mask = np.zeros((self.height, self.width), dtype=bool)
        spec = self.region(j)
        cells = spec.cells() if isinstance(spec, CompoundSpec) else (spec,)
        for c in cells:
            mask[c.y:c.y + c.size, c.x:c.x + c.size] = True
        return mask
