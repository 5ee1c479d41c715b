"""Fixed-size DQN input encoding for arbitrary bin layouts.

The global state is the row of all capacity bins, an L x (T*B) heightmap.
A 4 x 36 partition tiles it into 144 disjoint receptive fields; per tile the
encoder emits average, max and max-min height, normalized by H, giving the
432-entry state vector. A proposed placement adds a 144-entry clockwise walk
of its border heights (walls read 1.0) and a 144-entry one-hot of the tile
containing its anchor. Output shapes are layout-independent, which is what
lets one trained model evaluate on a different bin count without retraining.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import BoxDims, ContainerState, MultiBinState, global_heights

PARTITION_ROWS = 4
PARTITION_COLS = 36
BORDER_LEN = 144
STATE_LEN = 3 * PARTITION_ROWS * PARTITION_COLS


def _band_edges(n: int, k: int) -> np.ndarray:
    # balanced bands, sizes differing by at most one, larger bands first
    base, rem = divmod(n, k)
    sizes = [base + 1] * rem + [base] * (k - rem)
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


@dataclass(frozen=True)
class FieldPartition:
    """144 disjoint tiles covering the L x (capacity*B) global grid."""

    rows: int
    cols: int
    row_edges: np.ndarray = field(repr=False)
    col_edges: np.ndarray = field(repr=False)
    bin_cols: int  # B of a single bin
    height_cap: int  # H, the normalization constant

    @classmethod
    def for_layout(
        cls,
        bin_dims: tuple[int, int, int],
        capacity: int,
        rows: int = PARTITION_ROWS,
        cols: int = PARTITION_COLS,
    ) -> "FieldPartition":
        L, B, H = bin_dims
        total = capacity * B
        if L < rows:
            raise ValueError(f"grid length {L} smaller than {rows} row bands")
        if total < cols:
            raise ValueError(f"global width {total} smaller than {cols} column bands")
        return cls(
            rows=rows,
            cols=cols,
            row_edges=_band_edges(L, rows),
            col_edges=_band_edges(total, cols),
            bin_cols=B,
            height_cap=H,
        )

    @property
    def tile_count(self) -> int:
        return self.rows * self.cols

    @property
    def areas(self) -> np.ndarray:
        """Flat (tile_count,) cell counts, row-major over (row band, col band)."""
        h = np.diff(self.row_edges)
        w = np.diff(self.col_edges)
        return np.outer(h, w).ravel()

    def tile_of(self, gi: int, gj: int) -> int:
        rb = int(np.searchsorted(self.row_edges, gi, side="right")) - 1
        cb = int(np.searchsorted(self.col_edges, gj, side="right")) - 1
        return rb * self.cols + cb


@dataclass(frozen=True)
class EncodedInput:
    x: np.ndarray  # 3 * 144 pooled state
    y: np.ndarray  # 144 border heights
    z: np.ndarray  # 144 one-hot anchor tile


def _tile_stats(g: np.ndarray, p: FieldPartition) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sums, maxs, mins) per tile, flat row-major; exact integer stats."""
    g64 = g.astype(np.int64)
    cs = p.col_edges[:-1]
    rs = p.row_edges[:-1]
    sums = np.add.reduceat(np.add.reduceat(g64, cs, axis=1), rs, axis=0)
    maxs = np.maximum.reduceat(np.maximum.reduceat(g64, cs, axis=1), rs, axis=0)
    mins = np.minimum.reduceat(np.minimum.reduceat(g64, cs, axis=1), rs, axis=0)
    return sums.ravel(), maxs.ravel(), mins.ravel()


def x_from_tile_stats(
    sums: np.ndarray, maxs: np.ndarray, mins: np.ndarray, areas: np.ndarray, H: int
) -> np.ndarray:
    """State vector from per-tile integer stats. Works on (144,) vectors and
    on (N, 144) batches alike; the arithmetic is elementwise and identical."""
    return np.concatenate(
        [sums / (areas * H), maxs / H, (maxs - mins) / H], axis=-1
    ).astype(np.float64)


def encode_state(ms: MultiBinState, partition: FieldPartition | None = None) -> np.ndarray:
    """432 pooled values: per tile (avg, max, max-min) / H, blocks in that order."""
    p = partition or FieldPartition.for_layout(ms.bin_dims, ms.capacity)
    sums, maxs, mins = _tile_stats(global_heights(ms), p)
    return x_from_tile_stats(sums, maxs, mins, p.areas, p.height_cap)


def border_levels(
    heights: np.ndarray, H: int, box: BoxDims, anchor: tuple[int, int]
) -> np.ndarray:
    """Raw border walk as integer levels: clockwise from the cell above the
    anchor (north strip, then east, south reversed, west reversed). Wall cells
    read H so they normalize to 1.0; the tail is zero-padded. Perimeters over
    144 are thinned to every ceil(P/144)-th cell."""
    L, B = heights.shape
    i, j = anchor
    l, b = box.l, box.b
    strips = []
    if i - 1 >= 0:
        strips.append(heights[i - 1, j : j + b])
    else:
        strips.append(np.full(b, H, dtype=heights.dtype))
    if j + b <= B - 1:
        strips.append(heights[i : i + l, j + b])
    else:
        strips.append(np.full(l, H, dtype=heights.dtype))
    if i + l <= L - 1:
        strips.append(heights[i + l, j : j + b][::-1])
    else:
        strips.append(np.full(b, H, dtype=heights.dtype))
    if j - 1 >= 0:
        strips.append(heights[i : i + l, j - 1][::-1])
    else:
        strips.append(np.full(l, H, dtype=heights.dtype))
    walk = np.concatenate(strips)
    P = walk.shape[0]
    if P > BORDER_LEN:
        step = -(-P // BORDER_LEN)
        walk = walk[::step]
    out = np.zeros(BORDER_LEN, dtype=np.int16)
    out[: walk.shape[0]] = walk
    return out


def encode_border(
    projected: ContainerState, box: BoxDims, anchor: tuple[int, int]
) -> np.ndarray:
    """144 border heights of the placement, normalized by H, walls as 1.0."""
    levels = border_levels(projected.heights, projected.H, box, anchor)
    return levels / projected.H


def encode_field_onehot(
    partition: FieldPartition, anchor: tuple[int, int], bin_idx: int
) -> np.ndarray:
    """One-hot over the 144 tiles for the anchor's global cell."""
    i, j = anchor
    gj = bin_idx * partition.bin_cols + j
    if i < 0 or gj < 0 or i >= partition.row_edges[-1] or gj >= partition.col_edges[-1]:
        raise ValueError(f"anchor {(i, j)} in bin {bin_idx} lies outside the grid")
    z = np.zeros(partition.tile_count, dtype=np.float64)
    z[partition.tile_of(i, gj)] = 1.0
    return z


def encode_placement(
    ms_projected: MultiBinState,
    box: BoxDims,
    bin_idx: int,
    anchor: tuple[int, int],
    partition: FieldPartition | None = None,
) -> EncodedInput:
    """Full (x, y, z) for a placement already applied in ms_projected.
    Reference implementation; the training loop uses GlobalView instead."""
    p = partition or FieldPartition.for_layout(ms_projected.bin_dims, ms_projected.capacity)
    x = encode_state(ms_projected, p)
    y = encode_border(ms_projected.bins[bin_idx], box, anchor)
    z = encode_field_onehot(p, anchor, bin_idx)
    return EncodedInput(x=x, y=y, z=z)


class GlobalView:
    """Incrementally maintained global heightmap with per-tile stats.

    Candidate encoding only touches tiles overlapping the footprint, so a
    projected state vector costs a handful of small reductions instead of a
    full-grid pass. apply() commits the chosen placement. Results are
    bit-identical to the pure encoders (tested property).
    """

    def __init__(self, ms: MultiBinState, partition: FieldPartition | None = None):
        self.partition = partition or FieldPartition.for_layout(ms.bin_dims, ms.capacity)
        self.bin_cols = ms.bin_dims[1]
        self.H = ms.bin_dims[2]
        self.areas = self.partition.areas
        self.grid = global_heights(ms)
        self._rebuild_stats()

    def _rebuild_stats(self) -> None:
        sums, maxs, mins = _tile_stats(self.grid, self.partition)
        self.sums = sums
        self.maxs = maxs
        self.mins = mins

    def _affected_tiles(self, r0: int, r1: int, c0: int, c1: int):
        p = self.partition
        rb0 = int(np.searchsorted(p.row_edges, r0, side="right")) - 1
        rb1 = int(np.searchsorted(p.row_edges, r1 - 1, side="right")) - 1
        cb0 = int(np.searchsorted(p.col_edges, c0, side="right")) - 1
        cb1 = int(np.searchsorted(p.col_edges, c1 - 1, side="right")) - 1
        for rb in range(rb0, rb1 + 1):
            for cb in range(cb0, cb1 + 1):
                yield rb, cb

    def _bounds(self, rb: int, cb: int) -> tuple[int, int, int, int]:
        p = self.partition
        return (
            int(p.row_edges[rb]),
            int(p.row_edges[rb + 1]),
            int(p.col_edges[cb]),
            int(p.col_edges[cb + 1]),
        )

    def footprint_span(
        self, bin_idx: int, anchor: tuple[int, int], box: BoxDims
    ) -> tuple[int, int, int, int]:
        i, j = anchor
        gj = bin_idx * self.bin_cols + j
        return i, i + box.l, gj, gj + box.b

    def projected_tile_stats(
        self, bin_idx: int, anchor: tuple[int, int], box: BoxDims, new_top: int
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-tile stats after hypothetically raising the footprint to new_top."""
        r0, r1, c0, c1 = self.footprint_span(bin_idx, anchor, box)
        sums = self.sums.copy()
        maxs = self.maxs.copy()
        mins = self.mins.copy()
        for rb, cb in self._affected_tiles(r0, r1, c0, c1):
            re0, re1, ce0, ce1 = self._bounds(rb, cb)
            tile = self.grid[re0:re1, ce0:ce1].astype(np.int64)
            patched = tile.copy()
            patched[
                max(r0, re0) - re0 : min(r1, re1) - re0,
                max(c0, ce0) - ce0 : min(c1, ce1) - ce0,
            ] = new_top
            idx = rb * self.partition.cols + cb
            sums[idx] = patched.sum()
            maxs[idx] = patched.max()
            mins[idx] = patched.min()
        return sums, maxs, mins

    def x_current(self) -> np.ndarray:
        return x_from_tile_stats(self.sums, self.maxs, self.mins, self.areas, self.H)

    def x_projected(
        self, bin_idx: int, anchor: tuple[int, int], box: BoxDims, new_top: int
    ) -> np.ndarray:
        sums, maxs, mins = self.projected_tile_stats(bin_idx, anchor, box, new_top)
        return x_from_tile_stats(sums, maxs, mins, self.areas, self.H)

    def border_levels(
        self, bin_idx: int, anchor: tuple[int, int], box: BoxDims
    ) -> np.ndarray:
        lo = bin_idx * self.bin_cols
        bin_heights = self.grid[:, lo : lo + self.bin_cols]
        return border_levels(bin_heights, self.H, box, anchor)

    def z_index(self, bin_idx: int, anchor: tuple[int, int]) -> int:
        return self.partition.tile_of(anchor[0], bin_idx * self.bin_cols + anchor[1])

    def apply(
        self, bin_idx: int, anchor: tuple[int, int], box: BoxDims, new_top: int
    ) -> None:
        """Commit a placement: raise the footprint and refresh affected tiles."""
        r0, r1, c0, c1 = self.footprint_span(bin_idx, anchor, box)
        self.grid[r0:r1, c0:c1] = new_top
        for rb, cb in self._affected_tiles(r0, r1, c0, c1):
            re0, re1, ce0, ce1 = self._bounds(rb, cb)
            tile = self.grid[re0:re1, ce0:ce1].astype(np.int64)
            idx = rb * self.partition.cols + cb
            self.sums[idx] = tile.sum()
            self.maxs[idx] = tile.max()
            self.mins[idx] = tile.min()
