"""Discretized container model.

A container is an L x B grid of integer cell heights with a height cap H.
Boxes occupy axis-aligned footprints; a placement is legal only if the
footprint lies inside the grid, every footprint cell has the same height
(flat base, level corners) and the box top stays at or below H. Placing a
box under an existing one is impossible by construction of the heightmap.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Literal

import numpy as np
from scipy import ndimage

from .errors import CapacityExhausted, PlacementError

Orientation = Literal["asis", "rot90"]

ASIS: Orientation = "asis"
ROT90: Orientation = "rot90"

# asis before rot90 everywhere a tie is broken on orientation
ORIENTATIONS: tuple[Orientation, Orientation] = (ASIS, ROT90)


@dataclass(frozen=True)
class BoxDims:
    """Cuboid dimensions in grid cells: l along i, b along j, h vertical."""

    l: int
    b: int
    h: int

    def __post_init__(self) -> None:
        for name in ("l", "b", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"box dimension {name} must be an integer, got {v!r}")
            if v < 1:
                raise ValueError(f"box dimension {name} must be >= 1, got {v}")

    @property
    def volume(self) -> int:
        return self.l * self.b * self.h


def oriented_dims(box: BoxDims, orientation: Orientation) -> BoxDims:
    """Footprint dims after rotating about the vertical axis; h is unchanged."""
    if orientation == ASIS:
        return box
    if orientation == ROT90:
        return BoxDims(box.b, box.l, box.h)
    raise ValueError(f"unknown orientation {orientation!r}")


@dataclass(frozen=True)
class PlacedBox:
    """A box already in a bin: anchor, oriented footprint dims, resting height."""

    i: int
    j: int
    l: int
    b: int
    h: int
    z: int  # height of the surface it rests on


@dataclass(frozen=True)
class ContainerState:
    """Heightmap state of a single bin. Treat as an immutable value."""

    dims: tuple[int, int, int]
    heights: np.ndarray = field(repr=False)
    placed: tuple[PlacedBox, ...] = ()

    @property
    def L(self) -> int:
        return self.dims[0]

    @property
    def B(self) -> int:
        return self.dims[1]

    @property
    def H(self) -> int:
        return self.dims[2]


def new_container(L: int, B: int, H: int) -> ContainerState:
    """Empty bin with all cell heights zero."""
    if L < 1 or B < 1 or H < 1:
        raise ValueError(f"container dims must be >= 1, got {(L, B, H)}")
    heights = np.zeros((L, B), dtype=np.int32)
    return ContainerState(dims=(L, B, H), heights=heights)


def is_feasible(state: ContainerState, box: BoxDims, anchor: tuple[int, int]) -> bool:
    """True iff the (already oriented) box may be placed with its minimum-index
    corner at anchor: footprint inside the grid, flat base, top within H."""
    i, j = anchor
    if i < 0 or j < 0 or i + box.l > state.L or j + box.b > state.B:
        return False
    region = state.heights[i : i + box.l, j : j + box.b]
    v = int(region[0, 0])
    if not np.all(region == v):
        return False
    return v + box.h <= state.H


def place(state: ContainerState, box: BoxDims, anchor: tuple[int, int]) -> ContainerState:
    """New state with the box placed; raises PlacementError if infeasible."""
    if not is_feasible(state, box, anchor):
        raise PlacementError(f"box {box} infeasible at {anchor} in bin {state.dims}")
    i, j = anchor
    heights = state.heights.copy()
    z = int(heights[i, j])
    heights[i : i + box.l, j : j + box.b] += box.h
    rec = PlacedBox(i=i, j=j, l=box.l, b=box.b, h=box.h, z=z)
    return ContainerState(dims=state.dims, heights=heights, placed=state.placed + (rec,))


def fill_fraction(state: ContainerState) -> float:
    """Occupied volume over bin volume, in [0, 1]."""
    L, B, H = state.dims
    return float(state.heights.sum()) / float(L * B * H)


def _window_extrema(a: np.ndarray, size: int, axis: int, op) -> np.ndarray:
    # start-anchored sliding window: out[k] = op(a[k : k + size]) along axis
    if size == 1:
        return a
    filt = op(a, size=size, axis=axis, mode="nearest")
    n = a.shape[axis]
    start = size // 2
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(start, start + (n - size + 1))
    return filt[tuple(sl)]


def footprint_extrema(heights: np.ndarray, l: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    """(min, max) of every l x b window of the heightmap.

    Output shape is (L-l+1, B-b+1): one entry per anchor. A window is a flat
    resting surface exactly when min == max.
    """
    L, B = heights.shape
    if l > L or b > B:
        empty = np.zeros((max(0, L - l + 1), max(0, B - b + 1)), dtype=heights.dtype)
        return empty, empty.copy()
    vmin = _window_extrema(heights, b, 1, ndimage.minimum_filter1d)
    vmin = _window_extrema(vmin, l, 0, ndimage.minimum_filter1d)
    vmax = _window_extrema(heights, b, 1, ndimage.maximum_filter1d)
    vmax = _window_extrema(vmax, l, 0, ndimage.maximum_filter1d)
    return vmin, vmax


def feasible_anchors(
    state: ContainerState, box: BoxDims
) -> tuple[np.ndarray, np.ndarray]:
    """(mask, resting_height) arrays over all anchors for an oriented box.

    mask[i, j] is True where is_feasible(state, box, (i, j)) holds and
    resting_height[i, j] is the flat surface height there.
    """
    vmin, vmax = footprint_extrema(state.heights, box.l, box.b)
    mask = (vmin == vmax) & (vmin + box.h <= state.H)
    return mask, vmin


@dataclass(frozen=True)
class Placement:
    """Where a box goes: bin index, anchor cell, rotation about the vertical axis."""

    bin: int
    anchor: tuple[int, int]
    orientation: Orientation


@dataclass(frozen=True)
class MultiBinState:
    """A row of bins opened strictly in index order, at most `capacity` of them."""

    bin_dims: tuple[int, int, int]
    capacity: int
    bins: tuple[ContainerState, ...] = ()

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if len(self.bins) > self.capacity:
            raise ValueError("more bins than capacity")

    @property
    def open_count(self) -> int:
        return len(self.bins)

    @classmethod
    def empty(cls, bin_dims: tuple[int, int, int], capacity: int) -> "MultiBinState":
        L, B, H = bin_dims
        if L < 1 or B < 1 or H < 1:
            raise ValueError(f"bin dims must be >= 1, got {bin_dims}")
        return cls(bin_dims=bin_dims, capacity=capacity)


def open_next_bin(ms: MultiBinState) -> MultiBinState:
    """Open one more empty bin; CapacityExhausted once all T are open."""
    if ms.open_count >= ms.capacity:
        raise CapacityExhausted(f"all {ms.capacity} bins already open")
    fresh = new_container(*ms.bin_dims)
    return replace(ms, bins=ms.bins + (fresh,))


def apply_placement(ms: MultiBinState, box: BoxDims, placement: Placement) -> MultiBinState:
    """New multi-bin state with the (unoriented) box placed per the placement."""
    if not (0 <= placement.bin < ms.open_count):
        raise PlacementError(f"bin {placement.bin} is not open (open_count={ms.open_count})")
    od = oriented_dims(box, placement.orientation)
    updated = place(ms.bins[placement.bin], od, placement.anchor)
    bins = ms.bins[: placement.bin] + (updated,) + ms.bins[placement.bin + 1 :]
    return replace(ms, bins=bins)


def placed_volume(ms: MultiBinState) -> int:
    return int(sum(int(c.heights.sum()) for c in ms.bins))


def fill_first(ms: MultiBinState, k: int) -> float:
    """Volume in the first k bins over k bin volumes (unopened bins count empty)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    L, B, H = ms.bin_dims
    vol = sum(int(c.heights.sum()) for c in ms.bins[:k])
    return float(vol) / float(k * L * B * H)


def global_heights(ms: MultiBinState) -> np.ndarray:
    """L x (capacity * B) heightmap of all bins in a row; unopened bins are zero."""
    L, B, _ = ms.bin_dims
    out = np.zeros((L, ms.capacity * B), dtype=np.int32)
    for k, c in enumerate(ms.bins):
        out[:, k * B : (k + 1) * B] = c.heights
    return out


def iter_boxes(boxes: Iterable[tuple[int, int, int]]) -> list[BoxDims]:
    return [BoxDims(*t) for t in boxes]
