"""Baseline online policies and the WallE stability-score policy.

All deciders are pure: they inspect a MultiBinState and return a Decision
without mutating anything. A Decision may reference the not-yet-open bin at
index open_count (opened_new_bin is then set); the caller opens it and applies
the placement. When no placement exists and no bin may be opened, the deciders
raise CapacityExhausted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityExhausted, PlacementError
from .grid import (
    ASIS,
    ORIENTATIONS,
    ROT90,
    BoxDims,
    ContainerState,
    MultiBinState,
    Orientation,
    Placement,
    feasible_anchors,
    is_feasible,
    oriented_dims,
)


@dataclass(frozen=True)
class Decision:
    placement: Placement
    opened_new_bin: bool = False


@dataclass(frozen=True)
class WallEParams:
    """Non-negative weights of the stability score terms.

    score = -mismatch * G_var + snug * G_high + flush * G_flush
            - position * (i + j) - height * (resting height + box height)
    where the G terms are computed over the border cells of the footprint.
    """

    mismatch: float = 0.75
    snug: float = 1.0
    flush: float = 1.0
    position: float = 0.01
    height: float = 1.0

    def __post_init__(self) -> None:
        for name in ("mismatch", "snug", "flush", "position", "height"):
            if getattr(self, name) < 0:
                raise ValueError(f"WallE weight {name} must be >= 0")

    @classmethod
    def from_sequence(cls, vals) -> "WallEParams":
        vals = list(vals)
        if len(vals) != 5:
            raise ValueError("WallEParams needs exactly 5 weights")
        return cls(*(float(v) for v in vals))


def _orientations_for(box: BoxDims) -> tuple[Orientation, ...]:
    # rot90 duplicates asis for square footprints
    if box.l == box.b:
        return (ASIS,)
    return ORIENTATIONS


def _fits_empty_bin(box: BoxDims, dims: tuple[int, int, int]) -> Orientation | None:
    L, B, H = dims
    for orient in _orientations_for(box):
        od = oriented_dims(box, orient)
        if od.l <= L and od.b <= B and od.h <= H:
            return orient
    return None


def _new_bin_decision(ms: MultiBinState, box: BoxDims) -> Decision:
    if ms.open_count >= ms.capacity:
        raise CapacityExhausted(
            f"no feasible placement and all {ms.capacity} bins are open"
        )
    orient = _fits_empty_bin(box, ms.bin_dims)
    if orient is None:
        raise PlacementError(f"box {box} does not fit an empty bin {ms.bin_dims}")
    return Decision(
        placement=Placement(bin=ms.open_count, anchor=(0, 0), orientation=orient),
        opened_new_bin=True,
    )


def first_fit(ms: MultiBinState, box: BoxDims) -> Decision:
    """First feasible placement scanning (bin, orientation, row-major cells)."""
    for bin_idx, cont in enumerate(ms.bins):
        for orient in _orientations_for(box):
            od = oriented_dims(box, orient)
            mask, _ = feasible_anchors(cont, od)
            if mask.size and mask.any():
                flat = int(np.argmax(mask))
                i, j = divmod(flat, mask.shape[1])
                return Decision(Placement(bin_idx, (i, j), orient))
    return _new_bin_decision(ms, box)


def _bin_pick_at_value(per_orient: list[tuple[int, Orientation, np.ndarray, np.ndarray]],
                       value: int) -> tuple[int, int, int, Orientation]:
    """Lexicographically first (i, j, orientation-rank) anchor whose resting
    height equals `value` in any orientation. per_orient holds (rank, orient,
    mask, vmap) entries that are known to contain the value."""
    best = None
    for rank, orient, mask, vmap in per_orient:
        hit = mask & (vmap == value)
        if not hit.any():
            continue
        flat = int(np.argmax(hit))
        i, j = divmod(flat, hit.shape[1])
        key = (i, j, rank)
        if best is None or key < best[0]:
            best = (key, (i, j, orient))
    assert best is not None
    i, j, orient = best[1]
    return i, j, best[0][2], orient


def _extreme_height_decide(ms: MultiBinState, box: BoxDims, lowest: bool) -> Decision:
    best: tuple[int, int, tuple[int, int], Orientation] | None = None  # (v, bin, anchor, orient)
    for bin_idx, cont in enumerate(ms.bins):
        per_orient = []
        extremes = []
        for rank, orient in enumerate(_orientations_for(box)):
            od = oriented_dims(box, orient)
            mask, vmap = feasible_anchors(cont, od)
            if mask.size and mask.any():
                vals = vmap[mask]
                ext = int(vals.min() if lowest else vals.max())
                per_orient.append((rank, orient, mask, vmap))
                extremes.append(ext)
        if not per_orient:
            continue
        bin_ext = min(extremes) if lowest else max(extremes)
        i, j, _, orient = _bin_pick_at_value(per_orient, bin_ext)
        if best is None or (bin_ext < best[0] if lowest else bin_ext > best[0]):
            best = (bin_ext, bin_idx, (i, j), orient)
    if best is None:
        return _new_bin_decision(ms, box)
    _, bin_idx, anchor, orient = best
    return Decision(Placement(bin_idx, anchor, orient))


def floor_build(ms: MultiBinState, box: BoxDims) -> Decision:
    """Lowest feasible resting height; ties by (bin, i, j, asis-first)."""
    return _extreme_height_decide(ms, box, lowest=True)


def column_build(ms: MultiBinState, box: BoxDims) -> Decision:
    """Highest feasible resting height; ties by (bin, i, j, asis-first)."""
    return _extreme_height_decide(ms, box, lowest=False)


def walle_score(
    state: ContainerState,
    box: BoxDims,
    anchor: tuple[int, int],
    params: WallEParams = WallEParams(),
) -> float:
    """Stability score of placing the (oriented) box at anchor.

    Border cells are the 2(l+b) orthogonal neighbors of the footprint
    (diagonal corners excluded). Cells clipped by a container wall contribute
    zero height difference and are excluded from the high/flush counts.
    """
    if not is_feasible(state, box, anchor):
        raise PlacementError(f"box {box} infeasible at {anchor}")
    i, j = anchor
    l, b, h = box.l, box.b, box.h
    top = int(state.heights[i, j]) + h
    A = state.heights
    strips = []
    if i >= 1:
        strips.append(A[i - 1, j : j + b])
    if i + l <= state.L - 1:
        strips.append(A[i + l, j : j + b])
    if j >= 1:
        strips.append(A[i : i + l, j - 1])
    if j + b <= state.B - 1:
        strips.append(A[i : i + l, j + b])
    gvar = 0
    ghigh = 0
    gflush = 0
    for s in strips:
        d = s.astype(np.int64) - top
        gvar += int(np.abs(d).sum())
        ghigh += int((d > 0).sum())
        gflush += int((d == 0).sum())
    return float(
        -params.mismatch * gvar
        + params.snug * ghigh
        + params.flush * gflush
        - params.position * (i + j)
        - params.height * top
    )


def _row_window_sums(X: np.ndarray, w: int) -> np.ndarray:
    c = X.cumsum(axis=1, dtype=np.int64)
    out = c[:, w - 1 :].copy()
    out[:, 1:] -= c[:, :-w]
    return out


def _col_window_sums(X: np.ndarray, w: int) -> np.ndarray:
    c = X.cumsum(axis=0, dtype=np.int64)
    out = c[w - 1 :, :].copy()
    out[1:, :] -= c[:-w, :]
    return out


def _gather(arr: np.ndarray, rows: np.ndarray, cols: np.ndarray, valid: np.ndarray) -> np.ndarray:
    r = np.where(valid, rows, 0)
    c = np.where(valid, cols, 0)
    return np.where(valid, arr[r, c], 0)


def _walle_scores_grid(
    cont: ContainerState,
    od: BoxDims,
    mask: np.ndarray,
    vmap: np.ndarray,
    params: WallEParams,
) -> np.ndarray:
    """Score of every feasible anchor for one oriented box; -inf elsewhere.

    Vectorized equivalent of walle_score: for each distinct box-top level t,
    border aggregates are strip sums of thresholded heightmaps, read off
    windowed cumulative sums.
    """
    out = np.full(mask.shape, -np.inf, dtype=np.float64)
    if not (mask.size and mask.any()):
        return out
    A = cont.heights
    L, B = A.shape
    l, b, h = od.l, od.b, od.h
    ii, jj = np.nonzero(mask)
    tt = vmap[ii, jj].astype(np.int64) + h
    rw_tot = _row_window_sums(A, b)
    cw_tot = _col_window_sums(A, l)
    scores = np.empty(ii.shape[0], dtype=np.float64)
    for t in np.unique(tt):
        sel = tt == t
        si, sj = ii[sel], jj[sel]
        le = (A <= t).astype(np.int64)
        sle = A.astype(np.int64) * le
        eq = (A == t).astype(np.int64)
        rw = {"le": _row_window_sums(le, b), "sle": _row_window_sums(sle, b), "eq": _row_window_sums(eq, b)}
        cw = {"le": _col_window_sums(le, l), "sle": _col_window_sums(sle, l), "eq": _col_window_sums(eq, l)}
        gvar = np.zeros(si.shape[0], dtype=np.int64)
        ghigh = np.zeros_like(gvar)
        gflush = np.zeros_like(gvar)
        # strips: (windowed tables, row index, col index, validity, cell count)
        strip_specs = (
            (rw_tot, rw, si - 1, sj, si >= 1, b),
            (rw_tot, rw, si + l, sj, si + l <= L - 1, b),
            (cw_tot, cw, si, sj - 1, sj >= 1, l),
            (cw_tot, cw, si, sj + b, sj + b <= B - 1, l),
        )
        for tot_tbl, tbl, r, c, valid, width in strip_specs:
            tot = _gather(tot_tbl, r, c, valid)
            le_sum = _gather(tbl["sle"], r, c, valid)
            le_cnt = _gather(tbl["le"], r, c, valid)
            eq_cnt = _gather(tbl["eq"], r, c, valid)
            cnt = np.where(valid, width, 0)
            gvar += tot - 2 * le_sum + t * (2 * le_cnt - cnt)
            ghigh += cnt - le_cnt
            gflush += eq_cnt
        scores[sel] = (
            -params.mismatch * gvar
            + params.snug * ghigh
            + params.flush * gflush
            - params.position * (si + sj)
            - params.height * t
        )
    out[ii, jj] = scores
    return out


def walle_decide(
    ms: MultiBinState, box: BoxDims, params: WallEParams = WallEParams()
) -> Decision:
    """Highest stability score over all feasible (bin, cell, orientation);
    ties by (bin, i, j, asis-first). Opens a new bin when nothing fits."""
    best: tuple[float, int, tuple[int, int], Orientation] | None = None
    for bin_idx, cont in enumerate(ms.bins):
        per_orient = []
        for rank, orient in enumerate(_orientations_for(box)):
            od = oriented_dims(box, orient)
            mask, vmap = feasible_anchors(cont, od)
            if mask.size and mask.any():
                per_orient.append((rank, orient, _walle_scores_grid(cont, od, mask, vmap, params)))
        if not per_orient:
            continue
        bin_max = max(float(s.max()) for _, _, s in per_orient)
        pick = None
        for rank, orient, sc in per_orient:
            hit = sc == bin_max
            if not hit.any():
                continue
            flat = int(np.argmax(hit))
            i, j = divmod(flat, hit.shape[1])
            key = (i, j, rank)
            if pick is None or key < pick[0]:
                pick = (key, (i, j), orient)
        assert pick is not None
        if best is None or bin_max > best[0]:
            best = (bin_max, bin_idx, pick[1], pick[2])
    if best is None:
        return _new_bin_decision(ms, box)
    _, bin_idx, anchor, orient = best
    return Decision(Placement(bin_idx, anchor, orient))
