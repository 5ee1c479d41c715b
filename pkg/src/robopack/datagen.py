"""Synthetic box streams that tile a known number of bins at exactly 100% fill.

Each bin starts as one box spanning the whole container and is recursively
guillotine-split (largest volume first, random axis, random offset with both
children at least 2 cells thick). The split tree is kept as provenance: its
leaves are the boxes, and replaying the leaves is a perfect packing, so the
optimal bin count Opt(I) is known by construction.

Presentation order is a seeded random shuffle constrained to be bottom-up:
a box can only appear once every box strictly below its resting plane has
appeared, which keeps the recorded packing replayable under the flat-base
placement rules. Within that constraint the choice is uniform at each step.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .grid import BoxDims

FORMAT_VERSION = 1


@dataclass(frozen=True)
class EpisodeSpec:
    seed: int
    opt_bins: int
    bin_dims: tuple[int, int, int]
    box_count_range: tuple[int, int]
    lookahead: int = 2

    def __post_init__(self) -> None:
        lo, hi = self.box_count_range
        if lo > hi:
            raise ValueError(f"count range is empty: {self.box_count_range}")
        if self.opt_bins < 1:
            raise ValueError("opt_bins must be >= 1")
        if self.lookahead < 0:
            raise ValueError("lookahead must be >= 0")


@dataclass
class SplitNode:
    """A cuboid region of one bin. Internal nodes carry the cut, leaves a box."""

    origin: tuple[int, int, int]  # (i, j, z)
    dims: tuple[int, int, int]  # (l, b, h)
    axis: int | None = None
    offset: int | None = None
    children: tuple["SplitNode", "SplitNode"] | None = None
    box_index: int | None = None  # presentation-order index, leaves only


@dataclass(frozen=True)
class BoxStream:
    boxes: tuple[BoxDims, ...]
    spec: EpisodeSpec
    split_tree: tuple[SplitNode, ...]  # one root per bin


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def _split_leaf(leaf: SplitNode, axis: int, offset: int) -> tuple[SplitNode, SplitNode]:
    i, j, z = leaf.origin
    l, b, h = leaf.dims
    if axis == 0:
        a = SplitNode((i, j, z), (offset, b, h))
        c = SplitNode((i + offset, j, z), (l - offset, b, h))
    elif axis == 1:
        a = SplitNode((i, j, z), (l, offset, h))
        c = SplitNode((i, j + offset, z), (l, b - offset, h))
    else:
        a = SplitNode((i, j, z), (l, b, offset))
        c = SplitNode((i, j, z + offset), (l, b, h - offset))
    leaf.axis = axis
    leaf.offset = offset
    leaf.children = (a, c)
    return a, c


def _collect_leaves(roots: tuple[SplitNode, ...]) -> list[tuple[int, SplitNode]]:
    """(bin index, leaf) pairs in depth-first order."""
    out: list[tuple[int, SplitNode]] = []
    for bin_idx, root in enumerate(roots):
        stack = [root]
        while stack:
            node = stack.pop()
            if node.children is None:
                out.append((bin_idx, node))
            else:
                stack.extend(reversed(node.children))
    return out


def _footprints_intersect(a: SplitNode, b: SplitNode) -> bool:
    ai, aj, _ = a.origin
    al, ab, _ = a.dims
    bi, bj, _ = b.origin
    bl, bb, _ = b.dims
    return ai < bi + bl and bi < ai + al and aj < bj + bb and bj < aj + ab


def _bottom_up_order(
    roots: tuple[SplitNode, ...], rng: np.random.Generator
) -> list[tuple[int, SplitNode]]:
    """Uniform random order among boxes whose below-plane support is complete."""
    leaves = _collect_leaves(roots)
    n = len(leaves)
    deps = [0] * n
    above: list[list[int]] = [[] for _ in range(n)]
    by_bin: dict[int, list[int]] = {}
    for idx, (bin_idx, _) in enumerate(leaves):
        by_bin.setdefault(bin_idx, []).append(idx)
    for members in by_bin.values():
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                ax, ay = members[x], members[y]
                la, lb = leaves[ax][1], leaves[ay][1]
                if not _footprints_intersect(la, lb):
                    continue
                # disjoint cuboids with overlapping footprints stack vertically
                if la.origin[2] < lb.origin[2]:
                    above[ax].append(ay)
                    deps[ay] += 1
                else:
                    above[ay].append(ax)
                    deps[ax] += 1
    ready = [idx for idx in range(n) if deps[idx] == 0]
    order: list[tuple[int, SplitNode]] = []
    while ready:
        k = int(rng.integers(len(ready)))
        ready[k], ready[-1] = ready[-1], ready[k]
        idx = ready.pop()
        order.append(leaves[idx])
        for nxt in above[idx]:
            deps[nxt] -= 1
            if deps[nxt] == 0:
                ready.append(nxt)
    assert len(order) == n, "cycle in support graph (impossible for disjoint cuboids)"
    return order


def generate_episode(spec: EpisodeSpec) -> BoxStream:
    """Deterministic stream for the given episode spec; raises ValueError if the
    count range cannot be met (too few cells, or splitting stalls before the minimum)."""
    L, B, H = spec.bin_dims
    lo, hi = spec.box_count_range
    if lo < spec.opt_bins:
        raise ValueError(
            f"count minimum {lo} below opt_bins {spec.opt_bins}: bins cannot stay empty"
        )
    if hi > spec.opt_bins * L * B * H:
        raise ValueError(f"count maximum {hi} exceeds total cell count")
    rng = np.random.default_rng(spec.seed)
    target = int(rng.integers(lo, hi + 1))
    roots = tuple(SplitNode((0, 0, 0), (L, B, H)) for _ in range(spec.opt_bins))
    heap: list[tuple[int, int, SplitNode]] = []
    counter = 0
    for root in roots:
        heapq.heappush(heap, (-L * B * H, counter, root))
        counter += 1
    count = spec.opt_bins
    while count < target and heap:
        _, _, leaf = heapq.heappop(heap)
        axes = [ax for ax in range(3) if leaf.dims[ax] >= 4]
        if not axes:
            continue  # unsplittable without a child thinner than 2 cells
        axis = axes[int(rng.integers(len(axes)))]
        dim = leaf.dims[axis]
        offset = int(rng.integers(2, dim - 1))  # both children >= 2 cells
        for child in _split_leaf(leaf, axis, offset):
            vol = child.dims[0] * child.dims[1] * child.dims[2]
            heapq.heappush(heap, (-vol, counter, child))
            counter += 1
        count += 1
    if count < lo:
        raise ValueError(
            f"splitting stalled at {count} boxes; minimum {lo} is unachievable "
            f"for bins {spec.bin_dims} under the 2-cell rule"
        )
    order = _bottom_up_order(roots, rng)
    boxes = []
    for pos, (_, leaf) in enumerate(order):
        leaf.box_index = pos
        boxes.append(BoxDims(*leaf.dims))
    return BoxStream(boxes=tuple(boxes), spec=spec, split_tree=roots)


def small_box_episode(spec: EpisodeSpec) -> BoxStream:
    """Same construction with the box count target doubled, so boxes come out
    smaller on average. The stream records the doubled range."""
    lo, hi = spec.box_count_range
    doubled = replace(spec, box_count_range=(2 * lo, 2 * hi))
    return generate_episode(doubled)


def oracle_placements(bs: BoxStream) -> list[tuple[int, tuple[int, int], int]]:
    """Per presentation index: (bin, anchor, resting height) of the perfect packing."""
    out: list[tuple[int, tuple[int, int], int] | None] = [None] * len(bs.boxes)
    for bin_idx, leaf in _collect_leaves(bs.split_tree):
        if leaf.box_index is None:
            raise ValueError("split tree has an unindexed leaf")
        i, j, z = leaf.origin
        out[leaf.box_index] = (bin_idx, (i, j), z)
    if any(p is None for p in out):
        raise ValueError("split tree does not cover every presentation index")
    return out  # type: ignore[return-value]


def validate_stream(bs: BoxStream) -> ValidationReport:
    """Checks stream invariants and that replaying the split tree in
    presentation order reconstructs a perfect packing of opt_bins bins."""
    violations: list[str] = []
    L, B, H = bs.spec.bin_dims
    lo, hi = bs.spec.box_count_range
    total = sum(b.volume for b in bs.boxes)
    want = bs.spec.opt_bins * L * B * H
    if total != want:
        violations.append(f"volume {total} != opt_bins * bin volume {want}")
    for idx, b in enumerate(bs.boxes):
        if not (1 <= b.l <= L and 1 <= b.b <= B and 1 <= b.h <= H):
            violations.append(f"box {idx} {b} exceeds bin dims {bs.spec.bin_dims}")
    if not (lo <= len(bs.boxes) <= hi):
        violations.append(f"count {len(bs.boxes)} outside range {bs.spec.box_count_range}")
    if len(bs.split_tree) != bs.spec.opt_bins:
        violations.append(
            f"split tree has {len(bs.split_tree)} roots, expected {bs.spec.opt_bins}"
        )
    try:
        placements = oracle_placements(bs)
    except ValueError as exc:
        violations.append(str(exc))
        return ValidationReport(False, tuple(violations))
    if len(placements) != len(bs.boxes):
        violations.append("leaf count differs from box count")
        return ValidationReport(False, tuple(violations))
    leaves = {leaf.box_index: leaf for _, leaf in _collect_leaves(bs.split_tree)}
    maps = [np.zeros((L, B), dtype=np.int32) for _ in range(bs.spec.opt_bins)]
    for idx, box in enumerate(bs.boxes):
        if tuple(leaves[idx].dims) != (box.l, box.b, box.h):
            violations.append(f"box {idx} dims differ from its split leaf")
            continue
        bin_idx, (i, j), z = placements[idx]
        hm = maps[bin_idx]
        if i < 0 or j < 0 or i + box.l > L or j + box.b > B:
            violations.append(f"box {idx} leaf footprint leaves the grid")
            continue
        region = hm[i : i + box.l, j : j + box.b]
        if not np.all(region == z):
            violations.append(f"box {idx} not placeable at its turn (support incomplete)")
            continue
        region += box.h
    for bin_idx, hm in enumerate(maps):
        if not np.all(hm == H):
            violations.append(f"replayed bin {bin_idx} not filled to H everywhere")
    return ValidationReport(not violations, tuple(violations))


# ------------------------------------------------------------- file format


def _node_to_json(node: SplitNode) -> dict:
    d: dict = {"origin": list(node.origin), "dims": list(node.dims)}
    if node.children is not None:
        d["axis"] = node.axis
        d["offset"] = node.offset
        d["children"] = [_node_to_json(c) for c in node.children]
    else:
        d["box"] = node.box_index
    return d


def _node_from_json(d: dict) -> SplitNode:
    node = SplitNode(origin=tuple(d["origin"]), dims=tuple(d["dims"]))
    if "children" in d:
        node.axis = int(d["axis"])
        node.offset = int(d["offset"])
        node.children = tuple(_node_from_json(c) for c in d["children"])
    else:
        node.box_index = int(d["box"])
    return node


def stream_to_json(bs: BoxStream) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "spec": {
            "seed": bs.spec.seed,
            "opt_bins": bs.spec.opt_bins,
            "bin_dims": list(bs.spec.bin_dims),
            "count_range": list(bs.spec.box_count_range),
            "lookahead": bs.spec.lookahead,
        },
        "boxes": [[b.l, b.b, b.h] for b in bs.boxes],
        "split_tree": [_node_to_json(r) for r in bs.split_tree],
    }


def stream_from_json(d: dict) -> BoxStream:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported dataset format_version {d.get('format_version')!r}")
    s = d["spec"]
    spec = EpisodeSpec(
        seed=int(s["seed"]),
        opt_bins=int(s["opt_bins"]),
        bin_dims=tuple(int(v) for v in s["bin_dims"]),
        box_count_range=tuple(int(v) for v in s["count_range"]),
        lookahead=int(s["lookahead"]),
    )
    boxes = tuple(BoxDims(*(int(v) for v in row)) for row in d["boxes"])
    roots = tuple(_node_from_json(r) for r in d["split_tree"])
    return BoxStream(boxes=boxes, spec=spec, split_tree=roots)


def save_stream(bs: BoxStream, path: str | Path) -> None:
    Path(path).write_text(json.dumps(stream_to_json(bs), separators=(",", ":")) + "\n")


def load_stream(path: str | Path) -> BoxStream:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"unreadable dataset file {path}: {exc}") from exc
    return stream_from_json(d)
