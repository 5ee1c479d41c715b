"""Corner-point candidate generation: the placement shortlist the DQN ranks.

Anchors are built so that a vertical face of the incoming box lines up with a
container wall or with an edge coordinate of a box already in the bin. That
keeps the list in the tens while the full feasible grid has thousands of
cells. Feasibility filtering happens against the heightmap as usual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .grid import (
    BoxDims,
    ContainerState,
    MultiBinState,
    Placement,
    apply_placement,
    feasible_anchors,
    oriented_dims,
)
from .heuristics import _orientations_for

DEFAULT_CANDIDATE_CAP = 512


@dataclass(frozen=True, eq=False)
class Candidate:
    placement: Placement
    box: BoxDims  # oriented dims
    source: MultiBinState = field(repr=False)

    @cached_property
    def projected_state(self) -> MultiBinState:
        """State after the hypothetical placement (computed on first access)."""
        return apply_placement(self.source, self.box, _as_asis(self.placement))


def _as_asis(p: Placement) -> Placement:
    # the stored box is already oriented, so apply it without re-rotating
    return Placement(bin=p.bin, anchor=p.anchor, orientation="asis")


def _anchor_coords(limit: int, span: int, edges: list[tuple[int, int]]) -> list[int]:
    """Candidate coordinates along one axis: wall-flush values plus, for every
    placed box with edge interval [e0, e0+len), left- and right-aligned values."""
    vals = {0, limit - span}
    for start, length in edges:
        vals.add(start)  # left faces flush
        vals.add(start + length)  # left face at the neighbor's right face
        vals.add(start + length - span)  # right faces flush
        vals.add(start - span)  # right face at the neighbor's left face
    return sorted(v for v in vals if 0 <= v <= limit - span)


def corner_candidates(
    ms: MultiBinState, box: BoxDims, cap: int = DEFAULT_CANDIDATE_CAP
) -> list[Candidate]:
    """Feasible corner placements in lexicographic (bin, orientation, i, j)
    order, truncated to the lexicographically first `cap` entries.

    An empty result means no corner placement fits any open bin; the caller
    opens a new bin (where (0, 0) is always generated) and calls again.
    """
    out: list[Candidate] = []
    for bin_idx, cont in enumerate(ms.bins):
        for orient in _orientations_for(box):
            od = oriented_dims(box, orient)
            if od.l > cont.L or od.b > cont.B or od.h > cont.H:
                continue
            mask, _ = feasible_anchors(cont, od)
            ii = _anchor_coords(cont.L, od.l, [(p.i, p.l) for p in cont.placed])
            jj = _anchor_coords(cont.B, od.b, [(p.j, p.b) for p in cont.placed])
            for i in ii:
                for j in jj:
                    if mask[i, j]:
                        out.append(
                            Candidate(
                                placement=Placement(bin_idx, (i, j), orient),
                                box=od,
                                source=ms,
                            )
                        )
                        if len(out) >= cap:
                            return out
    return out


def candidate_count_bound(ms: MultiBinState, box: BoxDims, cap: int = DEFAULT_CANDIDATE_CAP) -> int:
    """Size of the shortlist; stays far below the full feasible-cell count."""
    return len(corner_candidates(ms, box, cap=cap))
