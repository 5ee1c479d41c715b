"""Episode runner, packing metrics and report emission.

A Policy sees boxes strictly in stream order and returns one Decision per
box; the runner owns the state, opens bins the decision asks for, and times
each decide() call in isolation. Failure to fit within the bin budget is
recorded with the sentinel bin count T+1 rather than an exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter
from typing import Protocol, Sequence

import numpy as np

from .candidates import corner_candidates
from .datagen import BoxStream, oracle_placements
from .deeprl import ValueNet, encode_candidates
from .encoder import FieldPartition, GlobalView
from .errors import CapacityExhausted
from .grid import (
    ASIS,
    BoxDims,
    MultiBinState,
    Placement,
    apply_placement,
    fill_first,
    open_next_bin,
    placed_volume,
)
from .heuristics import (
    Decision,
    WallEParams,
    column_build,
    first_fit,
    floor_build,
    walle_decide,
)

REPORT_FORMAT_VERSION = 1
INSTANCE_COLUMNS = ("algorithm", "instance", "seed", "bins_used", "fill_first_opt", "time_per_box_s")
SUMMARY_COLUMNS = ("algorithm", "c", "mean_fill", "best_share", "mean_time_s")


class Policy(Protocol):
    name: str

    def begin_episode(self, ms: MultiBinState, stream: BoxStream) -> None: ...

    def decide(self, ms: MultiBinState, box: BoxDims, upcoming: Sequence[BoxDims]) -> Decision: ...

    def observe(self, ms: MultiBinState, decision: Decision) -> None: ...


class HeuristicPolicy:
    """Stateless adapter around one of the heuristic decide functions."""

    def __init__(self, name: str, fn):
        self.name = name
        self._fn = fn

    def begin_episode(self, ms: MultiBinState, stream: BoxStream) -> None:
        pass

    def decide(self, ms, box, upcoming) -> Decision:
        return self._fn(ms, box)

    def observe(self, ms, decision) -> None:
        pass


def first_fit_policy() -> HeuristicPolicy:
    return HeuristicPolicy("firstfit", first_fit)


def floor_policy() -> HeuristicPolicy:
    return HeuristicPolicy("floor", floor_build)


def column_policy() -> HeuristicPolicy:
    return HeuristicPolicy("column", column_build)


def walle_policy(params: WallEParams | None = None) -> HeuristicPolicy:
    p = params or WallEParams()
    return HeuristicPolicy("walle", lambda ms, box: walle_decide(ms, box, p))


class OraclePolicy:
    """Replays the generator's split tree; a perfect packing witness."""

    name = "oracle"

    def __init__(self):
        self._plan: list[tuple[int, tuple[int, int], int]] = []
        self._t = 0

    def begin_episode(self, ms: MultiBinState, stream: BoxStream) -> None:
        self._plan = oracle_placements(stream)
        self._t = 0

    def decide(self, ms, box, upcoming) -> Decision:
        bin_idx, anchor, _z = self._plan[self._t]
        self._t += 1
        if bin_idx >= ms.capacity:
            raise CapacityExhausted(f"oracle plan needs bin {bin_idx}, capacity {ms.capacity}")
        return Decision(
            placement=Placement(bin=bin_idx, anchor=anchor, orientation=ASIS),
            opened_new_bin=bin_idx >= ms.open_count,
        )

    def observe(self, ms, decision) -> None:
        pass


class PackManPolicy:
    """Greedy value-net policy over corner candidates (epsilon 0 by default)."""

    name = "packman"

    def __init__(self, net: ValueNet, epsilon: float = 0.0, rng: np.random.Generator | None = None):
        if epsilon > 0.0 and rng is None:
            raise ValueError("exploration requires an rng")
        self.net = net
        self.epsilon = epsilon
        self.rng = rng
        self.view: GlobalView | None = None
        self._B = 0
        self._H = 0

    def begin_episode(self, ms: MultiBinState, stream: BoxStream) -> None:
        partition = FieldPartition.for_layout(ms.bin_dims, ms.capacity)
        self.view = GlobalView(ms, partition)
        self._B = ms.bin_dims[1]
        self._H = ms.bin_dims[2]

    def decide(self, ms, box, upcoming) -> Decision:
        cands = corner_candidates(ms, box)
        local = ms
        opened = False
        while not cands:
            local = open_next_bin(local)  # raises CapacityExhausted at the cap
            opened = True
            cands = corner_candidates(local, box)
        if self.epsilon > 0.0 and self.rng.random() < self.epsilon:
            idx = int(self.rng.integers(len(cands)))
        else:
            X, Y, Z, _ = encode_candidates(self.view, cands, self._B, self._H)
            idx = int(np.argmax(self.net.forward_batch(X, Y, Z)))
        return Decision(placement=cands[idx].placement, opened_new_bin=opened)

    def observe(self, ms, decision) -> None:
        pl = decision.placement
        last = ms.bins[pl.bin].placed[-1]
        od = BoxDims(last.l, last.b, last.h)
        self.view.apply(pl.bin, pl.anchor, od, last.z + last.h)


@dataclass(frozen=True)
class EpisodeResult:
    algorithm: str
    instance: int
    seed: int
    opt: int
    bins_used: int  # max_bins + 1 when the episode did not fit
    fill_first_opt: float
    decisions: int
    mean_decision_s: float
    p95_decision_s: float


def run_episode(
    policy: Policy, stream: BoxStream, max_bins: int, instance: int = 0
) -> EpisodeResult:
    """Feed the stream to the policy box by box, in order, timing decide()
    alone. Capacity exhaustion ends the episode with the T+1 sentinel."""
    ms = MultiBinState.empty(stream.spec.bin_dims, max_bins)
    policy.begin_episode(ms, stream)
    lookahead = stream.spec.lookahead
    times: list[float] = []
    failed = False
    for t, box in enumerate(stream.boxes):
        upcoming = stream.boxes[t + 1 : t + 1 + lookahead]
        t0 = perf_counter()
        try:
            decision = policy.decide(ms, box, upcoming)
        except CapacityExhausted:
            failed = True
            break
        times.append(perf_counter() - t0)
        while decision.placement.bin >= ms.open_count:
            ms = open_next_bin(ms)
        ms = apply_placement(ms, box, decision.placement)
        policy.observe(ms, decision)
    if not failed and placed_volume(ms) != sum(b.volume for b in stream.boxes):
        raise AssertionError("volume conservation violated by the runner")
    bins_used = max_bins + 1 if failed else max(ms.open_count, 1)
    arr = np.array(times) if times else np.zeros(1)
    return EpisodeResult(
        algorithm=policy.name,
        instance=instance,
        seed=stream.spec.seed,
        opt=stream.spec.opt_bins,
        bins_used=bins_used,
        fill_first_opt=fill_first(ms, stream.spec.opt_bins),
        decisions=len(times),
        mean_decision_s=float(arr.mean()),
        p95_decision_s=float(np.percentile(arr, 95)),
    )


def competitive_ratio(results: Sequence[EpisodeResult], opt: int) -> float:
    """mean(bins used) / opt over the given episodes."""
    if not results:
        raise ValueError("no results")
    if any(r.opt != opt for r in results):
        raise ValueError("results disagree on the optimal bin count")
    return float(np.mean([r.bins_used for r in results])) / opt


def aggregate(results: Sequence[EpisodeResult]) -> dict:
    """Per-algorithm summary plus per-instance rows.

    Requires full coverage: every algorithm must have run every instance.
    Best-pack share counts the strictly highest fill per instance; exact ties
    split equally, so shares always sum to 1."""
    if not results:
        raise ValueError("no results")
    by_alg: dict[str, dict[int, EpisodeResult]] = {}
    for r in results:
        slot = by_alg.setdefault(r.algorithm, {})
        if r.instance in slot:
            raise ValueError(f"duplicate result for {r.algorithm} instance {r.instance}")
        slot[r.instance] = r
    algs = list(by_alg)
    instance_ids = sorted(by_alg[algs[0]])
    for a in algs:
        if sorted(by_alg[a]) != instance_ids:
            raise ValueError("ragged coverage: algorithms ran different instances")
    shares = {a: 0.0 for a in algs}
    for inst in instance_ids:
        fills = {a: by_alg[a][inst].fill_first_opt for a in algs}
        best = max(fills.values())
        winners = [a for a in algs if fills[a] == best]
        for a in winners:
            shares[a] += 1.0 / len(winners)
    n = len(instance_ids)
    per_algorithm = {}
    for a in algs:
        rows = [by_alg[a][i] for i in instance_ids]
        opts = {r.opt for r in rows}
        if len(opts) == 1:
            c = competitive_ratio(rows, opts.pop())
        else:
            # mixed-opt runs: mean of per-instance ratios
            c = float(np.mean([r.bins_used / r.opt for r in rows]))
        per_algorithm[a] = {
            "c": c,
            "mean_fill": float(np.mean([r.fill_first_opt for r in rows])),
            "best_share": shares[a] / n,
            "mean_time_s": float(np.mean([r.mean_decision_s for r in rows])),
        }
    per_instance = [
        {
            "algorithm": r.algorithm,
            "instance": r.instance,
            "seed": r.seed,
            "opt": r.opt,
            "bins_used": r.bins_used,
            "fill_first_opt": r.fill_first_opt,
            "time_per_box_s": r.mean_decision_s,
        }
        for a in algs
        for r in (by_alg[a][i] for i in instance_ids)
    ]
    return {"per_algorithm": per_algorithm, "per_instance": per_instance}


def build_report(results: Sequence[EpisodeResult], config_echo: dict) -> dict:
    agg = aggregate(results)
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "config_echo": config_echo,
        "per_algorithm": agg["per_algorithm"],
        "per_instance": agg["per_instance"],
    }


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n")


def load_report(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != REPORT_FORMAT_VERSION:
        raise ValueError(f"unsupported report format_version {doc.get('format_version')!r}")
    return doc


def write_summary_csv(report: dict, path: str | Path) -> None:
    lines = [",".join(SUMMARY_COLUMNS)]
    for alg in sorted(report["per_algorithm"]):
        row = report["per_algorithm"][alg]
        lines.append(
            f'{alg},{row["c"]!r},{row["mean_fill"]!r},{row["best_share"]!r},{row["mean_time_s"]!r}'
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_instances_csv(report: dict, path: str | Path) -> None:
    lines = [",".join(INSTANCE_COLUMNS)]
    for row in report["per_instance"]:
        vals = []
        for col in INSTANCE_COLUMNS:
            v = row[col]
            vals.append(repr(v) if isinstance(v, float) else str(v))
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")
