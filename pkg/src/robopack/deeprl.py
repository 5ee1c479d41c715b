"""Value network, replay machinery, rewards and the training loop.

The net ranks candidate placements by the projected future state: the pooled
state vector feeds a dense tanh layer, whose output is concatenated with the
border walk and the anchor one-hot before three more tanh layers and a linear
scalar head. Everything is plain numpy with explicit backprop: SGD with
momentum, bit-exact JSON round trips and cheap finite-difference checking.

Episodes are stored whole in the replay buffer in a compact integer form
(tile stats, border levels, anchor tile) and decoded to float vectors on
sampling with exactly the arithmetic the encoders use.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .candidates import Candidate, corner_candidates
from .datagen import BoxStream
from .encoder import (
    EncodedInput,
    FieldPartition,
    GlobalView,
    encode_border,
    encode_field_onehot,
    encode_state,
    x_from_tile_stats,
)
from .errors import CorruptModel, TrainingDiverged
from .grid import MultiBinState, fill_first, open_next_bin, placed_volume

MODEL_FORMAT_VERSION = 1

DEFAULT_X_DIM = 432
DEFAULT_Y_DIM = 144
DEFAULT_Z_DIM = 144
DEFAULT_HIDDEN = (144, 144, 24, 4)


@dataclass
class TrainerConfig:
    gamma: float = 0.75  # blend weight in the target (1-gamma)*r + gamma*Q'
    reward_decay: float = 0.99  # per-step decay of the terminal reward
    lr: float = 0.001
    momentum: float = 0.5
    batch_size: int = 256
    target_sync_every: int = 10  # clone online -> target every N train steps
    episodes: int = 2000
    explore_episodes: int = 1000  # epsilon falls linearly to 0 over these
    replay_capacity: int = 200_000  # transitions, FIFO eviction by episode
    seed: int = 0
    max_bins: int = 16
    standard_bellman: bool = False  # use r + gamma*Q' instead of the blend


@dataclass
class RunningBaseline:
    """Mean packing fraction of all completed episodes so far (tau)."""

    mean: float = 0.0
    count: int = 0

    def update(self, pfrac: float) -> None:
        self.count += 1
        self.mean += (pfrac - self.mean) / self.count


@dataclass(frozen=True)
class Transition:
    input: EncodedInput
    reward: float
    next_input: EncodedInput | None  # None only on the episode's last step


class ValueNet:
    """Five-layer MLP with the mid-stack concatenation of border and one-hot."""

    def __init__(
        self,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        x_dim: int,
        y_dim: int,
        z_dim: int,
    ):
        if len(weights) != 5 or len(biases) != 5:
            raise ValueError("expected exactly 5 layers")
        h1 = weights[0].shape[1]
        if weights[0].shape[0] != x_dim:
            raise ValueError("first layer input must match x dimension")
        if weights[1].shape[0] != h1 + y_dim + z_dim:
            raise ValueError("second layer input must match concat width")
        if weights[4].shape[1] != 1:
            raise ValueError("output layer must be scalar")
        for k in range(1, 5):
            if weights[k - 1].shape[1] + (y_dim + z_dim if k == 1 else 0) != weights[k].shape[0]:
                raise ValueError(f"layer {k} input width mismatch")
        for W, b in zip(weights, biases):
            if b.shape != (W.shape[1],):
                raise ValueError("bias shape mismatch")
        self.weights = weights
        self.biases = biases
        self.x_dim = x_dim
        self.y_dim = y_dim
        self.z_dim = z_dim
        self.vel_w = [np.zeros_like(W) for W in weights]
        self.vel_b = [np.zeros_like(b) for b in biases]

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        x_dim: int = DEFAULT_X_DIM,
        y_dim: int = DEFAULT_Y_DIM,
        z_dim: int = DEFAULT_Z_DIM,
        hidden: tuple[int, int, int, int] = DEFAULT_HIDDEN,
    ) -> "ValueNet":
        h1, h2, h3, h4 = hidden
        dims = [(x_dim, h1), (h1 + y_dim + z_dim, h2), (h2, h3), (h3, h4), (h4, 1)]
        weights = []
        biases = []
        for fan_in, fan_out in dims:
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=(fan_out,)))
        return cls(weights, biases, x_dim, y_dim, z_dim)

    def clone(self) -> "ValueNet":
        dup = ValueNet(
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            self.x_dim,
            self.y_dim,
            self.z_dim,
        )
        dup.vel_w = [v.copy() for v in self.vel_w]
        dup.vel_b = [v.copy() for v in self.vel_b]
        return dup

    # ----------------------------------------------------------- forward

    def _activations(self, X: np.ndarray, Y: np.ndarray, Z: np.ndarray):
        W, b = self.weights, self.biases
        H1 = np.tanh(X @ W[0] + b[0])
        C = np.concatenate([H1, Y, Z], axis=1)
        H2 = np.tanh(C @ W[1] + b[1])
        H3 = np.tanh(H2 @ W[2] + b[2])
        H4 = np.tanh(H3 @ W[3] + b[3])
        Q = H4 @ W[4] + b[4]
        return H1, C, H2, H3, H4, Q

    def forward_batch(self, X: np.ndarray, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        self._check_shapes(X, Y, Z)
        return self._activations(X, Y, Z)[-1][:, 0]

    def forward_one(self, enc: EncodedInput) -> float:
        return float(
            self.forward_batch(
                enc.x.reshape(1, -1), enc.y.reshape(1, -1), enc.z.reshape(1, -1)
            )[0]
        )

    def _check_shapes(self, X, Y, Z) -> None:
        if X.ndim != 2 or Y.ndim != 2 or Z.ndim != 2:
            raise ValueError("inputs must be batched 2-D arrays")
        if X.shape[1] != self.x_dim or Y.shape[1] != self.y_dim or Z.shape[1] != self.z_dim:
            raise ValueError(
                f"input widths {(X.shape[1], Y.shape[1], Z.shape[1])} do not match "
                f"net dims {(self.x_dim, self.y_dim, self.z_dim)}"
            )
        if not (X.shape[0] == Y.shape[0] == Z.shape[0]):
            raise ValueError("batch sizes differ across x, y, z")

    # ---------------------------------------------------------- backprop

    def loss_and_gradients(self, X, Y, Z, targets):
        """Mean squared error and its gradients for every weight and bias."""
        n = X.shape[0]
        H1, C, H2, H3, H4, Q = self._activations(X, Y, Z)
        W = self.weights
        err = Q - targets.reshape(-1, 1)
        loss = float(np.mean(err**2))
        dQ = (2.0 / n) * err
        gw4 = H4.T @ dQ
        gb4 = dQ.sum(axis=0)
        d4 = (dQ @ W[4].T) * (1.0 - H4**2)
        gw3 = H3.T @ d4
        gb3 = d4.sum(axis=0)
        d3 = (d4 @ W[3].T) * (1.0 - H3**2)
        gw2 = H2.T @ d3
        gb2 = d3.sum(axis=0)
        d2 = (d3 @ W[2].T) * (1.0 - H2**2)
        gw1 = C.T @ d2
        gb1 = d2.sum(axis=0)
        dC = d2 @ W[1].T
        d1 = dC[:, : H1.shape[1]] * (1.0 - H1**2)
        gw0 = X.T @ d1
        gb0 = d1.sum(axis=0)
        return loss, [gw0, gw1, gw2, gw3, gw4], [gb0, gb1, gb2, gb3, gb4]


def forward(net: ValueNet, enc: EncodedInput) -> float:
    """Scalar q value for one encoded placement."""
    return net.forward_one(enc)


def train_step(
    net: ValueNet,
    batch: tuple[np.ndarray, np.ndarray, np.ndarray],
    targets: np.ndarray,
    cfg: TrainerConfig,
) -> tuple[ValueNet, float]:
    """One SGD-with-momentum update (v <- m*v - lr*g; w <- w + v) against the
    given targets. Returns the net and the mean squared error before the
    update. Raises TrainingDiverged on non-finite loss or weights."""
    X, Y, Z = batch
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    loss, gw, gb = net.loss_and_gradients(X, Y, Z, targets)
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss}")
    for k in range(5):
        net.vel_w[k] = cfg.momentum * net.vel_w[k] - cfg.lr * gw[k]
        net.weights[k] = net.weights[k] + net.vel_w[k]
        net.vel_b[k] = cfg.momentum * net.vel_b[k] - cfg.lr * gb[k]
        net.biases[k] = net.biases[k] + net.vel_b[k]
        if not np.all(np.isfinite(net.weights[k])):
            raise TrainingDiverged("non-finite weights after update")
    return net, loss


def q_target(t: Transition, target_net: ValueNet, cfg: TrainerConfig) -> float:
    """(1-gamma)*r + gamma*Q_target(next); terminal steps use next-Q = 0.
    With cfg.standard_bellman the blend becomes the usual r + gamma*Q'."""
    nxt = 0.0 if t.next_input is None else target_net.forward_one(t.next_input)
    r = t.reward if cfg.standard_bellman else (1.0 - cfg.gamma) * t.reward
    return r + cfg.gamma * nxt


def episode_rewards(
    pfrac: float,
    t_used: int,
    n_steps: int,
    baseline: RunningBaseline,
    cfg: TrainerConfig,
) -> tuple[float, np.ndarray]:
    """Terminal reward zeta = pfrac - tau spread backwards as r_t = decay^(N-t)
    * zeta. pfrac is the episode packing fraction V_packed/(T_used*L*B*H); the
    baseline is updated with it after zeta is computed."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if t_used < 1:
        raise ValueError("t_used must be >= 1")
    zeta = pfrac - baseline.mean
    exponents = np.arange(n_steps - 1, -1, -1, dtype=np.float64)
    rewards = zeta * cfg.reward_decay**exponents
    baseline.update(pfrac)
    return zeta, rewards


def _select_index(
    q_values: np.ndarray | None,
    n: int,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Shared epsilon-greedy rule: q_values may be None only when the random
    branch is taken (the caller avoids computing them)."""
    if q_values is None:
        return int(rng.integers(n))
    return int(np.argmax(q_values))


def _epsilon_branch(epsilon: float, rng: np.random.Generator) -> bool:
    return rng.random() < epsilon


def select_action(
    net: ValueNet,
    candidates: Sequence[Candidate],
    epsilon: float,
    rng: np.random.Generator,
    partition: FieldPartition | None = None,
) -> Candidate:
    """Epsilon-greedy choice over the candidate shortlist. Greedy ties go to
    the lexicographically first candidate (argmax returns the first max)."""
    if not candidates:
        raise ValueError("no candidates to select from; open a bin and regenerate")
    if _epsilon_branch(epsilon, rng):
        return candidates[_select_index(None, len(candidates), epsilon, rng)]
    ms = candidates[0].source
    p = partition or FieldPartition.for_layout(ms.bin_dims, ms.capacity)
    xs, ys, zs = [], [], []
    for c in candidates:
        proj = c.projected_state
        xs.append(encode_state(proj, p))
        ys.append(encode_border(proj.bins[c.placement.bin], c.box, c.placement.anchor))
        zs.append(encode_field_onehot(p, c.placement.anchor, c.placement.bin))
    q = net.forward_batch(np.stack(xs), np.stack(ys), np.stack(zs))
    return candidates[_select_index(q, len(candidates), epsilon, rng)]


# -------------------------------------------------------------- replay


@dataclass
class EpisodeRecord:
    """One whole episode in compact integer form plus per-step rewards."""

    sums: np.ndarray  # (N, 144) int32 tile sums of the chosen projected state
    maxs: np.ndarray  # (N, 144) int16
    mins: np.ndarray  # (N, 144) int16
    borders: np.ndarray  # (N, 144) int16 levels, walls stored as H
    ztiles: np.ndarray  # (N,) int16
    rewards: np.ndarray  # (N,) float64

    def __len__(self) -> int:
        return self.sums.shape[0]


class ReplayBuffer:
    """Whole episodes, FIFO-evicted once the transition count exceeds capacity."""

    def __init__(self, capacity: int, areas: np.ndarray, height_cap: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        max_tile = int(areas.max()) * height_cap
        if max_tile >= 2**31:
            raise ValueError("tile sums would overflow the compact int32 form")
        self.capacity = capacity
        self.areas = areas
        self.H = height_cap
        self.episodes: list[EpisodeRecord] = []
        self.total = 0

    def __len__(self) -> int:
        return self.total

    def add_episode(self, rec: EpisodeRecord) -> None:
        self.episodes.append(rec)
        self.total += len(rec)
        while self.total > self.capacity and len(self.episodes) > 1:
            evicted = self.episodes.pop(0)
            self.total -= len(evicted)

    def _locate(self, flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lengths = np.array([len(e) for e in self.episodes])
        cum = np.concatenate([[0], np.cumsum(lengths)])
        ep = np.searchsorted(cum, flat, side="right") - 1
        step = flat - cum[ep]
        return ep, step

    def _decode(self, ep_idx: np.ndarray, steps: np.ndarray):
        k = ep_idx.shape[0]
        sums = np.empty((k, self.areas.shape[0]), dtype=np.int64)
        maxs = np.empty_like(sums)
        mins = np.empty_like(sums)
        borders = np.empty_like(sums)
        ztiles = np.empty(k, dtype=np.int64)
        for row, (e, t) in enumerate(zip(ep_idx, steps)):
            rec = self.episodes[e]
            sums[row] = rec.sums[t]
            maxs[row] = rec.maxs[t]
            mins[row] = rec.mins[t]
            borders[row] = rec.borders[t]
            ztiles[row] = rec.ztiles[t]
        X = x_from_tile_stats(sums, maxs, mins, self.areas, self.H)
        Y = borders / self.H
        Z = np.zeros((k, self.areas.shape[0]), dtype=np.float64)
        Z[np.arange(k), ztiles] = 1.0
        return X, Y, Z

    def sample(self, rng: np.random.Generator, batch_size: int):
        """(X, Y, Z, rewards, next X/Y/Z, terminal mask) for a uniform sample
        of min(batch_size, len(self)) distinct transitions."""
        if self.total == 0:
            raise ValueError("replay buffer is empty")
        k = min(batch_size, self.total)
        if k == self.total:
            flat = np.arange(self.total)
        else:
            flat = rng.choice(self.total, size=k, replace=False)
        ep_idx, steps = self._locate(flat)
        X, Y, Z = self._decode(ep_idx, steps)
        rewards = np.array(
            [self.episodes[e].rewards[t] for e, t in zip(ep_idx, steps)], dtype=np.float64
        )
        terminal = np.array(
            [t == len(self.episodes[e]) - 1 for e, t in zip(ep_idx, steps)], dtype=bool
        )
        nxt_ep = ep_idx.copy()
        nxt_step = np.where(terminal, steps, steps + 1)
        nX, nY, nZ = self._decode(nxt_ep, nxt_step)
        # terminal rows carry no successor; zero them so Q' reads are masked
        nX[terminal] = 0.0
        nY[terminal] = 0.0
        nZ[terminal] = 0.0
        return X, Y, Z, rewards, nX, nY, nZ, terminal

    def transitions_of(self, ep: int) -> list[Transition]:
        """Materialize one stored episode as chained Transition values."""
        rec = self.episodes[ep]
        n = len(rec)
        idx = np.full(n, ep)
        steps = np.arange(n)
        X, Y, Z = self._decode(idx, steps)
        out = []
        for t in range(n):
            enc = EncodedInput(X[t], Y[t], Z[t])
            nxt = EncodedInput(X[t + 1], Y[t + 1], Z[t + 1]) if t + 1 < n else None
            out.append(Transition(input=enc, reward=float(rec.rewards[t]), next_input=nxt))
        return out


def batch_targets(
    rewards: np.ndarray,
    nX: np.ndarray,
    nY: np.ndarray,
    nZ: np.ndarray,
    terminal: np.ndarray,
    target_net: ValueNet,
    cfg: TrainerConfig,
) -> np.ndarray:
    qn = target_net.forward_batch(nX, nY, nZ)
    qn = np.where(terminal, 0.0, qn)
    r = rewards if cfg.standard_bellman else (1.0 - cfg.gamma) * rewards
    return r + cfg.gamma * qn


# ------------------------------------------------------------- training


@dataclass
class EpisodePlayout:
    sums: np.ndarray
    maxs: np.ndarray
    mins: np.ndarray
    borders: np.ndarray
    ztiles: np.ndarray
    bins_used: int  # open bins at termination, or max_bins+1 on failure
    n_steps: int
    placed: int  # total placed volume in cells
    fill_first_opt: float
    placements: list  # Placement per step, for replay and inspection


def encode_candidates(
    view: GlobalView, cands: Sequence[Candidate], B: int, H: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list]:
    """Batched (X, Y, Z) for a candidate shortlist via the incremental view,
    plus each candidate's compact pieces (stats, border, tile, new top)."""
    n_tiles = view.partition.tile_count
    X = np.empty((len(cands), 3 * n_tiles), dtype=np.float64)
    Y = np.empty((len(cands), n_tiles), dtype=np.float64)
    Z = np.zeros((len(cands), n_tiles), dtype=np.float64)
    extras = []
    for row, c in enumerate(cands):
        pl = c.placement
        top = int(view.grid[pl.anchor[0], pl.bin * B + pl.anchor[1]]) + c.box.h
        st = view.projected_tile_stats(pl.bin, pl.anchor, c.box, top)
        bord = view.border_levels(pl.bin, pl.anchor, c.box)
        zi = view.z_index(pl.bin, pl.anchor)
        X[row] = x_from_tile_stats(st[0], st[1], st[2], view.areas, H)
        Y[row] = bord / H
        Z[row, zi] = 1.0
        extras.append((st, bord, zi, top))
    return X, Y, Z, extras


def play_episode(
    net: ValueNet,
    stream: BoxStream,
    max_bins: int,
    partition: FieldPartition,
    epsilon: float,
    rng: np.random.Generator,
) -> EpisodePlayout:
    """Run one stream with epsilon-greedy candidate selection, collecting the
    chosen placements' compact encodings for the replay buffer."""
    L, B, H = stream.spec.bin_dims
    if H >= 2**15:
        raise ValueError("height cap too large for the compact int16 replay form")
    if int(partition.areas.max()) * H >= 2**31:
        raise ValueError("tile sums would overflow the compact int32 replay form")
    ms = MultiBinState.empty(stream.spec.bin_dims, max_bins)
    view = GlobalView(ms, partition)
    n_tiles = partition.tile_count
    cap = len(stream.boxes)
    sums = np.empty((cap, n_tiles), dtype=np.int32)
    maxs = np.empty((cap, n_tiles), dtype=np.int16)
    mins = np.empty((cap, n_tiles), dtype=np.int16)
    borders = np.empty((cap, n_tiles), dtype=np.int16)
    ztiles = np.empty(cap, dtype=np.int16)
    placements = []
    n = 0
    failed = False
    for box in stream.boxes:
        cands = corner_candidates(ms, box)
        while not cands:
            if ms.open_count >= max_bins:
                failed = True
                break
            ms = open_next_bin(ms)
            cands = corner_candidates(ms, box)
        if failed:
            break
        if _epsilon_branch(epsilon, rng):
            idx = _select_index(None, len(cands), epsilon, rng)
            chosen = cands[idx]
            pl = chosen.placement
            top = int(view.grid[pl.anchor[0], pl.bin * B + pl.anchor[1]]) + chosen.box.h
            c_sums, c_maxs, c_mins = view.projected_tile_stats(
                pl.bin, pl.anchor, chosen.box, top
            )
            c_border = view.border_levels(pl.bin, pl.anchor, chosen.box)
            c_z = view.z_index(pl.bin, pl.anchor)
        else:
            X, Y, Z, extras = encode_candidates(view, cands, B, H)
            q = net.forward_batch(X, Y, Z)
            idx = _select_index(q, len(cands), epsilon, rng)
            chosen = cands[idx]
            (c_sums, c_maxs, c_mins), c_border, c_z, top = extras[idx]
        pl = chosen.placement
        sums[n] = c_sums
        maxs[n] = c_maxs
        mins[n] = c_mins
        borders[n] = c_border
        ztiles[n] = c_z
        placements.append(pl)
        n += 1
        ms = chosen.projected_state
        view.apply(pl.bin, pl.anchor, chosen.box, top)
    bins_used = max_bins + 1 if failed else max(ms.open_count, 1)
    return EpisodePlayout(
        sums=sums[:n],
        maxs=maxs[:n],
        mins=mins[:n],
        borders=borders[:n],
        ztiles=ztiles[:n],
        bins_used=bins_used,
        n_steps=n,
        placed=placed_volume(ms),
        fill_first_opt=fill_first(ms, stream.spec.opt_bins),
        placements=placements,
    )


CURVE_COLUMNS = ("episode", "epsilon", "fill_first_opt", "bins_used", "loss", "zeta", "tau")


def run_training(
    datasets: Sequence[BoxStream],
    cfg: TrainerConfig,
    curve_path: str | Path | None = None,
    progress: Callable[[dict], None] | None = None,
) -> tuple[ValueNet, list[dict]]:
    """Full training run: play, insert episode, one batch update per episode,
    target-net sync every cfg.target_sync_every updates. Episodes cycle
    round-robin over the datasets. Returns the net and the per-episode curve."""
    if not datasets:
        raise ValueError("no datasets")
    bin_dims = datasets[0].spec.bin_dims
    for d in datasets:
        if d.spec.bin_dims != bin_dims:
            raise ValueError("datasets disagree on bin dims")
    L, B, H = bin_dims
    partition = FieldPartition.for_layout(bin_dims, cfg.max_bins)
    ss = np.random.SeedSequence(cfg.seed)
    init_ss, act_ss, replay_ss = ss.spawn(3)
    net = ValueNet.init(np.random.default_rng(init_ss))
    target = net.clone()
    rng_act = np.random.default_rng(act_ss)
    rng_replay = np.random.default_rng(replay_ss)
    replay = ReplayBuffer(cfg.replay_capacity, partition.areas, H)
    baseline = RunningBaseline()
    curve: list[dict] = []
    train_steps = 0
    for k in range(cfg.episodes):
        stream = datasets[k % len(datasets)]
        if cfg.explore_episodes > 0:
            epsilon = max(0.0, 1.0 - k / cfg.explore_episodes)
        else:
            epsilon = 0.0
        ep = play_episode(net, stream, cfg.max_bins, partition, epsilon, rng_act)
        pfrac = ep.placed / (ep.bins_used * L * B * H)
        tau_used = baseline.mean
        zeta, rewards = episode_rewards(pfrac, ep.bins_used, ep.n_steps, baseline, cfg)
        replay.add_episode(
            EpisodeRecord(ep.sums, ep.maxs, ep.mins, ep.borders, ep.ztiles, rewards)
        )
        X, Y, Z, rs, nX, nY, nZ, term = replay.sample(rng_replay, cfg.batch_size)
        targets = batch_targets(rs, nX, nY, nZ, term, target, cfg)
        _, loss = train_step(net, (X, Y, Z), targets, cfg)
        train_steps += 1
        if train_steps % cfg.target_sync_every == 0:
            target = net.clone()
        row = {
            "episode": k,
            "epsilon": epsilon,
            "fill_first_opt": ep.fill_first_opt,
            "bins_used": ep.bins_used,
            "loss": loss,
            "zeta": zeta,
            "tau": tau_used,
        }
        curve.append(row)
        if progress is not None:
            progress(row)
    if curve_path is not None:
        write_curve(curve, curve_path)
    return net, curve


def write_curve(curve: list[dict], path: str | Path) -> None:
    lines = [",".join(CURVE_COLUMNS)]
    for row in curve:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in CURVE_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------- persistence


def _fmt17(v: float) -> str:
    return format(float(v), ".17g")


def save_model(
    net: ValueNet,
    partition_shape: tuple[int, int],
    cfg: TrainerConfig,
    path: str | Path,
) -> None:
    """Versioned JSON with weights as 17-significant-digit decimals, which
    round-trip float64 bit-exactly."""
    head = {
        "format_version": MODEL_FORMAT_VERSION,
        "partition": {"rows": partition_shape[0], "cols": partition_shape[1]},
        "config": asdict(cfg),
        "net": {
            "x_dim": net.x_dim,
            "y_dim": net.y_dim,
            "z_dim": net.z_dim,
        },
    }
    parts = [
        f'"{k}":{json.dumps(v, separators=(",", ":"), sort_keys=True)}'
        for k, v in head.items()
    ]
    layer_strs = []
    for W, b in zip(net.weights, net.biases):
        ws = ",".join(_fmt17(v) for v in W.ravel(order="C"))
        bs = ",".join(_fmt17(v) for v in b)
        layer_strs.append(
            f'{{"rows":{W.shape[0]},"cols":{W.shape[1]},"weights":[{ws}],"bias":[{bs}]}}'
        )
    text = "{" + ",".join(parts + ['"layers":[' + ",".join(layer_strs) + "]"]) + "}"
    Path(path).write_text(text + "\n")


def load_model(path: str | Path) -> tuple[ValueNet, dict]:
    """Rebuild a net from file; raises CorruptModel on any structural defect."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"unreadable model file {path}: {exc}") from exc
    try:
        if doc["format_version"] != MODEL_FORMAT_VERSION:
            raise CorruptModel(
                f"unsupported model format_version {doc['format_version']!r}"
            )
        meta = {"partition": doc["partition"], "config": doc["config"], "net": doc["net"]}
        layers = doc["layers"]
        weights = []
        biases = []
        for lay in layers:
            rows, cols = int(lay["rows"]), int(lay["cols"])
            w = np.asarray(lay["weights"], dtype=np.float64)
            b = np.asarray(lay["bias"], dtype=np.float64)
            if w.shape != (rows * cols,) or b.shape != (cols,):
                raise CorruptModel("layer payload does not match declared shape")
            weights.append(w.reshape(rows, cols))
            biases.append(b)
        net = ValueNet(
            weights,
            biases,
            x_dim=int(doc["net"]["x_dim"]),
            y_dim=int(doc["net"]["y_dim"]),
            z_dim=int(doc["net"]["z_dim"]),
        )
    except CorruptModel:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model file {path}: {exc}") from exc
    for W in net.weights:
        if not np.all(np.isfinite(W)):
            raise CorruptModel("non-finite weights in model file")
    return net, meta
