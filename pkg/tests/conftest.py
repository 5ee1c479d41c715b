"""Shared brute-force oracles and random-state builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from robopack.grid import (
    ASIS,
    ORIENTATIONS,
    ROT90,
    BoxDims,
    ContainerState,
    MultiBinState,
    is_feasible,
    new_container,
    open_next_bin,
    oriented_dims,
    place,
)


def brute_feasible(state: ContainerState, box: BoxDims, anchor: tuple[int, int]) -> bool:
    """Re-reads every footprint cell; independent of the library's checks."""
    i, j = anchor
    if i < 0 or j < 0 or i + box.l > state.L or j + box.b > state.B:
        return False
    vals = set()
    for di in range(box.l):
        for dj in range(box.b):
            vals.add(int(state.heights[i + di, j + dj]))
    if len(vals) != 1:
        return False
    return vals.pop() + box.h <= state.H


def enumerate_feasible(ms: MultiBinState, box: BoxDims):
    """All feasible (bin, orientation, i, j, resting_height) in lexicographic
    (bin, orientation, i, j) order, rot90 skipped for square footprints."""
    out = []
    for bi, cont in enumerate(ms.bins):
        for orient in ORIENTATIONS:
            if orient == ROT90 and box.l == box.b:
                continue
            od = oriented_dims(box, orient)
            for i in range(cont.L - od.l + 1):
                for j in range(cont.B - od.b + 1):
                    if brute_feasible(cont, od, (i, j)):
                        out.append((bi, orient, i, j, int(cont.heights[i, j])))
    return out


def random_container(rng: np.random.Generator, max_side: int = 10, max_boxes: int = 8) -> ContainerState:
    """A small bin with up to max_boxes boxes placed at random feasible spots."""
    L = int(rng.integers(3, max_side + 1))
    B = int(rng.integers(3, max_side + 1))
    H = int(rng.integers(3, max_side + 1))
    state = new_container(L, B, H)
    for _ in range(int(rng.integers(0, max_boxes + 1))):
        box = BoxDims(
            int(rng.integers(1, L + 1)),
            int(rng.integers(1, B + 1)),
            int(rng.integers(1, max(2, H // 2 + 1))),
        )
        spots = [
            (i, j)
            for i in range(L - box.l + 1)
            for j in range(B - box.b + 1)
            if is_feasible(state, box, (i, j))
        ]
        if not spots:
            continue
        anchor = spots[int(rng.integers(len(spots)))]
        state = place(state, box, anchor)
    return state


def random_multibin(rng: np.random.Generator, max_bins: int = 3, **kw) -> MultiBinState:
    first = random_container(rng, **kw)
    ms = MultiBinState(bin_dims=first.dims, capacity=max_bins, bins=(first,))
    for _ in range(int(rng.integers(0, max_bins))):
        if ms.open_count == ms.capacity:
            break
        ms = open_next_bin(ms)
        # refill the new bin with a couple of random boxes, same dims
        cont = ms.bins[-1]
        for _ in range(int(rng.integers(0, 4))):
            L, B, H = cont.dims
            box = BoxDims(
                int(rng.integers(1, L + 1)),
                int(rng.integers(1, B + 1)),
                int(rng.integers(1, max(2, H // 2 + 1))),
            )
            spots = [
                (i, j)
                for i in range(L - box.l + 1)
                for j in range(B - box.b + 1)
                if is_feasible(cont, box, (i, j))
            ]
            if spots:
                cont = place(cont, box, spots[int(rng.integers(len(spots)))])
        ms = MultiBinState(
            bin_dims=ms.bin_dims, capacity=ms.capacity, bins=ms.bins[:-1] + (cont,)
        )
    return ms


def loss_only(net, X, Y, Z, targets) -> float:
    q = net.forward_batch(X, Y, Z)
    return float(np.mean((q - targets) ** 2))


def fd_grad_max_rel_error(net, X, Y, Z, targets, h: float = 1e-5) -> float:
    """Max relative disagreement between analytic and central finite-difference
    gradients over every weight and bias. Independent of the backprop code:
    only the forward pass is reused."""
    _, gw, gb = net.loss_and_gradients(X, Y, Z, targets)
    worst = 0.0

    def probe(arr, grad):
        nonlocal worst
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for k in range(flat.shape[0]):
            orig = flat[k]
            flat[k] = orig + h
            lp = loss_only(net, X, Y, Z, targets)
            flat[k] = orig - h
            lm = loss_only(net, X, Y, Z, targets)
            flat[k] = orig
            fd = (lp - lm) / (2.0 * h)
            a = gflat[k]
            rel = abs(fd - a) / max(abs(fd), abs(a), 1e-5)
            worst = max(worst, rel)

    for k in range(5):
        probe(net.weights[k], gw[k])
        probe(net.biases[k], gb[k])
    return worst


def random_net_and_batch(seed: int, n: int = 4):
    """Small random net plus a random batch sized for finite differences."""
    from robopack.deeprl import ValueNet

    g = np.random.default_rng(seed)
    net = ValueNet.init(g, x_dim=12, y_dim=6, z_dim=6, hidden=(8, 6, 4, 3))
    X = g.uniform(0.0, 1.0, size=(n, 12))
    Y = g.uniform(0.0, 1.0, size=(n, 6))
    Z = np.zeros((n, 6))
    Z[np.arange(n), g.integers(0, 6, size=n)] = 1.0
    targets = g.uniform(-1.0, 1.0, size=n)
    return net, X, Y, Z, targets


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)
