"""FastAPI application: one in-memory packing session per client workflow.

Each session owns a MultiBinState and a heuristic policy; a per-session lock
serializes box submissions so concurrent clients cannot interleave state
transitions. Sessions live for the process lifetime or until deleted.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException

from ..errors import CapacityExhausted, PlacementError
from ..grid import MultiBinState, apply_placement, open_next_bin, placed_volume
from ..heuristics import (
    WallEParams,
    column_build,
    first_fit,
    floor_build,
    walle_decide,
)
from .schemas import (
    BoxRequest,
    CreateSessionRequest,
    HeightsResponse,
    PlacementResponse,
    SessionSummary,
)
from ..grid import BoxDims


@dataclass
class _Session:
    ms: MultiBinState
    algorithm: str
    decide: object  # (ms, box) -> Decision
    boxes_placed: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def fill(self) -> float:
        opened = self.ms.open_count
        if opened == 0:
            return 0.0
        L, B, H = self.ms.bin_dims
        return placed_volume(self.ms) / (opened * L * B * H)


def _decider(req: CreateSessionRequest):
    if req.algorithm == "firstfit":
        return first_fit
    if req.algorithm == "floor":
        return floor_build
    if req.algorithm == "column":
        return column_build
    params = (
        WallEParams.from_sequence(req.walle_params) if req.walle_params else WallEParams()
    )
    return lambda ms, box: walle_decide(ms, box, params)


def create_app() -> FastAPI:
    app = FastAPI(title="robopack", version="1.0")
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> _Session:
        sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return sess

    def summary(session_id: str, sess: _Session) -> SessionSummary:
        return SessionSummary(
            session_id=session_id,
            algorithm=sess.algorithm,
            bin_dims=sess.ms.bin_dims,
            max_bins=sess.ms.capacity,
            bins_used=sess.ms.open_count,
            boxes_placed=sess.boxes_placed,
            placed_volume=placed_volume(sess.ms),
            fill_fraction=sess.fill(),
        )

    @app.post("/sessions", response_model=SessionSummary, status_code=201)
    def create_session(req: CreateSessionRequest):
        ms = MultiBinState.empty(tuple(req.bin_dims), req.max_bins)
        session_id = uuid.uuid4().hex
        with registry_lock:
            sessions[session_id] = _Session(
                ms=ms, algorithm=req.algorithm, decide=_decider(req)
            )
        return summary(session_id, sessions[session_id])

    @app.post("/sessions/{session_id}/boxes", response_model=PlacementResponse)
    def submit_box(session_id: str, box_req: BoxRequest):
        sess = get_session(session_id)
        box = BoxDims(box_req.l, box_req.b, box_req.h)
        with sess.lock:
            try:
                decision = sess.decide(sess.ms, box)
            except CapacityExhausted as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except PlacementError as exc:
                raise HTTPException(
                    status_code=422, detail=f"box does not fit any bin: {exc}"
                ) from exc
            ms = sess.ms
            while decision.placement.bin >= ms.open_count:
                ms = open_next_bin(ms)
            ms = apply_placement(ms, box, decision.placement)
            sess.ms = ms
            sess.boxes_placed += 1
            placed = ms.bins[decision.placement.bin].placed[-1]
            return PlacementResponse(
                bin=decision.placement.bin,
                anchor=decision.placement.anchor,
                orientation=decision.placement.orientation,
                resting_height=placed.z,
                opened_new_bin=decision.opened_new_bin,
                bins_used=ms.open_count,
                boxes_placed=sess.boxes_placed,
                fill_fraction=sess.fill(),
            )

    @app.get("/sessions/{session_id}", response_model=SessionSummary)
    def get_state(session_id: str):
        return summary(session_id, get_session(session_id))

    @app.get("/sessions/{session_id}/heights", response_model=HeightsResponse)
    def get_heights(session_id: str):
        sess = get_session(session_id)
        return HeightsResponse(
            session_id=session_id,
            bins=[cont.heights.tolist() for cont in sess.ms.bins],
        )

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        with registry_lock:
            if session_id not in sessions:
                raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
            del sessions[session_id]

    return app
