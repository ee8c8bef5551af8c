"""HTTP facade over the session engine.

Sessions live in memory and are persisted write-through as replayable JSON
event logs under a data directory, so a restarted server reconstructs every
session bit-for-bit from disk. Mutations are serialized per session id;
reads are lock-free snapshots of immutable state objects.
"""

from __future__ import annotations

import os
import tempfile
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .bank import Item, ItemBank
from .errors import (
    BankExhaustedError,
    BayescatError,
    ProtocolError,
)
from .irt import ThetaBounds
from .posterior import PriorSpec, mean, median, mode, update, variance
from .selection import RULE_NAMES, SelectionRule, evaluate_rule, plug_in_theta
from . import posterior as post_mod
from . import session as sess

__all__ = ["create_app", "SessionStore"]


# ---------------------------------------------------------------------------
# Wire models


class PriorIn(BaseModel):
    kind: str = "truncated-normal"
    mu: float = 0.0
    sigma: float = 1.0
    table: list[float] | None = None


class BankItemIn(BaseModel):
    id: str
    difficulty: float


class SessionCreate(BaseModel):
    prior: PriorIn = Field(default_factory=PriorIn)
    rule: str = "bayes-risk-sq"
    estimator: str = "mean"
    max_trials: int = 30
    grid_size: int = 1001
    bounds: tuple[float, float] = (-6.0, 6.0)
    seed: int | None = None
    # Inline item bank; omitted means the bank the server was started with.
    items: list[BankItemIn] | None = None


class ResponseIn(BaseModel):
    item_id: str
    response: int = Field(ge=0, le=1)


class ItemOut(BaseModel):
    id: str
    difficulty: float


class EstimateOut(BaseModel):
    value: float
    estimator: str
    trials_used: int
    posterior_variance: float


class HistoryEntry(BaseModel):
    item_id: str
    difficulty: float
    response: int


class ApiSession(BaseModel):
    session_id: str
    phase: str
    rule: str
    estimator: str
    max_trials: int
    trials_used: int
    current_item: ItemOut | None
    estimate: EstimateOut | None
    history: list[HistoryEntry]
    estimate_trajectory: list[float]


class PosteriorOut(BaseModel):
    nodes: list[float]
    density: list[float]
    mean: float
    median: float
    mode: float | None
    variance: float


class WhatIfEntry(BaseModel):
    rule: str
    item_id: str
    difficulty: float
    criterion: float


class WhatIfOut(BaseModel):
    entries: list[WhatIfEntry]


class DeleteOut(BaseModel):
    deleted: bool


# ---------------------------------------------------------------------------
# Session store


class SessionNotFound(KeyError):
    pass


class SessionStore:
    """In-memory session map with write-through event-log persistence."""

    def __init__(self, data_dir: str | os.PathLike | None = None) -> None:
        self._states: dict[str, sess.SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry = threading.Lock()
        self._data_dir = Path(data_dir) if data_dir is not None else None
        if self._data_dir is not None:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            self._restore()

    def _restore(self) -> None:
        assert self._data_dir is not None
        for path in sorted(self._data_dir.glob("*.json")):
            state = sess.load(path.read_bytes())
            self._states[state.session_id] = state
            self._locks[state.session_id] = threading.Lock()

    def _persist(self, state: sess.SessionState) -> None:
        if self._data_dir is None:
            return
        final = self._data_dir / f"{state.session_id}.json"
        fd, tmp = tempfile.mkstemp(dir=self._data_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(sess.save(state))
            os.replace(tmp, final)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def log_path(self, session_id: str) -> Path | None:
        if self._data_dir is None:
            return None
        return self._data_dir / f"{session_id}.json"

    def add(self, state: sess.SessionState) -> None:
        with self._registry:
            self._states[state.session_id] = state
            self._locks[state.session_id] = threading.Lock()
        self._persist(state)

    def get(self, session_id: str) -> sess.SessionState:
        try:
            return self._states[session_id]
        except KeyError:
            raise SessionNotFound(session_id) from None

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry:
            try:
                return self._locks[session_id]
            except KeyError:
                raise SessionNotFound(session_id) from None

    def replace(self, state: sess.SessionState) -> None:
        self._states[state.session_id] = state
        self._persist(state)

    def delete(self, session_id: str) -> None:
        with self._registry:
            if session_id not in self._states:
                raise SessionNotFound(session_id)
            del self._states[session_id]
            del self._locks[session_id]
        if self._data_dir is not None:
            path = self._data_dir / f"{session_id}.json"
            if path.exists():
                path.unlink()

    def ids(self) -> list[str]:
        return list(self._states)


# ---------------------------------------------------------------------------
# Views


def _estimate_trajectory(state: sess.SessionState) -> list[float]:
    """Point estimate after each recorded trial, recomputed from the log."""
    grid = state.posterior.grid
    post = post_mod.init_posterior(state.config.prior, grid)
    out = []
    for rec in state.history:
        post = update(post, rec.difficulty, rec.response)
        out.append(sess.point_estimate(post, state.config.estimator))
    return out


def _api_session(state: sess.SessionState) -> ApiSession:
    return ApiSession(
        session_id=state.session_id,
        phase=state.phase,
        rule=state.config.rule.name,
        estimator=state.config.estimator,
        max_trials=state.config.max_trials,
        trials_used=state.trials_used,
        current_item=(
            ItemOut(id=state.pending.id, difficulty=state.pending.difficulty)
            if state.pending is not None
            else None
        ),
        estimate=(
            EstimateOut(
                value=state.estimate.value,
                estimator=state.estimate.estimator,
                trials_used=state.estimate.trials_used,
                posterior_variance=state.estimate.posterior_variance,
            )
            if state.estimate is not None
            else None
        ),
        history=[
            HistoryEntry(item_id=r.item_id, difficulty=r.difficulty, response=r.response)
            for r in state.history
        ],
        estimate_trajectory=_estimate_trajectory(state),
    )


def _whatif_bank(state: sess.SessionState) -> ItemBank:
    """Availability snapshot as it stood when the pending item was chosen.

    The pending item stays available so the session's own rule reproduces its
    current choice in the table. Never mutates session state.
    """
    snapshot = state.bank.clone()
    for rec in state.history:
        snapshot.mark_used(rec.item_id)
    return snapshot


def evaluate_whatif(state: sess.SessionState) -> list[WhatIfEntry]:
    bank = _whatif_bank(state)
    entries = []
    for name in RULE_NAMES:
        rule = SelectionRule.parse(name)
        theta_hat = None
        if rule.kind == "max-info":
            theta_hat = plug_in_theta(state.posterior, state.history, state.config.bounds)
        try:
            item, value = evaluate_rule(state.posterior, rule, bank, theta_hat)
        except BankExhaustedError:
            continue
        entries.append(
            WhatIfEntry(rule=name, item_id=item.id, difficulty=item.difficulty, criterion=value)
        )
    return entries


# ---------------------------------------------------------------------------
# App factory


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(
    bank: ItemBank | None = None,
    data_dir: str | os.PathLike | None = None,
) -> FastAPI:
    """Build the API server around a default item bank and a data directory."""
    app = FastAPI(title="bayescat", docs_url="/docs")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(data_dir)
    app.state.store = store
    app.state.default_bank = bank

    @app.exception_handler(SessionNotFound)
    async def _not_found(request: Request, exc: SessionNotFound):
        return _error(404, "not-found", f"no session {exc.args[0]!r}")

    @app.exception_handler(ProtocolError)
    async def _conflict(request: Request, exc: ProtocolError):
        return _error(409, "protocol-error", str(exc))

    @app.exception_handler(BayescatError)
    async def _bad_request(request: Request, exc: BayescatError):
        return _error(400, "invalid-config", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _invalid(request: Request, exc: RequestValidationError):
        return _error(400, "invalid-request", str(exc.errors()))

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "sessions": len(store.ids())}

    @app.post("/sessions", response_model=ApiSession, status_code=201)
    def create_session(body: SessionCreate) -> ApiSession:
        if body.items is not None:
            session_bank = ItemBank(
                [Item(id=i.id, difficulty=i.difficulty) for i in body.items],
                consume_on_use=True,
            )
        elif app.state.default_bank is not None:
            session_bank = app.state.default_bank
        else:
            raise ProtocolError("server has no default bank; supply items inline")
        config = sess.SessionConfig(
            prior=PriorSpec(
                kind=body.prior.kind,
                mu=body.prior.mu,
                sigma=body.prior.sigma,
                table=tuple(body.prior.table) if body.prior.table is not None else None,
            ),
            rule=SelectionRule.parse(body.rule),
            bank=session_bank,
            estimator=body.estimator,
            max_trials=body.max_trials,
            grid_size=body.grid_size,
            bounds=ThetaBounds(body.bounds[0], body.bounds[1]),
            seed=body.seed,
        )
        state = sess.start(config)
        store.add(state)
        return _api_session(state)

    @app.get("/sessions/{session_id}", response_model=ApiSession)
    def get_session(session_id: str) -> ApiSession:
        return _api_session(store.get(session_id))

    @app.post("/sessions/{session_id}/responses", response_model=ApiSession)
    def submit_response(session_id: str, body: ResponseIn) -> ApiSession:
        lock = store.lock(session_id)
        with lock:
            state = store.get(session_id)
            state = sess.submit(state, body.item_id, body.response)
            if state.phase == sess.READY_FOR_ITEM:
                state, _item = sess.next_item(state)
            store.replace(state)
        return _api_session(state)

    @app.get("/sessions/{session_id}/posterior", response_model=PosteriorOut)
    def get_posterior(session_id: str) -> PosteriorOut:
        state = store.get(session_id)
        post = state.posterior
        payload = post_mod.posterior_to_dict(post)
        mode_value: float | None
        try:
            mode_value = mode(post)
        except BayescatError:
            mode_value = None
        return PosteriorOut(
            nodes=payload["nodes"],
            density=payload["density"],
            mean=mean(post),
            median=median(post),
            mode=mode_value,
            variance=variance(post),
        )

    @app.get("/sessions/{session_id}/whatif", response_model=WhatIfOut)
    def get_whatif(session_id: str) -> WhatIfOut:
        state = store.get(session_id)
        return WhatIfOut(entries=evaluate_whatif(state))

    @app.delete("/sessions/{session_id}", response_model=DeleteOut)
    def delete_session(session_id: str) -> DeleteOut:
        store.delete(session_id)
        return DeleteOut(deleted=True)

    return app
