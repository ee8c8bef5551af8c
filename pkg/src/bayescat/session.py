"""Adaptive test sessions: a small phase machine over posterior + bank.

Phases: ``awaiting-response`` (an item is assigned), ``ready-for-item``
(response recorded, next item not yet selected), ``finished``. State objects
are immutable snapshots; persistence stores the replayable event log
(config + responses), never serialized densities, so a loaded session is
bit-identical to one rebuilt live.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, replace
from typing import Sequence

from .bank import Item, ItemBank
from .errors import (
    BankExhaustedError,
    ConfigError,
    ProtocolError,
    UnsupportedEstimatorError,
)
from .irt import ResponseRecord, ThetaBounds
from .posterior import (
    AbilityGrid,
    Posterior,
    PriorSpec,
    init_posterior,
    mean,
    median,
    mode,
    update,
    variance,
)
from .selection import SelectionRule, evaluate_rule, plug_in_theta

__all__ = [
    "AWAITING_RESPONSE",
    "READY_FOR_ITEM",
    "FINISHED",
    "SESSION_ESTIMATORS",
    "SessionConfig",
    "Estimate",
    "SessionState",
    "start",
    "submit",
    "next_item",
    "replay",
    "save",
    "load",
    "config_to_dict",
    "config_from_dict",
]

AWAITING_RESPONSE = "awaiting-response"
READY_FOR_ITEM = "ready-for-item"
FINISHED = "finished"

SESSION_ESTIMATORS = ("mean", "median", "mode")

SESSION_LOG_FORMAT = "bayescat-session-v1"


@dataclass(frozen=True)
class SessionConfig:
    prior: PriorSpec
    rule: SelectionRule
    bank: ItemBank
    estimator: str = "mean"
    max_trials: int = 30
    grid_size: int = 1001
    bounds: ThetaBounds = ThetaBounds()
    seed: int | None = None  # simulated-respondent mode only

    def __post_init__(self) -> None:
        if self.estimator not in SESSION_ESTIMATORS:
            raise ConfigError(
                f"estimator must be one of {SESSION_ESTIMATORS}, got {self.estimator!r}"
            )
        if self.max_trials < 1:
            raise ConfigError(f"max_trials must be >= 1, got {self.max_trials}")
        if len(self.bank) == 0:
            raise ConfigError("item bank is empty")


@dataclass(frozen=True)
class Estimate:
    value: float
    estimator: str
    trials_used: int
    posterior_variance: float


@dataclass(frozen=True)
class SessionState:
    session_id: str
    config: SessionConfig
    bank: ItemBank  # live copy owned by this session (consumption state)
    posterior: Posterior
    history: tuple[ResponseRecord, ...]
    phase: str
    pending: Item | None = None
    estimate: Estimate | None = None

    @property
    def trials_used(self) -> int:
        return len(self.history)


def point_estimate(post: Posterior, estimator: str) -> float:
    if estimator == "mean":
        return mean(post)
    if estimator == "median":
        return median(post)
    if estimator == "mode":
        return mode(post)
    raise UnsupportedEstimatorError(f"unknown estimator {estimator!r}")


def _make_estimate(config: SessionConfig, post: Posterior, trials: int) -> Estimate:
    return Estimate(
        value=point_estimate(post, config.estimator),
        estimator=config.estimator,
        trials_used=trials,
        posterior_variance=variance(post),
    )


def _select(state: SessionState) -> Item:
    theta_hat = None
    if state.config.rule.kind == "max-info":
        theta_hat = plug_in_theta(state.posterior, state.history, state.config.bounds)
    item, _ = evaluate_rule(state.posterior, state.config.rule, state.bank, theta_hat)
    return item


def start(config: SessionConfig, session_id: str | None = None) -> SessionState:
    """Open a session: prior posterior, first item assigned, awaiting response."""
    grid = AbilityGrid(bounds=config.bounds, size=config.grid_size)
    post = init_posterior(config.prior, grid)
    if config.estimator == "mode" and not post.log_concave:
        raise UnsupportedEstimatorError(
            "estimator 'mode' requires a log-concave prior"
        )
    state = SessionState(
        session_id=session_id or uuid.uuid4().hex,
        config=config,
        bank=config.bank.clone(),
        posterior=post,
        history=(),
        phase=READY_FOR_ITEM,
    )
    state, item = next_item(state)
    if item is None:
        raise BankExhaustedError("bank exhausted before the first item")
    return state


def next_item(state: SessionState) -> tuple[SessionState, Item | None]:
    """Select and assign the next item.

    Returns (state, item). When the bank is exhausted the session
    force-finishes with the current estimate and the item is None.
    """
    if state.phase != READY_FOR_ITEM:
        raise ProtocolError(f"next_item requires phase {READY_FOR_ITEM!r}, session is {state.phase!r}")
    try:
        item = _select(state)
    except BankExhaustedError:
        finished = replace(
            state,
            phase=FINISHED,
            pending=None,
            estimate=_make_estimate(state.config, state.posterior, state.trials_used),
        )
        return finished, None
    state.bank.mark_used(item.id)
    return replace(state, phase=AWAITING_RESPONSE, pending=item), item


def submit(state: SessionState, item_id: str, response: int) -> SessionState:
    """Record a scored response to the pending item.

    Protocol violations (wrong phase, stale or unknown item id, response not
    in {0, 1}) raise without changing the session.
    """
    if state.phase != AWAITING_RESPONSE:
        raise ProtocolError(
            f"submit requires phase {AWAITING_RESPONSE!r}, session is {state.phase!r}"
        )
    assert state.pending is not None
    if item_id != state.pending.id:
        raise ProtocolError(
            f"response for item {item_id!r} but item {state.pending.id!r} is pending"
        )
    if response not in (0, 1):
        raise ProtocolError(f"response must be 0 or 1, got {response!r}")
    record = ResponseRecord(
        item_id=item_id, difficulty=state.pending.difficulty, response=response
    )
    post = update(state.posterior, record.difficulty, record.response)
    history = state.history + (record,)
    if len(history) >= state.config.max_trials:
        return replace(
            state,
            posterior=post,
            history=history,
            phase=FINISHED,
            pending=None,
            estimate=_make_estimate(state.config, post, len(history)),
        )
    return replace(
        state, posterior=post, history=history, phase=READY_FOR_ITEM, pending=None
    )


def replay(
    config: SessionConfig,
    history: Sequence[ResponseRecord],
    session_id: str | None = None,
) -> SessionState:
    """Deterministically reconstruct a session from its response log."""
    grid = AbilityGrid(bounds=config.bounds, size=config.grid_size)
    post = init_posterior(config.prior, grid)
    bank = config.bank.clone()
    for rec in history:
        bank.item(rec.item_id)  # raises BankError on unknown ids
        bank.mark_used(rec.item_id)
        post = update(post, rec.difficulty, rec.response)
    history = tuple(history)
    if len(history) >= config.max_trials:
        return SessionState(
            session_id=session_id or uuid.uuid4().hex,
            config=config,
            bank=bank,
            posterior=post,
            history=history,
            phase=FINISHED,
            estimate=_make_estimate(config, post, len(history)),
        )
    return SessionState(
        session_id=session_id or uuid.uuid4().hex,
        config=config,
        bank=bank,
        posterior=post,
        history=history,
        phase=READY_FOR_ITEM,
    )


def config_to_dict(config: SessionConfig) -> dict:
    prior: dict = {"kind": config.prior.kind}
    if config.prior.kind == "truncated-normal":
        prior["mu"] = config.prior.mu
        prior["sigma"] = config.prior.sigma
    if config.prior.kind == "table":
        prior["table"] = list(config.prior.table)
    return {
        "prior": prior,
        "rule": config.rule.name,
        "estimator": config.estimator,
        "max_trials": config.max_trials,
        "grid_size": config.grid_size,
        "bounds": [config.bounds.lower, config.bounds.upper],
        "seed": config.seed,
        "bank": {
            "consume_on_use": config.bank.consume_on_use,
            "items": config.bank.to_records(),
        },
    }


def config_from_dict(data: dict) -> SessionConfig:
    try:
        prior_data = dict(data["prior"])
        kind = prior_data.pop("kind")
        table = prior_data.pop("table", None)
        prior = PriorSpec(
            kind=kind,
            mu=prior_data.pop("mu", 0.0),
            sigma=prior_data.pop("sigma", 1.0),
            table=tuple(table) if table is not None else None,
        )
        bank_data = data["bank"]
        bank = ItemBank(
            [Item(id=r["id"], difficulty=float(r["difficulty"])) for r in bank_data["items"]],
            consume_on_use=bool(bank_data.get("consume_on_use", False)),
        )
        bounds = data.get("bounds", (-6.0, 6.0))
        return SessionConfig(
            prior=prior,
            rule=SelectionRule.parse(data["rule"]),
            bank=bank,
            estimator=data.get("estimator", "mean"),
            max_trials=int(data.get("max_trials", 30)),
            grid_size=int(data.get("grid_size", 1001)),
            bounds=ThetaBounds(float(bounds[0]), float(bounds[1])),
            seed=data.get("seed"),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed session config: {exc}") from None


def save(state: SessionState) -> bytes:
    """Serialize the replayable event log (config + responses + pending item)."""
    payload = {
        "format": SESSION_LOG_FORMAT,
        "session_id": state.session_id,
        "config": config_to_dict(state.config),
        "events": [
            {"item_id": r.item_id, "difficulty": r.difficulty, "response": r.response}
            for r in state.history
        ],
        "pending_item_id": state.pending.id if state.pending else None,
    }
    return json.dumps(payload).encode()


def load(data: bytes) -> SessionState:
    """Rebuild a session from `save` output by replaying its event log."""
    try:
        payload = json.loads(data.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"session log is not valid JSON: {exc}") from None
    if payload.get("format") != SESSION_LOG_FORMAT:
        raise ConfigError(f"unknown session log format {payload.get('format')!r}")
    config = config_from_dict(payload["config"])
    history = [
        ResponseRecord(
            item_id=e["item_id"],
            difficulty=float(e["difficulty"]),
            response=int(e["response"]),
        )
        for e in payload.get("events", [])
    ]
    state = replay(config, history, session_id=payload.get("session_id"))
    pending_id = payload.get("pending_item_id")
    if pending_id is not None and state.phase == READY_FOR_ITEM:
        item = state.bank.item(pending_id)
        state.bank.mark_used(item.id)
        state = replace(state, phase=AWAITING_RESPONSE, pending=item)
    return state
