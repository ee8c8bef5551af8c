"""Rasch (one-parameter logistic) response model.

Success probability, log-likelihood, score, Fisher information, and the
bounded maximum-likelihood ability estimate. Everything is numerically
stable for logits up to |theta - b| ~ 700: only negative arguments are
exponentiated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "ThetaBounds",
    "ResponseRecord",
    "prob_correct",
    "item_information",
    "log_likelihood",
    "score",
    "fisher_information",
    "mle",
]

DEFAULT_BOUNDS = (-6.0, 6.0)
MLE_TOL = 1e-10


@dataclass(frozen=True)
class ThetaBounds:
    """Closed ability interval [lower, upper]."""

    lower: float = DEFAULT_BOUNDS[0]
    upper: float = DEFAULT_BOUNDS[1]

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise DomainError("ability bounds must be finite")
        if not self.lower < self.upper:
            raise DomainError(
                f"ability bounds must satisfy lower < upper, got [{self.lower}, {self.upper}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ResponseRecord:
    """One administered item and its scored response (1 correct, 0 incorrect)."""

    item_id: str
    difficulty: float
    response: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.difficulty):
            raise DomainError(f"difficulty must be finite, got {self.difficulty}")
        if self.response not in (0, 1):
            raise DomainError(f"response must be 0 or 1, got {self.response!r}")


def _prob_pair(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Branch on the sign so exp only ever sees non-positive arguments. The
    # product p*pbar is computed from the same two factors on both branches,
    # which keeps item information exactly even in t.
    z = np.exp(-np.abs(t))
    denom = 1.0 + z
    near = 1.0 / denom
    far = z / denom
    t = np.asarray(t)
    p = np.where(t >= 0.0, near, far)
    pbar = np.where(t >= 0.0, far, near)
    return p, pbar


def _log_prob_pair(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t)
    ell = np.log1p(np.exp(-np.abs(t)))
    logp = np.where(t >= 0.0, -ell, t - ell)
    logpbar = np.where(t >= 0.0, -t - ell, -ell)
    return logp, logpbar


def _validate_finite(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def prob_correct(theta, difficulty):
    """P(correct | theta, difficulty) = 1 / (1 + exp(-(theta - difficulty))).

    Accepts scalars or arrays (broadcast); returns a float for scalar input.
    """
    th = _validate_finite("theta", theta)
    b = _validate_finite("difficulty", difficulty)
    p, _ = _prob_pair(th - b)
    if np.ndim(p) == 0:
        return float(p)
    return p


def item_information(theta, difficulty):
    """Fisher information p(1-p) of a single item at ability theta."""
    th = _validate_finite("theta", theta)
    b = _validate_finite("difficulty", difficulty)
    p, pbar = _prob_pair(th - b)
    info = p * pbar
    if np.ndim(info) == 0:
        return float(info)
    return info


def _history_arrays(history: Iterable[ResponseRecord]) -> tuple[np.ndarray, np.ndarray]:
    difficulties = []
    responses = []
    for rec in history:
        difficulties.append(rec.difficulty)
        responses.append(rec.response)
    return np.asarray(difficulties, dtype=float), np.asarray(responses, dtype=float)


def log_likelihood(theta: float, history: Sequence[ResponseRecord]) -> float:
    """Log-likelihood of a response history at ability theta."""
    th = float(_validate_finite("theta", theta))
    b, x = _history_arrays(history)
    if b.size == 0:
        return 0.0
    logp, logpbar = _log_prob_pair(th - b)
    return float(np.sum(x * logp + (1.0 - x) * logpbar))


def score(theta: float, history: Sequence[ResponseRecord]) -> float:
    """Derivative of the log-likelihood in theta: sum of (x_j - p_j).

    Strictly decreasing in theta whenever the history is non-empty.
    """
    th = float(_validate_finite("theta", theta))
    b, x = _history_arrays(history)
    if b.size == 0:
        return 0.0
    p, _ = _prob_pair(th - b)
    return float(np.sum(x - p))


def fisher_information(theta: float, difficulties) -> float:
    """Test information: sum of p(1-p) over the given difficulties."""
    th = _validate_finite("theta", theta)
    b = _validate_finite("difficulties", np.atleast_1d(difficulties))
    p, pbar = _prob_pair(float(th) - b)
    return float(np.sum(p * pbar))


def mle(
    history: Sequence[ResponseRecord],
    bounds: ThetaBounds = ThetaBounds(),
    tol: float = MLE_TOL,
) -> float:
    """Constrained maximum-likelihood ability estimate on [lower, upper].

    All-correct histories return the upper bound and all-incorrect the lower
    bound (the score has no interior zero there). Otherwise the unique root
    of the monotone score function is bracketed by bisection to within tol.
    """
    b, x = _history_arrays(history)
    if b.size == 0:
        raise DomainError("MLE is undefined for an empty response history")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if np.all(x == 1.0):
        return bounds.upper
    if np.all(x == 0.0):
        return bounds.lower

    def s(theta: float) -> float:
        p, _ = _prob_pair(theta - b)
        return float(np.sum(x - p))

    lo, hi = bounds.lower, bounds.upper
    if s(lo) <= 0.0:
        return lo
    if s(hi) >= 0.0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if s(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
