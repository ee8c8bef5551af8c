"""Adaptive item selection rules.

Five rules share one evaluation core: the classical information-maximizing
rule (``max-info``, equivalent to picking the difficulty nearest the current
ability point estimate), the posterior-weighted information rule
(``pw-info``), the one-step expected-posterior-variance rule (``min-epv``),
and the one-step preposterior Bayes-risk rules for squared and absolute loss
(``bayes-risk-sq``, ``bayes-risk-abs``).

For squared loss the Bayes risk of the updated posterior is its variance, so
``bayes-risk-sq`` and ``min-epv`` must always choose the same item; the two
are computed through different formulas on purpose so tests can assert the
equivalence rather than inherit it.

Candidate criterion values within a relative 1e-12 of the optimum are treated
as tied; ties break to the smaller difficulty, then the lexicographically
smaller id. Exact float ties cannot survive mirrored summation order, and
this tolerance is orders of magnitude below any genuine separation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bank import Item, ItemBank
from .errors import BankExhaustedError, DomainError
from .irt import ResponseRecord, ThetaBounds, _prob_pair, item_information, mle
from .posterior import LossSpec, Posterior, mean

__all__ = [
    "RULE_NAMES",
    "SelectionRule",
    "predictive_prob_correct",
    "select_max_info",
    "select_posterior_weighted_info",
    "select_min_expected_posterior_variance",
    "select_bayes_risk",
    "first_item",
    "evaluate_rule",
    "plug_in_theta",
]

RULE_NAMES = ("max-info", "pw-info", "min-epv", "bayes-risk-sq", "bayes-risk-abs")

TIE_REL_TOL = 1e-12


@dataclass(frozen=True)
class SelectionRule:
    """One of the five named selection rules."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in RULE_NAMES:
            raise DomainError(
                f"rule must be one of {RULE_NAMES}, got {self.kind!r}"
            )

    @property
    def name(self) -> str:
        return self.kind

    @property
    def loss(self) -> LossSpec | None:
        if self.kind == "bayes-risk-sq":
            return LossSpec("squared")
        if self.kind == "bayes-risk-abs":
            return LossSpec("absolute")
        return None

    @classmethod
    def parse(cls, name: str) -> "SelectionRule":
        return cls(kind=name)


def _bank_matrices(bank: ItemBank, grid) -> dict:
    """Per-(bank, grid) cache of item likelihood values at the grid nodes."""
    entry = bank.cache.get(grid.key)
    if entry is None:
        items = bank.items
        b = np.array([it.difficulty for it in items])
        t = grid.nodes[None, :] - b[:, None]
        succ, fail = _prob_pair(t)
        entry = {
            "ids": [it.id for it in items],
            "b": b,
            "succ": succ,
            "info": succ * fail,
        }
        bank.cache[grid.key] = entry
    return entry


def _availability(bank: ItemBank, entry: dict) -> np.ndarray:
    return np.array([bank.item(i).available for i in entry["ids"]], dtype=bool)


def _pick_min(items: Sequence[Item], values: np.ndarray) -> tuple[Item, float]:
    """First item (in difficulty/id order) whose value ties the minimum."""
    best = float(np.min(values))
    tol = TIE_REL_TOL * max(1.0, abs(best))
    j = int(np.flatnonzero(values <= best + tol)[0])
    return items[j], float(values[j])


def _available(bank: ItemBank, grid) -> tuple[list[Item], dict, np.ndarray]:
    entry = _bank_matrices(bank, grid)
    mask = _availability(bank, entry)
    if not mask.any():
        raise BankExhaustedError("no available items remain in the bank")
    items = [it for it, ok in zip(bank.items, mask) if ok]
    return items, entry, mask


def predictive_prob_correct(post: Posterior, difficulty: float) -> float:
    """Posterior predictive probability of a correct response to difficulty b."""
    if not np.isfinite(difficulty):
        raise DomainError(f"difficulty must be finite, got {difficulty}")
    u = post.grid._simp_w * post.density
    p, _ = _prob_pair(post.grid.nodes - difficulty)
    return float(p @ u) / float(np.sum(u))


def _branch_medians(grid, raw: np.ndarray) -> np.ndarray:
    """Row-wise CDF-crossing medians of unnormalized densities on the grid."""
    h = grid.spacing
    cells = 0.5 * h * (raw[:, :-1] + raw[:, 1:])
    cum = np.concatenate(
        [np.zeros((raw.shape[0], 1)), np.cumsum(cells, axis=1)], axis=1
    )
    half = 0.5 * cum[:, -1:]
    idx = np.sum(cum < half, axis=1)
    idx = np.clip(idx, 1, grid.size - 1)
    lo = np.take_along_axis(cum, (idx - 1)[:, None], axis=1)[:, 0]
    hi = np.take_along_axis(cum, idx[:, None], axis=1)[:, 0]
    gain = hi - lo
    frac = np.where(gain > 0.0, (half[:, 0] - lo) / np.where(gain > 0, gain, 1.0), 0.0)
    return grid.nodes[idx - 1] + frac * h


def _epv_values(post: Posterior, succ: np.ndarray) -> np.ndarray:
    """Expected posterior variance per candidate, raw-moment form."""
    grid = post.grid
    theta = grid.nodes
    u = grid._simp_w * post.density
    total = float(np.sum(u))
    ut = u * theta
    utt = ut * theta
    s1 = succ @ u
    m1 = succ @ ut
    m2 = succ @ utt
    s0 = total - s1
    m1c = float(np.sum(ut)) - m1
    m2c = float(np.sum(utt)) - m2
    tiny = np.finfo(float).tiny
    d1 = np.maximum(s1, tiny)
    d0 = np.maximum(s0, tiny)
    var1 = m2 / d1 - (m1 / d1) ** 2
    var0 = m2c / d0 - (m1c / d0) ** 2
    var1 = np.where(s1 > 0.0, var1, 0.0)
    var0 = np.where(s0 > 0.0, var0, 0.0)
    return (s1 * var1 + s0 * var0) / total


def _risk_values(post: Posterior, succ: np.ndarray, loss: LossSpec) -> np.ndarray:
    """One-step preposterior Bayes risk per candidate.

    For each candidate and each hypothetical response, the updated posterior's
    minimal expected loss (variance about the mean for squared loss, absolute
    deviation about the median for absolute loss), averaged under the
    predictive response distribution.
    """
    grid = post.grid
    theta = grid.nodes
    u = grid._simp_w * post.density
    total = float(np.sum(u))
    u1 = succ * u[None, :]
    u0 = u[None, :] - u1
    tiny = np.finfo(float).tiny
    if loss.kind == "squared":
        s1 = u1.sum(axis=1)
        s0 = u0.sum(axis=1)
        est1 = (u1 @ theta) / np.maximum(s1, tiny)
        est0 = (u0 @ theta) / np.maximum(s0, tiny)
    else:
        raw1 = post.density[None, :] * succ
        raw0 = post.density[None, :] - raw1
        est1 = _branch_medians(grid, raw1)
        est0 = _branch_medians(grid, raw0)
    dev1 = theta[None, :] - est1[:, None]
    dev0 = theta[None, :] - est0[:, None]
    if loss.kind == "squared":
        branch1 = (u1 * dev1 * dev1).sum(axis=1)
        branch0 = (u0 * dev0 * dev0).sum(axis=1)
    else:
        branch1 = (u1 * np.abs(dev1)).sum(axis=1)
        branch0 = (u0 * np.abs(dev0)).sum(axis=1)
    return (branch1 + branch0) / total


def evaluate_rule(
    post: Posterior,
    rule: SelectionRule,
    bank: ItemBank,
    theta_hat: float | None = None,
) -> tuple[Item, float]:
    """Chosen item and its criterion value under the given rule.

    ``max-info`` requires theta_hat. Reported criterion values follow the
    rule's natural orientation: information values for the info rules
    (maximized), variance/risk for the lookahead rules (minimized).
    """
    items, entry, mask = _available(bank, post.grid)
    if rule.kind == "max-info":
        if theta_hat is None:
            raise DomainError("max-info selection requires a plug-in ability estimate")
        if not np.isfinite(theta_hat):
            raise DomainError(f"theta_hat must be finite, got {theta_hat}")
        values = np.abs(entry["b"][mask] - theta_hat)
        item, _ = _pick_min(items, values)
        return item, item_information(theta_hat, item.difficulty)
    if rule.kind == "pw-info":
        u = post.grid._simp_w * post.density
        weighted = (entry["info"][mask] @ u) / float(np.sum(u))
        item, value = _pick_min(items, -weighted)
        return item, -value
    if rule.kind == "min-epv":
        values = _epv_values(post, entry["succ"][mask])
        return _pick_min(items, values)
    values = _risk_values(post, entry["succ"][mask], rule.loss)
    return _pick_min(items, values)


def select_max_info(theta_hat: float, bank: ItemBank) -> Item:
    """Item with maximal Fisher information at theta_hat.

    Equivalently the available item whose difficulty is nearest theta_hat;
    implemented through the closed form so symmetric ties are exact.
    """
    if not np.isfinite(theta_hat):
        raise DomainError(f"theta_hat must be finite, got {theta_hat}")
    items = bank.available_items()
    if not items:
        raise BankExhaustedError("no available items remain in the bank")
    values = np.array([abs(it.difficulty - theta_hat) for it in items])
    item, _ = _pick_min(items, values)
    return item


def select_posterior_weighted_info(post: Posterior, bank: ItemBank) -> Item:
    """Item maximizing posterior-expected Fisher information."""
    item, _ = evaluate_rule(post, SelectionRule("pw-info"), bank)
    return item


def select_min_expected_posterior_variance(post: Posterior, bank: ItemBank) -> Item:
    """Item minimizing the predictive expectation of the updated variance."""
    item, _ = evaluate_rule(post, SelectionRule("min-epv"), bank)
    return item


def select_bayes_risk(post: Posterior, bank: ItemBank, loss: LossSpec) -> Item:
    """Item minimizing the one-step preposterior Bayes risk for the loss."""
    kind = "bayes-risk-sq" if loss.kind == "squared" else "bayes-risk-abs"
    item, _ = evaluate_rule(post, SelectionRule(kind), bank)
    return item


def first_item(prior_post: Posterior, rule: SelectionRule, bank: ItemBank) -> Item:
    """Cold-start selection: the rule applied to the prior itself.

    max-info plugs in the prior mean since no responses exist yet.
    """
    item, _ = evaluate_rule(prior_post, rule, bank, theta_hat=mean(prior_post))
    return item


def plug_in_theta(
    post: Posterior,
    history: Sequence[ResponseRecord],
    bounds: ThetaBounds = ThetaBounds(),
) -> float:
    """Ability plug-in for max-info selection.

    Posterior (or prior) mean until the history contains both a correct and
    an incorrect response; the bounded MLE afterwards. The MLE alone is not
    well defined on all-correct/all-wrong histories.
    """
    if history:
        responses = {rec.response for rec in history}
        if responses == {0, 1}:
            return mle(history, bounds)
    return mean(post)
