"""Numerical checks of the divergence bounds and asymptotic behavior.

Three pairwise quantities between ability values, per item difficulty:

* ``v1`` — Kullback-Leibler divergence between the two Bernoulli response
  distributions,
* ``v2`` — the squared-log-ratio second moment,
* ``hellinger_sq`` — squared Hellinger distance.

All three admit quadratic bounds in the ability gap with explicit constants
(1/4, 4, and 1), and the squared Hellinger distance is bounded below by
c * gap^2 with c = m0*m1*(m0+m1)/4, where m1 and m0 are the infima of the
success and failure probabilities over the ability/difficulty region. The
verifiers sweep dense grids and report every violation; experiments probe
posterior concentration and estimator consistency empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import spearmanr

from .bank import ItemBank, make_dense_bank
from .errors import ConfigError, DomainError
from .irt import ThetaBounds, _log_prob_pair, _prob_pair, mle
from .posterior import AbilityGrid, PriorSpec, init_posterior, prob_in_interval, update
from .selection import SelectionRule
from . import session as sess
from .simulate import SimulatedRespondent

__all__ = [
    "v1",
    "v2",
    "hellinger_sq",
    "BoundCheckConfig",
    "UpperBoundReport",
    "LowerBoundReport",
    "verify_upper_bounds",
    "verify_lower_bound",
    "ConcentrationConfig",
    "ConcentrationReport",
    "concentration_experiment",
    "ConsistencyConfig",
    "ConsistencyReport",
    "consistency_experiment",
]


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _pairwise_inputs(theta1, theta2, b):
    t1 = np.asarray(theta1, dtype=float) - np.asarray(b, dtype=float)
    t2 = np.asarray(theta2, dtype=float) - np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(t1)) and np.all(np.isfinite(t2))):
        raise DomainError("theta1, theta2, b must be finite")
    return t1, t2


def v1(theta1, theta2, b):
    """KL divergence of the item response at theta1 from the one at theta2.

    Zero exactly on the diagonal: the log ratios are differences of
    identical values.
    """
    t1, t2 = _pairwise_inputs(theta1, theta2, b)
    p1, q1 = _prob_pair(t1)
    lp1, lq1 = _log_prob_pair(t1)
    lp2, lq2 = _log_prob_pair(t2)
    out = (lp1 - lp2) * p1 + (lq1 - lq2) * q1
    return float(out) if np.ndim(out) == 0 else out


def v2(theta1, theta2, b):
    """Second moment of the log likelihood ratio under theta1's response law."""
    t1, t2 = _pairwise_inputs(theta1, theta2, b)
    p1, q1 = _prob_pair(t1)
    lp1, lq1 = _log_prob_pair(t1)
    lp2, lq2 = _log_prob_pair(t2)
    out = (lp1 - lp2) ** 2 * p1 + (lq1 - lq2) ** 2 * q1
    return float(out) if np.ndim(out) == 0 else out


def hellinger_sq(theta1, theta2, b):
    """Squared Hellinger distance between the two item response laws."""
    t1, t2 = _pairwise_inputs(theta1, theta2, b)
    p1, q1 = _prob_pair(t1)
    p2, q2 = _prob_pair(t2)
    out = (np.sqrt(p1) - np.sqrt(p2)) ** 2 + (np.sqrt(q1) - np.sqrt(q2)) ** 2
    return float(out) if np.ndim(out) == 0 else out


def _axis(lower: float, upper: float, step: float) -> np.ndarray:
    if not (math.isfinite(lower) and math.isfinite(upper) and lower <= upper):
        raise ConfigError(f"invalid range [{lower}, {upper}]")
    if not (math.isfinite(step) and step > 0):
        raise ConfigError(f"step must be positive, got {step}")
    if lower == upper:
        return np.asarray([lower])
    count = round((upper - lower) / step) + 1
    return np.linspace(lower, upper, count)


@dataclass(frozen=True)
class BoundCheckConfig:
    """Grid sweep configuration for the divergence-bound verifiers.

    The constants are parameters so tests can corrupt them and watch the
    verifier fail (negative control).
    """

    theta_lower: float = -6.0
    theta_upper: float = 6.0
    b_lower: float = -6.0
    b_upper: float = 6.0
    step: float = 0.05
    slack: float = 1e-12
    c_v1: float = 0.25
    c_v2: float = 4.0
    c_h2: float = 1.0
    lower_scale: float = 1.0
    diag_tolerance: float = 0.01
    diag_delta: float = 1e-4


@dataclass(frozen=True)
class QuantityCheck:
    violations: int
    checked: int
    worst_ratio: float
    worst_point: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "violations": self.violations,
            "checked": self.checked,
            "worst_ratio": self.worst_ratio,
            "worst_point": list(self.worst_point),
        }


@dataclass(frozen=True)
class UpperBoundReport:
    config: BoundCheckConfig
    v1: QuantityCheck
    v2: QuantityCheck
    h2: QuantityCheck

    @property
    def passed(self) -> bool:
        return self.v1.violations == 0 and self.v2.violations == 0 and self.h2.violations == 0

    def to_dict(self) -> dict:
        return {
            "kind": "upper-bounds",
            "constants": {"v1": self.config.c_v1, "v2": self.config.c_v2, "h2": self.config.c_h2},
            "step": self.config.step,
            "slack": self.config.slack,
            "v1": self.v1.to_dict(),
            "v2": self.v2.to_dict(),
            "h2": self.h2.to_dict(),
            "passed": self.passed,
        }


def verify_upper_bounds(config: BoundCheckConfig = BoundCheckConfig()) -> UpperBoundReport:
    """Sweep the grid and check v1 <= c1*gap^2, v2 <= c2*gap^2, h2 <= c3*gap^2."""
    theta = _axis(config.theta_lower, config.theta_upper, config.step)
    b_axis = _axis(config.b_lower, config.b_upper, config.step)
    gap2 = (theta[:, None] - theta[None, :]) ** 2
    off = gap2 > 0.0
    names = ("v1", "v2", "h2")
    constants = {"v1": config.c_v1, "v2": config.c_v2, "h2": config.c_h2}
    viol = {n: 0 for n in names}
    checked = {n: 0 for n in names}
    # Ratios on the diagonal are defined as 0, so a box with no off-diagonal
    # pairs reports worst_ratio 0 (vacuous pass).
    origin = (float(theta[0]), float(theta[0]), float(b_axis[0]))
    worst = {n: (0.0, origin) for n in names}
    for b in b_axis:
        t = theta - b
        p, q = _prob_pair(t)
        lp, lq = _log_prob_pair(t)
        values = {
            "v1": (lp[:, None] - lp[None, :]) * p[:, None]
            + (lq[:, None] - lq[None, :]) * q[:, None],
            "v2": (lp[:, None] - lp[None, :]) ** 2 * p[:, None]
            + (lq[:, None] - lq[None, :]) ** 2 * q[:, None],
            "h2": (np.sqrt(p)[:, None] - np.sqrt(p)[None, :]) ** 2
            + (np.sqrt(q)[:, None] - np.sqrt(q)[None, :]) ** 2,
        }
        for name in names:
            val = values[name]
            viol[name] += int(np.count_nonzero(val > constants[name] * gap2 + config.slack))
            checked[name] += val.size
            ratios = np.where(off, val / np.where(off, gap2, 1.0), -math.inf)
            k = int(np.argmax(ratios))
            i, j = divmod(k, theta.size)
            if ratios[i, j] > worst[name][0]:
                worst[name] = (float(ratios[i, j]), (float(theta[i]), float(theta[j]), float(b)))
    checks = {
        n: QuantityCheck(
            violations=viol[n], checked=checked[n], worst_ratio=worst[n][0], worst_point=worst[n][1]
        )
        for n in names
    }
    return UpperBoundReport(config=config, v1=checks["v1"], v2=checks["v2"], h2=checks["h2"])


@dataclass(frozen=True)
class LowerBoundReport:
    config: BoundCheckConfig
    c_candidate: float
    m0: float
    m1: float
    violations: int
    checked: int
    min_h2_over_gap2: float
    diag_bound: float
    diag_violations: int
    diag_worst_ratio: float

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.diag_violations == 0

    def to_dict(self) -> dict:
        return {
            "kind": "lower-bound",
            "c_candidate": self.c_candidate,
            "m0": self.m0,
            "m1": self.m1,
            "step": self.config.step,
            "slack": self.config.slack,
            "violations": self.violations,
            "checked": self.checked,
            "min_h2_over_gap2": _finite_or_none(self.min_h2_over_gap2),
            "diag_bound": self.diag_bound,
            "diag_violations": self.diag_violations,
            "diag_worst_ratio": _finite_or_none(self.diag_worst_ratio),
            "passed": self.passed,
        }


def verify_lower_bound(config: BoundCheckConfig = BoundCheckConfig()) -> LowerBoundReport:
    """Check c*gap^2 <= h2 off the diagonal and the diagonal-limit ratio cap.

    c = lower_scale * m0*m1*(m0+m1)/4, with m1/m0 the infima of the success
    and failure probabilities when both ability and difficulty range over the
    union of the two boxes. The diagonal check compares gap^2/h2 at a small
    ability gap against 4/(m0*m1*(m0+m1)) within diag_tolerance.
    """
    theta = _axis(config.theta_lower, config.theta_upper, config.step)
    b_axis = _axis(config.b_lower, config.b_upper, config.step)
    region_lo = min(config.theta_lower, config.b_lower)
    region_hi = max(config.theta_upper, config.b_upper)
    span = region_hi - region_lo
    m1, _ = _prob_pair(np.asarray(-span))
    m1 = float(m1)
    _, m0 = _prob_pair(np.asarray(span))
    m0 = float(m0)
    c_candidate = config.lower_scale * m0 * m1 * (m0 + m1) / 4.0
    diag_bound = 4.0 / (m0 * m1 * (m0 + m1))

    gap2 = (theta[:, None] - theta[None, :]) ** 2
    included = gap2 >= (config.step * (1.0 - 1e-9)) ** 2
    violations = 0
    checked = 0
    min_ratio = math.inf
    diag_violations = 0
    diag_worst = -math.inf
    delta = config.diag_delta
    for b in b_axis:
        t = theta - b
        p, q = _prob_pair(t)
        h2 = (np.sqrt(p)[:, None] - np.sqrt(p)[None, :]) ** 2 + (
            np.sqrt(q)[:, None] - np.sqrt(q)[None, :]
        ) ** 2
        violations += int(
            np.count_nonzero((c_candidate * gap2 > h2 + config.slack) & included)
        )
        checked += int(np.count_nonzero(included))
        ratios = np.where(included, h2 / np.where(included, gap2, 1.0), math.inf)
        min_ratio = min(min_ratio, float(np.min(ratios)))
        # Diagonal limit: gap^2 / h2 with theta2 = theta1 + delta.
        h2_diag = hellinger_sq(theta, theta + delta, b)
        diag_ratio = delta * delta / h2_diag
        diag_violations += int(
            np.count_nonzero(diag_ratio > diag_bound * (1.0 + config.diag_tolerance))
        )
        diag_worst = max(diag_worst, float(np.max(diag_ratio)))
    return LowerBoundReport(
        config=config,
        c_candidate=c_candidate,
        m0=m0,
        m1=m1,
        violations=violations,
        checked=checked,
        min_h2_over_gap2=min_ratio,
        diag_bound=diag_bound,
        diag_violations=diag_violations,
        diag_worst_ratio=diag_worst,
    )


def _log_schedule(j_max: int, points: int = 20) -> list[int]:
    grid = np.unique(np.round(np.logspace(0.0, math.log10(j_max), points)).astype(int))
    return [int(j) for j in grid if 1 <= j <= j_max]


@dataclass(frozen=True)
class ConcentrationConfig:
    """Posterior mass accumulation around the true ability, shrinking radius."""

    theta0: float = 0.5
    difficulties: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)
    j_max: int = 400
    radius_constant: float = 3.0
    radius_exponent: float = 0.5
    reps: int = 200
    threshold: float = 0.9
    prior: PriorSpec = PriorSpec(kind="uniform")
    bounds: ThetaBounds = ThetaBounds()
    grid_size: int = 1001
    seed: int = 20240613

    def __post_init__(self) -> None:
        if not self.difficulties:
            raise ConfigError("difficulty cycle must be non-empty")
        if self.j_max < 1 or self.reps < 1:
            raise ConfigError("j_max and reps must be >= 1")
        if self.radius_constant <= 0:
            raise ConfigError("radius_constant must be positive")


@dataclass(frozen=True)
class ConcentrationReport:
    config: ConcentrationConfig
    schedule: tuple[int, ...]
    mass_curve: tuple[float, ...]
    terminal_mass: float
    spearman: float

    @property
    def passed(self) -> bool:
        return self.terminal_mass >= self.config.threshold

    def to_dict(self) -> dict:
        return {
            "kind": "concentration",
            "theta0": self.config.theta0,
            "radius_constant": self.config.radius_constant,
            "radius_exponent": self.config.radius_exponent,
            "reps": self.config.reps,
            "schedule": list(self.schedule),
            "mass_curve": list(self.mass_curve),
            "terminal_mass": self.terminal_mass,
            "spearman": self.spearman,
            "threshold": self.config.threshold,
            "passed": self.passed,
        }


def concentration_experiment(config: ConcentrationConfig = ConcentrationConfig()) -> ConcentrationReport:
    """Average posterior mass of |theta - theta0| <= c/J^e over replications.

    Responses follow the fixed difficulty cycle; the schedule of J values is
    log-spaced up to j_max.
    """
    grid = AbilityGrid(bounds=config.bounds, size=config.grid_size)
    schedule = _log_schedule(config.j_max)
    masses: dict[int, list[float]] = {j: [] for j in schedule}
    cycle = config.difficulties
    for rep in range(config.reps):
        respondent = SimulatedRespondent(
            config.theta0, np.random.default_rng([config.seed, rep])
        )
        post = init_posterior(config.prior, grid)
        for j in range(1, config.j_max + 1):
            b = cycle[(j - 1) % len(cycle)]
            post = update(post, b, respondent.respond(b))
            if j in masses:
                radius = config.radius_constant / j**config.radius_exponent
                masses[j].append(prob_in_interval(post, config.theta0, radius))
    curve = tuple(math.fsum(masses[j]) / config.reps for j in schedule)
    rho = float(spearmanr(schedule, curve).statistic) if len(schedule) > 2 else 1.0
    return ConcentrationReport(
        config=config,
        schedule=tuple(schedule),
        mass_curve=curve,
        terminal_mass=curve[-1],
        spearman=rho,
    )


@dataclass(frozen=True)
class ConsistencyConfig:
    """Adaptive-session estimator error as the number of trials grows."""

    rule: SelectionRule = SelectionRule("bayes-risk-sq")
    estimators: tuple[str, ...] = ("mean",)
    theta0: float = 0.0
    j_max: int = 200
    reps: int = 200
    checkpoints: tuple[int, ...] = (30, 200)
    prior: PriorSpec = PriorSpec(kind="truncated-normal", mu=0.0, sigma=1.0)
    bank_step: float = 0.1
    bounds: ThetaBounds = ThetaBounds()
    grid_size: int = 501
    seed: int = 20240617
    error_threshold: float = 0.25

    def __post_init__(self) -> None:
        if self.j_max < 1 or self.reps < 1:
            raise ConfigError("j_max and reps must be >= 1")
        bad = [c for c in self.checkpoints if not 1 <= c <= self.j_max]
        if bad or not self.checkpoints:
            raise ConfigError(f"checkpoints must lie in [1, j_max], got {self.checkpoints}")
        for est in self.estimators:
            if est not in ("mean", "median", "mode", "mle"):
                raise ConfigError(f"unknown estimator {est!r}")


@dataclass(frozen=True)
class ConsistencyReport:
    config: ConsistencyConfig
    median_abs_error: dict  # estimator -> {J: median |error|}

    @property
    def passed(self) -> bool:
        first = self.config.checkpoints[0]
        last = self.config.checkpoints[-1]
        for per_j in self.median_abs_error.values():
            if not (per_j[last] < per_j[first] and per_j[last] < self.config.error_threshold):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "kind": "consistency",
            "rule": self.config.rule.name,
            "theta0": self.config.theta0,
            "reps": self.config.reps,
            "checkpoints": list(self.config.checkpoints),
            "median_abs_error": {
                est: {str(j): v for j, v in per_j.items()}
                for est, per_j in self.median_abs_error.items()
            },
            "error_threshold": self.config.error_threshold,
            "passed": self.passed,
        }


def consistency_experiment(config: ConsistencyConfig = ConsistencyConfig()) -> ConsistencyReport:
    """Median absolute estimator error at each checkpoint, over replications.

    One session trajectory per replication serves every requested estimator:
    the administered items depend only on the rule and the responses, never
    on the reporting estimator.
    """
    bank = make_dense_bank(config.bounds.lower, config.bounds.upper, config.bank_step)
    scfg = sess.SessionConfig(
        prior=config.prior,
        rule=config.rule,
        bank=bank,
        estimator="mean",
        max_trials=config.j_max,
        grid_size=config.grid_size,
        bounds=config.bounds,
    )
    checkpoints = tuple(sorted(set(config.checkpoints)))
    errors: dict[str, dict[int, list[float]]] = {
        est: {j: [] for j in checkpoints} for est in config.estimators
    }
    for rep in range(config.reps):
        respondent = SimulatedRespondent(
            config.theta0, np.random.default_rng([config.seed, rep])
        )
        state = sess.start(scfg)
        while state.phase == sess.AWAITING_RESPONSE:
            x = respondent.respond(state.pending.difficulty)
            state = sess.submit(state, state.pending.id, x)
            j = state.trials_used
            if j in errors[config.estimators[0]]:
                for est in config.estimators:
                    if est == "mle":
                        value = mle(state.history, config.bounds)
                    else:
                        value = sess.point_estimate(state.posterior, est)
                    errors[est][j].append(abs(value - config.theta0))
            if state.phase == sess.READY_FOR_ITEM:
                state, item = sess.next_item(state)
                if item is None:
                    break
    medians = {
        est: {j: float(np.median(vals)) for j, vals in per_j.items()}
        for est, per_j in errors.items()
    }
    return ConsistencyReport(config=config, median_abs_error=medians)
