"""Monte Carlo comparison harness for selection rules.

Simulated respondents answer adaptive sessions; the harness records the
per-trial ability-estimate trajectory of every run and aggregates mean
squared error by trial and by true-ability level. Runs are keyed by
(seed, arm, level, rep) so any parallelism degree reproduces identical
output bit for bit: each run has its own RNG stream, and aggregation sums
in a fixed order with exact (fsum) reduction.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .bank import Item, ItemBank, load_bank, make_dense_bank
from .errors import ConfigError
from .irt import ThetaBounds, mle, prob_correct
from .posterior import PriorSpec
from .selection import SelectionRule
from . import session as sess

__all__ = [
    "SIM_ESTIMATORS",
    "SimulatedRespondent",
    "RuleArm",
    "ThetaSource",
    "BankSpec",
    "SimConfig",
    "RunRecord",
    "SimResult",
    "run",
    "mse_by_trial",
    "mse_by_theta",
    "runs_jsonl",
    "compare",
    "load_sim_config",
]

# The harness additionally supports the boundary-clamped plug-in MLE as a
# reported estimate: the classical information method is max-info + MLE.
SIM_ESTIMATORS = ("mean", "median", "mode", "mle")


class SimulatedRespondent:
    """Rasch respondent with true ability theta0 and a private RNG stream."""

    def __init__(self, theta0: float, rng: np.random.Generator) -> None:
        self.theta0 = float(theta0)
        self.rng = rng

    def respond(self, difficulty: float) -> int:
        return int(self.rng.random() < prob_correct(self.theta0, difficulty))


@dataclass(frozen=True)
class RuleArm:
    rule: SelectionRule
    estimator: str = "mean"

    def __post_init__(self) -> None:
        if self.estimator not in SIM_ESTIMATORS:
            raise ConfigError(
                f"estimator must be one of {SIM_ESTIMATORS}, got {self.estimator!r}"
            )


@dataclass(frozen=True)
class ThetaSource:
    """True-ability levels: quantiles of the standard normal, or a list."""

    kind: str = "quantile-grid"
    distribution: str = "standard-normal"
    levels: int = 21
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("quantile-grid", "list"):
            raise ConfigError(f"theta_source kind must be quantile-grid or list, got {self.kind!r}")
        if self.kind == "quantile-grid":
            if self.distribution != "standard-normal":
                raise ConfigError(
                    f"only the standard-normal quantile grid is supported, got {self.distribution!r}"
                )
            if self.levels < 1:
                raise ConfigError(f"levels must be >= 1, got {self.levels}")
        else:
            if not self.values:
                raise ConfigError("list theta_source requires values")
            if not all(math.isfinite(v) for v in self.values):
                raise ConfigError("theta values must be finite")

    def theta_levels(self) -> list[float]:
        if self.kind == "list":
            return [float(v) for v in self.values]
        # Interior quantiles i/(K+1); 0 and 1 are excluded by construction.
        k = self.levels
        return [float(norm.ppf((i + 1) / (k + 1))) for i in range(k)]


@dataclass(frozen=True)
class BankSpec:
    kind: str = "dense"
    lower: float = -6.0
    upper: float = 6.0
    step: float = 0.05
    path: str | None = None
    items: tuple = ()

    def build(self) -> ItemBank:
        if self.kind == "dense":
            return make_dense_bank(self.lower, self.upper, self.step)
        if self.kind == "file":
            if not self.path:
                raise ConfigError("bank spec kind 'file' requires a path")
            return load_bank(self.path)
        if self.kind == "inline":
            return ItemBank(
                [Item(id=r["id"], difficulty=float(r["difficulty"])) for r in self.items]
            )
        raise ConfigError(f"unknown bank spec kind {self.kind!r}")


def _default_arms() -> tuple[RuleArm, ...]:
    return (
        RuleArm(rule=SelectionRule("bayes-risk-sq"), estimator="mean"),
        RuleArm(rule=SelectionRule("max-info"), estimator="mle"),
    )


@dataclass(frozen=True)
class SimConfig:
    arms: tuple[RuleArm, ...] = field(default_factory=_default_arms)
    n_reps: int = 100
    n_trials: int = 30
    theta_source: ThetaSource = ThetaSource()
    prior: PriorSpec = PriorSpec(kind="truncated-normal", mu=0.0, sigma=1.0)
    bank: BankSpec = BankSpec()
    bounds: ThetaBounds = ThetaBounds()
    grid_size: int = 1001
    seed: int = 20240601
    parallelism: int = 1

    def __post_init__(self) -> None:
        if not self.arms:
            raise ConfigError("at least one rule arm is required")
        names = [arm.rule.name for arm in self.arms]
        if len(set(names)) != len(names):
            raise ConfigError(f"rule names must be unique across arms, got {names}")
        if self.n_reps < 1:
            raise ConfigError(f"n_reps must be >= 1, got {self.n_reps}")
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {self.parallelism}")

    def to_dict(self) -> dict:
        return {
            "rules": [
                {"rule": arm.rule.name, "estimator": arm.estimator} for arm in self.arms
            ],
            "n_reps": self.n_reps,
            "n_trials": self.n_trials,
            "theta_source": {
                "kind": self.theta_source.kind,
                "distribution": self.theta_source.distribution,
                "levels": self.theta_source.levels,
                "values": list(self.theta_source.values),
            },
            "prior": {
                "kind": self.prior.kind,
                "mu": self.prior.mu,
                "sigma": self.prior.sigma,
            },
            "bank": {
                "kind": self.bank.kind,
                "lower": self.bank.lower,
                "upper": self.bank.upper,
                "step": self.bank.step,
                "path": self.bank.path,
                "items": list(self.bank.items),
            },
            "bounds": [self.bounds.lower, self.bounds.upper],
            "grid_size": self.grid_size,
            "seed": self.seed,
            "parallelism": self.parallelism,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        try:
            kwargs: dict = {}
            if "rules" in data:
                kwargs["arms"] = tuple(
                    RuleArm(
                        rule=SelectionRule.parse(r["rule"]),
                        estimator=r.get("estimator", "mean"),
                    )
                    for r in data["rules"]
                )
            for key in ("n_reps", "n_trials", "grid_size", "seed", "parallelism"):
                if key in data:
                    kwargs[key] = int(data[key])
            if "theta_source" in data:
                ts = data["theta_source"]
                kwargs["theta_source"] = ThetaSource(
                    kind=ts.get("kind", "quantile-grid"),
                    distribution=ts.get("distribution", "standard-normal"),
                    levels=int(ts.get("levels", 21)),
                    values=tuple(ts.get("values", ())),
                )
            if "prior" in data:
                pr = data["prior"]
                kwargs["prior"] = PriorSpec(
                    kind=pr.get("kind", "truncated-normal"),
                    mu=float(pr.get("mu", 0.0)),
                    sigma=float(pr.get("sigma", 1.0)),
                    table=tuple(pr["table"]) if pr.get("table") else None,
                )
            if "bank" in data:
                bk = data["bank"]
                kwargs["bank"] = BankSpec(
                    kind=bk.get("kind", "dense"),
                    lower=float(bk.get("lower", -6.0)),
                    upper=float(bk.get("upper", 6.0)),
                    step=float(bk.get("step", 0.05)),
                    path=bk.get("path"),
                    items=tuple(bk.get("items", ())),
                )
            if "bounds" in data:
                lo, hi = data["bounds"]
                kwargs["bounds"] = ThetaBounds(float(lo), float(hi))
            return cls(**kwargs)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed simulation config: {exc}") from None


def load_sim_config(path: str | Path) -> SimConfig:
    """Read a JSON simulation config file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"simulation config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("simulation config must be a JSON object")
    return SimConfig.from_dict(data)


@dataclass(frozen=True)
class RunRecord:
    rule: str
    estimator: str
    level: int
    theta0: float
    rep: int
    estimates: tuple[float, ...]


def _estimate(arm: RuleArm, state: sess.SessionState) -> float:
    if arm.estimator == "mle":
        return mle(state.history, state.config.bounds)
    return sess.point_estimate(state.posterior, arm.estimator)


def _drive_run(
    config: SimConfig,
    bank: ItemBank,
    arm_idx: int,
    level_idx: int,
    theta0: float,
    rep: int,
) -> RunRecord:
    arm = config.arms[arm_idx]
    respondent = SimulatedRespondent(
        theta0, np.random.default_rng([config.seed, arm_idx, level_idx, rep])
    )
    session_estimator = arm.estimator if arm.estimator in sess.SESSION_ESTIMATORS else "mean"
    scfg = sess.SessionConfig(
        prior=config.prior,
        rule=arm.rule,
        bank=bank,
        estimator=session_estimator,
        max_trials=config.n_trials,
        grid_size=config.grid_size,
        bounds=config.bounds,
    )
    state = sess.start(scfg)
    estimates: list[float] = []
    while state.phase == sess.AWAITING_RESPONSE:
        x = respondent.respond(state.pending.difficulty)
        state = sess.submit(state, state.pending.id, x)
        estimates.append(_estimate(arm, state))
        if state.phase == sess.READY_FOR_ITEM:
            state, item = sess.next_item(state)
            if item is None:
                break
    return RunRecord(
        rule=arm.rule.name,
        estimator=arm.estimator,
        level=level_idx,
        theta0=theta0,
        rep=rep,
        estimates=tuple(estimates),
    )


def _run_chunk(payload: tuple[dict, list[tuple[int, int, int]]]) -> list[RunRecord]:
    config_data, work = payload
    config = SimConfig.from_dict(config_data)
    bank = config.bank.build()
    levels = config.theta_source.theta_levels()
    return [
        _drive_run(config, bank, arm_idx, level_idx, levels[level_idx], rep)
        for arm_idx, level_idx, rep in work
    ]


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    records: tuple[RunRecord, ...]

    def trial_rows(self) -> list[tuple[str, int, float, int]]:
        """(rule, trial, mse, n) rows, exact-sum aggregation, sorted."""
        groups: dict[tuple[str, int], list[float]] = {}
        for rec in self.records:
            for t, est in enumerate(rec.estimates, start=1):
                groups.setdefault((rec.rule, t), []).append((est - rec.theta0) ** 2)
        return [
            (rule, trial, math.fsum(errs) / len(errs), len(errs))
            for (rule, trial), errs in sorted(groups.items())
        ]

    def theta_rows(self) -> list[tuple[str, float, float, int]]:
        """(rule, theta, mse-at-final-trial, n) rows, sorted."""
        groups: dict[tuple[str, float], list[float]] = {}
        for rec in self.records:
            if not rec.estimates:
                continue
            key = (rec.rule, rec.theta0)
            groups.setdefault(key, []).append((rec.estimates[-1] - rec.theta0) ** 2)
        return [
            (rule, theta, math.fsum(errs) / len(errs), len(errs))
            for (rule, theta), errs in sorted(groups.items())
        ]


def run(config: SimConfig, jobs: int | None = None) -> SimResult:
    """Execute every (arm, level, rep) run; bitwise deterministic for any jobs."""
    jobs = config.parallelism if jobs is None else jobs
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    levels = config.theta_source.theta_levels()
    work = [
        (arm_idx, level_idx, rep)
        for arm_idx in range(len(config.arms))
        for level_idx in range(len(levels))
        for rep in range(config.n_reps)
    ]
    if jobs == 1:
        bank = config.bank.build()
        records = [
            _drive_run(config, bank, a, l, levels[l], r) for a, l, r in work
        ]
    else:
        config_data = config.to_dict()
        # Round-robin striping balances rule arms of very different cost.
        chunks = [work[i::jobs] for i in range(jobs)]
        chunks = [c for c in chunks if c]
        records = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_run_chunk, [(config_data, c) for c in chunks]):
                records.extend(part)
    records.sort(key=lambda r: (r.rule, r.level, r.rep))
    return SimResult(config=config, records=tuple(records))


def _fmt(x: float) -> str:
    return format(x, ".17g")


def mse_by_trial(result: SimResult) -> str:
    lines = ["rule,trial,mse,n"]
    for rule, trial, mse, n in result.trial_rows():
        lines.append(f"{rule},{trial},{_fmt(mse)},{n}")
    return "\n".join(lines) + "\n"


def mse_by_theta(result: SimResult) -> str:
    lines = ["rule,theta,mse,n"]
    for rule, theta, mse, n in result.theta_rows():
        lines.append(f"{rule},{_fmt(theta)},{_fmt(mse)},{n}")
    return "\n".join(lines) + "\n"


def runs_jsonl(result: SimResult) -> str:
    lines = []
    for rec in result.records:
        lines.append(
            json.dumps(
                {
                    "rule": rec.rule,
                    "estimator": rec.estimator,
                    "level": rec.level,
                    "theta0": rec.theta0,
                    "rep": rec.rep,
                    "estimates": list(rec.estimates),
                }
            )
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ComparisonSummary:
    rule_a: str
    rule_b: str
    mse_a: dict
    mse_b: dict

    def ratio(self, trial_a: int, trial_b: int) -> float:
        """MSE_a(trial_a) / MSE_b(trial_b)."""
        return self.mse_a[trial_a] / self.mse_b[trial_b]


def compare(result: SimResult, rule_a: str, rule_b: str) -> ComparisonSummary:
    """Per-trial MSE curves of two rules, aligned for trial-vs-trial ratios."""
    known = {arm.rule.name for arm in result.config.arms}
    for name in (rule_a, rule_b):
        if name not in known:
            raise ConfigError(f"rule {name!r} is not part of this result (has {sorted(known)})")
    curves: dict[str, dict[int, float]] = {rule_a: {}, rule_b: {}}
    for rule, trial, mse, _ in result.trial_rows():
        if rule in curves:
            curves[rule][trial] = mse
    return ComparisonSummary(
        rule_a=rule_a, rule_b=rule_b, mse_a=curves[rule_a], mse_b=curves[rule_b]
    )
