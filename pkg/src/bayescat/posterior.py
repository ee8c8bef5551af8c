"""Grid-quadrature ability posterior.

The posterior lives on a uniform grid over a closed ability interval and is
maintained in log space: each Rasch response adds a log-likelihood term and
the density is renormalized with a single max-subtraction, so long response
sequences cannot overflow or lose log-concavity.

Quadrature conventions: normalization, the CDF (median, interval mass) use
the trapezoid rule; expectation-type integrals (mean, variance, expected
loss) use Simpson weights, which the odd grid size always permits and which
are exact for the flat-prior variance. All expectations share one weighting
so variance decompositions hold exactly on the discrete measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidPriorError, UnsupportedEstimatorError
from .irt import ThetaBounds, _log_prob_pair

__all__ = [
    "AbilityGrid",
    "PriorSpec",
    "LossSpec",
    "Posterior",
    "init_posterior",
    "update",
    "mean",
    "variance",
    "median",
    "mode",
    "prob_in_interval",
    "expected_loss",
    "posterior_to_dict",
    "log_concavity_slack",
]

DEFAULT_GRID_SIZE = 1001

PRIOR_KINDS = ("uniform", "truncated-normal", "table")
LOSS_KINDS = ("squared", "absolute")

# Discrete log-concavity is allowed this much positive drift in the second
# differences before it counts as a violation.
LOG_CONCAVITY_SLACK = 1e-9


@dataclass(frozen=True)
class AbilityGrid:
    """Uniform quadrature grid of odd size covering [lower, upper]."""

    bounds: ThetaBounds = ThetaBounds()
    size: int = DEFAULT_GRID_SIZE
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    spacing: float = field(init=False, repr=False, compare=False)
    _trap_w: np.ndarray = field(init=False, repr=False, compare=False)
    _simp_w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.size < 3 or self.size % 2 == 0:
            raise DomainError(f"grid size must be odd and >= 3, got {self.size}")
        lower, upper = self.bounds.lower, self.bounds.upper
        # Build the nodes as mirrored offsets around the interval center so a
        # symmetric interval yields an exactly sign-symmetric grid.
        center = 0.5 * (lower + upper)
        half = 0.5 * (upper - lower)
        m = (self.size - 1) // 2
        offsets = np.linspace(0.0, half, m + 1)
        nodes = np.concatenate([(center - offsets)[::-1], center + offsets[1:]])
        nodes[0] = lower
        nodes[-1] = upper
        nodes.setflags(write=False)
        h = (upper - lower) / (self.size - 1)

        trap = np.full(self.size, h)
        trap[0] = trap[-1] = 0.5 * h
        trap.setflags(write=False)

        simp = np.full(self.size, 2.0 * h / 3.0)
        simp[1::2] = 4.0 * h / 3.0
        simp[0] = simp[-1] = h / 3.0
        simp.setflags(write=False)

        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "spacing", h)
        object.__setattr__(self, "_trap_w", trap)
        object.__setattr__(self, "_simp_w", simp)

    @property
    def key(self) -> tuple[float, float, int]:
        return (self.bounds.lower, self.bounds.upper, self.size)

    def trapezoid(self, values: np.ndarray) -> float:
        return float(self._trap_w @ values)

    def simpson(self, values: np.ndarray) -> float:
        return float(self._simp_w @ values)

    def cumulative_trapezoid(self, values: np.ndarray) -> np.ndarray:
        """Running trapezoid integral; entry i is the integral up to node i."""
        cells = 0.5 * self.spacing * (values[:-1] + values[1:])
        out = np.empty(self.size)
        out[0] = 0.0
        np.cumsum(cells, out=out[1:])
        return out


@dataclass(frozen=True)
class PriorSpec:
    """Prior over ability: uniform, truncated normal, or an explicit table."""

    kind: str = "truncated-normal"
    mu: float = 0.0
    sigma: float = 1.0
    table: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in PRIOR_KINDS:
            raise InvalidPriorError(
                f"prior kind must be one of {PRIOR_KINDS}, got {self.kind!r}"
            )
        if self.kind == "truncated-normal":
            if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
                raise InvalidPriorError("prior mu and sigma must be finite")
            if self.sigma <= 0:
                raise InvalidPriorError(f"prior sigma must be positive, got {self.sigma}")
        if self.kind == "table" and self.table is None:
            raise InvalidPriorError("table prior requires explicit values")


@dataclass(frozen=True)
class LossSpec:
    """Loss function for point estimation: squared or absolute error."""

    kind: str = "squared"

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise DomainError(f"loss kind must be one of {LOSS_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class Posterior:
    """Immutable normalized density snapshot on an ability grid."""

    grid: AbilityGrid
    log_density: np.ndarray
    log_concave: bool
    normalized: bool = True
    density: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        dens = np.exp(self.log_density)
        dens.setflags(write=False)
        self.log_density.setflags(write=False)
        object.__setattr__(self, "density", dens)


def _normalize(grid: AbilityGrid, raw_log: np.ndarray, log_concave: bool) -> Posterior:
    peak = float(np.max(raw_log))
    if not np.isfinite(peak):
        raise InvalidPriorError("density is not finite on the grid")
    shifted = raw_log - peak
    z = grid.trapezoid(np.exp(shifted))
    if not z > 0.0:
        raise InvalidPriorError("density integrates to zero on the grid")
    log_density = shifted - np.log(z)
    return Posterior(grid=grid, log_density=log_density, log_concave=log_concave)


def init_posterior(prior: PriorSpec, grid: AbilityGrid) -> Posterior:
    """Build the normalized prior density on the grid."""
    theta = grid.nodes
    if prior.kind == "uniform":
        raw = np.zeros(grid.size)
        concave = True
    elif prior.kind == "truncated-normal":
        z = (theta - prior.mu) / prior.sigma
        raw = -0.5 * z * z
        concave = True
    else:
        values = np.asarray(prior.table, dtype=float)
        if values.shape != (grid.size,):
            raise InvalidPriorError(
                f"table prior has {values.size} values for a grid of size {grid.size}"
            )
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise InvalidPriorError("table prior must be finite and strictly positive")
        raw = np.log(values)
        second = raw[:-2] - 2.0 * raw[1:-1] + raw[2:]
        concave = bool(np.max(second, initial=0.0) <= LOG_CONCAVITY_SLACK)
    return _normalize(grid, raw, concave)


def update(post: Posterior, difficulty: float, response: int) -> Posterior:
    """Condition on one Rasch response; returns a new normalized posterior."""
    if response not in (0, 1):
        raise DomainError(f"response must be 0 or 1, got {response!r}")
    if not np.isfinite(difficulty):
        raise DomainError(f"difficulty must be finite, got {difficulty}")
    if not post.normalized:
        raise DomainError("update requires a normalized posterior")
    logp, logpbar = _log_prob_pair(post.grid.nodes - difficulty)
    term = logp if response == 1 else logpbar
    return _normalize(post.grid, post.log_density + term, post.log_concave)


def _weighted(post: Posterior) -> tuple[np.ndarray, float]:
    u = post.grid._simp_w * post.density
    return u, float(np.sum(u))


def mean(post: Posterior) -> float:
    u, total = _weighted(post)
    return float(u @ post.grid.nodes) / total


def variance(post: Posterior) -> float:
    u, total = _weighted(post)
    m = float(u @ post.grid.nodes) / total
    dev = post.grid.nodes - m
    return float(u @ (dev * dev)) / total


def median(post: Posterior) -> float:
    """CDF crossing of 1/2, linearly interpolated within the bracketing cell."""
    cum = post.grid.cumulative_trapezoid(post.density)
    half = 0.5 * cum[-1]
    idx = int(np.searchsorted(cum, half))
    if idx <= 0:
        return float(post.grid.nodes[0])
    if idx >= post.grid.size:
        return float(post.grid.nodes[-1])
    gain = cum[idx] - cum[idx - 1]
    if gain <= 0.0:
        return float(post.grid.nodes[idx])
    frac = (half - cum[idx - 1]) / gain
    return float(post.grid.nodes[idx - 1] + frac * post.grid.spacing)


def mode(post: Posterior) -> float:
    """Density argmax with three-point quadratic refinement.

    Requires a log-concave prior so the posterior is unimodal; a tied
    maximal plateau yields the plateau midpoint, and a boundary maximum is
    returned unrefined.
    """
    if not post.log_concave:
        raise UnsupportedEstimatorError(
            "mode requires a prior flagged log-concave; use mean or median"
        )
    y = post.log_density
    peak = np.max(y)
    flat = np.flatnonzero(y == peak)
    first, last = int(flat[0]), int(flat[-1])
    nodes = post.grid.nodes
    if last > first:
        return float(0.5 * (nodes[first] + nodes[last]))
    i = first
    if i == 0 or i == post.grid.size - 1:
        return float(nodes[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0.0:
        return float(nodes[i])
    delta = 0.5 * (y0 - y2) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    return float(nodes[i] + delta * post.grid.spacing)


def prob_in_interval(post: Posterior, center: float, radius: float) -> float:
    """Posterior mass of [center - radius, center + radius] clipped to the grid."""
    if not np.isfinite(center):
        raise DomainError(f"center must be finite, got {center}")
    if not radius >= 0.0:
        raise DomainError(f"radius must be non-negative, got {radius}")
    lo = max(center - radius, post.grid.bounds.lower)
    hi = min(center + radius, post.grid.bounds.upper)
    if hi <= lo:
        return 0.0
    cum = post.grid.cumulative_trapezoid(post.density)
    lo_v, hi_v = np.interp([lo, hi], post.grid.nodes, cum)
    # The trapezoid total can land a few ulps past 1; keep this a probability.
    return float(min(max(hi_v - lo_v, 0.0), 1.0))


def expected_loss(post: Posterior, estimate: float, loss: LossSpec) -> float:
    """Posterior expected loss of reporting `estimate`."""
    if not np.isfinite(estimate):
        raise DomainError(f"estimate must be finite, got {estimate}")
    u, total = _weighted(post)
    dev = estimate - post.grid.nodes
    contrib = dev * dev if loss.kind == "squared" else np.abs(dev)
    return float(u @ contrib) / total


def posterior_to_dict(post: Posterior) -> dict:
    """JSON-ready {nodes, density} pairs (density normalized by trapezoid rule)."""
    return {
        "nodes": [float(v) for v in post.grid.nodes],
        "density": [float(v) for v in post.density],
    }


def log_concavity_slack(post: Posterior) -> float:
    """Largest second difference of the log-density (<= 0 when exactly concave)."""
    y = post.log_density
    second = y[:-2] - 2.0 * y[1:-1] + y[2:]
    return float(np.max(second))


def apply_history(post: Posterior, history: Sequence) -> Posterior:
    """Fold a response history (records with .difficulty/.response) into the posterior."""
    for rec in history:
        post = update(post, rec.difficulty, rec.response)
    return post
