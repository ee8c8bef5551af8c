"""Response function, likelihood, and constrained MLE tests.

Oracles: scipy.special.expit for the logistic curve, scipy.optimize.brentq
for the likelihood root, plain log sums for the likelihood itself.
"""

import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import expit

from bayescat.errors import DomainError
from bayescat.irt import (
    ResponseRecord,
    ThetaBounds,
    fisher_information,
    item_information,
    log_likelihood,
    mle,
    prob_correct,
    score,
)


def _history(pairs):
    return [
        ResponseRecord(item_id=f"i{k}", difficulty=b, response=x)
        for k, (b, x) in enumerate(pairs)
    ]


def test_prob_correct_matches_logistic_oracle():
    rng = np.random.default_rng(101)
    for _ in range(300):
        theta = rng.uniform(-8, 8)
        b = rng.uniform(-8, 8)
        assert prob_correct(theta, b) == pytest.approx(expit(theta - b), abs=1e-15)


def test_prob_correct_frozen_value():
    assert prob_correct(1.0, 0.0) == 0.7310585786300049


def test_prob_correct_midpoint_and_complement():
    assert prob_correct(0.0, 0.0) == 0.5
    rng = np.random.default_rng(102)
    for _ in range(200):
        t = rng.uniform(-10, 10)
        total = prob_correct(t, 0.0) + prob_correct(-t, 0.0)
        assert total == pytest.approx(1.0, abs=1e-15)


def test_prob_correct_extreme_arguments_saturate():
    assert prob_correct(800.0, 0.0) == 1.0
    assert prob_correct(-800.0, 0.0) == 0.0
    assert math.isfinite(prob_correct(0.0, 700.0))


def test_prob_correct_monotone_in_theta():
    theta = np.linspace(-8, 8, 400)
    values = np.array([prob_correct(t, 0.3) for t in theta])
    assert np.all(np.diff(values) > 0)


def test_item_information_is_p_times_q():
    rng = np.random.default_rng(103)
    for _ in range(200):
        theta, b = rng.uniform(-6, 6, size=2)
        p = prob_correct(theta, b)
        assert item_information(theta, b) == pytest.approx(p * (1 - p), rel=1e-12)


def test_item_information_peak_and_symmetry():
    assert item_information(1.3, 1.3) == 0.25
    rng = np.random.default_rng(104)
    for _ in range(200):
        d = rng.uniform(0, 6)
        # Exactly even in the logit when the two logits are exact negations:
        # the product is built from the same two factors either way.
        assert item_information(d, 0.0) == item_information(-d, 0.0)


def test_log_likelihood_matches_sum_of_logs():
    rng = np.random.default_rng(105)
    for _ in range(100):
        n = rng.integers(1, 12)
        pairs = [(rng.uniform(-4, 4), int(rng.integers(0, 2))) for _ in range(n)]
        history = _history(pairs)
        theta = rng.uniform(-5, 5)
        expected = sum(
            math.log(expit(theta - b)) if x == 1 else math.log(expit(b - theta))
            for b, x in pairs
        )
        assert log_likelihood(theta, history) == pytest.approx(expected, rel=1e-12)


def test_score_matches_finite_difference():
    rng = np.random.default_rng(106)
    h = 1e-5
    for _ in range(100):
        n = rng.integers(1, 10)
        pairs = [(rng.uniform(-4, 4), int(rng.integers(0, 2))) for _ in range(n)]
        history = _history(pairs)
        theta = rng.uniform(-4, 4)
        fd = (log_likelihood(theta + h, history) - log_likelihood(theta - h, history)) / (2 * h)
        assert score(theta, history) == pytest.approx(fd, abs=1e-6)


def test_score_is_responses_minus_expected():
    history = _history([(0.0, 1), (1.0, 0), (-2.0, 1)])
    theta = 0.7
    expected = (1 - expit(theta)) + (0 - expit(theta - 1.0)) + (1 - expit(theta + 2.0))
    assert score(theta, history) == pytest.approx(expected, rel=1e-12)


def test_fisher_information_sums_item_information():
    difficulties = [-1.0, 0.0, 2.5]
    theta = 0.4
    expected = sum(item_information(theta, b) for b in difficulties)
    assert fisher_information(theta, difficulties) == pytest.approx(expected, rel=1e-14)


def test_mle_frozen_example_vs_brentq():
    history = _history([(-1.0, 1), (0.0, 1), (1.0, 0)])
    value = mle(history)
    root = brentq(lambda t: score(t, history), -6.0, 6.0, xtol=1e-12)
    assert value == pytest.approx(root, abs=1e-8)
    assert value == pytest.approx(0.8029343811358558, abs=1e-9)


def test_mle_matches_brentq_on_random_mixed_histories():
    rng = np.random.default_rng(107)
    for _ in range(200):
        n = int(rng.integers(2, 15))
        difficulties = rng.uniform(-4, 4, size=n)
        responses = rng.integers(0, 2, size=n)
        if responses.min() == responses.max():
            responses[0] = 1 - responses[0]
        history = _history(list(zip(difficulties, (int(x) for x in responses))))
        root = brentq(lambda t: score(t, history), -6.0, 6.0, xtol=1e-12)
        assert mle(history) == pytest.approx(root, abs=1e-8)


def test_mle_boundary_clamp():
    all_correct = _history([(-1.0, 1), (0.5, 1), (2.0, 1)])
    all_wrong = _history([(-1.0, 0), (0.5, 0), (2.0, 0)])
    assert mle(all_correct) == 6.0
    assert mle(all_wrong) == -6.0
    narrow = ThetaBounds(-2.5, 2.5)
    assert mle(all_correct, narrow) == 2.5


def test_mle_empty_history_raises():
    with pytest.raises(DomainError):
        mle([])


def test_mle_order_invariant():
    rng = np.random.default_rng(108)
    pairs = [(rng.uniform(-3, 3), int(rng.integers(0, 2))) for _ in range(9)]
    pairs[0] = (pairs[0][0], 1)
    pairs[1] = (pairs[1][0], 0)
    base = mle(_history(pairs))
    for _ in range(20):
        rng.shuffle(pairs)
        assert mle(_history(pairs)) == pytest.approx(base, abs=1e-9)


def test_mle_at_interior_root_has_zero_score():
    history = _history([(-0.5, 1), (0.5, 0), (1.5, 1), (2.5, 0)])
    value = mle(history)
    assert -6.0 < value < 6.0
    assert abs(score(value, history)) < 1e-9


def test_response_record_validation():
    with pytest.raises(DomainError):
        ResponseRecord(item_id="a", difficulty=float("nan"), response=1)
    with pytest.raises(DomainError):
        ResponseRecord(item_id="a", difficulty=0.0, response=2)


def test_theta_bounds_validation():
    with pytest.raises(DomainError):
        ThetaBounds(2.0, -2.0)
    with pytest.raises(DomainError):
        ThetaBounds(float("-inf"), 0.0)
    assert ThetaBounds(-6.0, 6.0).width == 12.0
