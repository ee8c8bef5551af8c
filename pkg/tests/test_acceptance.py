"""Acceptance gate: one test per release criterion, each printing a PASS/FAIL line.

Every test here runs a criterion at its declared scale and tolerance and
prints the measured numbers, so the verbose pytest report reads as a
checklist. Criteria that cannot be met are allowed to fail loudly — the
assertion message carries the measured value next to the requirement —
rather than being weakened.
"""

import math
import time

import numpy as np
import pytest

from bayescat.bank import Item, ItemBank
from bayescat.irt import ResponseRecord, item_information, log_likelihood, score
from bayescat.posterior import (
    LOG_CONCAVITY_SLACK,
    AbilityGrid,
    PriorSpec,
    init_posterior,
    update,
)
from bayescat.selection import SelectionRule, evaluate_rule
from bayescat.simulate import (
    BankSpec,
    RuleArm,
    SimConfig,
    ThetaSource,
    compare,
    mse_by_theta,
    mse_by_trial,
    run,
    runs_jsonl,
)
from bayescat.theory import (
    BoundCheckConfig,
    ConcentrationConfig,
    ConsistencyConfig,
    concentration_experiment,
    consistency_experiment,
    verify_lower_bound,
    verify_upper_bounds,
)


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{name}] {'PASS' if ok else 'FAIL'} — {detail}", flush=True)


# ---------------------------------------------------------------------------
# Criterion 1: divergence bound sweep with negative controls


def test_c1_divergence_bounds_hold_on_full_grid_and_negative_controls_fail():
    t0 = time.monotonic()
    config = BoundCheckConfig()  # full box [-6, 6]^3, step 0.05, slack 1e-12
    upper = verify_upper_bounds(config)
    lower = verify_lower_bound(config)

    shrunk = BoundCheckConfig(
        c_v1=0.5 * upper.v1.worst_ratio,
        c_v2=0.5 * upper.v2.worst_ratio,
        c_h2=0.5 * upper.h2.worst_ratio,
    )
    upper_control = verify_upper_bounds(shrunk)
    inflated = BoundCheckConfig(
        lower_scale=2.0 * lower.min_h2_over_gap2 / lower.c_candidate
    )
    lower_control = verify_lower_bound(inflated)
    wall = time.monotonic() - t0

    ok = (
        upper.passed
        and lower.passed
        and not upper_control.passed
        and not lower_control.passed
        and wall < 120.0
    )
    report(
        "c1 bound sweep",
        ok,
        f"violations v1/v2/h2/lower = {upper.v1.violations}/{upper.v2.violations}/"
        f"{upper.h2.violations}/{lower.violations}; worst ratios "
        f"{upper.v1.worst_ratio:.4f}/{upper.v2.worst_ratio:.4f}/{upper.h2.worst_ratio:.4f} "
        f"vs constants 0.25/4.0/1.0; min h2/gap2 {lower.min_h2_over_gap2:.3e} vs "
        f"c {lower.c_candidate:.3e}; negative controls violations "
        f"{upper_control.v1.violations}+{upper_control.v2.violations}+"
        f"{upper_control.h2.violations} and {lower_control.violations}; {wall:.1f}s",
    )
    assert upper.passed, f"upper-bound violations: {upper.to_dict()}"
    assert lower.passed, f"lower-bound violations: {lower.to_dict()}"
    assert not upper_control.passed, "shrunken upper constants were not detected"
    assert lower_control.violations > 0, "inflated lower constant was not detected"
    assert wall < 120.0, f"bound sweep took {wall:.1f}s, budget is 120s"


# ---------------------------------------------------------------------------
# Criteria 2 and 3: selection-rule identities on randomized instances


def _random_posterior(rng, grid):
    if rng.random() < 0.5:
        prior = PriorSpec(kind="uniform")
    else:
        prior = PriorSpec(
            kind="truncated-normal",
            mu=float(rng.uniform(-1.0, 1.0)),
            sigma=float(rng.uniform(0.5, 2.0)),
        )
    post = init_posterior(prior, grid)
    for _ in range(int(rng.integers(0, 13))):
        post = update(post, float(rng.uniform(-4.0, 4.0)), int(rng.integers(0, 2)))
    return post


def _random_bank(rng):
    n = int(rng.integers(8, 17))
    items = [
        Item(id=f"q{k:02d}", difficulty=float(rng.uniform(-5.0, 5.0)))
        for k in range(n)
    ]
    bank = ItemBank(items, consume_on_use=True)
    for item in items[: int(rng.integers(0, 3))]:
        bank.mark_used(item.id)  # rules must agree on the same available pool
    return bank


def test_c2_squared_loss_risk_rule_matches_min_expected_posterior_variance():
    t0 = time.monotonic()
    grid = AbilityGrid(size=501)
    rng = np.random.default_rng(20240701)
    risk_rule = SelectionRule("bayes-risk-sq")
    epv_rule = SelectionRule("min-epv")
    mismatches = []
    for trial in range(500):
        post = _random_posterior(rng, grid)
        bank = _random_bank(rng)
        chosen_risk, _ = evaluate_rule(post, risk_rule, bank)
        chosen_epv, _ = evaluate_rule(post, epv_rule, bank)
        if chosen_risk.id != chosen_epv.id:
            mismatches.append((trial, chosen_risk.id, chosen_epv.id))
    wall = time.monotonic() - t0
    ok = not mismatches and wall < 60.0
    report(
        "c2 risk==epv",
        ok,
        f"500 randomized instances, {len(mismatches)} argmin mismatches; {wall:.1f}s",
    )
    assert not mismatches, f"rules disagreed on {mismatches[:5]}"
    assert wall < 60.0, f"equivalence sweep took {wall:.1f}s, budget is 60s"


def test_c3_information_maximization_selects_nearest_difficulty_exactly():
    rng = np.random.default_rng(20240702)
    grid = AbilityGrid(size=301)
    post = init_posterior(PriorSpec(kind="uniform"), grid)  # rule input, unused math
    rule = SelectionRule("max-info")
    mismatches = []
    for trial in range(1000):
        if trial % 40 == 39:
            # Engineered exact tie: theta_hat midway between two difficulties.
            lo = float(rng.integers(-4, 3))
            bank = ItemBank(
                [Item(id="lo", difficulty=lo), Item(id="hi", difficulty=lo + 1.0)]
            )
            theta_hat = lo + 0.5
        else:
            bank = _random_bank(rng)
            theta_hat = float(rng.uniform(-6.0, 6.0))
        chosen, _ = evaluate_rule(post, rule, bank, theta_hat=theta_hat)
        expected = min(
            bank.available_items(),
            key=lambda it: (abs(it.difficulty - theta_hat), it.difficulty, it.id),
        )
        if chosen.id != expected.id:
            mismatches.append((trial, theta_hat, chosen.id, expected.id))
    ok = not mismatches
    report(
        "c3 max-info nearest",
        ok,
        f"1000 randomized instances incl. engineered ties, "
        f"{len(mismatches)} mismatches",
    )
    assert not mismatches, f"nearest-difficulty identity failed: {mismatches[:5]}"


# ---------------------------------------------------------------------------
# Criterion 4: posterior concentration in a 3/sqrt(J) interval


def test_c4_posterior_mass_concentrates_in_shrinking_interval():
    config = ConcentrationConfig()  # theta0 0.5, cycle ±2..0, 3/sqrt(J), 200 reps
    t0 = time.monotonic()
    rep = concentration_experiment(config)
    wall = time.monotonic() - t0
    ok = rep.terminal_mass >= 0.9 and rep.spearman > 0.9 and wall < 300.0
    report(
        "c4 concentration",
        ok,
        f"mass at J=400 {rep.terminal_mass:.3f} (need >= 0.9), Spearman "
        f"{rep.spearman:.3f} (need > 0.9); {wall:.1f}s",
    )
    assert wall < 300.0, f"concentration run took {wall:.1f}s, budget is 300s"
    assert rep.terminal_mass >= 0.9 and rep.spearman > 0.9, (
        f"shrinking-interval mass requirement not met: mean mass of "
        f"{{|theta - 0.5| <= 3/sqrt(J)}} at J=400 is {rep.terminal_mass:.3f} "
        f"(required >= 0.9) and the mass curve's Spearman rank correlation with J "
        f"is {rep.spearman:.3f} (required > 0.9). The interval shrinks faster than "
        f"the posterior concentrates on this design; see the mass curve "
        f"{[round(m, 3) for m in rep.mass_curve]} over schedule {list(rep.schedule)}."
    )


# ---------------------------------------------------------------------------
# Criterion 5: estimator error shrinks for every rule x estimator x theta0


CONSISTENCY_RULES = ("max-info", "pw-info", "min-epv", "bayes-risk-sq")


def test_c5_every_rule_and_estimator_is_consistent_at_scale():
    t0 = time.monotonic()
    failures = []
    lines = []
    for i, rule_name in enumerate(CONSISTENCY_RULES):
        for k, theta0 in enumerate((-1.0, 0.0, 1.0)):
            config = ConsistencyConfig(
                rule=SelectionRule(rule_name),
                estimators=("mean", "median", "mode"),
                theta0=theta0,
                seed=20240617 + 101 * (3 * i + k),
            )
            cell = consistency_experiment(config)
            for est, per_j in cell.median_abs_error.items():
                shrank = per_j[200] < per_j[30]
                small = per_j[200] < 0.25
                lines.append(
                    f"{rule_name}/{est}@{theta0:+.0f}: "
                    f"{per_j[30]:.3f}->{per_j[200]:.3f}"
                )
                if not (shrank and small):
                    failures.append((rule_name, est, theta0, per_j[30], per_j[200]))
    wall = time.monotonic() - t0
    ok = not failures and wall < 600.0
    report(
        "c5 consistency",
        ok,
        f"median |error| J=30 -> J=200 over 200 runs: {'; '.join(lines)}; "
        f"{len(failures)} failing cells; {wall:.0f}s",
    )
    assert not failures, (
        "median |estimate - theta0| must drop from J=30 to J=200 and end below "
        f"0.25; failing cells (rule, estimator, theta0, err30, err200): {failures}"
    )
    assert wall < 600.0, f"consistency sweep took {wall:.0f}s, budget is 600s"


# ---------------------------------------------------------------------------
# Criterion 6: reference-scale comparison of the two headline rules


def test_c6_reference_scale_mse_curves_and_rule_comparison():
    t0 = time.monotonic()
    result = run(SimConfig(), jobs=1)  # 2 arms x 21 levels x 100 reps x 30 trials
    wall = time.monotonic() - t0

    curves: dict[str, dict[int, float]] = {}
    for rule, trial, mse, _ in result.trial_rows():
        curves.setdefault(rule, {})[trial] = mse
    slopes = {}
    for rule, curve in curves.items():
        trials = np.array(sorted(curve))
        values = np.array([curve[t] for t in trials])
        slopes[rule] = float(np.polyfit(trials, values, 1)[0])

    summary = compare(result, "bayes-risk-sq", "max-info")
    ratio = summary.ratio(10, 20)

    by_theta: dict[str, list[tuple[float, float]]] = {}
    for rule, theta, mse, _ in result.theta_rows():
        by_theta.setdefault(rule, []).append((theta, mse))
    for rule in by_theta:
        by_theta[rule].sort()
    mid = slice(3, 18)  # middle 15 of the 21 quantile levels
    risk_mid = float(np.mean([m for _, m in by_theta["bayes-risk-sq"][mid]]))
    info_mid = float(np.mean([m for _, m in by_theta["max-info"][mid]]))

    ok = (
        slopes["bayes-risk-sq"] < 0
        and slopes["max-info"] < 0
        and ratio <= 1.15
        and risk_mid <= info_mid
        and wall < 600.0
    )
    report(
        "c6 reference scale",
        ok,
        f"slopes risk {slopes['bayes-risk-sq']:.4f} / info {slopes['max-info']:.4f} "
        f"(need < 0); risk MSE(10) / info MSE(20) = {summary.mse_a[10]:.4f}/"
        f"{summary.mse_b[20]:.4f} = {ratio:.3f} (need <= 1.15); middle-15-level "
        f"trial-30 MSE risk {risk_mid:.4f} vs info {info_mid:.4f} (need <=); "
        f"{wall:.0f}s",
    )
    assert slopes["bayes-risk-sq"] < 0, f"risk-rule MSE slope {slopes['bayes-risk-sq']}"
    assert slopes["max-info"] < 0, f"info-rule MSE slope {slopes['max-info']}"
    assert ratio <= 1.15, (
        f"risk rule at 10 trials should be comparable to info rule at 20: "
        f"MSE {summary.mse_a[10]:.4f} vs {summary.mse_b[20]:.4f} (ratio {ratio:.3f})"
    )
    assert risk_mid <= info_mid, (
        f"averaged over the middle 15 ability levels at trial 30, the risk rule "
        f"should not lose: {risk_mid:.4f} vs {info_mid:.4f}"
    )
    assert wall < 600.0, f"reference-scale run took {wall:.0f}s, budget is 600s"


# ---------------------------------------------------------------------------
# Criterion 7: numerical plumbing


def test_c7_normalization_log_concavity_and_gradient_plumbing():
    grid = AbilityGrid()
    rng = np.random.default_rng(20240703)
    worst_area = 0.0
    worst_second_diff = -math.inf
    for prior in (
        PriorSpec(kind="truncated-normal"),
        PriorSpec(kind="uniform"),
    ):
        for _ in range(500):
            post = init_posterior(prior, grid)
            for _ in range(int(rng.integers(5, 41))):
                post = update(
                    post, float(rng.uniform(-4.0, 4.0)), int(rng.integers(0, 2))
                )
                area_err = abs(grid.trapezoid(post.density) - 1.0)
                worst_area = max(worst_area, area_err)
            d2 = np.diff(post.log_density, 2)
            worst_second_diff = max(worst_second_diff, float(d2.max()))

    worst_grad = 0.0
    h = 1e-5
    for _ in range(200):
        history = [
            ResponseRecord(
                item_id=f"i{j}",
                difficulty=float(rng.uniform(-4.0, 4.0)),
                response=int(rng.integers(0, 2)),
            )
            for j in range(int(rng.integers(1, 31)))
        ]
        theta = float(rng.uniform(-4.0, 4.0))
        fd = (
            log_likelihood(theta + h, history) - log_likelihood(theta - h, history)
        ) / (2 * h)
        worst_grad = max(worst_grad, abs(score(theta, history) - fd))

    ok = (
        worst_area <= 1e-12
        and worst_second_diff <= LOG_CONCAVITY_SLACK
        and worst_grad <= 1e-6
    )
    report(
        "c7 plumbing",
        ok,
        f"max |area - 1| {worst_area:.2e} (need <= 1e-12) over 1000 sequences; "
        f"max log-density second difference {worst_second_diff:.2e} "
        f"(need <= {LOG_CONCAVITY_SLACK:.0e}); max |score - finite difference| "
        f"{worst_grad:.2e} (need <= 1e-6)",
    )
    assert worst_area <= 1e-12, f"normalization drift {worst_area:.3e}"
    assert worst_second_diff <= LOG_CONCAVITY_SLACK, (
        f"log-concavity violated: max second difference {worst_second_diff:.3e}"
    )
    assert worst_grad <= 1e-6, f"gradient check off by {worst_grad:.3e}"


# ---------------------------------------------------------------------------
# Criterion 8: bitwise determinism across parallelism degrees


def test_c8_simulation_outputs_identical_for_jobs_1_4_8():
    config = SimConfig(
        arms=(
            RuleArm(rule=SelectionRule("bayes-risk-sq"), estimator="mean"),
            RuleArm(rule=SelectionRule("max-info"), estimator="mle"),
        ),
        n_reps=4,
        n_trials=8,
        theta_source=ThetaSource(kind="quantile-grid", levels=5),
        bank=BankSpec(step=0.25),
        grid_size=501,
        seed=20240704,
    )
    outputs = {}
    for jobs in (1, 4, 8):
        result = run(config, jobs=jobs)
        outputs[jobs] = (
            mse_by_trial(result),
            mse_by_theta(result),
            runs_jsonl(result),
        )
    ok = outputs[1] == outputs[4] == outputs[8]
    report(
        "c8 determinism",
        ok,
        "mse_by_trial, mse_by_theta, runs.jsonl byte-identical for jobs 1/4/8"
        if ok
        else "outputs differ across parallelism degrees",
    )
    assert outputs[1] == outputs[4], "jobs=4 changed simulation output"
    assert outputs[1] == outputs[8], "jobs=8 changed simulation output"
