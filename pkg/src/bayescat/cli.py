"""Command-line entry point.

Subcommands: ``serve`` (HTTP API), ``bank validate``, ``simulate``,
``theory verify-bounds|concentration|consistency``, and ``session``
(terminal-driven live test plus a what-if inspector for saved logs).

Exit codes: 0 success, 1 validation or verification failure, 2 usage error.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import simulate as sim
from . import session as sess
from . import theory
from .bank import ItemBank, load_bank, make_dense_bank
from .errors import BankError, BayescatError
from .irt import ThetaBounds
from .posterior import PriorSpec, mean, median, variance
from .selection import RULE_NAMES, SelectionRule

RULE_HELP = "Selection rules: " + ", ".join(RULE_NAMES) + "."


@click.group(epilog=RULE_HELP)
@click.version_option(package_name="bayescat")
def main() -> None:
    """Bayesian adaptive testing engine (Rasch model)."""


# ---------------------------------------------------------------------------
# serve


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--bank",
    "bank_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Item bank file (JSON array or CSV). Default: dense synthetic bank.",
)
@click.option(
    "--data-dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Directory for write-through session logs (restart-safe).",
)
@click.option(
    "--ui-dir",
    type=click.Path(exists=True, file_okay=False),
    default=None,
    help="Static files to serve at / (the web UI build).",
)
def serve(host: str, port: int, bank_path: str | None, data_dir: str | None, ui_dir: str | None) -> None:
    """Run the HTTP API server."""
    import uvicorn

    from .service import create_app

    if bank_path is not None:
        try:
            bank = load_bank(bank_path, consume_on_use=True)
        except BankError as exc:
            raise click.ClickException(str(exc))
    else:
        bank = make_dense_bank(step=0.1, consume_on_use=True)
    app = create_app(bank=bank, data_dir=data_dir)
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port)


# ---------------------------------------------------------------------------
# bank


@main.group()
def bank() -> None:
    """Item bank tools."""


@bank.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--min-difficulty", type=float, default=-6.0, show_default=True)
@click.option("--max-difficulty", type=float, default=6.0, show_default=True)
def bank_validate(path: str, min_difficulty: float, max_difficulty: float) -> None:
    """Check schema, unique ids, and difficulty bounds; exit 0/1."""
    try:
        loaded = load_bank(
            path, difficulty_bounds=ThetaBounds(min_difficulty, max_difficulty)
        )
    except BankError as exc:
        click.echo(f"INVALID: {path}", err=True)
        click.echo(str(exc), err=True)
        sys.exit(1)
    click.echo(f"OK: {len(loaded)} items, difficulties within [{min_difficulty}, {max_difficulty}]")


# ---------------------------------------------------------------------------
# simulate


@main.command("simulate")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSON file mirroring the simulation config schema.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
def simulate_cmd(config_path: str, out_dir: str, jobs: int) -> None:
    """Run the Monte Carlo study; write MSE tables and per-run records."""
    try:
        config = sim.load_sim_config(config_path)
        result = sim.run(config, jobs=jobs)
    except BayescatError as exc:
        raise click.ClickException(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mse_by_trial.csv").write_text(sim.mse_by_trial(result))
    (out / "mse_by_theta.csv").write_text(sim.mse_by_theta(result))
    (out / "runs.jsonl").write_text(sim.runs_jsonl(result))
    click.echo(f"wrote {out / 'mse_by_trial.csv'}")
    click.echo(f"wrote {out / 'mse_by_theta.csv'}")
    click.echo(f"wrote {out / 'runs.jsonl'}")


# ---------------------------------------------------------------------------
# theory


def _emit_report(report: dict, out_path: str | None, passed: bool) -> None:
    text = json.dumps(report, indent=2)
    if out_path is not None:
        Path(out_path).write_text(text + "\n")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text)
    click.echo("PASS" if passed else "FAIL", err=True)
    sys.exit(0 if passed else 1)


@main.group("theory")
def theory_group() -> None:
    """Numerical checks of the divergence bounds and asymptotics."""


@theory_group.command("verify-bounds")
@click.option("--step", type=float, default=0.05, show_default=True)
@click.option("--slack", type=float, default=1e-12, show_default=True)
@click.option("--box", nargs=2, type=float, default=(-6.0, 6.0), show_default=True,
              help="Range for both ability values and difficulty.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def theory_verify_bounds(step: float, slack: float, box: tuple[float, float], out_path: str | None) -> None:
    """Sweep the quadratic upper bounds and the Hellinger lower bound."""
    cfg = theory.BoundCheckConfig(
        theta_lower=box[0], theta_upper=box[1], b_lower=box[0], b_upper=box[1],
        step=step, slack=slack,
    )
    upper = theory.verify_upper_bounds(cfg)
    lower = theory.verify_lower_bound(cfg)
    passed = upper.passed and lower.passed
    _emit_report(
        {"upper": upper.to_dict(), "lower": lower.to_dict(), "passed": passed},
        out_path,
        passed,
    )


def _prior_option(kind: str, mu: float, sigma: float) -> PriorSpec:
    if kind == "uniform":
        return PriorSpec(kind="uniform")
    return PriorSpec(kind="truncated-normal", mu=mu, sigma=sigma)


@theory_group.command("concentration")
@click.option("--theta0", type=float, default=0.5, show_default=True)
@click.option("--difficulties", default="-2,-1,0,1,2", show_default=True,
              help="Comma-separated difficulty cycle.")
@click.option("--j-max", type=int, default=400, show_default=True)
@click.option("--radius-constant", type=float, default=3.0, show_default=True)
@click.option("--radius-exponent", type=float, default=0.5, show_default=True,
              help="Interval radius is constant / J**exponent.")
@click.option("--reps", type=int, default=200, show_default=True)
@click.option("--threshold", type=float, default=0.9, show_default=True)
@click.option("--prior", "prior_kind", type=click.Choice(["uniform", "truncated-normal"]),
              default="uniform", show_default=True)
@click.option("--mu", type=float, default=0.0, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--grid-size", type=int, default=1001, show_default=True)
@click.option("--seed", type=int, default=20240613, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def theory_concentration(
    theta0: float, difficulties: str, j_max: int, radius_constant: float,
    radius_exponent: float, reps: int, threshold: float, prior_kind: str,
    mu: float, sigma: float, grid_size: int, seed: int, out_path: str | None,
) -> None:
    """Posterior mass inside a shrinking interval around the true ability."""
    try:
        cycle = tuple(float(v) for v in difficulties.split(","))
    except ValueError:
        raise click.UsageError(f"--difficulties must be comma-separated numbers, got {difficulties!r}")
    cfg = theory.ConcentrationConfig(
        theta0=theta0, difficulties=cycle, j_max=j_max,
        radius_constant=radius_constant, radius_exponent=radius_exponent,
        reps=reps, threshold=threshold, prior=_prior_option(prior_kind, mu, sigma),
        grid_size=grid_size, seed=seed,
    )
    report = theory.concentration_experiment(cfg)
    _emit_report(report.to_dict(), out_path, report.passed)


@theory_group.command("consistency")
@click.option("--rule", "rule_name", type=click.Choice(RULE_NAMES), default="bayes-risk-sq",
              show_default=True)
@click.option("--estimators", default="mean", show_default=True,
              help="Comma-separated: mean, median, mode, mle.")
@click.option("--theta0", type=float, default=0.0, show_default=True)
@click.option("--j-max", type=int, default=200, show_default=True)
@click.option("--reps", type=int, default=200, show_default=True)
@click.option("--checkpoints", default="30,200", show_default=True,
              help="Comma-separated trial counts to evaluate at.")
@click.option("--error-threshold", type=float, default=0.25, show_default=True)
@click.option("--prior", "prior_kind", type=click.Choice(["uniform", "truncated-normal"]),
              default="truncated-normal", show_default=True)
@click.option("--mu", type=float, default=0.0, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--bank-step", type=float, default=0.1, show_default=True)
@click.option("--grid-size", type=int, default=501, show_default=True)
@click.option("--seed", type=int, default=20240617, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def theory_consistency(
    rule_name: str, estimators: str, theta0: float, j_max: int, reps: int,
    checkpoints: str, error_threshold: float, prior_kind: str, mu: float,
    sigma: float, bank_step: float, grid_size: int, seed: int, out_path: str | None,
) -> None:
    """Median estimator error shrinking as trials accumulate."""
    try:
        marks = tuple(int(v) for v in checkpoints.split(","))
    except ValueError:
        raise click.UsageError(f"--checkpoints must be comma-separated integers, got {checkpoints!r}")
    cfg = theory.ConsistencyConfig(
        rule=SelectionRule.parse(rule_name),
        estimators=tuple(estimators.split(",")),
        theta0=theta0, j_max=j_max, reps=reps, checkpoints=marks,
        prior=_prior_option(prior_kind, mu, sigma), bank_step=bank_step,
        grid_size=grid_size, seed=seed, error_threshold=error_threshold,
    )
    report = theory.consistency_experiment(cfg)
    _emit_report(report.to_dict(), out_path, report.passed)


# ---------------------------------------------------------------------------
# session


def _summary_line(state: sess.SessionState) -> str:
    post = state.posterior
    sd = math.sqrt(variance(post))
    return (
        f"  mean {mean(post):+.4f}  sd {sd:.4f}  median {median(post):+.4f}"
        f"  ({state.trials_used}/{state.config.max_trials} trials)"
    )


def _load_session_bank(bank_path: str | None) -> ItemBank:
    if bank_path is not None:
        return load_bank(bank_path, consume_on_use=True)
    return make_dense_bank(step=0.1, consume_on_use=True)


@main.group(invoke_without_command=True, epilog=RULE_HELP)
@click.option("--interactive", is_flag=True, help="Run a live terminal session.")
@click.option("--rule", "rule_name", type=click.Choice(RULE_NAMES), default="bayes-risk-sq",
              show_default=True)
@click.option("--estimator", type=click.Choice(sess.SESSION_ESTIMATORS), default="mean",
              show_default=True)
@click.option("--max-trials", type=int, default=30, show_default=True)
@click.option("--prior", "prior_kind", type=click.Choice(["uniform", "truncated-normal"]),
              default="truncated-normal", show_default=True)
@click.option("--mu", type=float, default=0.0, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--grid-size", type=int, default=1001, show_default=True)
@click.option("--bank", "bank_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Item bank file. Default: dense synthetic bank.")
@click.option("--state", "state_path", type=click.Path(dir_okay=False), default=None,
              help="Session log path: resumed if it exists, written on exit.")
@click.pass_context
def session(
    ctx: click.Context, interactive: bool, rule_name: str, estimator: str,
    max_trials: int, prior_kind: str, mu: float, sigma: float, grid_size: int,
    bank_path: str | None, state_path: str | None,
) -> None:
    """Live adaptive test in the terminal (answers typed as 0 or 1)."""
    if ctx.invoked_subcommand is not None:
        return
    if not interactive:
        raise click.UsageError("pass --interactive (or a subcommand such as 'whatif')")
    try:
        state = _open_session(
            state_path, rule_name, estimator, max_trials, prior_kind, mu, sigma,
            grid_size, bank_path,
        )
    except BayescatError as exc:
        raise click.ClickException(str(exc))
    _interactive_loop(state, state_path)


def _open_session(
    state_path: str | None, rule_name: str, estimator: str, max_trials: int,
    prior_kind: str, mu: float, sigma: float, grid_size: int, bank_path: str | None,
) -> sess.SessionState:
    if state_path is not None and Path(state_path).exists():
        state = sess.load(Path(state_path).read_bytes())
        click.echo(f"Resumed session {state.session_id} at trial {state.trials_used + 1}.")
        if state.phase == sess.READY_FOR_ITEM:
            state, _ = sess.next_item(state)
        return state
    config = sess.SessionConfig(
        prior=_prior_option(prior_kind, mu, sigma),
        rule=SelectionRule.parse(rule_name),
        bank=_load_session_bank(bank_path),
        estimator=estimator,
        max_trials=max_trials,
        grid_size=grid_size,
    )
    return sess.start(config)


def _save_state(state: sess.SessionState, state_path: str | None) -> None:
    if state_path is None:
        return
    Path(state_path).write_bytes(sess.save(state))
    click.echo(f"Saved session to {state_path}.")


def _interactive_loop(state: sess.SessionState, state_path: str | None) -> None:
    while state.phase == sess.AWAITING_RESPONSE:
        item = state.pending
        assert item is not None
        click.echo(
            f"Item {state.trials_used + 1}/{state.config.max_trials}: "
            f"{item.id} (difficulty {item.difficulty:+.2f})"
        )
        try:
            raw = input("Answer [0=wrong, 1=correct]: ")
        except EOFError:
            click.echo("")
            if state_path is None:
                click.echo("Input ended; no --state path given, session discarded.", err=True)
            else:
                _save_state(state, state_path)
                click.echo("Input ended; resume with the same --state path.")
            return
        answer = raw.strip()
        if answer not in ("0", "1"):
            click.echo(f"  please type 0 or 1, got {answer!r}", err=True)
            continue
        state = sess.submit(state, item.id, int(answer))
        click.echo(_summary_line(state))
        if state.phase == sess.READY_FOR_ITEM:
            state, nxt = sess.next_item(state)
            if nxt is None:
                click.echo("Item bank exhausted; finishing early.")
    est = state.estimate
    assert est is not None
    click.echo(
        f"Finished after {est.trials_used} trials. "
        f"Estimate ({est.estimator}): {est.value:+.4f}, "
        f"posterior sd {math.sqrt(est.posterior_variance):.4f}"
    )
    _save_state(state, state_path)


@session.command("whatif")
@click.option("--state", "state_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Session log written by --state or by the API server.")
def session_whatif(state_path: str) -> None:
    """Print the item each rule would pick next for a saved session, as JSON."""
    from .service import evaluate_whatif

    try:
        state = sess.load(Path(state_path).read_bytes())
    except BayescatError as exc:
        raise click.ClickException(str(exc))
    entries = [e.model_dump() for e in evaluate_whatif(state)]
    click.echo(json.dumps({"entries": entries}, indent=2))


if __name__ == "__main__":
    main()
