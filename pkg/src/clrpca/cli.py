"""Command-line surface.

Subcommands: transform, fit, simulate, biplot-data, theory-check.  Exit
codes: 0 success, 2 input error, 3 degenerate result, 4 numerical failure.
The seed defaults to the COMP_PCA_SEED environment variable when a command
does not receive one explicitly.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import __version__
from .errors import InputError, NumericalError
from .io import (
    atomic_write_text,
    dump_json,
    fmt,
    matrix_envelope,
    matrix_from_envelope,
    read_labeled_csv,
    read_matrix_csv,
    write_labeled_csv,
    write_manifest,
    write_mse_table,
    write_records,
)
from .linalg import (
    gamma_from_omega,
    leading_subspace,
    sample_covariance,
    sin_theta_sq,
    spectral_decomposition,
)
from .model_selection import cross_validate, default_grid
from .simulation import ScenarioConfig, run_scenario, theory_quantities
from .solver import SolverConfig, admm_fit, default_hyperparameters
from .transforms import (
    CountMatrix,
    closure,
    clr,
    log_transform,
    power_transform,
    raw_transform,
    replace_zeros,
)

_Q_TOKENS = {"0": 0.0, "1": 1.0, "1/2": 0.5, "0.5": 0.5, "2/3": 2.0 / 3.0}


class DegenerateResult(Exception):
    """Raised after outputs are written when the estimate is degenerate."""


def _parse_q(token: str) -> float:
    if token not in _Q_TOKENS:
        raise InputError(
            f"--q must be one of {sorted(_Q_TOKENS)} (exact tokens; decimals like "
            f"'0.6667' are rejected), got {token!r}"
        )
    return _Q_TOKENS[token]


def _resolve_seed(seed) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get("COMP_PCA_SEED")
    return int(env) if env else 0


def _parse_grid(text):
    if text is None:
        return None
    try:
        grid = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise InputError(f"--grid must be comma-separated numbers: {exc}") from exc
    if not grid:
        raise InputError("--grid is empty")
    return grid


@click.group()
@click.version_option(__version__)
def cli():
    """Sparse principal subspace estimation for compositional data."""


@cli.command()
@click.argument("input_csv", type=click.Path())
@click.argument("output_csv", type=click.Path())
@click.option("--transform", "kind", required=True,
              type=click.Choice(["clr", "log", "raw", "power"]))
@click.option("--pseudocount", type=float, default=None,
              help="Replace zero counts with this value before closure.")
@click.option("--power-a", type=float, default=0.5, show_default=True,
              help="Exponent for --transform power.")
def transform(input_csv, output_csv, kind, pseudocount, power_a):
    """Ingest a labeled count CSV, close it, and apply a transform."""
    values, row_ids, col_ids = read_labeled_csv(input_csv)
    counts = CountMatrix(values, row_ids, col_ids)
    if pseudocount is not None:
        counts = replace_zeros(counts, pseudocount)
    comp = closure(counts)
    if kind == "clr":
        out = clr(comp)
    elif kind == "log":
        out = log_transform(comp)
    elif kind == "raw":
        out = raw_transform(comp)
    else:
        out = power_transform(comp, power_a)
    write_labeled_csv(output_csv, out.values, out.row_ids, out.col_ids)
    write_manifest(
        os.path.dirname(os.path.abspath(output_csv)),
        command="transform",
        config={"transform": kind, "pseudocount": pseudocount,
                "power_a": power_a if kind == "power" else None,
                "output": os.path.basename(output_csv)},
        seeds={},
        inputs=[input_csv],
    )
    click.echo(f"wrote {output_csv} ({out.transform_tag}, {out.values.shape[0]}x{out.values.shape[1]})")


@cli.command()
@click.argument("data_csv", type=click.Path())
@click.option("--d", "d", type=int, required=True, help="Subspace dimension.")
@click.option("--mode", type=click.Choice(["row", "column"]), required=True)
@click.option("--q", "q_token", required=True,
              help="Sparsity exponent token: one of 0, 1/2, 2/3, 1.")
@click.option("--alpha", type=float, default=None, help="Fixed penalty level.")
@click.option("--cv", is_flag=True, help="Select alpha by 5-fold cross-validation.")
@click.option("--grid", default=None, help="Comma-separated alpha grid for --cv.")
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=None, help="Fold seed (COMP_PCA_SEED fallback).")
@click.option("--out-dir", type=click.Path(), required=True)
def fit(data_csv, d, mode, q_token, alpha, cv, grid, folds, seed, out_dir):
    """Fit the sparse principal subspace of a transformed data matrix.

    Emits fit.json and loadings.csv (plus cv.json / cv_scores.csv when --cv).
    """
    q = _parse_q(q_token)
    seed = _resolve_seed(seed)
    X, row_ids, col_ids = read_labeled_csv(data_csv)
    n, p = X.shape
    if d >= p:
        raise InputError(f"--d must be smaller than the number of variables ({p}), got {d}")
    if (alpha is None) == (not cv):
        raise InputError("exactly one of --alpha or --cv is required")

    os.makedirs(out_dir, exist_ok=True)
    cv_info = None
    if cv:
        grid_values = _parse_grid(grid) or default_grid(mode)
        result = cross_validate(X, d, mode, q, grid=grid_values, folds=folds, seed=seed)
        alpha = result.best_alpha
        cv_info = {
            "grid": [float(a) for a in result.grid],
            "scores": [float(s) for s in result.scores],
            "best_alpha": float(result.best_alpha),
            "folds": folds,
            "seed": seed,
            "fold_assignment": [int(u) for u in result.fold_assignment],
        }
        dump_json(cv_info, os.path.join(out_dir, "cv.json"))
        lines = ["alpha,score"] + [
            f"{fmt(a)},{fmt(s)}" for a, s in zip(result.grid, result.scores)
        ]
        atomic_write_text(os.path.join(out_dir, "cv_scores.csv"), "\n".join(lines) + "\n")

    S = sample_covariance(X)
    beta, rho, mu = default_hyperparameters(S)
    cfg = SolverConfig(mode=mode, q=q, alpha=float(alpha), beta=beta, rho=rho, mu=mu)
    fit_result = admm_fit(S, d, cfg)

    payload = {
        "n_observations": n,
        "n_variables": p,
        "d": d,
        "mode": mode,
        "q": q,
        "alpha": float(alpha),
        "beta": beta,
        "rho": rho,
        "mu": mu,
        "iterations": fit_result.diagnostics.iterations,
        "converged": fit_result.diagnostics.converged,
        "primal_residual": fit_result.diagnostics.primal_residual,
        "step_delta": fit_result.diagnostics.step_delta,
        "gram_max_dev": fit_result.diagnostics.gram_max_dev,
        "objective": fit_result.objective,
        "degenerate": fit_result.degenerate,
        "support": list(fit_result.support) if mode == "row"
                   else [list(s) for s in fit_result.support],
        "V_hat": matrix_envelope(fit_result.V_hat),
        "variable_ids": list(col_ids),
        "cv": cv_info,
        "seed": seed,
    }
    dump_json(payload, os.path.join(out_dir, "fit.json"))

    loadings_path = os.path.join(out_dir, "loadings.csv")
    _write_loadings(loadings_path, fit_result.V_hat, col_ids)
    write_manifest(
        out_dir,
        command="fit",
        config={"d": d, "mode": mode, "q": q, "alpha": float(alpha), "cv": bool(cv),
                "folds": folds, "grid": list(cv_info["grid"]) if cv_info else None},
        seeds={"seed": seed},
        inputs=[data_csv],
    )
    click.echo(f"wrote {out_dir}/fit.json and loadings.csv (alpha={alpha:.6g})")
    if fit_result.degenerate:
        raise DegenerateResult(
            "estimate has an all-zero column; increase the grid range or lower alpha"
        )


def _write_loadings(path, V, labels):
    """One row per variable, one column per component, blanks for exact zeros."""
    d = V.shape[1]
    lines = [",".join(["word"] + [f"pc{j + 1}" for j in range(d)])]
    for lab, row in zip(labels, V):
        cells = [fmt(x) if x != 0.0 else "" for x in row]
        lines.append(",".join([lab] + cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


_SCENARIO_KEYS = {
    "n", "p", "d", "R0", "sparsity", "q", "distribution", "methods",
    "alpha_grid", "replicates", "seed", "folds", "power_a", "max_iter", "tol",
}
_REQUIRED_SCENARIO_KEYS = {"n", "p", "d", "R0", "sparsity", "q", "distribution"}


def load_scenario(path: str) -> ScenarioConfig:
    """Parse and validate a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise InputError(f"{path}: scenario must be a JSON object")
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise InputError(f"{path}: unknown scenario key {sorted(unknown)[0]!r}")
    missing = _REQUIRED_SCENARIO_KEYS - set(raw)
    if missing:
        raise InputError(f"{path}: missing scenario key {sorted(missing)[0]!r}")
    if "seed" not in raw:
        env = os.environ.get("COMP_PCA_SEED")
        if env:
            raw["seed"] = int(env)
    if "methods" in raw:
        raw["methods"] = tuple(raw["methods"])
    if raw.get("alpha_grid") is not None:
        raw["alpha_grid"] = tuple(raw["alpha_grid"])
    return ScenarioConfig(**raw)


@cli.command()
@click.argument("scenario_json", type=click.Path())
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel replicate workers (-1 = all cores).")
def simulate(scenario_json, out_dir, jobs):
    """Run a simulation scenario and write mse_table.csv and records.csv."""
    cfg = load_scenario(scenario_json)
    table = run_scenario(cfg, jobs=jobs)
    os.makedirs(out_dir, exist_ok=True)
    write_mse_table(os.path.join(out_dir, "mse_table.csv"), table)
    write_records(os.path.join(out_dir, "records.csv"), table)

    write_manifest(
        out_dir,
        command="simulate",
        config={"scenario": os.path.basename(scenario_json), "jobs": jobs,
                "failures": [list(f) for f in table.failures]},
        seeds={"seed": cfg.seed},
        inputs=[scenario_json],
    )
    for method, mean, se, count in zip(table.methods, table.means, table.ses, table.counts):
        click.echo(f"{method:9s} mean={mean:.4f} se={se:.4f} (n={count})")
    if table.failures:
        click.echo(f"warning: {len(table.failures)} replicate fits failed; see manifest",
                   err=True)


@cli.command(name="biplot-data")
@click.argument("fit_json", type=click.Path())
@click.argument("data_csv", type=click.Path())
@click.option("--out", "out_csv", type=click.Path(), required=True)
def biplot_data(fit_json, data_csv, out_csv):
    """Project observations onto the first two components and export loadings.

    Output rows are tagged 'score' or 'loading'; loading rows carry a kept
    flag that is 1 exactly when the variable has a nonzero loading.
    """
    try:
        with open(fit_json, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot open {fit_json}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{fit_json}: invalid JSON ({exc})") from exc
    try:
        V = matrix_from_envelope(payload["V_hat"])
        d = int(payload["d"])
    except KeyError as exc:
        raise InputError(f"{fit_json}: missing key {exc}") from exc
    if d < 2:
        raise InputError(f"biplot needs a fit with d >= 2, got d={d}")

    X, row_ids, col_ids = read_labeled_csv(data_csv)
    if X.shape[1] != V.shape[0]:
        raise InputError(
            f"data has {X.shape[1]} variables but the fit covers {V.shape[0]}"
        )
    V2 = V[:, :2]
    scores = (X - X.mean(axis=0)) @ V2
    kept = np.any(V2 != 0.0, axis=1)

    lines = ["kind,label,pc1,pc2,kept"]
    for rid, row in zip(row_ids, scores):
        lines.append(f"score,{rid},{fmt(row[0])},{fmt(row[1])},")
    for lab, row, keep in zip(col_ids, V2, kept):
        lines.append(f"loading,{lab},{fmt(row[0])},{fmt(row[1])},{int(keep)}")
    atomic_write_text(out_csv, "\n".join(lines) + "\n")
    write_manifest(
        os.path.dirname(os.path.abspath(out_csv)),
        command="biplot-data",
        config={"output": os.path.basename(out_csv)},
        seeds={},
        inputs=[fit_json, data_csv],
    )
    click.echo(f"wrote {out_csv} ({scores.shape[0]} scores, {int(kept.sum())} kept labels)")


@cli.command(name="theory-check")
@click.option("--omega", "omega_csv", type=click.Path(), required=True,
              help="Dense header-free CSV holding the basis covariance.")
@click.option("--d", "d", type=int, required=True)
@click.option("--q", "q_token", required=True)
@click.option("--rq", type=float, required=True, help="Sparsity radius R_q.")
@click.option("--n", "n", type=int, required=True, help="Sample size for epsilon_n.")
@click.option("--out", "out_json", type=click.Path(), required=True)
def theory_check(omega_csv, d, q_token, rq, n, out_json):
    """Evaluate the identifiability quantities and verify the subspace bound."""
    q = _parse_q(q_token)
    Omega = read_matrix_csv(omega_csv)
    if Omega.ndim != 2 or Omega.shape[0] != Omega.shape[1]:
        raise InputError(f"--omega must be square, got shape {Omega.shape}")
    p = Omega.shape[0]
    if not 1 <= d < p:
        raise InputError(f"need 1 <= d < p, got d={d}, p={p}")
    evals, _ = spectral_decomposition(Omega)
    tq = theory_quantities(evals[: d + 1], d, p, rq, q, n)
    Gamma = gamma_from_omega(Omega)
    measured = sin_theta_sq(leading_subspace(Omega, d), leading_subspace(Gamma, d))
    payload = {
        "p": p,
        "d": d,
        "q": q,
        "R_q": rq,
        "n": n,
        "sigma1_sq": tq.sigma1_sq,
        "sigma2_sq": tq.sigma2_sq,
        "c_q": tq.c_q,
        "bound_theorem1": tq.bound_theorem1,
        "epsilon_n": tq.epsilon_n,
        "measured_sin_theta_sq": measured,
        "bound_holds": bool(measured <= tq.bound_theorem1),
    }
    dump_json(payload, out_json)
    write_manifest(
        os.path.dirname(os.path.abspath(out_json)),
        command="theory-check",
        config={"d": d, "q": q, "R_q": rq, "n": n},
        seeds={},
        inputs=[omega_csv],
    )
    click.echo(
        f"measured sin^2 = {measured:.6g}, bound = {tq.bound_theorem1:.6g}, "
        f"holds = {payload['bound_holds']}"
    )


def main(argv=None):
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.exceptions.ClickException as exc:
        exc.show()
        return 2
    except InputError as exc:
        click.echo(f"input error: {exc}", err=True)
        return 2
    except DegenerateResult as exc:
        click.echo(f"degenerate result: {exc}", err=True)
        return 3
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 4


if __name__ == "__main__":
    sys.exit(main())
