"""Scenario generation and the comparative simulation harness.

One scenario cell draws a sparse orthonormal subspace, builds a basis
covariance around it with a Wishart remainder, samples log-basis vectors,
normalizes them into compositions, and compares subspace estimates obtained
from different transforms (oracle log basis, clr, plain log, raw, power)
by their squared sin-theta distance to the truth.

Reproducibility: every random stage derives its generator from
``(master_seed, replicate_index, stage)`` with stages 0 = basis, 1 =
covariance and means, 2 = samples, 3 = folds, so serial and parallel runs
agree replicate by replicate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError
from .linalg import sample_covariance, spectral_norm, subspace_distance_sq
from .model_selection import cross_validate, default_grid
from .solver import SUPPORTED_Q, SolverConfig, admm_fit, default_hyperparameters
from .transforms import (
    CompositionMatrix,
    TransformedMatrix,
    clr,
    log_transform,
    power_transform,
    raw_transform,
)

ALL_METHODS = ("oracle", "proposed", "log", "raw", "power")

_STAGE_BASIS, _STAGE_COV, _STAGE_SAMPLE, _STAGE_FOLDS = 0, 1, 2, 3


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell."""

    n: int
    p: int
    d: int
    R0: int
    sparsity: str
    q: float
    distribution: str
    methods: tuple = ALL_METHODS
    alpha_grid: Optional[tuple] = None
    replicates: int = 20
    seed: int = 0
    folds: int = 5
    power_a: float = 0.5
    max_iter: int = 1000
    tol: float = 1e-5

    def __post_init__(self):
        if self.sparsity not in ("row", "column"):
            raise InputError(f"sparsity must be 'row' or 'column', got {self.sparsity!r}")
        if self.distribution not in ("normal", "gamma"):
            raise InputError(
                f"distribution must be 'normal' or 'gamma', got {self.distribution!r}"
            )
        if self.q not in SUPPORTED_Q:
            raise InputError(f"q must be one of {{0, 1/2, 2/3, 1}}, got {self.q!r}")
        if not (self.d <= self.R0 <= self.p):
            raise InputError(f"need d <= R0 <= p, got d={self.d}, R0={self.R0}, p={self.p}")
        if self.sparsity == "column" and 2 * self.R0 > self.p:
            raise InputError(f"column sparsity needs 2*R0 <= p, got R0={self.R0}, p={self.p}")
        if self.n < 10:
            raise InputError(f"need n >= 10, got n={self.n}")
        if self.replicates < 1:
            raise InputError(f"need replicates >= 1, got {self.replicates}")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise InputError(f"unknown methods {sorted(unknown)}; choose from {ALL_METHODS}")
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.alpha_grid is not None:
            grid = tuple(float(a) for a in self.alpha_grid)
            if not grid:
                raise InputError("alpha_grid must be nonempty when given")
            object.__setattr__(self, "alpha_grid", grid)

    @property
    def grid(self) -> tuple:
        return self.alpha_grid if self.alpha_grid is not None else default_grid(self.sparsity)


@dataclass(frozen=True)
class GroundTruth:
    """True subspace, basis covariance, leading spectrum, and mean vector."""

    V_true: np.ndarray
    Omega: np.ndarray
    lambdas: tuple
    mu_vec: np.ndarray


@dataclass(frozen=True)
class TheoryQuantities:
    sigma1_sq: float
    sigma2_sq: float
    c_q: float
    bound_theorem1: float
    epsilon_n: float


@dataclass(frozen=True)
class ReplicateRecord:
    replicate: int
    method: str
    distance: float
    best_alpha: float
    gram_max_dev: float
    degenerate: bool
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MseTable:
    """Mean squared subspace distance and its standard error per method."""

    methods: tuple
    means: tuple
    ses: tuple
    counts: tuple
    records: tuple
    failures: tuple = ()

    def row(self, method: str) -> tuple:
        i = self.methods.index(method)
        return self.means[i], self.ses[i], self.counts[i]


def _orthonormalized_gaussian(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """QR-orthonormalized standard Gaussian block with a positive-diagonal R."""
    raw = rng.standard_normal((rows, cols))
    Q, R = np.linalg.qr(raw)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs


def generate_row_sparse_basis(p: int, d: int, R0: int, seed) -> np.ndarray:
    """Orthonormal p-by-d basis supported on the first R0 rows."""
    if not d <= R0 <= p:
        raise InputError(f"need d <= R0 <= p, got d={d}, R0={R0}, p={p}")
    rng = np.random.default_rng(seed)
    V = np.zeros((p, d))
    V[:R0] = _orthonormalized_gaussian(rng, R0, d)
    return V


def generate_col_sparse_basis(p: int, d: int, R0: int, seed) -> np.ndarray:
    """Orthonormal basis whose columns each use at most R0 coordinates.

    The top rows carry two blocks with disjoint row supports: the first
    ceil(d/2) columns live on rows 0..R0-1 and the rest on rows R0..2*R0-1.
    """
    d1 = math.ceil(d / 2)
    d2 = d - d1
    if d1 > R0 or 2 * R0 > p:
        raise InputError(
            f"invalid column-sparse sizes: p={p}, d={d}, R0={R0} "
            f"(need ceil(d/2) <= R0 and 2*R0 <= p)"
        )
    rng = np.random.default_rng(seed)
    V = np.zeros((p, d))
    V[:R0, :d1] = _orthonormalized_gaussian(rng, R0, d1)
    if d2 > 0:
        V[R0 : 2 * R0, d1:] = _orthonormalized_gaussian(rng, R0, d2)
    return V


def build_covariance(V: np.ndarray, seed) -> GroundTruth:
    """Basis covariance with V as an invariant leading subspace.

    A Wishart draw K with p+10 degrees of freedom and scale I/p supplies the
    remainder ``(I - VV')K(I - VV')``; its spectral norm sets the base level
    lambda_{d+1}, and the leading eigenvalues are ``(3.6 - 2(i-1)/(d-1))``
    times that, giving eigengap 0.6 * lambda_{d+1}.  Mean components are
    uniform on [0, 10].  RNG draw order: Wishart factors, then means.
    """
    V = np.asarray(V, dtype=float)
    p, d = V.shape
    if d < 2:
        raise InputError("the eigenvalue ladder divides by d-1; choose d >= 2")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((p + 10, p))
    K = G.T @ G / p
    P = np.eye(p) - V @ V.T
    residual = P @ K @ P
    residual = (residual + residual.T) / 2.0
    lam_tail = spectral_norm(residual)
    lams = np.array([(3.6 - 2.0 * i / (d - 1)) * lam_tail for i in range(d)])
    Omega = (V * lams) @ V.T + residual
    Omega = (Omega + Omega.T) / 2.0
    mu_vec = rng.uniform(0.0, 10.0, p)
    return GroundTruth(
        V_true=V,
        Omega=Omega,
        lambdas=tuple(lams) + (lam_tail,),
        mu_vec=mu_vec,
    )


def _sym_sqrt(Omega: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition (Omega may be
    numerically semi-definite, so negative round-off eigenvalues are clipped)."""
    w, Q = np.linalg.eigh((Omega + Omega.T) / 2.0)
    w = np.clip(w, 0.0, None)
    return (Q * np.sqrt(w)) @ Q.T


def sample_log_basis(n: int, truth: GroundTruth, distribution: str, seed) -> TransformedMatrix:
    """Draw n log-basis vectors with mean mu and covariance Omega.

    normal: Gaussian draws through the symmetric square root F of Omega.
    gamma: ``mu + F u / sqrt(10)`` with iid gamma(shape 10, scale 1) entries
    in u, used uncentered; the extra mean offset is absorbed by covariance
    centering downstream.
    """
    if distribution not in ("normal", "gamma"):
        raise InputError(f"distribution must be 'normal' or 'gamma', got {distribution!r}")
    rng = np.random.default_rng(seed)
    F = _sym_sqrt(truth.Omega)
    p = F.shape[0]
    if distribution == "normal":
        Y = truth.mu_vec + rng.standard_normal((n, p)) @ F
    else:
        U = rng.gamma(shape=10.0, scale=1.0, size=(n, p))
        Y = truth.mu_vec + (U @ F) / np.sqrt(10.0)
    return TransformedMatrix(Y, "oracle-log-basis")


def compose(Y) -> CompositionMatrix:
    """Exponentiate log-basis rows and normalize them onto the simplex.

    The row maximum is subtracted before exponentiating; closure is invariant
    to this shift, so it only guards against overflow.
    """
    vals = Y.values if isinstance(Y, TransformedMatrix) else np.asarray(Y, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InputError("log-basis matrix contains non-finite entries")
    shifted = vals - vals.max(axis=1, keepdims=True)
    W = np.exp(shifted)
    if np.any(W == 0.0):
        i = int(np.argwhere(W == 0.0)[0][0])
        raise InputError(
            f"row {i} spans too many log units: an entry underflows to zero "
            "relative to the row maximum"
        )
    X = W / W.sum(axis=1, keepdims=True)
    row_ids = getattr(Y, "row_ids", None)
    col_ids = getattr(Y, "col_ids", None)
    return CompositionMatrix(X, row_ids, col_ids)


def c_q(q: float) -> float:
    """Piecewise constant in the identifiability bound: 2 at q in {0, 1}."""
    if q in (0.0, 1.0):
        return 2.0
    if not 0.0 < q < 1.0:
        raise InputError(f"q must lie in [0, 1], got {q}")
    return (2.0 - q) / (2.0 * (1.0 - q)) * (2.0 * (1.0 - q) / q) ** (q / (2.0 - q))


def theory_quantities(lambdas, d: int, p: int, R_q: float, q: float, n: int) -> TheoryQuantities:
    """Identifiability and estimation-rate quantities for a given spectrum.

    ``lambdas`` must list the leading eigenvalues through lambda_{d+1};
    requires a positive eigengap lambda_d - lambda_{d+1}.
    """
    lams = tuple(float(x) for x in lambdas)
    if len(lams) < d + 1:
        raise InputError(f"need lambda_1..lambda_{d + 1}, got {len(lams)} values")
    lam1, lam_d, lam_next = lams[0], lams[d - 1], lams[d]
    gap = lam_d - lam_next
    if gap <= 0:
        raise InputError(f"zero eigengap: lambda_d={lam_d}, lambda_(d+1)={lam_next}")
    if not R_q > 0:
        raise InputError(f"sparsity radius must be > 0, got {R_q}")
    sigma1_sq = lam1 * lam_next / gap**2
    sigma2_sq = lam1**2 / gap**2
    c = c_q(q)
    bound = 9.0 * c**2 * sigma2_sq * d**2 * R_q ** (2.0 / (2.0 - q)) / p
    eps_n = math.sqrt(2.0) * math.sqrt(R_q) * ((d + math.log(p)) / n) ** (0.5 - q / 4.0)
    return TheoryQuantities(
        sigma1_sq=float(sigma1_sq),
        sigma2_sq=float(sigma2_sq),
        c_q=float(c),
        bound_theorem1=float(bound),
        epsilon_n=float(eps_n),
    )


def _method_transform(method: str, Y: TransformedMatrix, X: CompositionMatrix,
                      power_a: float) -> TransformedMatrix:
    if method == "oracle":
        return Y
    if method == "proposed":
        return clr(X)
    if method == "log":
        return log_transform(X)
    if method == "raw":
        return raw_transform(X)
    if method == "power":
        return power_transform(X, power_a)
    raise InputError(f"unknown method {method!r}")


def make_truth(cfg: ScenarioConfig, replicate: int) -> GroundTruth:
    """Ground truth for one replicate of a scenario."""
    if cfg.sparsity == "row":
        V = generate_row_sparse_basis(cfg.p, cfg.d, cfg.R0, (cfg.seed, replicate, _STAGE_BASIS))
    else:
        V = generate_col_sparse_basis(cfg.p, cfg.d, cfg.R0, (cfg.seed, replicate, _STAGE_BASIS))
    return build_covariance(V, (cfg.seed, replicate, _STAGE_COV))


def _run_replicate(cfg: ScenarioConfig, replicate: int) -> tuple:
    """Run every method on one replicate; returns (records, failures)."""
    records, failures = [], []
    try:
        truth = make_truth(cfg, replicate)
        Y = sample_log_basis(cfg.n, truth, cfg.distribution,
                             (cfg.seed, replicate, _STAGE_SAMPLE))
        X = compose(Y)
    except Exception as exc:  # noqa: BLE001 - recorded, never silent
        msg = f"{type(exc).__name__}: {exc}"
        return [], [(replicate, method, msg) for method in cfg.methods]
    folds_seed = (cfg.seed, replicate, _STAGE_FOLDS)
    for method in cfg.methods:
        try:
            T = _method_transform(method, Y, X, cfg.power_a)
            cv = cross_validate(
                T, cfg.d, cfg.sparsity, cfg.q, grid=cfg.grid, folds=cfg.folds,
                seed=folds_seed, max_iter=cfg.max_iter, tol=cfg.tol,
            )
            S = sample_covariance(T)
            beta, rho, mu = default_hyperparameters(S)
            fit = admm_fit(
                S, cfg.d,
                SolverConfig(
                    mode=cfg.sparsity, q=cfg.q, alpha=cv.best_alpha, beta=beta,
                    rho=rho, mu=mu, max_iter=cfg.max_iter, tol=cfg.tol,
                ),
            )
            dist = subspace_distance_sq(fit.V_hat, truth.V_true)
            records.append(ReplicateRecord(
                replicate=replicate,
                method=method,
                distance=dist,
                best_alpha=cv.best_alpha,
                gram_max_dev=fit.diagnostics.gram_max_dev,
                degenerate=fit.degenerate,
                iterations=fit.diagnostics.iterations,
                converged=fit.diagnostics.converged,
            ))
        except Exception as exc:  # noqa: BLE001 - recorded, never silent
            failures.append((replicate, method, f"{type(exc).__name__}: {exc}"))
    return records, failures


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> MseTable:
    """Run all replicates of a scenario and aggregate per-method errors.

    Replicates are independent and may run in parallel (``jobs`` processes);
    aggregation follows replicate order, so results match the serial run.
    Failed (replicate, method) fits are excluded from the aggregates and
    reported both in the table and as a warning.
    """
    reps = range(cfg.replicates)
    if jobs != 1:
        from joblib import Parallel, delayed

        outcomes = Parallel(n_jobs=jobs)(delayed(_run_replicate)(cfg, r) for r in reps)
    else:
        outcomes = [_run_replicate(cfg, r) for r in reps]

    records, failures = [], []
    for recs, fails in outcomes:
        records.extend(recs)
        failures.extend(fails)
    for rep, method, msg in failures:
        warnings.warn(
            f"replicate {rep} method {method} failed and was excluded: {msg}",
            RuntimeWarning,
            stacklevel=2,
        )

    means, ses, counts = [], [], []
    for method in cfg.methods:
        vals = np.array([r.distance for r in records if r.method == method])
        m = len(vals)
        means.append(float(np.mean(vals)) if m else float("nan"))
        ses.append(float(np.std(vals, ddof=1) / np.sqrt(m)) if m > 1 else 0.0)
        counts.append(m)
    return MseTable(
        methods=tuple(cfg.methods),
        means=tuple(means),
        ses=tuple(ses),
        counts=tuple(counts),
        records=tuple(records),
        failures=tuple(failures),
    )
