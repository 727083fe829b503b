"""Linearized proximal ADMM for sparse principal subspace estimation.

The estimator maximizes ``<S, U U'>`` over orthonormal U subject to a row- or
column-sparsity penalty.  The splitting keeps the orthonormality constraint on
U, puts the nonsmooth penalty on a copy V, and softens the coupling through an
auxiliary Y with a large quadratic weight mu, so that the sparse factor V ends
up nearly orthonormal and is returned as the estimate.

Per-iterate subproblems are exact: the U-update is an orthogonal Procrustes
problem solved by SVD, and the V-update decouples into per-row (row mode) or
per-entry (column mode) proximal problems with closed-form or
polynomial-root solutions for q in {0, 1/2, 2/3, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, NumericalError
from .linalg import check_orthonormal, check_symmetric, leading_subspace, spectral_norm

#: Sparsity exponents with supported exact V-updates.
SUPPORTED_Q = (0.0, 0.5, 2.0 / 3.0, 1.0)

#: Newton iterations for the q in {1/2, 2/3} polynomial root.  Quadratic
#: convergence from the analytic bracket makes this a generous cap.
_NEWTON_STEPS = 60


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters for one ADMM run.

    ``alpha`` is the penalty level; in column mode it is a base value from
    which per-column levels ``alpha / ||v0_j||_1`` are derived.  ``beta`` is
    the augmented-Lagrangian weight, ``rho`` the proximal damping, ``mu`` the
    weight forcing V toward U.
    """

    mode: str
    q: float
    alpha: float
    beta: float
    rho: float
    mu: float = 1000.0
    max_iter: int = 1000
    tol: float = 1e-5

    def __post_init__(self):
        if self.mode not in ("row", "column"):
            raise InputError(f"mode must be 'row' or 'column', got {self.mode!r}")
        if self.q not in SUPPORTED_Q:
            raise InputError(f"q must be one of {{0, 1/2, 2/3, 1}}, got {self.q!r}")
        for name in ("alpha", "beta", "rho", "mu", "tol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.max_iter < 1:
            raise InputError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class AdmmState:
    """Iterates and progress diagnostics after one ADMM step."""

    U: np.ndarray
    V: np.ndarray
    Y: np.ndarray
    Lambda: np.ndarray
    iter: int
    primal_residual: float
    step_delta: float


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    converged: bool
    step_delta: float
    primal_residual: float
    first_primal_residual: float
    gram_max_dev: float


@dataclass(frozen=True)
class SubspaceFit:
    """Final sparse estimate with its orthonormal companion and diagnostics.

    ``V_hat`` is the sparse, nearly orthonormal factor taken as the subspace
    estimate; ``support`` lists its nonzero rows (row mode) or the nonzero
    indices of each column (column mode).  ``degenerate`` flags any
    entirely-zero column (the all-zero estimate in particular), which callers
    such as cross-validation must be able to score and reject.
    """

    V_hat: np.ndarray
    U_hat: np.ndarray
    objective: float
    support: tuple
    degenerate: bool
    config: SolverConfig
    diagnostics: SolverDiagnostics
    alpha_vector: Optional[np.ndarray] = None


def default_hyperparameters(S: np.ndarray) -> tuple:
    """(beta, rho, mu) = (5.8 ||S||_2, 6.14 ||S||_2, 1000)."""
    norm = spectral_norm(S)
    if norm == 0.0:
        raise InputError("cannot derive hyperparameters from the zero matrix")
    return 5.8 * norm, 6.14 * norm, 1000.0


def procrustes_update(A: np.ndarray) -> np.ndarray:
    """Closest orthonormal matrix to A: U = Q P' from the thin SVD A = Q D P'.

    Maximizes ``<A, U>`` over orthonormal U.  A rank-deficient A is resolved
    deterministically by the LAPACK singular vectors (the arbitrary directions
    pair up in Q and P and the product stays orthonormal).
    """
    A = np.asarray(A, dtype=float)
    try:
        Q, _, Pt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed in Procrustes update: {exc}") from exc
    return Q @ Pt


def column_alpha_vector(alpha: float, V0: np.ndarray) -> np.ndarray:
    """Per-column penalty levels alpha_j = alpha / ||v0_j||_1."""
    V0 = np.asarray(V0, dtype=float)
    norms = np.abs(V0).sum(axis=0)
    if np.any(norms == 0):
        j = int(np.argmax(norms == 0))
        raise InputError(f"initial basis column {j} is zero; cannot scale its penalty")
    return alpha / norms


def _prox_magnitudes(k3, q: float, alpha, k1: float) -> np.ndarray:
    """Optimal magnitudes for min_x (k1/2) x^2 + alpha x^q - k3 x over x >= 0.

    ``k3`` holds the norms of the linear terms (one subproblem per element);
    ``alpha`` broadcasts against it.  For q=0 the penalty is
    ``alpha * 1{x != 0}``.  Vectorized so the ADMM V-update solves all p rows
    (or p*d entries) in one call.
    """
    k3 = np.asarray(k3, dtype=float)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), k3.shape)
    if q == 1.0:
        return np.maximum(k3 - alpha, 0.0) / k1
    if q == 0.0:
        # Strict inequality: the boundary tie goes to zero.
        return np.where(k3**2 > 2.0 * alpha * k1, k3 / k1, 0.0)

    # q in {1/2, 2/3}: stationarity k1*x + alpha*q*x^(q-1) = k3 becomes a
    # cubic (z = x^(1/2)) or quartic (z = x^(1/3)) in z:
    #   q=1/2:  k1 z^3 - k3 z + alpha/2   = 0
    #   q=2/3:  k1 z^4 - k3 z + 2 alpha/3 = 0
    # Both are convex for z > 0 with at most two positive roots; the largest
    # root is the only candidate minimizer.  It exists iff the polynomial is
    # nonpositive at its stationary point z_m, and lies in [z_m, z_ub] with
    # z_ub = (k3/k1)^(1/(m-1)) for degree m, where guarded Newton from z_ub
    # decreases monotonically onto it.
    if q == 0.5:
        m = 3
        c0 = alpha / 2.0
    else:
        m = 4
        c0 = 2.0 * alpha / 3.0

    with np.errstate(divide="ignore", invalid="ignore"):
        z_m = (k3 / (m * k1)) ** (1.0 / (m - 1))
        exists = (k3 > 0) & (k1 * z_m**m - k3 * z_m + c0 <= 0)
        z = np.where(exists, (k3 / k1) ** (1.0 / (m - 1)), 1.0)
        for _ in range(_NEWTON_STEPS):
            h = k1 * z**m - k3 * z + c0
            hp = m * k1 * z ** (m - 1) - k3
            step = np.where(exists & (hp > 0), h / np.where(hp > 0, hp, 1.0), 0.0)
            z = np.maximum(z - step, z_m)
        x = np.where(exists, z ** (m - 1), 0.0)
        # Keep the stationary point only when it beats x = 0 strictly.
        fval = 0.5 * k1 * x**2 + alpha * np.where(x > 0, x**q, 0.0) - k3 * x
    return np.where(exists & (fval < 0), x, 0.0)


def prox_row(b: np.ndarray, q: float, alpha: float, beta: float, rho: float) -> np.ndarray:
    """Exact minimizer of ``(beta+rho)/2 ||v||^2 + alpha ||v||_2^q + v'b``.

    The solution points along -b with the magnitude returned by the scalar
    subproblem; it is zero when no stationary magnitude beats the origin.
    """
    _check_prox_args(q, alpha, beta, rho)
    b = np.asarray(b, dtype=float)
    k3 = float(np.linalg.norm(b))
    if k3 == 0.0:
        return np.zeros_like(b)
    x = float(_prox_magnitudes(np.array([k3]), q, alpha, beta + rho)[0])
    return -(x / k3) * b + 0.0  # the +0.0 normalizes -0.0 entries


def prox_scalar(b: float, q: float, alpha_j: float, beta: float, rho: float) -> float:
    """Scalar analogue of :func:`prox_row` for the column-sparse V-update."""
    _check_prox_args(q, alpha_j, beta, rho)
    k3 = abs(float(b))
    if k3 == 0.0:
        return 0.0
    x = float(_prox_magnitudes(np.array([k3]), q, alpha_j, beta + rho)[0])
    return float(-np.sign(b) * x + 0.0)


def _check_prox_args(q: float, alpha: float, beta: float, rho: float) -> None:
    if q not in SUPPORTED_Q:
        raise InputError(f"q must be one of {{0, 1/2, 2/3, 1}}, got {q!r}")
    if not alpha > 0:
        raise InputError(f"alpha must be > 0, got {alpha}")
    if not beta + rho > 0:
        raise InputError(f"beta + rho must be > 0, got {beta + rho}")


def _v_update(B: np.ndarray, cfg: SolverConfig, alpha_vec: Optional[np.ndarray]) -> np.ndarray:
    k1 = cfg.beta + cfg.rho
    if cfg.mode == "row":
        k3 = np.linalg.norm(B, axis=1)
        x = _prox_magnitudes(k3, cfg.q, cfg.alpha, k1)
        scale = np.divide(x, k3, out=np.zeros_like(x), where=k3 > 0)
        return -scale[:, None] * B + 0.0
    k3 = np.abs(B)
    x = _prox_magnitudes(k3, cfg.q, alpha_vec[None, :], k1)
    return -np.sign(B) * x + 0.0


def initial_state(S: np.ndarray, d: int, init_basis: Optional[np.ndarray] = None) -> AdmmState:
    """Starting iterates: U = V = leading eigenvectors of S, Y = Lambda = 0."""
    S = check_symmetric(S)
    p = S.shape[0]
    if not 1 <= d < p:
        raise InputError(f"need 1 <= d < p; got d={d}, p={p}")
    if init_basis is None:
        init_basis = leading_subspace(S, d)
    else:
        init_basis = check_orthonormal(init_basis)
        if init_basis.shape != (p, d):
            raise InputError(f"init basis shape {init_basis.shape} != ({p}, {d})")
    zeros = np.zeros((p, d))
    return AdmmState(U=init_basis.copy(), V=init_basis.copy(), Y=zeros,
                     Lambda=zeros.copy(), iter=0,
                     primal_residual=np.nan, step_delta=np.nan)


def admm_step(S: np.ndarray, state: AdmmState, cfg: SolverConfig,
              alpha_vec: Optional[np.ndarray] = None) -> AdmmState:
    """One ADMM iteration.

    The U-update is the Procrustes problem on the linearized objective with
    A = S U + (Lambda + beta V + beta Y + rho U)/2; the V-update applies the
    proximal operators to the rows (row mode) or entries (column mode) of
    B = Lambda + beta (Y - U+) - rho V.  The Y- and multiplier updates are
    written in terms of each other; their unique simultaneous solution is
        Y+      = (2 beta (U+ - V+) - Lambda) / (mu + 2 beta)
        Lambda+ = Lambda + beta (V+ - U+ + Y+).
    """
    beta, rho, mu = cfg.beta, cfg.rho, cfg.mu
    A = S @ state.U + 0.5 * (state.Lambda + beta * state.V + beta * state.Y + rho * state.U)
    U_new = procrustes_update(A)
    B = state.Lambda + beta * (state.Y - U_new) - rho * state.V
    V_new = _v_update(B, cfg, alpha_vec)
    Y_new = (2.0 * beta * (U_new - V_new) - state.Lambda) / (mu + 2.0 * beta)
    Lam_new = state.Lambda + beta * (V_new - U_new + Y_new)

    if not (np.all(np.isfinite(U_new)) and np.all(np.isfinite(V_new))
            and np.all(np.isfinite(Y_new)) and np.all(np.isfinite(Lam_new))):
        raise NumericalError(
            f"non-finite iterate at ADMM iteration {state.iter + 1} "
            f"(alpha={cfg.alpha}, beta={beta}, rho={rho})"
        )

    delta = max(
        float(np.linalg.norm(U_new - state.U)), float(np.linalg.norm(V_new - state.V))
    )
    primal = float(np.linalg.norm(V_new - U_new + Y_new))
    return AdmmState(U=U_new, V=V_new, Y=Y_new, Lambda=Lam_new,
                     iter=state.iter + 1, primal_residual=primal, step_delta=delta)


def admm_fit(
    S: np.ndarray,
    d: int,
    cfg: SolverConfig,
    init_basis: Optional[np.ndarray] = None,
) -> SubspaceFit:
    """Run the ADMM loop on a covariance matrix and return the sparse fit.

    Parameters
    ----------
    S : ndarray
        Symmetric sample covariance.
    d : int
        Target subspace dimension, 1 <= d < p.
    cfg : SolverConfig
    init_basis : ndarray, optional
        Orthonormal p-by-d warm start for U and V.  Defaults to the leading
        eigenvectors of S (callers fitting many penalty levels on one S can
        precompute it once).

    Stops when max(||U+ - U||_F, ||V+ - V||_F) <= tol or at max_iter; the
    sparse factor V is the estimate.
    """
    S = check_symmetric(S)
    state = initial_state(S, d, init_basis)

    alpha_vec = None
    if cfg.mode == "column":
        alpha_vec = column_alpha_vector(cfg.alpha, state.U)

    converged = False
    first_primal = np.nan
    for _ in range(cfg.max_iter):
        state = admm_step(S, state, cfg, alpha_vec)
        if state.iter == 1:
            first_primal = state.primal_residual
        if state.step_delta <= cfg.tol:
            converged = True
            break

    V, U = state.V, state.U
    d = V.shape[1]
    if cfg.mode == "row":
        support = tuple(int(i) for i in np.flatnonzero(np.any(V != 0.0, axis=1)))
    else:
        support = tuple(
            tuple(int(i) for i in np.flatnonzero(V[:, j] != 0.0)) for j in range(d)
        )
    degenerate = bool(np.any(np.all(V == 0.0, axis=0)))
    gram_dev = float(np.max(np.abs(V.T @ V - np.eye(d))))
    objective = float(np.trace(V.T @ S @ V))

    return SubspaceFit(
        V_hat=V,
        U_hat=U,
        objective=objective,
        support=support,
        degenerate=degenerate,
        config=cfg,
        diagnostics=SolverDiagnostics(
            iterations=state.iter,
            converged=converged,
            step_delta=state.step_delta,
            primal_residual=state.primal_residual,
            first_primal_residual=first_primal,
            gram_max_dev=gram_dev,
        ),
        alpha_vector=alpha_vec,
    )
