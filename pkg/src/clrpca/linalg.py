"""Covariance estimation, spectral decompositions, and subspace distances.

Symmetric matrices are plain float ndarrays; operations validate symmetry at
their boundary instead of wrapping every matrix in a class.  Eigenvectors
follow a fixed sign convention (largest-magnitude entry positive, ties broken
by lowest index) so that outputs are reproducible across runs and platforms.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple, Union

import numpy as np

from .errors import InputError
from .transforms import TransformedMatrix, centering_matrix

#: Relative symmetry tolerance for SymmetricMatrix inputs.
SYMMETRY_RTOL = 1e-10


class SpectralPair(NamedTuple):
    """Eigenvalues sorted descending with aligned orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _values(data: Union[TransformedMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(data, TransformedMatrix):
        return data.values
    return np.asarray(data, dtype=float)


def check_symmetric(A: np.ndarray, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate |A_ij - A_ji| <= rtol * (1 + |A_ij|) and return A as float array."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    dev = np.abs(A - A.T) - rtol * (1.0 + np.abs(A))
    if np.any(dev > 0):
        i, j = np.unravel_index(int(np.argmax(dev)), A.shape)
        raise InputError(
            f"matrix is not symmetric within tolerance: A[{i},{j}]={A[i, j]} vs A[{j},{i}]={A[j, i]}"
        )
    return A


def check_orthonormal(V: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Validate that V has orthonormal columns (max-norm tolerance on V'V - I)."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise InputError(f"expected a 2-d basis matrix, got shape {V.shape}")
    p, d = V.shape
    if d > p:
        raise InputError(f"basis has more columns than rows: {V.shape}")
    gram_dev = np.max(np.abs(V.T @ V - np.eye(d)))
    if gram_dev > tol:
        raise InputError(f"columns are not orthonormal: max |V'V - I| = {gram_dev:.3e}")
    return V


def sample_covariance(data: Union[TransformedMatrix, np.ndarray]) -> np.ndarray:
    """Centered second-moment matrix with 1/n normalization.

    Returns ``(1/n) * sum_k (x_k - xbar)(x_k - xbar)'``, symmetrized to kill
    round-off asymmetry.  Requires at least two observations.
    """
    X = _values(data)
    if X.ndim != 2:
        raise InputError(f"expected a 2-d data matrix, got shape {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise InputError(f"sample covariance needs n >= 2 observations, got {n}")
    centered = X - X.mean(axis=0)
    S = centered.T @ centered / n
    return (S + S.T) / 2.0


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry positive (ties: lowest index)."""
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0:
            V[:, j] = -col
    return V


def spectral_decomposition(A: np.ndarray) -> SpectralPair:
    """Symmetric eigendecomposition with descending eigenvalues and fixed signs."""
    A = check_symmetric(A)
    evals, evecs = np.linalg.eigh((A + A.T) / 2.0)
    order = np.argsort(evals)[::-1]
    return SpectralPair(evals[order], _fix_signs(evecs[:, order]))


def spectral_norm(A: np.ndarray) -> float:
    """Largest absolute eigenvalue of a symmetric matrix."""
    A = check_symmetric(A)
    return float(np.max(np.abs(np.linalg.eigvalsh((A + A.T) / 2.0))))


def leading_subspace(A: np.ndarray, d: int) -> np.ndarray:
    """First d eigenvectors of A as a p-by-d orthonormal basis.

    Warns when the eigengap at d is degenerate (the subspace is then not
    uniquely defined).
    """
    A = check_symmetric(A)
    p = A.shape[0]
    if not 1 <= d < p:
        raise InputError(f"subspace dimension must satisfy 1 <= d < p; got d={d}, p={p}")
    evals, evecs = spectral_decomposition(A)
    gap = evals[d - 1] - evals[d]
    scale = max(1.0, abs(evals[0]))
    if gap <= 1e-12 * scale:
        warnings.warn(
            f"degenerate eigengap at d={d} (lambda_d - lambda_d+1 = {gap:.3e}); "
            "the leading subspace is not unique",
            RuntimeWarning,
            stacklevel=2,
        )
    return evecs[:, :d]


def sin_theta_sq(E: np.ndarray, F: np.ndarray) -> float:
    """Squared Frobenius sin-theta distance between the spans of two bases.

    Equals ``0.5 * ||EE' - FF'||_F^2``, computed through the Gram identity
    ``0.5 (||E'E||_F^2 + ||F'F||_F^2) - ||E'F||_F^2`` which avoids forming the
    p-by-p projectors.  Both inputs must be orthonormal and of the same shape;
    the value lies in [0, d].
    """
    E = check_orthonormal(E)
    F = check_orthonormal(F)
    if E.shape != F.shape:
        raise InputError(f"basis shapes differ: {E.shape} vs {F.shape}")
    val = 0.5 * (
        np.linalg.norm(E.T @ E) ** 2 + np.linalg.norm(F.T @ F) ** 2
    ) - np.linalg.norm(E.T @ F) ** 2
    return float(min(max(val, 0.0), E.shape[1]))


def subspace_distance_sq(M: np.ndarray, F: np.ndarray, rank_tol: float = 1e-8) -> float:
    """Squared sin-theta distance between col(M) and col(F) for arbitrary M.

    M may be rank deficient or non-orthonormal (e.g. the sparse solver factor,
    possibly with zero columns); its column span is extracted by SVD with a
    relative rank tolerance.  An all-zero M gives ``d/2`` where d is the
    number of columns of F.
    """
    M = np.asarray(M, dtype=float)
    F = check_orthonormal(F)
    if M.shape[0] != F.shape[0]:
        raise InputError(f"row dimensions differ: {M.shape[0]} vs {F.shape[0]}")
    Q, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > rank_tol * (s[0] if s.size else 0.0)))
    E = Q[:, :r]
    d = F.shape[1]
    val = 0.5 * (r + d) - np.linalg.norm(E.T @ F) ** 2
    return float(max(val, 0.0))


def gamma_from_omega(Omega: np.ndarray) -> np.ndarray:
    """Conjugate by the centering projector: ``G @ Omega @ G``.

    Computed by exact double centering (subtract row means, column means, add
    the grand mean), which agrees with the matrix product to round-off without
    forming G.
    """
    Omega = check_symmetric(Omega)
    row_means = Omega.mean(axis=1, keepdims=True)
    col_means = Omega.mean(axis=0, keepdims=True)
    grand = Omega.mean()
    Gam = Omega - row_means - col_means + grand
    return (Gam + Gam.T) / 2.0


__all__ = [
    "SpectralPair",
    "centering_matrix",
    "check_orthonormal",
    "check_symmetric",
    "gamma_from_omega",
    "leading_subspace",
    "sample_covariance",
    "sin_theta_sq",
    "spectral_decomposition",
    "spectral_norm",
    "subspace_distance_sq",
]
