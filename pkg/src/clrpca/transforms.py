"""Compositional transformations and count preprocessing.

The observed data are proportions on the simplex; the quantity of inferential
interest is the covariance of the latent log abundances.  The centered
log-ratio (clr) transform maps compositions into the hyperplane orthogonal to
the all-ones vector, where its covariance equals ``G @ Omega @ G`` with
``G = I - J/p`` the centering projector.  This module provides the zero
handling, closure, and the transform family used as comparison methods
(clr, plain log, raw, power closure).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError

#: Recognized tags for transformed matrices.
TRANSFORM_TAGS = ("clr", "log", "raw", "power", "oracle-log-basis")


def _as_float_matrix(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"matrix must be nonempty, got shape {arr.shape}")
    return arr


def _check_labels(labels: Optional[Sequence[str]], n: int, what: str) -> Optional[tuple]:
    if labels is None:
        return None
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise InputError(f"{what}: expected {n} labels, got {len(labels)}")
    return labels


@dataclass(frozen=True)
class CountMatrix:
    """Nonnegative count data, n observations by p parts.

    Labels are optional but are carried through the pipeline so that loadings
    can be exported with their variable names.
    """

    values: np.ndarray
    row_ids: Optional[tuple] = None
    col_ids: Optional[tuple] = None

    def __post_init__(self):
        arr = _as_float_matrix(self.values)
        if np.any(arr < 0):
            i, j = np.argwhere(arr < 0)[0]
            raise InputError(f"counts must be nonnegative; entry ({i}, {j}) is {arr[i, j]}")
        if not np.all(np.isfinite(arr)):
            raise InputError("counts must be finite")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "row_ids", _check_labels(self.row_ids, arr.shape[0], "row_ids"))
        object.__setattr__(self, "col_ids", _check_labels(self.col_ids, arr.shape[1], "col_ids"))

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class CompositionMatrix:
    """Strictly positive rows summing to one (relative tolerance 1e-12)."""

    values: np.ndarray
    row_ids: Optional[tuple] = None
    col_ids: Optional[tuple] = None

    def __post_init__(self):
        arr = _as_float_matrix(self.values)
        if np.any(arr <= 0):
            i, j = np.argwhere(arr <= 0)[0]
            raise InputError(
                f"compositions must be strictly positive; entry ({i}, {j}) is {arr[i, j]}"
            )
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12 * np.maximum(1.0, np.abs(sums))):
            i = int(np.argmax(np.abs(sums - 1.0)))
            raise InputError(f"composition row {i} sums to {sums[i]}, not 1")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "row_ids", _check_labels(self.row_ids, arr.shape[0], "row_ids"))
        object.__setattr__(self, "col_ids", _check_labels(self.col_ids, arr.shape[1], "col_ids"))

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class TransformedMatrix:
    """Real-valued transformed data with a tag naming the transform.

    For ``transform_tag == "clr"`` every row sums to zero (absolute tolerance
    1e-10).  ``meta`` records transform parameters, e.g. the power exponent.
    """

    values: np.ndarray
    transform_tag: str
    row_ids: Optional[tuple] = None
    col_ids: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = _as_float_matrix(self.values)
        if self.transform_tag not in TRANSFORM_TAGS:
            raise InputError(
                f"unknown transform tag {self.transform_tag!r}; expected one of {TRANSFORM_TAGS}"
            )
        if self.transform_tag == "clr":
            sums = arr.sum(axis=1)
            if np.any(np.abs(sums) > 1e-10):
                i = int(np.argmax(np.abs(sums)))
                raise InputError(f"clr row {i} sums to {sums[i]}, expected 0")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "row_ids", _check_labels(self.row_ids, arr.shape[0], "row_ids"))
        object.__setattr__(self, "col_ids", _check_labels(self.col_ids, arr.shape[1], "col_ids"))

    @property
    def shape(self):
        return self.values.shape


def replace_zeros(counts: CountMatrix, pseudocount: float) -> CountMatrix:
    """Replace zero counts with a small pseudocount, leaving other entries alone.

    Parameters
    ----------
    counts : CountMatrix
        Nonnegative count data.
    pseudocount : float
        Strictly positive value substituted for zeros (0.05 is the usual
        choice for word counts).
    """
    if not pseudocount > 0:
        raise InputError(f"pseudocount must be > 0, got {pseudocount}")
    out = counts.values.copy()
    out[out == 0] = pseudocount
    return CountMatrix(out, counts.row_ids, counts.col_ids)


def closure(counts: CountMatrix) -> CompositionMatrix:
    """Normalize each row to sum to one.

    Every entry must be strictly positive; run :func:`replace_zeros` first if
    the data contain zeros.
    """
    arr = counts.values
    if np.any(arr <= 0):
        i = int(np.argwhere(arr <= 0)[0][0])
        raise InputError(f"closure requires strictly positive entries; row {i} has a zero")
    sums = arr.sum(axis=1, keepdims=True)
    return CompositionMatrix(arr / sums, counts.row_ids, counts.col_ids)


def clr(x: CompositionMatrix) -> TransformedMatrix:
    """Centered log-ratio transform: log of each part minus the log geometric mean.

    The geometric mean is computed as the exponential of the mean log, never
    as a product, so it is stable for large p.  Output rows sum to zero and
    the transform is invariant to positive rescaling of the underlying counts.
    """
    logs = np.log(x.values)
    centered = logs - logs.mean(axis=1, keepdims=True)
    return TransformedMatrix(centered, "clr", x.row_ids, x.col_ids)


def log_transform(x: CompositionMatrix) -> TransformedMatrix:
    """Elementwise natural log of the compositions."""
    return TransformedMatrix(np.log(x.values), "log", x.row_ids, x.col_ids)


def raw_transform(x: CompositionMatrix) -> TransformedMatrix:
    """The compositions themselves, tagged for the covariance pipeline."""
    return TransformedMatrix(x.values.copy(), "raw", x.row_ids, x.col_ids)


def power_transform(x: CompositionMatrix, a: float = 0.5) -> TransformedMatrix:
    """Power closure: raise each part to ``a`` and renormalize rows.

    Parameters
    ----------
    x : CompositionMatrix
    a : float
        Exponent in (0, 1]; ``a == 1`` is the identity on compositions.
        Recorded in the output ``meta`` under key ``"a"``.
    """
    if not (0 < a <= 1):
        raise InputError(f"power exponent must be in (0, 1], got {a}")
    powered = x.values**a
    powered /= powered.sum(axis=1, keepdims=True)
    return TransformedMatrix(powered, "power", x.row_ids, x.col_ids, meta={"a": a})


def centering_matrix(p: int) -> np.ndarray:
    """The projector ``I - J/p`` annihilating the all-ones direction.

    Idempotent with eigenvalues {0, 1, ..., 1}; requires p >= 2.
    """
    if p < 2:
        raise InputError(f"centering matrix needs p >= 2, got {p}")
    return np.eye(p) - np.full((p, p), 1.0 / p)
