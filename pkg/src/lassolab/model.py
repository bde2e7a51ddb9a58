"""Shared data model: designs, Gram matrices, coefficient vectors, ground truth.

The regression model is Y = X beta + eps with a fixed n-by-p design X. There
is no intercept and no automatic standardization; column rescaling to
``||X_k||^2 = n`` is opt-in (``normalize=True``) and recorded on the object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InfeasibleTargetError, InputDataError, ZeroColumnError

# Columns whose normalized inner product exceeds 1 - COLLINEAR_TOL are flagged
# as duplicates; path algorithms refuse to run on flagged designs unless forced.
COLLINEAR_TOL = 1e-10


def as_float_vector(values, name="vector"):
    """Coerce to a finite 1-d float64 array (read-only copy)."""
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise InputDataError("%s must be one-dimensional, got shape %s" % (name, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise InputDataError("%s contains non-finite entries" % name)
    arr.setflags(write=False)
    return arr


class DesignMatrix:
    """Fixed design X with n sample rows and p predictor columns.

    Zero columns are rejected at construction: every diagnostic in this
    package is meaningless on a design with ``phi_min(1) = 0``. Duplicate
    (collinear within ``COLLINEAR_TOL``) columns are allowed but flagged.
    """

    def __init__(self, entries, column_labels=None, normalize=False):
        X = np.array(entries, dtype=float, copy=True)
        if X.ndim != 2:
            raise InputDataError("design must be a 2-d matrix, got shape %s" % (X.shape,))
        n, p = X.shape
        if n < 1 or p < 1:
            raise InputDataError("design must have n >= 1 rows and p >= 1 columns")
        if not np.all(np.isfinite(X)):
            raise InputDataError("design contains non-finite entries")

        norms = np.sqrt(np.einsum("ij,ij->j", X, X))
        zero = np.flatnonzero(norms <= 1e-12 * max(1.0, float(norms.max(initial=0.0))))
        if zero.size:
            raise ZeroColumnError(zero)

        self.normalized = bool(normalize)
        if normalize:
            X = X * (np.sqrt(n) / norms)

        if column_labels is not None:
            column_labels = tuple(str(c) for c in column_labels)
            if len(column_labels) != p:
                raise InputDataError(
                    "got %d column labels for %d columns" % (len(column_labels), p)
                )
        self.column_labels = column_labels

        X.setflags(write=False)
        self.entries = X

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def p(self):
        return self.entries.shape[1]

    @property
    def column_norms_sq(self):
        return np.einsum("ij,ij->j", self.entries, self.entries)

    @cached_property
    def collinear_pairs(self):
        """Pairs (j, k), j < k, of columns with |corr| >= 1 - COLLINEAR_TOL."""
        X = self.entries / np.sqrt(self.column_norms_sq)
        G = X.T @ X
        iu, ju = np.triu_indices(self.p, k=1)
        hits = np.abs(G[iu, ju]) >= 1.0 - COLLINEAR_TOL
        return tuple(zip(iu[hits].tolist(), ju[hits].tolist()))

    @property
    def flagged(self):
        return len(self.collinear_pairs) > 0

    def __repr__(self):
        return "DesignMatrix(n=%d, p=%d%s)" % (
            self.n,
            self.p,
            ", normalized" if self.normalized else "",
        )


def build_gram(design: DesignMatrix) -> np.ndarray:
    """Gram matrix C = n^-1 X^T X, symmetrized and PSD-validated.

    Raises if C fails the positive-semidefinite check (smallest eigenvalue
    below ``-1e-10 * ||C||``), which indicates corrupted input.
    """
    X = design.entries
    C = X.T @ X / design.n
    C = 0.5 * (C + C.T)
    eigs = np.linalg.eigvalsh(C)
    norm = max(abs(float(eigs[0])), abs(float(eigs[-1])))
    if float(eigs[0]) < -1e-10 * norm:
        raise InputDataError(
            "gram matrix is not positive semi-definite (min eigenvalue %.3e)" % eigs[0]
        )
    C.setflags(write=False)
    return C


def sign_of(values) -> np.ndarray:
    """Componentwise sign pattern over {-1, 0, +1}."""
    arr = np.asarray(values, dtype=float)
    return np.sign(arr).astype(int)


@dataclass(frozen=True)
class TruthSpec:
    """Ground truth for simulated problems: coefficients and noise level."""

    beta: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "beta", as_float_vector(self.beta, "beta_true"))
        if not (self.sigma >= 0.0 and np.isfinite(self.sigma)):
            raise InputDataError("noise sigma must be a nonnegative real")

    @property
    def support(self):
        return tuple(np.flatnonzero(self.beta).tolist())

    @property
    def s(self):
        return len(self.support)


@dataclass(frozen=True)
class RegressionProblem:
    """A design with its response; simulations also retain truth and noise.

    When both ``truth`` and ``noise`` are present the stored response must
    satisfy Y = X beta + eps exactly (to 1e-12 relative), so the de-noising
    devices can reconstruct every intermediate response.
    """

    design: DesignMatrix
    y: np.ndarray
    truth: TruthSpec | None = None
    noise: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "y", as_float_vector(self.y, "response"))
        if self.y.shape[0] != self.design.n:
            raise InputDataError(
                "response length %d does not match n=%d" % (self.y.shape[0], self.design.n)
            )
        if self.truth is not None and self.truth.beta.shape[0] != self.design.p:
            raise InputDataError("truth length does not match p")
        if self.noise is not None:
            object.__setattr__(self, "noise", as_float_vector(self.noise, "noise"))
            if self.noise.shape[0] != self.design.n:
                raise InputDataError("noise length does not match n")
        if self.truth is not None and self.noise is not None:
            resid = self.y - self.design.entries @ self.truth.beta - self.noise
            tol = 1e-12 * max(float(np.abs(self.y).max(initial=0.0)), 1e-30)
            if float(np.abs(resid).max(initial=0.0)) > tol:
                raise InputDataError("stored response does not equal X beta + eps")

    @property
    def n(self):
        return self.design.n

    @property
    def p(self):
        return self.design.p


def minimal_l1_representation(design: DesignMatrix, target) -> np.ndarray:
    """Minimum-l1-norm representation of ``target`` in the column span of X.

    Computed as the lambda -> 0+ limit of the Lasso homotopy path (basis
    pursuit limit). The target must lie in the span (least-squares residual
    at most 1e-8 relative), otherwise InfeasibleTargetError is raised. When
    the minimizer is non-unique any minimizer may be returned; downstream
    checks should use the attained l1 norm.
    """
    target = as_float_vector(target, "target")
    if target.shape[0] != design.n:
        raise InputDataError("target length does not match n")
    X = design.entries
    beta_ls, _, _, _ = np.linalg.lstsq(X, target, rcond=None)
    scale = max(float(np.linalg.norm(target)), 1e-30)
    if float(np.linalg.norm(X @ beta_ls - target)) > 1e-8 * scale:
        raise InfeasibleTargetError("target is not in the column span of the design")
    if float(np.abs(target).max(initial=0.0)) == 0.0:
        return np.zeros(design.p)

    from .solver import lambda_max, lasso_path

    problem = RegressionProblem(design, target)
    lam_lo = lambda_max(problem) * 1e-12
    path = lasso_path(problem, lambda_min=lam_lo, force=True)
    return path.coef_at(lam_lo)
