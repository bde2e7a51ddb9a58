"""Scikit-learn style estimators wrapping the certified solvers.

These provide ``fit``/``predict``/``get_params`` so the penalized solver and
the two-stage variant compose with the wider ecosystem (pipelines, grid
search, cloning). There is no intercept, matching the underlying model.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .model import DesignMatrix, RegressionProblem
from .solver import lambda_max, solve_at
from .twostage import ThresholdRule, hard_threshold


class LassoRegressor(BaseEstimator, RegressorMixin):
    """Penalized least squares ``||y - X b||^2 + lam ||b||_1``.

    Note the penalty convention: unscaled quadratic term, so ``lam`` is
    comparable to ``2 * n * alpha`` of estimators that average the squared
    loss. ``fit`` attaches the KKT certificate of the returned solution.
    """

    def __init__(self, lam=1.0, tol=1e-8, max_sweeps=100_000, force=False,
                 polish=True):
        self.lam = lam
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.force = force
        self.polish = polish

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        problem = RegressionProblem(DesignMatrix(X), y)
        fit = solve_at(
            problem,
            self.lam,
            tol=self.tol,
            max_sweeps=self.max_sweeps,
            force=self.force,
            polish=self.polish,
        )
        self.coef_ = np.asarray(fit.coefficients)
        self.intercept_ = 0.0
        self.kkt_ = fit.kkt
        self.objective_ = fit.objective
        self.lambda_max_ = lambda_max(problem)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class HardThresholdedLasso(BaseEstimator, RegressorMixin):
    """Two-stage estimator: penalized fit, then hard thresholding.

    The cutoff is ``sigma * t * sqrt(log(p) / n)`` with known noise level
    ``sigma``; coefficients at or above the cutoff are kept.
    """

    def __init__(self, lam=1.0, sigma=1.0, t=1.0, tol=1e-8, max_sweeps=100_000,
                 force=False):
        self.lam = lam
        self.sigma = sigma
        self.t = t
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.force = force

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        problem = RegressionProblem(DesignMatrix(X), y)
        fit = solve_at(
            problem, self.lam, tol=self.tol, max_sweeps=self.max_sweeps,
            force=self.force,
        )
        rule = ThresholdRule(sigma=self.sigma, t=self.t, n=X.shape[0], p=X.shape[1])
        self.lasso_coef_ = np.asarray(fit.coefficients)
        self.coef_ = hard_threshold(self.lasso_coef_, rule)
        self.intercept_ = 0.0
        self.cutoff_ = rule.cutoff
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_
