"""Hard-thresholded two-stage estimation and sign-pattern comparison.

The second stage zeroes every coefficient below ``sigma * t * sqrt(log(p)/n)``
(natural log; the cutoff is inclusive). The noise level is taken as known,
which is the simulation setting; estimating it is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .errors import InputDataError
from .model import RegressionProblem, sign_of
from .solver import solve_at


@dataclass(frozen=True)
class ThresholdRule:
    """Cutoff ``sigma * t * sqrt(log(p)/n)`` for hard thresholding."""

    sigma: float
    t: float
    n: int
    p: int

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InputDataError("threshold rule requires sigma > 0")
        if not (self.t > 0 and math.isfinite(self.t)):
            raise InputDataError("threshold rule requires t > 0")
        if self.n < 1 or self.p < 1:
            raise InputDataError("threshold rule requires n >= 1 and p >= 1")

    @property
    def cutoff(self):
        return self.sigma * self.t * math.sqrt(math.log(self.p) / self.n)


def hard_threshold(coefficients, rule: ThresholdRule) -> np.ndarray:
    """Zero every component with ``|value| < cutoff`` (>= is kept)."""
    values = np.asarray(coefficients, dtype=float)
    out = np.where(np.abs(values) >= rule.cutoff, values, 0.0)
    return out


def sign_consistent(estimate, truth) -> bool:
    """True iff the componentwise sign patterns agree exactly."""
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise InputDataError("sign comparison requires equal lengths")
    return bool(np.array_equal(sign_of(a), sign_of(b)))


def two_step_recover(problem: RegressionProblem, lam: float, rule: ThresholdRule,
                     **solve_kwargs):
    """Lasso fit followed by hard thresholding; returns (estimate, recovered).

    ``recovered`` compares the thresholded sign pattern against the stored
    truth, which must be present.
    """
    if problem.truth is None:
        raise InputDataError("two-step recovery requires a problem with stored truth")
    fit = solve_at(problem, lam, **solve_kwargs)
    estimate = hard_threshold(fit.coefficients, rule)
    return estimate, sign_consistent(estimate, problem.truth.beta)
