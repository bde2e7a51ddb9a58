"""Lasso solvers for the objective ||Y - X b||^2 + lambda ||b||_1.

Two routes are provided and cross-checked against each other:

* ``solve_at`` -- cyclic coordinate minimization at a fixed penalty, warm
  started along a geometric penalty schedule, stopped by a duality-gap
  certificate and finished with an active-set polish step;
* ``lasso_path`` -- the homotopy (LARS-style) algorithm producing the exact
  piecewise-linear solution path in the penalty.

Gradient convention: the quadratic term in the objective is unscaled, so
stationarity reads ``2 X_k^T R = lambda * sign(b_k)`` with R = Y - X b. We
define G := 2 X^T R throughout; the active set is ``{k : |G_k| = lambda}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CollinearDesignError,
    ConvergenceError,
    DegeneratePathError,
    InputDataError,
)
from .model import RegressionProblem

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# Relative width below which two path events are merged and processed
# lowest-column-index first; avoids infinite event loops on exact ties.
EVENT_MERGE_TOL = 1e-12


@njit(cache=True)
def _cd_sweeps(X, beta, resid, lam_half, col_sq, n_sweeps):
    """Run cyclic coordinate-minimization sweeps in place; returns max step."""
    n, p = X.shape
    max_step = 0.0
    for _ in range(n_sweeps):
        max_step = 0.0
        for k in range(p):
            ck = col_sq[k]
            bk = beta[k]
            rho = ck * bk
            for i in range(n):
                rho += X[i, k] * resid[i]
            if rho > lam_half:
                z = (rho - lam_half) / ck
            elif rho < -lam_half:
                z = (rho + lam_half) / ck
            else:
                z = 0.0
            if z != bk:
                diff = bk - z
                for i in range(n):
                    resid[i] += X[i, k] * diff
                beta[k] = z
                step = abs(diff)
                if step > max_step:
                    max_step = step
    return max_step


def _kkt_violation(beta, grad, lam):
    """Max violation of the stationarity system at (beta, G, lambda)."""
    nz = beta != 0.0
    viol = 0.0
    if np.any(nz):
        viol = float(np.abs(grad[nz] - lam * np.sign(beta[nz])).max())
    if np.any(~nz):
        viol = max(viol, float(max(np.abs(grad[~nz]).max() - lam, 0.0)))
    return viol


def _gap_terms(resid, beta, grad, lam):
    """Objective, duality gap and KKT violation at a candidate solution.

    The dual point is the residual scaled into the feasible set
    (``nu = -2 s R`` with ``s = min(1, lambda / ||G||_inf)``); algebraically
    the gap is ``(1-s)^2 ||R||^2 + lambda ||b||_1 - s G^T b``.
    """
    rr = float(resid @ resid)
    l1 = float(np.abs(beta).sum())
    obj = rr + lam * l1
    gmax = float(np.abs(grad).max(initial=0.0))
    if gmax <= lam or gmax == 0.0:
        s = 1.0
    elif lam == 0.0:
        s = 0.0
    else:
        s = lam / gmax
    gap = (1.0 - s) ** 2 * rr + lam * l1 - s * float(grad @ beta)
    return obj, max(gap, 0.0), _kkt_violation(beta, grad, lam)


@dataclass(frozen=True)
class KktReport:
    """Stationarity certificate for a candidate solution at a fixed penalty.

    ``gradient`` is G = 2 X^T R. For nonzero coefficients the violation is
    |G_k - lambda sign(b_k)|; for zero coefficients it is
    max(0, |G_k| - lambda). ``active_set`` is {k : |G_k| >= lambda - tol}.
    """

    lam: float
    gradient: np.ndarray
    max_violation: float
    active_set: tuple
    duality_gap: float

    @property
    def active_size(self):
        return len(self.active_set)


@dataclass(frozen=True)
class LassoFit:
    """A solution of the penalized problem with its KKT certificate."""

    lam: float
    coefficients: np.ndarray
    residual: np.ndarray
    kkt: KktReport

    @property
    def objective(self):
        return float(
            self.residual @ self.residual + self.lam * np.abs(self.coefficients).sum()
        )

    @property
    def support(self):
        return tuple(np.flatnonzero(self.coefficients).tolist())


def _gap_lambda_zero(X, y, resid):
    # The scaled-residual dual point degenerates at lambda = 0; project the
    # residual onto null(X^T) to get a feasible dual for the pure LS problem.
    w, _, _, _ = np.linalg.lstsq(X, resid, rcond=None)
    r_perp = resid - X @ w
    obj = float(resid @ resid)
    dual = 2.0 * float(r_perp @ y) - float(r_perp @ r_perp)
    return max(obj - dual, 0.0)


def _make_fit(problem, lam, beta, active_tol_rel=1e-6):
    X = problem.design.entries
    beta = np.asarray(beta, dtype=float).copy()
    resid = problem.y - X @ beta
    grad = 2.0 * (X.T @ resid)
    _, gap, viol = _gap_terms(resid, beta, grad, lam)
    if lam == 0.0:
        gap = _gap_lambda_zero(X, problem.y, resid)
    active = np.flatnonzero(np.abs(grad) >= lam - active_tol_rel * (1.0 + lam))
    for arr in (beta, resid, grad):
        arr.setflags(write=False)
    report = KktReport(
        lam=float(lam),
        gradient=grad,
        max_violation=viol,
        active_set=tuple(active.tolist()),
        duality_gap=gap,
    )
    return LassoFit(lam=float(lam), coefficients=beta, residual=resid, kkt=report)


def kkt_check(problem: RegressionProblem, fit: LassoFit, active_tol_rel=1e-6) -> KktReport:
    """Recompute the KKT certificate for a fit from scratch (pure function)."""
    return _make_fit(problem, fit.lam, fit.coefficients, active_tol_rel).kkt


def lambda_max(problem: RegressionProblem) -> float:
    """Smallest penalty at which the zero vector is optimal: 2 max_k |X_k^T Y|."""
    return 2.0 * float(np.abs(problem.design.entries.T @ problem.y).max(initial=0.0))


def _polish_from(problem, lam, support, signs, tol, max_iter=12):
    """Active-set refinement from a candidate support; certified fit or None.

    Repeats the exact solve ``X_S^T X_S b_S = X_S^T Y - (lambda/2) signs``,
    dropping sign-flipped coordinates and adding the worst outside violator,
    until the full KKT certificate passes. Acceptance is always by the
    certificate, so a wrong guess can never degrade the CD result.
    """
    X = problem.design.entries
    signs = dict(signs)
    support = sorted(support)
    for _ in range(max_iter):
        if not support or len(support) > problem.n:
            return None
        idx = np.array(support)
        s = np.array([signs[k] for k in support])
        XA = X[:, idx]
        rhs = XA.T @ problem.y - 0.5 * lam * s
        try:
            sol = np.linalg.solve(XA.T @ XA, rhs)
        except np.linalg.LinAlgError:
            return None
        flipped = [k for k, v, sk in zip(support, sol, s) if np.sign(v) != sk]
        if flipped:
            support = [k for k in support if k not in flipped]
            continue
        beta = np.zeros(problem.p)
        beta[idx] = sol
        fit = _make_fit(problem, lam, beta)
        if (
            fit.kkt.duality_gap <= tol * (1.0 + fit.objective)
            and fit.kkt.max_violation <= 10.0 * tol * (1.0 + lam)
        ):
            return fit
        grads = np.abs(fit.kkt.gradient).copy()
        grads[idx] = 0.0
        worst = int(np.argmax(grads))
        if grads[worst] <= lam or len(support) >= problem.n:
            return None
        signs[worst] = float(np.sign(fit.kkt.gradient[worst]))
        support = sorted(support + [worst])
    return None


def _try_polish(problem, lam, beta, tol):
    """Polish the CD iterate, accepting only certificate-passing candidates.

    Near the coordinate-descent stall point the iterate support may carry a
    few extra coordinates on their way to zero, so besides the full support,
    leave-one-out starts over the smallest coefficients are attempted.
    """
    support = np.flatnonzero(beta)
    if support.size == 0:
        return None
    signs = {int(k): float(np.sign(beta[k])) for k in support}
    starts = [list(support)]
    order = support[np.argsort(np.abs(beta[support]), kind="stable")]
    for k in order[: min(8, support.size - 1)]:
        starts.append([j for j in support if j != k])
    for start in starts:
        fit = _polish_from(problem, lam, start, signs, tol)
        if fit is not None:
            return fit
    return None


def solve_at(
    problem: RegressionProblem,
    lam: float,
    tol: float = 1e-8,
    max_sweeps: int = 100_000,
    force: bool = False,
    polish: bool = True,
) -> LassoFit:
    """Solve the penalized problem at a fixed ``lam``.

    Stops when the duality gap is at most ``tol * (1 + objective)`` and the
    KKT violation is at most ``10 * tol * (1 + lam)``; raises
    ConvergenceError (carrying the last gap) if ``max_sweeps`` is exhausted.
    ``lam = 0`` is solved directly by least squares.
    """
    if not (lam >= 0.0 and np.isfinite(lam)):
        raise InputDataError("lambda must be a nonnegative real")
    if problem.design.flagged and not force:
        raise CollinearDesignError(problem.design.collinear_pairs)

    X = problem.design.entries
    y = problem.y
    if lam == 0.0:
        beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
        return _make_fit(problem, 0.0, beta)

    lam_top = lambda_max(problem)
    if lam >= lam_top:
        return _make_fit(problem, lam, np.zeros(problem.p))

    # Warm-start schedule: geometric descent from lambda_max to the target.
    schedule = []
    cur = lam_top * 0.7
    while cur > lam:
        schedule.append(cur)
        cur *= 0.7
    schedule.append(lam)

    Xf = np.asfortranarray(X)
    col_sq = np.ascontiguousarray(problem.design.column_norms_sq)
    beta = np.zeros(problem.p)
    resid = y.copy()

    for lam_k in schedule:
        is_target = lam_k == lam
        tol_k = tol if is_target else max(tol, 1e-6)
        lam_half = 0.5 * lam_k
        sweeps_done = 0
        chunk = 1
        while True:
            _cd_sweeps(Xf, beta, resid, lam_half, col_sq, chunk)
            sweeps_done += chunk
            grad = 2.0 * (X.T @ resid)
            obj, gap, viol = _gap_terms(resid, beta, grad, lam_k)
            if gap <= tol_k * (1.0 + obj) and viol <= 10.0 * tol_k * (1.0 + lam_k):
                break
            if is_target and polish:
                # Once the support has stabilized, one exact active-set solve
                # finishes the job; CD alone stalls on near-singular problems.
                fit = _try_polish(problem, lam, beta, tol)
                if fit is not None:
                    return fit
            if sweeps_done >= max_sweeps:
                if is_target:
                    raise ConvergenceError(
                        "coordinate descent did not converge in %d sweeps" % max_sweeps,
                        gap,
                    )
                break
            chunk = min(chunk * 2, 64, max(max_sweeps - sweeps_done, 1))

    if polish:
        fit = _try_polish(problem, lam, beta, tol)
        if fit is not None:
            base = _make_fit(problem, lam, beta)
            return fit if fit.kkt.max_violation <= base.kkt.max_violation else base
    return _make_fit(problem, lam, beta)


@dataclass(frozen=True)
class PathSegment:
    """One affine piece of the solution path on [lambda_low, lambda_high].

    ``coef(lam) = anchor + (lambda_high - lam) * direction`` with the
    direction supported on ``active_set``.
    """

    lambda_high: float
    lambda_low: float
    active_set: tuple
    direction: np.ndarray
    anchor: np.ndarray

    def coef_at(self, lam):
        return self.anchor + (self.lambda_high - lam) * self.direction


@dataclass(frozen=True)
class PathEvent:
    lam: float
    kind: str  # "join" or "drop"
    index: int
    tie: bool = False


@dataclass(frozen=True)
class LassoPath:
    """Homotopy path from ``lambda_max`` down to ``lambda_min``."""

    lambda_max: float
    lambda_min: float
    p: int
    segments: tuple
    events: tuple

    def coef_at(self, lam):
        """Exact path solution at penalty ``lam`` (zero above lambda_max)."""
        if lam >= self.lambda_max or not self.segments:
            return np.zeros(self.p)
        if lam < self.lambda_min - 1e-12 * (1.0 + self.lambda_min):
            raise InputDataError(
                "lambda %.6g below computed path range [%.6g, %.6g]"
                % (lam, self.lambda_min, self.lambda_max)
            )
        for seg in self.segments:
            if lam >= seg.lambda_low:
                return seg.coef_at(lam)
        return self.segments[-1].coef_at(max(lam, self.lambda_min))

    def active_at(self, lam):
        if lam >= self.lambda_max or not self.segments:
            return ()
        for seg in self.segments:
            if lam >= seg.lambda_low:
                return seg.active_set
        return self.segments[-1].active_set

    @property
    def max_active_size(self):
        return max((len(seg.active_set) for seg in self.segments), default=0)


def lasso_path(
    problem: RegressionProblem,
    lambda_min: float,
    force: bool = False,
    max_events: int = 100_000,
) -> LassoPath:
    """Compute the homotopy path from ``lambda_max`` down to ``lambda_min``.

    At every event boundary exactly one variable joins or leaves the active
    set; simultaneous events are processed lowest-column-index first and
    recorded as ties. Raises DegeneratePathError on singular active-set
    systems (unless ``force``, which switches to least-norm directions) and
    when the event count exceeds ``max_events``.
    """
    if not (lambda_min >= 0.0 and np.isfinite(lambda_min)):
        raise InputDataError("lambda_min must be a nonnegative real")
    if problem.design.flagged and not force:
        raise CollinearDesignError(problem.design.collinear_pairs)

    X = problem.design.entries
    y = problem.y
    p = problem.p
    lam_top = lambda_max(problem)
    if lam_top <= lambda_min or lam_top == 0.0:
        return LassoPath(lam_top, lambda_min, p, (), ())

    grad0 = np.abs(2.0 * (X.T @ y))
    first = int(np.argmax(grad0))
    tie0 = int(np.sum(grad0 >= grad0[first] * (1.0 - EVENT_MERGE_TOL))) > 1

    active = [first]
    signs = [float(np.sign((X.T @ y)[first]))]
    lam_cur = lam_top
    segments = []
    events = [PathEvent(lam=lam_top, kind="join", index=first, tie=tie0)]

    for _ in range(max_events):
        XA = X[:, active]
        gram = XA.T @ XA
        rhs = np.column_stack([XA.T @ y, 0.5 * np.asarray(signs)])
        if force:
            sol, _, rank, _ = np.linalg.lstsq(gram, rhs, rcond=None)
            if rank < len(active) and float(
                np.linalg.norm(gram @ sol - rhs)
            ) > 1e-8 * (1.0 + float(np.linalg.norm(rhs))):
                raise DegeneratePathError(
                    "inconsistent degenerate active system over columns %s"
                    % (tuple(active),)
                )
        else:
            try:
                sol = np.linalg.solve(gram, rhs)
            except np.linalg.LinAlgError:
                raise DegeneratePathError(
                    "singular active-set system over columns %s" % (tuple(active),)
                ) from None
        ols_A, d_A = sol[:, 0], sol[:, 1]

        anchor = np.zeros(p)
        anchor[active] = ols_A - lam_cur * d_A
        direction = np.zeros(p)
        direction[active] = d_A

        # Fresh gradients at the segment head keep event times accurate.
        resid = y - XA @ anchor[active]
        grad = 2.0 * (X.T @ resid)
        slope = 2.0 * (X.T @ (XA @ d_A))  # G_k(t) = grad_k - t * slope_k

        merge = EVENT_MERGE_TOL * (1.0 + lam_cur)
        cand_t, cand_idx, cand_kind, cand_side = [], [], [], []

        inactive = np.ones(p, dtype=bool)
        inactive[active] = False
        idx = np.flatnonzero(inactive)
        if idx.size:
            a, c = grad[idx], slope[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                for t_arr, side in (
                    ((lam_cur - a) / (1.0 - c), 1.0),
                    ((lam_cur + a) / (1.0 + c), -1.0),
                ):
                    ok = np.isfinite(t_arr) & (t_arr > merge)
                    cand_t.extend(t_arr[ok].tolist())
                    cand_idx.extend(idx[ok].tolist())
                    cand_kind.extend(["join"] * int(ok.sum()))
                    cand_side.extend([side] * int(ok.sum()))

        for pos, k in enumerate(active):
            if d_A[pos] != 0.0:
                t_k = -anchor[k] / d_A[pos]
                if t_k > merge:
                    cand_t.append(float(t_k))
                    cand_idx.append(k)
                    cand_kind.append("drop")
                    cand_side.append(0.0)

        t_stop = lam_cur - lambda_min
        t_min = min(cand_t) if cand_t else np.inf

        if t_min >= t_stop - merge:
            segments.append(
                PathSegment(lam_cur, lambda_min, tuple(active), _frozen(direction), _frozen(anchor))
            )
            return LassoPath(lam_top, lambda_min, p, tuple(segments), tuple(events))

        within = [i for i, t in enumerate(cand_t) if t <= t_min + merge]
        pick = min(within, key=lambda i: cand_idx[i])
        t_evt = cand_t[pick]
        k_evt = cand_idx[pick]
        kind = cand_kind[pick]
        lam_next = lam_cur - t_evt

        if t_evt > merge:
            segments.append(
                PathSegment(lam_cur, lam_next, tuple(active), _frozen(direction), _frozen(anchor))
            )
        if kind == "join":
            at = int(np.searchsorted(active, k_evt))
            active.insert(at, k_evt)
            signs.insert(at, cand_side[pick])
        else:
            at = active.index(k_evt)
            active.pop(at)
            signs.pop(at)
            if not active:
                raise DegeneratePathError("active set emptied at lambda %.6g" % lam_next)
        events.append(PathEvent(lam=lam_next, kind=kind, index=k_evt, tie=len(within) > 1))
        lam_cur = lam_next

    raise DegeneratePathError("event count exceeded max_events=%d" % max_events)


def _frozen(arr):
    arr.setflags(write=False)
    return arr


def path_fit_at(problem: RegressionProblem, path: LassoPath, lam: float) -> LassoFit:
    """Build a certified LassoFit from the path evaluated at ``lam``."""
    return _make_fit(problem, lam, path.coef_at(lam))
