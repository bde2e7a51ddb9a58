"""Design-matrix diagnostics on the Gram matrix C = n^-1 X^T X.

Sparse eigenvalues are extreme eigenvalues over principal submatrices of a
given size. Exact mode enumerates all subsets (capped); heuristic mode
returns certified one-sided bounds: any evaluated subset upper-bounds the
m-sparse minimum and lower-bounds the m-sparse maximum, so heuristic values
are an upper bound on phi_min and a lower bound on phi_max, both flagged
inexact and reported with their witness subsets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundUndefinedError, InputDataError, SingularSystemError

ENUMERATION_CAP = 2_000_000
HEURISTIC_RESTARTS = 64
HEURISTIC_SEED = 20090246  # fixed so identical inputs give identical reports
_EIG_BUDGET = 4e8  # rough flop cap for random-restart eigensolves


def _check_gram(C):
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InputDataError("gram matrix must be square")
    if not np.all(np.isfinite(C)):
        raise InputDataError("gram matrix contains non-finite entries")
    scale = max(float(np.abs(C).max()), 1.0)
    if float(np.abs(C - C.T).max()) > 1e-8 * scale:
        raise InputDataError("gram matrix is not symmetric")
    return 0.5 * (C + C.T)


@dataclass(frozen=True)
class SparseEigReport:
    m: int
    phi_min: float
    phi_max: float
    exact: bool
    witness_min: tuple
    witness_max: tuple


def _submatrix_extremes(C, subset):
    eigs = np.linalg.eigvalsh(C[np.ix_(subset, subset)])
    return float(eigs[0]), float(eigs[-1])


def _exact_sparse_eig(C, m, cap):
    p = C.shape[0]
    count = math.comb(p, m)
    if count > cap:
        raise InputDataError(
            "exact sparse eigenvalues need %d subset enumerations (cap %d); "
            "use heuristic mode" % (count, cap)
        )
    best_min, best_max = np.inf, -np.inf
    wit_min = wit_max = None
    for subset in itertools.combinations(range(p), m):
        lo, hi = _submatrix_extremes(C, subset)
        if lo < best_min:
            best_min, wit_min = lo, subset
        if hi > best_max:
            best_max, wit_max = hi, subset
    return SparseEigReport(m, best_min, best_max, True, wit_min, wit_max)


def _greedy_backward(C, pool, m, which):
    """Shrink a pool to size m by batched deletion of the coordinates least
    aligned with the tracked extreme eigenvector; returns (value, subset)."""
    col = 0 if which == "min" else -1
    subset = list(pool)
    while len(subset) > m:
        sub = C[np.ix_(subset, subset)]
        _, vecs = np.linalg.eigh(sub)
        v = np.abs(vecs[:, col])
        batch = max(1, (len(subset) - m) // 3)
        for k in sorted(np.argsort(v, kind="stable")[:batch].tolist(), reverse=True):
            subset.pop(k)
    lo, hi = _submatrix_extremes(C, subset)
    return (lo if which == "min" else hi), tuple(sorted(subset))


def _greedy_forward_max(C, pool, m):
    """Grow a subset to size m, adding the pool coordinate with the best
    2x2 secular estimate of the new top eigenvalue."""
    pool = list(pool)
    start = max(pool, key=lambda k: C[k, k])
    subset = [start]
    pool.remove(start)
    while len(subset) < m and pool:
        sub = C[np.ix_(subset, subset)]
        vals, vecs = np.linalg.eigh(sub)
        lam, u = vals[-1], vecs[:, -1]
        cross = C[np.ix_(subset, pool)].T @ u
        diag = np.array([C[k, k] for k in pool])
        est = 0.5 * ((lam + diag) + np.sqrt((lam - diag) ** 2 + 4.0 * cross**2))
        k = int(np.argmax(est))
        subset.append(pool.pop(k))
    hi = _submatrix_extremes(C, sorted(subset))[1]
    return hi, tuple(sorted(subset))


def _heuristic_sparse_eig(C, m, restarts, seed, eig_cache=None):
    p = C.shape[0]
    if m == p:
        lo, hi = _submatrix_extremes(C, list(range(p)))
        full = tuple(range(p))
        return SparseEigReport(m, lo, hi, True, full, full)

    if eig_cache is None:
        eig_cache = {}
    if "full" not in eig_cache:
        eig_cache["full"] = np.linalg.eigh(C)
    _, vecs = eig_cache["full"]
    v_min = np.abs(vecs[:, 0])
    v_max = np.abs(vecs[:, -1])
    diag = np.diag(C)

    best_min, wit_min = np.inf, None
    best_max, wit_max = -np.inf, None

    cheap = m**3 <= 2e8  # plain candidate subsets cost one m^3 eigensolve each
    if cheap:
        for cand in (
            tuple(sorted(np.argsort(-v_min, kind="stable")[:m].tolist())),
            tuple(sorted(np.argsort(diag, kind="stable")[:m].tolist())),
        ):
            lo, _ = _submatrix_extremes(C, list(cand))
            if lo < best_min:
                best_min, wit_min = lo, cand
        for cand in (
            tuple(sorted(np.argsort(-v_max, kind="stable")[:m].tolist())),
            tuple(sorted(np.argsort(-diag, kind="stable")[:m].tolist())),
        ):
            hi = _submatrix_extremes(C, list(cand))[1]
            if hi > best_max:
                best_max, wit_max = hi, cand

    extra = min(32, p - m)
    pool_min = (
        range(p) if p - m <= extra else np.argsort(-v_min, kind="stable")[: m + extra]
    )
    lo, cand = _greedy_backward(C, pool_min, m, "min")
    if lo < best_min:
        best_min, wit_min = lo, cand

    if m > p // 2:
        hi, cand = _greedy_backward(C, range(p), m, "max")
    else:
        pool_max = np.argsort(-v_max, kind="stable")[: m + extra]
        hi, cand = _greedy_forward_max(C, pool_max, m)
    if hi > best_max:
        best_max, wit_max = hi, cand

    n_restarts = min(restarts, max(int(_EIG_BUDGET / max(m, 1) ** 3), 0))
    if n_restarts:
        rng = np.random.default_rng([seed, p, m])
        for _ in range(n_restarts):
            subset = sorted(rng.choice(p, size=m, replace=False).tolist())
            lo, hi = _submatrix_extremes(C, subset)
            if lo < best_min:
                best_min, wit_min = lo, tuple(subset)
            if hi > best_max:
                best_max, wit_max = hi, tuple(subset)

    return SparseEigReport(m, float(best_min), float(best_max), False, wit_min, wit_max)


def sparse_eig(
    C,
    m,
    mode="exact",
    cap=ENUMERATION_CAP,
    restarts=HEURISTIC_RESTARTS,
    seed=HEURISTIC_SEED,
) -> SparseEigReport:
    """m-sparse minimal and maximal eigenvalues of C.

    ``mode`` is "exact", "heuristic" or "auto" (exact when the enumeration
    fits under ``cap``). Exact values carry ``exact=True`` with witnesses
    that reproduce them; heuristic values are one-sided bounds as described
    in the module docstring.
    """
    C = _check_gram(C)
    p = C.shape[0]
    if not (1 <= m <= p):
        raise InputDataError("subset size m=%d out of range 1..%d" % (m, p))
    if mode == "auto":
        mode = "exact" if math.comb(p, m) <= cap else "heuristic"
    if mode == "exact":
        return _exact_sparse_eig(C, m, cap)
    if mode == "heuristic":
        return _heuristic_sparse_eig(C, m, restarts, seed)
    raise InputDataError("unknown sparse_eig mode %r" % mode)


@dataclass(frozen=True)
class IrrepresentableReport:
    support: tuple
    signs: tuple
    value: float  # ||C_NK C_KK^-1 sign(beta_K)||_inf
    holds: bool
    margin: float
    erc: float  # 1 - max_signs value; exact via the infty->infty operator norm
    condition_number: float


def irrepresentable_check(C, K, sign_K) -> IrrepresentableReport:
    """Evaluate ``||C_NK C_KK^-1 sign(beta_K)||_inf`` and the worst case.

    The worst case over sign vectors equals the maximum absolute row sum of
    ``C_NK C_KK^-1`` (each row is maximized by the matching sign vector), so
    the ERC is computed exactly for any support size.
    """
    C = _check_gram(C)
    p = C.shape[0]
    K = [int(k) for k in K]
    if len(set(K)) != len(K) or any(k < 0 or k >= p for k in K):
        raise InputDataError("support indices must be distinct and in range")
    if not K:
        raise InputDataError("support must be nonempty")
    signs = np.asarray(sign_K, dtype=float)
    if signs.shape != (len(K),) or np.any(np.abs(signs) != 1.0):
        raise InputDataError("sign_K must be a vector over {-1, +1} matching K")

    N = [k for k in range(p) if k not in set(K)]
    CKK = C[np.ix_(K, K)]
    cond = float(np.linalg.cond(CKK))
    try:
        W = np.linalg.solve(CKK, C[np.ix_(K, N)]).T if N else np.zeros((0, len(K)))
    except np.linalg.LinAlgError:
        raise SingularSystemError(K, "irrepresentable check") from None
    if not np.all(np.isfinite(W)):
        raise SingularSystemError(K, "irrepresentable check")

    value = float(np.abs(W @ signs).max(initial=0.0))
    worst = float(np.abs(W).sum(axis=1).max(initial=0.0))
    return IrrepresentableReport(
        support=tuple(K),
        signs=tuple(int(s) for s in signs),
        value=value,
        holds=bool(value < 1.0),
        margin=1.0 - value,
        erc=1.0 - worst,
        condition_number=cond,
    )


@dataclass(frozen=True)
class IncoherenceReport:
    """Search result for a sparsity multiplier certifying incoherent design.

    ``ratio(e) = e * phi_min(ceil(e^2 s)) / phi_max(s + min(n, p))``;
    ``e_star`` is the smallest grid value with ratio >= threshold (None when
    infeasible on the grid) and ``e_best`` maximizes the ratio. When
    heuristic eigenvalues were used a feasible verdict may be optimistic
    (phi_min is an upper bound) and is flagged.
    """

    s: int
    n: int
    threshold: float
    e_star: float | None
    e_best: float
    curve: tuple  # rows (e, m, phi_min, ratio)
    phi_max: float
    phi_max_size: int
    heuristic_used: bool
    feasible: bool


def default_multiplier_grid(p, s, step=0.5):
    """Candidate multipliers 1, 1.5, ... while ceil(e^2 s) stays within p."""
    grid = []
    e = 1.0
    while math.ceil(e * e * s) <= p:
        grid.append(round(e, 10))
        e += step
    return tuple(grid)


def multiplier_search(
    C,
    s,
    n,
    e_grid=None,
    threshold=18.0,
    mode="auto",
    cap=ENUMERATION_CAP,
    restarts=HEURISTIC_RESTARTS,
    seed=HEURISTIC_SEED,
) -> IncoherenceReport:
    """Scan a grid of sparsity multipliers for the incoherence certificate."""
    C = _check_gram(C)
    p = C.shape[0]
    if s < 1:
        raise InputDataError("sparsity s must be >= 1")
    if e_grid is None:
        e_grid = default_multiplier_grid(p, s)
    e_grid = [float(e) for e in e_grid]
    if not e_grid or any(e < 1.0 for e in e_grid):
        raise InputDataError("multiplier grid must be nonempty with e >= 1")
    e_grid = sorted(e_grid)

    eig_cache = {}

    def eig_at(m):
        if math.comb(p, m) <= cap and mode in ("auto", "exact"):
            return _exact_sparse_eig(C, m, cap)
        return _heuristic_sparse_eig(C, m, restarts, seed, eig_cache)

    m_max = min(s + min(n, p), p)
    phi_max_rep = eig_at(m_max)
    phi_max = phi_max_rep.phi_max
    heuristic = not phi_max_rep.exact

    by_size = {}
    curve = []
    e_star = None
    e_best, ratio_best = e_grid[0], -np.inf
    for e in e_grid:
        m = min(math.ceil(e * e * s), p)
        if m not in by_size:
            by_size[m] = eig_at(m)
        rep = by_size[m]
        heuristic = heuristic or not rep.exact
        ratio = e * rep.phi_min / phi_max if phi_max > 0 else np.inf
        curve.append((e, m, rep.phi_min, float(ratio)))
        if ratio > ratio_best:
            ratio_best, e_best = float(ratio), e
        if e_star is None and ratio >= threshold:
            e_star = e

    return IncoherenceReport(
        s=int(s),
        n=int(n),
        threshold=float(threshold),
        e_star=e_star,
        e_best=float(e_best),
        curve=tuple(curve),
        phi_max=float(phi_max),
        phi_max_size=m_max,
        heuristic_used=heuristic,
        feasible=e_star is not None,
    )


@dataclass(frozen=True)
class BlockDesignReport:
    block_sizes: tuple
    phi_min_block: float
    phi_max_block: float
    condition_number: float
    sparsity_ceiling: float | None  # n / c_n^2 when n given; reported only

    def assemble(self, blocks):
        """Full block-diagonal Gram matrix from the same blocks."""
        p = sum(b.shape[0] for b in blocks)
        C = np.zeros((p, p))
        at = 0
        for b in blocks:
            k = b.shape[0]
            C[at : at + k, at : at + k] = b
            at += k
        return C


def block_design_report(blocks, n=None) -> BlockDesignReport:
    """Extreme eigenvalues over diagonal blocks and the condition number.

    The blocked eigenvalues bound every sparse eigenvalue of the assembled
    matrix; the sparsity ceiling n / c_n^2 is reported (not asserted) when a
    sample size is supplied.
    """
    blocks = [_check_gram(b) for b in blocks]
    if not blocks:
        raise InputDataError("need at least one block")
    lo, hi = np.inf, -np.inf
    for b in blocks:
        eigs = np.linalg.eigvalsh(b)
        norm = max(abs(float(eigs[0])), abs(float(eigs[-1])), 1e-300)
        if float(eigs[0]) < -1e-10 * norm:
            raise InputDataError("block is not positive semi-definite")
        lo = min(lo, float(eigs[0]))
        hi = max(hi, float(eigs[-1]))
    cond = hi / lo if lo > 0 else np.inf
    ceiling = None if n is None else float(n) / cond**2 if np.isfinite(cond) else 0.0
    return BlockDesignReport(
        block_sizes=tuple(b.shape[0] for b in blocks),
        phi_min_block=lo,
        phi_max_block=hi,
        condition_number=float(cond),
        sparsity_ceiling=ceiling,
    )


@dataclass(frozen=True)
class UupReport:
    s: int
    phi_min_values: tuple  # at s, 2s, 3s
    phi_max_values: tuple
    min_sum: float
    max_sum: float
    min_condition_holds: bool  # sum phi_min > 2
    max_condition_holds: bool  # sum phi_max < 4
    exact: bool


def uup_check(C, s, mode="auto", cap=ENUMERATION_CAP, restarts=HEURISTIC_RESTARTS,
              seed=HEURISTIC_SEED) -> UupReport:
    """Eigenvalue-sum feasibility conditions for the uniform uncertainty
    principle at sparsity s (requires 3s <= p)."""
    C = _check_gram(C)
    p = C.shape[0]
    if s < 1:
        raise InputDataError("sparsity s must be >= 1")
    if 3 * s > p:
        raise InputDataError("uup check needs 3s <= p (s=%d, p=%d)" % (s, p))
    eig_cache = {}
    reports = []
    for m in (s, 2 * s, 3 * s):
        if mode in ("auto", "exact") and math.comb(p, m) <= cap:
            reports.append(_exact_sparse_eig(C, m, cap))
        else:
            reports.append(_heuristic_sparse_eig(C, m, restarts, seed, eig_cache))
    mins = tuple(r.phi_min for r in reports)
    maxs = tuple(r.phi_max for r in reports)
    return UupReport(
        s=int(s),
        phi_min_values=mins,
        phi_max_values=maxs,
        min_sum=float(sum(mins)),
        max_sum=float(sum(maxs)),
        min_condition_holds=bool(sum(mins) > 2.0),
        max_condition_holds=bool(sum(maxs) < 4.0),
        exact=all(r.exact for r in reports),
    )
