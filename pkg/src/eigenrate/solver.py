"""Damped fixed-point iteration for unit-weight logistic ratings.

With strengths ``x_i = exp(r_i)`` the ratings are consistent when every
player's expected score equals their actual score.  ``step_iter1`` is one
power-method step on ``D^-1 A`` with the pair weights refreshed from the
current ``x``; ``step_iter2`` is the slower rearrangement that divides the
actual score by the expected-score denominator.

Both steps are Jacobi updates (``x'`` depends only on ``x``) and cost
O(nnz + n).  Per-player sums accumulate over that player's opponents in
ascending index order.  With ``threads > 1`` the players are split into
contiguous row blocks that are summed independently, which leaves every
per-row sum, and hence the result, bitwise identical to the serial run.

Diagonal damping ``sigma`` enters as the analytic terms ``sigma/2`` and
``sigma/(2 x_i)``; it changes the path but not the limit.  The dummy
player has fixed strength 1 and plays ``gamma`` drawn games with everyone.
Priors act as ``w_hat`` drawn games against a fixed opponent ``x_hat``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix

from .degeneracy import analyze
from .errors import DegenerateProblemError, SolverStateError
from .model import PriorTable, ScoreMatrix, SolveResult, SolverConfig, Variant

log = logging.getLogger(__name__)

DUMMY_STRENGTH = 1.0


@dataclass(frozen=True)
class IterationState:
    x: np.ndarray
    k: int
    delta: float


def _check_strengths(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise SolverStateError(f"strength vector has shape {x.shape}, expected ({n},)")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        bad = np.flatnonzero(~np.isfinite(x) | (x <= 0))
        raise SolverStateError(f"strengths must be positive and finite (bad indices {bad[:10].tolist()})")
    return x


def _csr(data, indices, ptr, shape):
    return csr_matrix((data, indices, ptr), shape=shape, copy=False)


def _row_blocks(n: int, threads: int):
    bounds = np.linspace(0, n, threads + 1).astype(np.int64)
    return list(zip(bounds[:-1], bounds[1:]))


def _blocked_matvec(data, indices, ptr, n, v, threads):
    """``csr @ v`` computed over ``threads`` contiguous row blocks."""

    def block(rb):
        r0, r1 = rb
        lo, hi = ptr[r0], ptr[r1]
        return _csr(data[lo:hi], indices[lo:hi], ptr[r0:r1 + 1] - lo, (r1 - r0, n)) @ v

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(block, _row_blocks(n, threads))))


def _pair_sums(S: ScoreMatrix, x: np.ndarray, threads: int, need_rowwise_u: bool = False):
    """Sums over the entries of S with pair weight ``u_ij = 1/(x_i + x_j)``.

    Returns ``(sum_j s_ij u_ij x_j, sum_j s_ji u_ij, sum_j s_ij u_ij or None)``.
    For every player the sums run over j in ascending order, serial or not.
    """
    n = S.n
    ptr = S.row_ptr
    q = np.repeat(x, np.diff(ptr))  # x[rows]
    q += x[S.csr_cols]
    np.divide(S.vals, q, out=q)  # s_ij u_ij
    ones = np.ones(n)
    if threads > 1 and n >= 2 * threads:
        qt = x[S.t_rows]
        qt += x[S.t_cols]
        np.divide(S.t_vals, qt, out=qt)  # same values as q, transposed order
        lost = _blocked_matvec(qt, S.t_csr_cols, S.t_row_ptr, n, ones, threads)
        won = _blocked_matvec(q, S.csr_cols, ptr, n, x, threads)
        rowwise = _blocked_matvec(q, S.csr_cols, ptr, n, ones, threads) if need_rowwise_u else None
    else:
        A = _csr(q, S.csr_cols, ptr, (n, n))
        # A.T is column-major over the same arrays, so each column sum runs
        # over ascending rows exactly like the transposed row sums above
        lost = A.T @ ones
        won = A @ x
        rowwise = A @ ones if need_rowwise_u else None
    return won, lost, rowwise


def _prior_arrays(priors: PriorTable | None, n: int):
    if priors is None or not priors.active:
        return None
    if priors.x_hat.shape != (n,) or priors.w_hat.shape != (n,):
        raise ValueError("prior table does not match the score matrix size")
    return priors.x_hat, priors.w_hat


def _raise_zero_denominator(S, den):
    i = int(np.flatnonzero(den == 0)[0])
    raise SolverStateError(
        f"update for player {S.players[i]!r} is undefined: no conceded points "
        "and no damping, dummy or prior terms"
    )


def step_iter1(S: ScoreMatrix, x, sigma: float = 0.0, gamma: float = 0.0,
               priors: PriorTable | None = None, threads: int = 1) -> np.ndarray:
    """One update ``x_i <- (sum_j s_ij x_j/(x_i+x_j)) / (sum_j s_ji/(x_i+x_j))``."""
    n = S.n
    x = _check_strengths(x, n)
    num, den, _ = _pair_sums(S, x, threads)

    if sigma:
        num = num + 0.5 * sigma
        den = den + 0.5 * sigma / x
    if gamma:
        t = 0.5 * gamma / (x + DUMMY_STRENGTH)
        num = num + t * DUMMY_STRENGTH
        den = den + t
    pr = _prior_arrays(priors, n)
    if pr is not None:
        x_hat, w_hat = pr
        t = 0.5 * w_hat / (x + x_hat)
        num = num + t * x_hat
        den = den + t
    if np.any(den == 0):
        _raise_zero_denominator(S, den)
    return num / den


def step_iter2(S: ScoreMatrix, x, sigma: float = 0.0, gamma: float = 0.0,
               priors: PriorTable | None = None, threads: int = 1) -> np.ndarray:
    """One update ``x_i <- (sum_j s_ij) / (sum_j g_ij/(x_i+x_j))``.

    Dummy and prior terms mirror ``step_iter1``'s derivation; they are not
    covered by the acceptance suite.
    """
    n = S.n
    x = _check_strengths(x, n)
    num = S.points()
    _, lost, rowwise = _pair_sums(S, x, threads, need_rowwise_u=True)
    den = rowwise + lost

    if sigma:
        num = num + sigma
        den = den + sigma / x
    if gamma:
        num = num + 0.5 * gamma
        den = den + gamma / (x + DUMMY_STRENGTH)
    pr = _prior_arrays(priors, n)
    if pr is not None:
        x_hat, w_hat = pr
        num = num + 0.5 * w_hat
        den = den + w_hat / (x + x_hat)
    if np.any(den == 0):
        _raise_zero_denominator(S, den)
    return num / den


def normalize(x) -> np.ndarray:
    """Rescale so that ``sum(log(x)) == 0`` (geometric mean one)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return x.copy()
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise SolverStateError("cannot normalise a non-positive strength vector")
    return x * np.exp(-np.mean(np.log(x)))


def convergence_delta(x_prev, x_next) -> float:
    """``max_i |x_next_i - x_prev_i| / x_next_i``."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    x_next = np.asarray(x_next, dtype=np.float64)
    if x_prev.shape != x_next.shape:
        raise ValueError(f"length mismatch: {x_prev.shape} vs {x_next.shape}")
    if x_next.size == 0:
        return 0.0
    return float(np.max(np.abs(x_next - x_prev) / x_next))


def consistency_residuals(S: ScoreMatrix, x, gamma: float = 0.0,
                          priors: PriorTable | None = None) -> np.ndarray:
    """Expected minus actual score per player under unit game weights.

    Dummy games and priors count as drawn games against their fixed
    opponents.  An exact solution gives the zero vector.
    """
    x = _check_strengths(x, S.n)
    xr, xc = x[S.rows], x[S.cols]
    share = S.vals / (xr + xc)
    expected = (np.bincount(S.rows, weights=share * xr, minlength=S.n)
                + np.bincount(S.cols, weights=share * xc, minlength=S.n))
    actual = np.bincount(S.rows, weights=S.vals, minlength=S.n)
    if gamma:
        expected = expected + gamma * x / (x + DUMMY_STRENGTH)
        actual = actual + 0.5 * gamma
    pr = _prior_arrays(priors, S.n)
    if pr is not None:
        x_hat, w_hat = pr
        expected = expected + w_hat * x / (x + x_hat)
        actual = actual + 0.5 * w_hat
    return expected - actual


def solve(S: ScoreMatrix, config: SolverConfig | None = None,
          priors: PriorTable | None = None, x0=None,
          callback: Callable[[IterationState], None] | None = None,
          check_degeneracy: bool = True) -> SolveResult:
    """Iterate from ``x0`` (default all ones) until the relative change drops below epsilon.

    Without a dummy player or priors the problem is scale free, so every
    iterate is normalised to geometric mean one.  Otherwise the fixed-strength
    opponents anchor the scale and iterates are left as they are.

    Degenerate input is refused unless ``gamma > 0`` or
    ``config.override_degenerate``.  Non-convergence is reported through
    ``converged=False``; a period-two cycle sets ``oscillating`` and strengths
    leaving ``[1/bound, bound]`` are listed in ``diverged``.
    """
    config = config or SolverConfig()
    n = S.n
    if n == 0:
        empty = np.zeros(0)
        return SolveResult(empty, empty.copy(), 0, True, empty.copy(), 0.0)

    if check_degeneracy and config.gamma == 0 and not config.override_degenerate:
        report = analyze(S)
        if report.degenerate:
            raise DegenerateProblemError(
                "finite ratings do not exist for this data: " + "; ".join(report.reasons),
                report,
            )

    step = step_iter1 if config.variant is Variant.ITER1 else step_iter2
    anchored = config.gamma > 0 or (priors is not None and priors.active)
    gauge = (lambda v: v) if anchored else normalize
    eps, bound = config.epsilon, config.divergence_bound

    x = np.ones(n) if x0 is None else _check_strengths(x0, n).copy()
    x = gauge(x)
    x_before = None
    k = 0
    delta = np.inf
    converged = oscillating = False
    diverged: tuple[int, ...] = ()

    while k < config.max_iters:
        raw = step(S, x, config.sigma, config.gamma, priors, config.threads)
        k += 1
        bad = ~np.isfinite(raw) | (raw <= 0)
        if np.any(bad):
            diverged = tuple(np.flatnonzero(bad).tolist())
            log.warning("iteration %d: %d strengths left the positive reals", k, len(diverged))
            break
        x_next = gauge(raw)
        delta = convergence_delta(x, x_next)
        if callback is not None:
            callback(IterationState(x_next, k, delta))
        x_km2, x_before, x = x_before, x, x_next

        out = (x < 1.0 / bound) | (x > bound)
        if np.any(out):
            diverged = tuple(np.flatnonzero(out).tolist())
            log.warning("iteration %d: strengths of %d players diverging", k, len(diverged))
            break
        if delta < eps:
            converged = True
            break
        # an exact two-cycle never resolves
        if x_km2 is not None and convergence_delta(x_km2, x) < eps * 1e-3:
            oscillating = True
            log.warning("iteration %d: period-two oscillation, try sigma > 0", k)
            break
    else:
        log.info("no convergence after %d iterations (delta %.3g)", k, delta)

    residuals = consistency_residuals(S, x, config.gamma, priors)
    return SolveResult(
        x=x,
        r=np.log(x),
        iterations=k,
        converged=converged,
        residuals=residuals,
        final_delta=float(delta),
        oscillating=oscillating,
        diverged=diverged,
    )
