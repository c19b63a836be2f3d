"""Dense eigenvector / Markov-chain check of a candidate strength vector.

For weights ``u_ij = 1/(x_i + x_j)`` the consistency equations become the
eigenproblem ``D x = A x`` with ``a_ij = s_ij u_ij`` and ``d_i`` the column
sums of ``A``.  ``M = (A D^-1)^T`` is row stochastic and ``y = D x`` is its
stationary distribution.  Everything here is dense and deliberately shares
no code with :mod:`eigenrate.solver`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleError
from .model import ScoreMatrix

MAX_ORACLE_PLAYERS = 500


@dataclass(frozen=True, eq=False)
class WeightedMatrices:
    A: np.ndarray
    d: np.ndarray
    M: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.d)


def build(S: ScoreMatrix, x, sigma: float = 0.0, cap: int = MAX_ORACLE_PLAYERS) -> WeightedMatrices:
    n = S.n
    if n > cap:
        raise OracleError(
            f"{n} players exceeds the dense oracle cap of {cap}; "
            "verify a desk-scale subset instead"
        )
    x = np.asarray(x, dtype=float)
    if x.shape != (n,) or np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise OracleError("strengths must be a positive finite vector of length n")
    dense = S.to_dense()
    U = 1.0 / np.add.outer(x, x)
    A = dense * U
    A[np.diag_indices(n)] = sigma / (2.0 * x)
    d = A.sum(axis=0)
    if np.any(d <= 0):
        i = int(np.flatnonzero(d <= 0)[0])
        raise OracleError(f"player {S.players[i]!r} has zero loss total; D is singular")
    M = (A / d[np.newaxis, :]).T
    return WeightedMatrices(A, d, M)


@dataclass(frozen=True, eq=False)
class PowerMethodResult:
    y: np.ndarray
    iterations: int
    converged: bool
    residual: float


def power_method(M, tol: float = 1e-14, max_iters: int = 100_000, y0=None) -> PowerMethodResult:
    """Stationary distribution of a row-stochastic ``M`` by repeated ``y <- y M``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    y = np.full(n, 1.0 / n) if y0 is None else np.asarray(y0, dtype=float) / np.sum(y0)
    residual = np.inf
    for k in range(1, max_iters + 1):
        y_next = y @ M
        y_next /= y_next.sum()
        residual = float(np.max(np.abs(y_next @ M - y_next)))
        y = y_next
        if residual <= tol:
            return PowerMethodResult(y, k, True, residual)
    return PowerMethodResult(y, max_iters, False, residual)


def _angle(a, b) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(2.0 * np.arctan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


@dataclass(frozen=True)
class VerificationReport:
    eigen_defect: float
    stationary_defect: float
    power_angle: float
    power_iterations: int
    power_converged: bool
    tol: float

    @property
    def passed(self) -> bool:
        return (self.power_converged and self.eigen_defect < self.tol
                and self.stationary_defect < self.tol and self.power_angle < self.tol)

    def to_dict(self) -> dict:
        return {
            "result": "PASS" if self.passed else "FAIL",
            "eigen_defect": self.eigen_defect,
            "stationary_defect": self.stationary_defect,
            "power_angle": self.power_angle,
            "power_iterations": self.power_iterations,
            "power_converged": self.power_converged,
            "tolerance": self.tol,
        }

    def to_text(self) -> str:
        return "\n".join([
            f"result: {'PASS' if self.passed else 'FAIL'}",
            f"eigen defect |D^-1 A x - x|/|x|: {self.eigen_defect:.3e}",
            f"stationary defect |yM - y| (y = Dx): {self.stationary_defect:.3e}",
            f"power-method angle to Dx: {self.power_angle:.3e} "
            f"({self.power_iterations} iterations{'' if self.power_converged else ', not converged'})",
            f"tolerance: {self.tol:.1e}",
        ])


def verify_solution(S: ScoreMatrix, x, sigma: float = 0.0, tol: float = 1e-8,
                    power_tol: float = 1e-14, power_max_iters: int = 100_000,
                    cap: int = MAX_ORACLE_PLAYERS) -> VerificationReport:
    W = build(S, x, sigma, cap)
    x = np.asarray(x, dtype=float)
    eigen = float(np.max(np.abs(W.A @ x / W.d - x)) / np.max(np.abs(x)))

    y = W.d * x
    y = y / y.sum()
    stationary = float(np.max(np.abs(y @ W.M - y)))

    pm = power_method(W.M, power_tol, power_max_iters)
    angle = _angle(pm.y, y)
    return VerificationReport(eigen, stationary, angle, pm.iterations, pm.converged, tol)
