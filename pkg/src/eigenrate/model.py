"""Domain types: game records, the sparse score matrix, priors and solver settings.

Players are opaque strings. Internally they are numbered ``0..n-1`` in order
of first appearance in the game log, so a fixed input always produces the
same indexing.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidGameError, PriorError, UnknownPlayerWarning

VALID_SCORES = (0.0, 0.5, 1.0)


@dataclass(frozen=True)
class GameRecord:
    """One game: ``score_a`` is what ``player_a`` scored against ``player_b``."""

    player_a: str
    player_b: str
    score_a: float

    def __post_init__(self):
        if self.player_a == self.player_b:
            raise InvalidGameError(f"self-game for player {self.player_a!r}")
        if self.score_a not in VALID_SCORES:
            raise InvalidGameError(
                f"score {self.score_a!r} for {self.player_a!r} vs {self.player_b!r} "
                "is not one of 0, 0.5, 1"
            )


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Sparse off-diagonal score matrix ``S`` with ``s[i, j]`` = points i took from j.

    Entries are kept twice in coordinate form: ``rows/cols/vals`` sorted by
    (row, col), and ``t_rows/t_cols/t_vals`` holding the transpose sorted
    the same way.  Both orderings give ascending-column accumulation per row.
    The diagonal is never stored.
    """

    players: tuple[str, ...]
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    total_games: int
    t_rows: np.ndarray = field(repr=False)
    t_cols: np.ndarray = field(repr=False)
    t_vals: np.ndarray = field(repr=False)
    index: dict = field(repr=False)

    @classmethod
    def from_coo(cls, players, rows, cols, vals, total_games: int) -> "ScoreMatrix":
        """Build from (possibly duplicated, unsorted) coordinate triples."""
        players = tuple(players)
        n = len(players)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols and vals must have equal length")
        if np.any(rows == cols):
            raise InvalidGameError("diagonal entries are not allowed in a score matrix")
        if np.any(vals < 0):
            raise InvalidGameError("score entries must be non-negative")
        if rows.size and (rows.min() < 0 or max(rows.max(), cols.max()) >= n):
            raise ValueError("entry index out of range")

        # merge duplicates; sums of 0.5 and 1 are exact so order does not matter
        key = rows * max(n, 1) + cols
        uniq, inverse = np.unique(key, return_inverse=True)
        summed = np.zeros(uniq.size)
        np.add.at(summed, inverse, vals)
        keep = summed > 0
        uniq, summed = uniq[keep], summed[keep]
        r, c = np.divmod(uniq, max(n, 1))

        order = np.lexsort((r, c))  # by col, then row
        index = {p: i for i, p in enumerate(players)}
        if len(index) != n:
            raise ValueError("player names must be unique")
        return cls(
            players=players,
            rows=_readonly(r),
            cols=_readonly(c),
            vals=_readonly(summed),
            total_games=int(total_games),
            t_rows=_readonly(c[order].copy()),
            t_cols=_readonly(r[order].copy()),
            t_vals=_readonly(summed[order].copy()),
            index=index,
        )

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def m(self) -> int:
        return self.total_games

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    # CSR views for sparse kernels.  Indices use int32 when they fit, which
    # is what scipy.sparse expects and avoids a conversion on every use.

    @cached_property
    def _index_dtype(self):
        return np.int32 if max(self.n, self.nnz) < np.iinfo(np.int32).max else np.int64

    @cached_property
    def row_ptr(self) -> np.ndarray:
        """CSR row pointers into ``rows/cols/vals``."""
        ptr = np.searchsorted(self.rows, np.arange(self.n + 1))
        return _readonly(ptr.astype(self._index_dtype))

    @cached_property
    def csr_cols(self) -> np.ndarray:
        return _readonly(self.cols.astype(self._index_dtype))

    @cached_property
    def t_row_ptr(self) -> np.ndarray:
        """CSR row pointers into the transposed arrays."""
        ptr = np.searchsorted(self.t_rows, np.arange(self.n + 1))
        return _readonly(ptr.astype(self._index_dtype))

    @cached_property
    def t_csr_cols(self) -> np.ndarray:
        return _readonly(self.t_cols.astype(self._index_dtype))

    def get(self, i: int, j: int) -> float:
        """Return ``s[i, j]`` (zero for absent entries and the diagonal)."""
        lo = np.searchsorted(self.rows, i, side="left")
        hi = np.searchsorted(self.rows, i, side="right")
        k = lo + np.searchsorted(self.cols[lo:hi], j)
        if k < hi and self.cols[k] == j:
            return float(self.vals[k])
        return 0.0

    def games_between(self, i: int, j: int) -> float:
        """``g[i, j] = s[i, j] + s[j, i]``, the number of games between i and j."""
        return self.get(i, j) + self.get(j, i)

    def points(self) -> np.ndarray:
        """Total points scored by each player."""
        return np.bincount(self.rows, weights=self.vals, minlength=self.n)

    def games_played(self) -> np.ndarray:
        return self.points() + loss_totals(self)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.rows, self.cols] = self.vals
        return out

    def __eq__(self, other):
        if not isinstance(other, ScoreMatrix):
            return NotImplemented
        return (
            self.players == other.players
            and self.total_games == other.total_games
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
        )

    __hash__ = None


def aggregate(games: Iterable[GameRecord]) -> ScoreMatrix:
    """Sum a game log into a :class:`ScoreMatrix`.

    Each game puts ``score_a`` into ``s[a, b]`` and ``1 - score_a`` into
    ``s[b, a]``; a draw therefore counts as half a point to each side.
    """
    index: dict[str, int] = {}
    rows, cols, vals = [], [], []
    m = 0
    for k, g in enumerate(games):
        if not isinstance(g, GameRecord):
            raise InvalidGameError(f"record {k} is not a GameRecord: {g!r}")
        # GameRecord validates itself, but it is a plain dataclass and can be
        # bypassed with object.__setattr__; re-check cheaply.
        if g.player_a == g.player_b:
            raise InvalidGameError(f"record {k}: self-game for player {g.player_a!r}")
        if g.score_a not in VALID_SCORES:
            raise InvalidGameError(f"record {k}: invalid score {g.score_a!r}")
        a = index.setdefault(g.player_a, len(index))
        b = index.setdefault(g.player_b, len(index))
        rows += (a, b)
        cols += (b, a)
        vals += (g.score_a, 1.0 - g.score_a)
        m += 1
    return ScoreMatrix.from_coo(list(index), rows, cols, vals, m)


def aggregate_indexed(players: Sequence[str], a_idx, b_idx, score_a) -> ScoreMatrix:
    """Vectorised :func:`aggregate` for games already given as index arrays."""
    a_idx = np.asarray(a_idx, dtype=np.int64)
    b_idx = np.asarray(b_idx, dtype=np.int64)
    score_a = np.asarray(score_a, dtype=np.float64)
    if np.any(a_idx == b_idx):
        k = int(np.flatnonzero(a_idx == b_idx)[0])
        raise InvalidGameError(f"record {k}: self-game for player {players[a_idx[k]]!r}")
    bad = ~np.isin(score_a, VALID_SCORES)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise InvalidGameError(f"record {k}: invalid score {score_a[k]!r}")
    return ScoreMatrix.from_coo(
        players,
        np.concatenate([a_idx, b_idx]),
        np.concatenate([b_idx, a_idx]),
        np.concatenate([score_a, 1.0 - score_a]),
        a_idx.size,
    )


def loss_totals(S: ScoreMatrix) -> np.ndarray:
    """Points each player conceded: column sums of ``S`` without the diagonal."""
    return np.bincount(S.cols, weights=S.vals, minlength=S.n).astype(float)


@dataclass(frozen=True)
class PriorRating:
    """An old rating ``r_hat`` (natural-log scale) worth ``w_hat`` games."""

    player: str
    r_hat: float
    w_hat: float

    def __post_init__(self):
        if not math.isfinite(self.r_hat):
            raise PriorError(f"prior rating for {self.player!r} is not finite")
        if not (self.w_hat >= 0 and math.isfinite(self.w_hat)):
            raise PriorError(f"prior weight for {self.player!r} must be finite and >= 0")
        try:
            x_hat = math.exp(self.r_hat)
        except OverflowError:
            x_hat = math.inf
        if not 0 < x_hat < math.inf:
            raise PriorError(f"prior rating for {self.player!r} is out of range for exp()")

    @property
    def x_hat(self) -> float:
        return math.exp(self.r_hat)


@dataclass(frozen=True, eq=False)
class PriorTable:
    """Priors aligned to score-matrix indices. ``w_hat == 0`` means no prior."""

    x_hat: np.ndarray
    w_hat: np.ndarray
    unknown: tuple[str, ...] = ()

    @classmethod
    def empty(cls, n: int) -> "PriorTable":
        return cls(_readonly(np.ones(n)), _readonly(np.zeros(n)))

    @property
    def active(self) -> bool:
        return bool(np.any(self.w_hat > 0))


def merge_priors(S: ScoreMatrix, priors: Iterable[PriorRating], discount: float = 1.0,
                 strict: bool = False) -> PriorTable:
    """Align priors with the players of ``S``, scaling every weight by ``discount``.

    Priors for players absent from ``S`` are reported with an
    :class:`UnknownPlayerWarning`, or raise :class:`PriorError` when ``strict``.
    """
    if not 0.0 <= discount <= 1.0:
        raise PriorError(f"prior discount {discount} outside [0, 1]")
    x_hat = np.ones(S.n)
    w_hat = np.zeros(S.n)
    seen: set[str] = set()
    unknown = []
    for p in priors:
        if p.player in seen:
            raise PriorError(f"duplicate prior for player {p.player!r}")
        seen.add(p.player)
        i = S.index.get(p.player)
        if i is None:
            unknown.append(p.player)
            continue
        x_hat[i] = p.x_hat
        w_hat[i] = p.w_hat * discount
    if unknown:
        msg = "prior given for players with no games: " + ", ".join(unknown)
        if strict:
            raise PriorError(msg)
        warnings.warn(msg, UnknownPlayerWarning, stacklevel=2)
    return PriorTable(_readonly(x_hat), _readonly(w_hat), tuple(unknown))


class Variant(str, enum.Enum):
    ITER1 = "iter1"
    ITER2 = "iter2"


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``sigma`` is the diagonal pseudo-score that damps each step, ``gamma``
    the weight of a dummy player who draws with everyone, ``epsilon`` the
    relative stopping tolerance.
    """

    sigma: float = 0.3
    gamma: float = 0.0
    epsilon: float = 1e-10
    max_iters: int = 100_000
    variant: Variant = Variant.ITER1
    prior_discount: float = 1.0
    override_degenerate: bool = False
    threads: int = 1
    divergence_bound: float = 1e15

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if not self.gamma >= 0:
            raise ValueError("gamma must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not 0.0 <= self.prior_discount <= 1.0:
            raise ValueError("prior_discount must lie in [0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True, eq=False)
class SolveResult:
    x: np.ndarray
    r: np.ndarray
    iterations: int
    converged: bool
    residuals: np.ndarray
    final_delta: float
    oscillating: bool = False
    diverged: tuple[int, ...] = ()

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0
