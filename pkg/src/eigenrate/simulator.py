"""Synthetic games from known ratings under the logistic model.

A game is drawn with probability ``draw_prob`` regardless of the ratings;
otherwise player i wins with probability ``1 / (1 + exp(r_j - r_i))``.
Rating-independent draws pull expected scores toward 1/2, so use
``draw_prob = 0`` when measuring recovery accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .model import GameRecord, ScoreMatrix, aggregate_indexed


def expected_score(r_i, r_j):
    """Expected score of a player rated ``r_i`` against one rated ``r_j``."""
    z = np.subtract(r_i, r_j, dtype=float)
    out = 0.5 * (1.0 + np.tanh(0.5 * z))  # = 1/(1+exp(-z)), symmetric in rounding
    return float(out) if np.ndim(out) == 0 else out


def sample_game(r_i: float, r_j: float, draw_prob: float, rng: np.random.Generator) -> float:
    if not 0.0 <= draw_prob < 1.0:
        raise ValueError("draw_prob must lie in [0, 1)")
    if rng.random() < draw_prob:
        return 0.5
    return 1.0 if rng.random() < expected_score(r_i, r_j) else 0.0


@dataclass(frozen=True)
class RoundRobin:
    rounds: int = 1


@dataclass(frozen=True)
class RandomPairs:
    games: int


Schedule = Union[RoundRobin, RandomPairs]


@dataclass(frozen=True)
class TournamentSpec:
    true_ratings: tuple[float, ...]
    schedule: Schedule
    draw_prob: float = 0.0
    seed: int | None = 0

    def __post_init__(self):
        object.__setattr__(self, "true_ratings", tuple(float(r) for r in self.true_ratings))
        if not 0.0 <= self.draw_prob < 1.0:
            raise ValueError("draw_prob must lie in [0, 1)")
        if isinstance(self.schedule, RoundRobin) and self.schedule.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if isinstance(self.schedule, RandomPairs) and self.schedule.games < 1:
            raise ValueError("games must be >= 1")
        if not all(math.isfinite(r) for r in self.true_ratings):
            raise ValueError("true ratings must be finite")

    @property
    def n(self) -> int:
        return len(self.true_ratings)

    def player_names(self) -> list[str]:
        width = len(str(self.n))
        return [f"P{i + 1:0{width}d}" for i in range(self.n)]


def _schedule_pairs(spec: TournamentSpec, rng: np.random.Generator):
    n = spec.n
    if isinstance(spec.schedule, RoundRobin):
        a, b = np.triu_indices(n, k=1)  # lexicographic (i, j), i < j
        reps = spec.schedule.rounds
        return np.tile(a, reps), np.tile(b, reps)
    k = spec.schedule.games
    a = rng.integers(0, n, size=k)
    b = rng.integers(0, n - 1, size=k)
    b = b + (b >= a)
    return a, b


def generate_indexed(spec: TournamentSpec):
    """Vectorised generation: ``(players, a_idx, b_idx, score_a)``."""
    if spec.n < 2:
        raise ValueError("need at least two players")
    rng = np.random.default_rng(spec.seed)
    a, b = _schedule_pairs(spec, rng)
    r = np.asarray(spec.true_ratings)
    draw_u = rng.random(a.size)
    win_u = rng.random(a.size)
    score = np.where(win_u < expected_score(r[a], r[b]), 1.0, 0.0)
    score[draw_u < spec.draw_prob] = 0.5
    return spec.player_names(), a, b, score


def generate(spec: TournamentSpec) -> list[GameRecord]:
    players, a, b, score = generate_indexed(spec)
    return [GameRecord(players[i], players[j], float(s))
            for i, j, s in zip(a.tolist(), b.tolist(), score.tolist())]


def simulate_matrix(spec: TournamentSpec) -> ScoreMatrix:
    """Generate and aggregate in one go, skipping the per-game records."""
    return aggregate_indexed(*generate_indexed(spec))


class RecoveryError(NamedTuple):
    max_abs: float
    rmse: float


def recovery_error(true_ratings, estimated_ratings) -> RecoveryError:
    """Compare ratings after centring both to mean zero."""
    t = np.asarray(true_ratings, dtype=float)
    e = np.asarray(estimated_ratings, dtype=float)
    if t.shape != e.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {e.shape}")
    if t.size == 0:
        return RecoveryError(0.0, 0.0)
    diff = (e - e.mean()) - (t - t.mean())
    return RecoveryError(float(np.max(np.abs(diff))), float(np.sqrt(np.mean(diff ** 2))))
