"""Games and priors CSV formats.

Games: ``player_a,player_b,result`` with result one of ``1``, ``0``,
``0.5`` or ``=`` (a draw).  Priors: ``player,rating,weight``.  In both,
blank lines and lines starting with ``#`` are ignored, and an optional
header row naming the columns is skipped.
"""

from __future__ import annotations

import csv
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, TextIO

from .errors import InvalidGameError, PriorError
from .model import GameRecord, PriorRating

RESULTS = {"1": 1.0, "0": 0.0, "0.5": 0.5, "=": 0.5}
GAMES_HEADER = ("player_a", "player_b", "result")
PRIORS_HEADER = ("player", "rating", "weight")


def _rows(lines: Iterable[str]):
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        row = next(csv.reader([stripped]))
        yield lineno, [c.strip() for c in row]


def read_games(source: str | Path | TextIO) -> list[GameRecord]:
    """Parse a games file; raises :class:`InvalidGameError` with the line number."""
    with _open(source) as fh:
        games = []
        for lineno, row in _rows(fh):
            if not games and tuple(c.lower() for c in row) == GAMES_HEADER:
                continue
            if len(row) != 3:
                raise InvalidGameError(f"line {lineno}: expected 3 fields, got {len(row)}")
            a, b, res = row
            if not a or not b:
                raise InvalidGameError(f"line {lineno}: empty player name")
            if res not in RESULTS:
                raise InvalidGameError(f"line {lineno}: unknown result {res!r} (use 1, 0, 0.5 or =)")
            try:
                games.append(GameRecord(a, b, RESULTS[res]))
            except InvalidGameError as exc:
                raise InvalidGameError(f"line {lineno}: {exc}") from None
        return games


def read_priors(source: str | Path | TextIO, to_internal=None) -> list[PriorRating]:
    """Parse a priors file.  ``to_internal`` maps the rating column to the log scale."""
    with _open(source) as fh:
        priors = []
        for lineno, row in _rows(fh):
            if not priors and tuple(c.lower() for c in row) == PRIORS_HEADER:
                continue
            if len(row) != 3:
                raise PriorError(f"line {lineno}: expected 3 fields, got {len(row)}")
            player, rating, weight = row
            try:
                r, w = float(rating), float(weight)
            except ValueError:
                raise PriorError(f"line {lineno}: rating and weight must be numbers") from None
            if to_internal is not None:
                r = to_internal(r)
            if not (math.isfinite(r) and math.isfinite(w)):
                raise PriorError(f"line {lineno}: non-finite value")
            try:
                priors.append(PriorRating(player, r, w))
            except PriorError as exc:
                raise PriorError(f"line {lineno}: {exc}") from None
        return priors


def format_result(score: float) -> str:
    return {1.0: "1", 0.0: "0", 0.5: "0.5"}[score]


def write_games(games: Iterable[GameRecord], fh: TextIO, header: Iterable[str] = ()) -> None:
    for line in header:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    for g in games:
        w.writerow([g.player_a, g.player_b, format_result(g.score_a)])


def write_truth(players, ratings, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["player", "rating"])
    for p, r in zip(players, ratings):
        w.writerow([p, repr(float(r))])


@contextmanager
def _open(source):
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            yield fh
    elif hasattr(source, "read"):
        yield source
    else:
        raise TypeError(f"cannot read from {source!r}")
