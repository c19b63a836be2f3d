"""Command line interface: ``eigenrate {rate,check,verify,simulate}``.

Exit codes: 0 ok, 2 bad input, 3 degenerate data refused, 4 no convergence,
5 oracle check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import secrets
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .degeneracy import analyze, recommend
from .errors import DegenerateProblemError, InvalidGameError, OracleError, PriorError, RatingError
from .files import read_games, read_priors, write_games, write_truth
from .model import PriorTable, SolverConfig, aggregate, merge_priors
from .oracle import verify_solution
from .simulator import RandomPairs, RoundRobin, TournamentSpec, generate
from .solver import solve

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_NO_CONVERGENCE = 4
EXIT_ORACLE_FAIL = 5

ELO_ALPHA = 400.0 / math.log(10.0)
ELO_BETA = 2000.0

log = logging.getLogger("eigenrate")


@dataclass(frozen=True)
class DisplayScale:
    """Affine map from natural-log ratings to rounded display points."""

    alpha: float = ELO_ALPHA
    beta: float = ELO_BETA

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("display scale alpha must be positive")

    def to_internal(self, displayed: float) -> float:
        return (displayed - self.beta) / self.alpha


def scale_ratings(r, scale: DisplayScale = DisplayScale()) -> np.ndarray:
    """``round(alpha * r + beta)`` elementwise, halves rounded up."""
    r = np.asarray(r, dtype=float)
    return np.floor(scale.alpha * r + scale.beta + 0.5).astype(np.int64)


class _InputError(Exception):
    pass


def _load_matrix(path):
    try:
        games = read_games(path)
    except FileNotFoundError:
        raise _InputError(f"games file not found: {path}") from None
    except InvalidGameError as exc:
        raise _InputError(f"{path}: {exc}") from None
    return aggregate(games)


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(
            sigma=args.sigma,
            gamma=getattr(args, "gamma", 0.0),
            epsilon=args.epsilon,
            max_iters=args.max_iters,
            variant=args.variant,
            prior_discount=getattr(args, "prior_discount", 1.0),
            override_degenerate=args.override_degenerate,
            threads=args.threads,
        )
    except ValueError as exc:
        raise _InputError(str(exc)) from None


def _load_priors(args, S, scale: DisplayScale):
    if not args.priors:
        return None
    to_internal = scale.to_internal if args.prior_scale == "display" else None
    try:
        priors = read_priors(args.priors, to_internal)
    except FileNotFoundError:
        raise _InputError(f"priors file not found: {args.priors}") from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            table = merge_priors(S, priors, args.prior_discount, strict=args.strict_priors)
        except PriorError as exc:
            raise _InputError(f"{args.priors}: {exc}") from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return table


def _refuse(exc: DegenerateProblemError) -> int:
    print("error: " + str(exc), file=sys.stderr)
    if exc.report is not None:
        print(exc.report.to_text(), file=sys.stderr)
        print(recommend(exc.report).to_text(), file=sys.stderr)
    print("pass --gamma 1 or --override-degenerate to run anyway", file=sys.stderr)
    return EXIT_DEGENERATE


def cmd_rate(args) -> int:
    S = _load_matrix(args.games)
    if S.n == 0:
        raise _InputError(f"{args.games}: no games")
    scale = _scale(args)
    config = _config(args)
    priors = _load_priors(args, S, scale)
    try:
        result = solve(S, config, priors)
    except DegenerateProblemError as exc:
        return _refuse(exc)

    games = S.games_played()
    points = S.points()
    shown = scale_ratings(result.r, scale)
    order = sorted(range(S.n), key=lambda i: (-result.r[i], i))
    out = sys.stdout
    out.write("player\tgames\tscore\trating_internal\trating_display\n")
    for i in order:
        out.write(f"{S.players[i]}\t{games[i]:g}\t{points[i]:g}\t{result.r[i]:.10f}\t{shown[i]}\n")
    meta = {
        "converged": str(result.converged).lower(),
        "iterations": result.iterations,
        "final_delta": f"{result.final_delta:.3e}",
        "max_residual": f"{result.max_residual:.3e}",
        "players": S.n,
        "games": S.m,
        "sigma": config.sigma,
        "gamma": config.gamma,
        "epsilon": config.epsilon,
        "max_iters": config.max_iters,
        "variant": config.variant.value,
        "priors": args.priors or "none",
        "prior_discount": config.prior_discount,
        "scale_alpha": f"{scale.alpha:.6f}",
        "scale_beta": scale.beta,
    }
    if result.oscillating:
        meta["oscillating"] = "true"
    if result.diverged:
        meta["diverged"] = ",".join(S.players[i] for i in result.diverged)
    for key, value in meta.items():
        out.write(f"# {key}={value}\n")
    if not result.converged:
        print(f"error: no convergence after {result.iterations} iterations "
              f"(delta {result.final_delta:.3e}); the data may be degenerate, "
              "try `eigenrate check` or --gamma", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_check(args) -> int:
    S = _load_matrix(args.games)
    if S.n == 0:
        raise _InputError(f"{args.games}: no games")
    report = analyze(S)
    advice = recommend(report)
    if args.format == "json":
        doc = report.to_dict()
        doc["remedy"] = advice.to_dict()
        print(json.dumps(doc, indent=2))
    else:
        print(report.to_text())
        print(advice.to_text())
    return EXIT_DEGENERATE if report.degenerate else EXIT_OK


def cmd_verify(args) -> int:
    S = _load_matrix(args.games)
    if S.n == 0:
        raise _InputError(f"{args.games}: no games")
    if S.n > args.cap:
        raise _InputError(
            f"{S.n} players exceeds the oracle cap of {args.cap}; the dense check is meant "
            "for desk-scale inputs, so verify a subset or raise --cap"
        )
    config = _config(args)
    try:
        result = solve(S, config)
    except DegenerateProblemError as exc:
        return _refuse(exc)
    try:
        report = verify_solution(S, result.x, config.sigma, tol=args.tol, cap=args.cap)
    except OracleError as exc:
        raise _InputError(str(exc)) from None
    if args.format == "json":
        doc = report.to_dict()
        doc.update(solver_converged=result.converged, solver_iterations=result.iterations)
        print(json.dumps(doc, indent=2))
    else:
        print(report.to_text())
        print(f"solver: {result.iterations} iterations, converged={str(result.converged).lower()}")
    return EXIT_OK if report.passed else EXIT_ORACLE_FAIL


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    if args.players < 2:
        raise _InputError("--players must be at least 2")
    ratings = np.linspace(-args.spread, args.spread, args.players)
    if args.round_robin is not None:
        schedule, label = RoundRobin(args.round_robin), f"round-robin {args.round_robin}"
    else:
        schedule, label = RandomPairs(args.random_games), f"random-games {args.random_games}"
    try:
        spec = TournamentSpec(tuple(ratings), schedule, args.draw_prob, seed)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    games = generate(spec)
    header = [f"seed={seed}", f"players={spec.n}", f"schedule={label}",
              f"draw_prob={spec.draw_prob:g}", f"spread={args.spread:g}"]
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_games(games, fh, header)
    else:
        write_games(games, sys.stdout, header)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8", newline="") as fh:
            write_truth(spec.player_names(), ratings, fh)
    return EXIT_OK


def _scale(args) -> DisplayScale:
    try:
        return DisplayScale(args.scale_alpha, args.scale_beta)
    except ValueError as exc:
        raise _InputError(str(exc)) from None


def _solver_options(p: argparse.ArgumentParser, regularize: bool = True) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--sigma", type=float, default=0.3, help="diagonal damping (default 0.3)")
    if regularize:
        g.add_argument("--gamma", type=float, default=0.0,
                       help="weight of a dummy player drawing with everyone (default 0)")
    g.add_argument("--epsilon", type=float, default=1e-10, help="relative stopping tolerance")
    g.add_argument("--max-iters", type=int, default=100_000)
    g.add_argument("--variant", choices=["iter1", "iter2"], default="iter1")
    g.add_argument("--override-degenerate", action="store_true",
                   help="iterate even when finite ratings do not exist")
    g.add_argument("--threads", type=int, default=1,
                   help="row-parallel inner loop; output is identical for any value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigenrate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="compute ratings from a games file")
    p.add_argument("games")
    _solver_options(p)
    p.add_argument("--priors", help="CSV of player,rating,weight")
    p.add_argument("--prior-scale", choices=["internal", "display"], default="internal")
    p.add_argument("--prior-discount", type=float, default=1.0)
    p.add_argument("--strict-priors", action="store_true",
                   help="fail on priors for players without games")
    p.add_argument("--scale-alpha", type=float, default=ELO_ALPHA)
    p.add_argument("--scale-beta", type=float, default=ELO_BETA)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("check", help="report whether finite ratings exist")
    p.add_argument("games")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="solve, then confirm the answer with the dense eigenvector oracle")
    p.add_argument("games")
    _solver_options(p, regularize=False)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--cap", type=int, default=500)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="generate games from evenly spaced true ratings")
    p.add_argument("--players", type=int, required=True)
    sched = p.add_mutually_exclusive_group(required=True)
    sched.add_argument("--round-robin", type=int, metavar="ROUNDS")
    sched.add_argument("--random-games", type=int, metavar="GAMES")
    p.add_argument("--seed", type=int)
    p.add_argument("--draw-prob", type=float, default=0.0)
    p.add_argument("--spread", type=float, default=1.0,
                   help="true ratings run from -SPREAD to +SPREAD (log scale)")
    p.add_argument("--out", help="games CSV path (default stdout)")
    p.add_argument("--truth", help="write true ratings CSV here")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RatingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
