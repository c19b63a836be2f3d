"""Detect score matrices for which finite, comparable ratings do not exist.

The score digraph has an arc ``i -> j`` whenever ``s[i, j] > 0``, i.e. i
took points from j.  Finite ratings need every player to have conceded
something and the digraph to be strongly connected.  Two players who
never meet (even indirectly) give mutually unreachable components; a group
that always beats another gives a one-way edge in the condensation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .model import ScoreMatrix, loss_totals


class Verdict(str, enum.Enum):
    NONDEGENERATE = "NONDEGENERATE"
    DEGENERATE = "DEGENERATE"


@dataclass(frozen=True)
class DegeneracyReport:
    players: tuple[str, ...]
    zero_loss_players: frozenset[int]
    components: tuple[tuple[int, ...], ...]
    condensation_edges: frozenset[tuple[int, int]]
    verdict: Verdict
    reasons: tuple[str, ...]

    @property
    def degenerate(self) -> bool:
        return self.verdict is Verdict.DEGENERATE

    def component_of(self, i: int) -> int:
        for c, members in enumerate(self.components):
            if i in members:
                return c
        raise KeyError(i)

    def to_dict(self) -> dict:
        names = self.players
        return {
            "verdict": self.verdict.value,
            "n_players": len(names),
            "zero_loss_players": [names[i] for i in sorted(self.zero_loss_players)],
            "components": [[names[i] for i in comp] for comp in self.components],
            "condensation_edges": sorted(self.condensation_edges),
            "reasons": list(self.reasons),
        }

    def to_text(self) -> str:
        names = self.players
        lines = [f"verdict: {self.verdict.value}", f"players: {len(names)}"]
        lines.append(f"components: {len(self.components)}")
        for c, comp in enumerate(self.components):
            lines.append(f"  [{c}] " + ", ".join(names[i] for i in comp))
        if self.condensation_edges:
            lines.append("condensation edges (winner side -> loser side):")
            for a, b in sorted(self.condensation_edges):
                lines.append(f"  [{a}] -> [{b}]")
        if self.zero_loss_players:
            lines.append("players who conceded no points: "
                         + ", ".join(names[i] for i in sorted(self.zero_loss_players)))
        for reason in self.reasons:
            lines.append(f"reason: {reason}")
        return "\n".join(lines)


def analyze(S: ScoreMatrix) -> DegeneracyReport:
    if S.n < 1:
        raise ValueError("cannot analyse an empty score matrix")
    n = S.n
    losses = loss_totals(S)
    zero_loss = frozenset(int(i) for i in np.flatnonzero(losses == 0))

    graph = csr_matrix((np.ones(S.nnz), (S.rows, S.cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=True, connection="strong")

    # renumber components by their smallest member so output is stable
    first_seen: dict[int, int] = {}
    for i in range(n):
        first_seen.setdefault(int(labels[i]), len(first_seen))
    comp_of = np.array([first_seen[int(lab)] for lab in labels], dtype=np.int64)
    members: list[list[int]] = [[] for _ in first_seen]
    for i in range(n):
        members[comp_of[i]].append(i)
    components = tuple(tuple(c) for c in members)

    src, dst = comp_of[S.rows], comp_of[S.cols]
    cross = src != dst
    edges = frozenset(zip(src[cross].tolist(), dst[cross].tolist()))

    reasons = []
    if zero_loss:
        reasons.append(
            f"{len(zero_loss)} player(s) conceded no points and would be rated infinitely strong"
        )
    if len(components) > 1:
        has_in = {b for _, b in edges}
        has_out = {a for a, _ in edges}
        isolated = [c for c in range(len(components)) if c not in has_in and c not in has_out]
        if edges:
            reasons.append(
                f"{len(edges)} one-way result(s) between groups: some players always beat others"
            )
        if isolated or not _weakly_connected(len(components), edges):
            reasons.append("some groups of players are not linked by any games")
        if not reasons:
            reasons.append("score digraph is not strongly connected")
    verdict = Verdict.DEGENERATE if reasons else Verdict.NONDEGENERATE
    return DegeneracyReport(S.players, zero_loss, components, edges, verdict, tuple(reasons))


def _weakly_connected(k: int, edges) -> bool:
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(a) for a in range(k)}) == 1


@dataclass(frozen=True)
class Remediation:
    action_needed: bool
    split: tuple[tuple[str, ...], ...] = ()
    suggested_gamma: float | None = None

    def to_text(self) -> str:
        if not self.action_needed:
            return "no action needed: ratings are well defined"
        lines = ["remedies:",
                 "  1. rate each group separately (re-run per group):"]
        for k, group in enumerate(self.split):
            lines.append(f"     group {k}: " + ", ".join(group))
        lines.append(
            f"  2. add a dummy player who draws with everyone, e.g. --gamma {self.suggested_gamma:g}"
        )
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "action_needed": self.action_needed,
            "split": [list(g) for g in self.split],
            "suggested_gamma": self.suggested_gamma,
        }


def recommend(report: DegeneracyReport) -> Remediation:
    if not report.degenerate:
        return Remediation(False)
    names = report.players
    split = tuple(tuple(names[i] for i in comp) for comp in report.components)
    return Remediation(True, split, 1.0)
