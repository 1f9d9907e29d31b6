"""Which final positions are already decided, and match classification.

A team's position is *fixed* when it is the same under every possible
completion of the remaining matches.  After matchday 4 only first and
last place can be fixed, by pure points arithmetic; after matchday 5 it
suffices to compare the four extreme completions where each remaining
match ends ``M``-0 or 0-``M`` for a large sentinel ``M``.  A brute-force
oracle that enumerates a goal grid over all remaining matches provides
an independent cross-check of both procedures.

A match is weakly stakeless when exactly one side's position is fixed,
strongly stakeless when both are.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import engine
from .domain import (
    SLOTS,
    GroupResults,
    MatchClass,
    MatchRecord,
    Score,
    TieBreakRule,
    check_no_duplicate_pairs,
    remaining_ordered_pairs,
)
from .errors import InvalidInputError, InvalidStateError
from .ranking import compute_table

DEFAULT_ORACLE_GRID = (0, 1, 2, 3, 4, 100)


@dataclass(frozen=True)
class SentinelGoals:
    """Goal count larger than anything achievable in validated input."""

    goals: int = 100

    def __post_init__(self) -> None:
        if self.goals <= 99:
            raise InvalidInputError("sentinel must exceed the 99-goal input cap")


@dataclass(frozen=True)
class FixednessVector:
    """Per-slot final position (1..4) where decided, None where open."""

    positions: tuple[int | None, int | None, int | None, int | None]

    def __post_init__(self) -> None:
        taken = [p for p in self.positions if p is not None]
        if len(taken) != len(set(taken)):
            raise InvalidInputError("two slots cannot be fixed at the same position")

    @classmethod
    def all_open(cls) -> "FixednessVector":
        return cls((None, None, None, None))

    def is_fixed(self, slot: int) -> bool:
        return self.positions[slot - 1] is not None

    def fixed_slots(self) -> tuple[int, ...]:
        return tuple(s for s in SLOTS if self.is_fixed(s))


def _as_matches(results: GroupResults | Iterable[MatchRecord]) -> list[MatchRecord]:
    if isinstance(results, GroupResults):
        return list(results.matches)
    return check_no_duplicate_pairs(results)


def _check_prefix(matches: Sequence[MatchRecord], n_matchdays: int) -> None:
    if len(matches) != 2 * n_matchdays:
        raise InvalidStateError(
            f"expected a {n_matchdays}-matchday prefix ({2 * n_matchdays} matches), "
            f"got {len(matches)} matches"
        )
    played = Counter()
    for m in matches:
        played[m.home] += 1
        played[m.away] += 1
    if any(played[s] != n_matchdays for s in SLOTS):
        raise InvalidStateError(f"every team must have played {n_matchdays} matches")


def _pair_counts(matches: Sequence[MatchRecord]) -> Counter:
    return Counter(frozenset((m.home, m.away)) for m in matches)


def fixed_after_md4(
    results: GroupResults | Iterable[MatchRecord], rule: TieBreakRule
) -> FixednessVector:
    """Decide first and last place from an 8-match state.

    The group winner is known iff it leads the second team by at least
    seven points, or (head-to-head rule) by exactly six with a lead of
    at least seven over the third team and both mutual matches against
    the runner-up already played.  Last place is symmetric.  Second and
    third place are never decidable at this stage.
    """
    matches = _as_matches(results)
    _check_prefix(matches, 4)
    pairs = _pair_counts(matches)
    if sum(1 for n in pairs.values() if n == 2) != 2:
        raise InvalidStateError("a 4-matchday prefix must contain exactly one double pairing")

    pts = {s: 0 for s in SLOTS}
    for m in matches:
        hg, ag = m.score.home_goals, m.score.away_goals
        if hg > ag:
            pts[m.home] += 3
        elif hg == ag:
            pts[m.home] += 1
            pts[m.away] += 1
        else:
            pts[m.away] += 3

    ranked = sorted(SLOTS, key=lambda s: (-pts[s], s))
    t0, t1, t2, t3 = ranked
    h2h = rule is TieBreakRule.HEAD_TO_HEAD
    positions: list[int | None] = [None, None, None, None]

    if pts[t0] > pts[t1]:
        lead2 = pts[t0] - pts[t1]
        if lead2 >= 7 or (
            h2h and lead2 == 6 and pts[t0] - pts[t2] >= 7 and pairs[frozenset((t0, t1))] == 2
        ):
            positions[t0 - 1] = 1

    if pts[t3] < pts[t2]:
        gap3 = pts[t2] - pts[t3]
        if gap3 >= 7 or (
            h2h and gap3 == 6 and pts[t1] - pts[t3] >= 7 and pairs[frozenset((t3, t2))] == 2
        ):
            positions[t3 - 1] = 4

    return FixednessVector(tuple(positions))


def fixed_after_md5(
    results: GroupResults | Iterable[MatchRecord],
    rule: TieBreakRule,
    sentinel: SentinelGoals = SentinelGoals(),
) -> FixednessVector:
    """Scenario test on a 10-match state.

    Completes the two remaining matches with every combination of
    sentinel-0 and 0-sentinel, ranks each completion, and fixes a team's
    position iff it is identical in all four.
    """
    matches = _as_matches(results)
    _check_prefix(matches, 5)
    remaining = remaining_ordered_pairs(matches)
    if len(remaining) != 2 or {x for p in remaining for x in p} != set(SLOTS):
        raise InvalidStateError("a 5-matchday prefix must leave one final matchday")

    m = sentinel.goals
    scenarios = (((m, 0), (m, 0)), ((m, 0), (0, m)), ((0, m), (m, 0)), ((0, m), (0, m)))
    candidate: list[int | None] = [None] * 4
    for k, (s1, s2) in enumerate(scenarios):
        completion = matches + [
            MatchRecord(remaining[0][0], remaining[0][1], Score(*s1)),
            MatchRecord(remaining[1][0], remaining[1][1], Score(*s2)),
        ]
        table = compute_table(completion, rule)
        for slot in SLOTS:
            pos = table.position_of(slot)
            if k == 0:
                candidate[slot - 1] = pos
            elif candidate[slot - 1] != pos:
                candidate[slot - 1] = None
    return FixednessVector(tuple(candidate))


def fixed_oracle(
    results: GroupResults | Iterable[MatchRecord],
    remaining: Sequence[tuple[int, int]],
    rule: TieBreakRule,
    goal_grid: Iterable[int] = DEFAULT_ORACLE_GRID,
) -> FixednessVector:
    """Brute-force fixedness over a finite goal grid.

    Enumerates every assignment of (home, away) goals from ``goal_grid``
    to every remaining match and fixes a team's position iff it is the
    same in the final ranking of all assignments.
    """
    grid = sorted(set(goal_grid))
    if not grid:
        raise InvalidInputError("goal grid must not be empty")
    if any(g < 0 for g in grid):
        raise InvalidInputError("goal grid values must be non-negative")
    matches = _as_matches(results)
    if len(remaining) > 4:
        raise InvalidInputError("oracle supports at most 4 remaining matches")
    played = {m.ordered_pair for m in matches}
    for p in remaining:
        if p in played:
            raise InvalidInputError(f"remaining pair {p} already played")

    w = np.zeros((4, 4), np.int64)
    d = np.zeros((4, 4), np.int64)
    gf = np.zeros((4, 4), np.int64)
    for m in matches:
        engine._apply_match(
            w, d, gf, m.home - 1, m.away - 1, m.score.home_goals, m.score.away_goals, 1
        )
    rem_i = np.array([p[0] - 1 for p in remaining], np.int64)
    rem_j = np.array([p[1] - 1 for p in remaining], np.int64)
    rule_id = engine.RULE_HEAD_TO_HEAD if rule is TieBreakRule.HEAD_TO_HEAD else engine.RULE_GOAL_DIFF
    ref = engine.oracle_fixedness(w, d, gf, rem_i, rem_j, np.array(grid, np.int64), rule_id)
    return FixednessVector(tuple(int(ref[t]) if ref[t] > 0 else None for t in range(4)))


def classify_matchday(
    fixed: FixednessVector, matchday_pairings: Sequence[tuple[int, int]]
) -> list[MatchClass]:
    """Per-match class: both sides fixed, one side fixed, or neither."""
    classes = []
    for home, away in matchday_pairings:
        n = int(fixed.is_fixed(home)) + int(fixed.is_fixed(away))
        if n == 2:
            classes.append(MatchClass.STRONGLY_STAKELESS)
        elif n == 1:
            classes.append(MatchClass.WEAKLY_STAKELESS)
        else:
            classes.append(MatchClass.COMPETITIVE)
    return classes
