"""Group standings under either tie-breaking regime.

Teams equal on total points are separated by

* goal-difference rule: overall goal difference, overall goals scored;
* head-to-head rule: points, then goal difference, in the matches among
  the tied teams.  If a strict subset stays tied, those two criteria are
  re-applied once to the subset before falling through to overall goal
  difference and goals scored.

Anything still tied after that is ordered by ascending pot index.  That
last resort is deterministic but arbitrary, so the table records, for
each adjacent pair, which criterion separated it; downstream reports use
this to measure how often the pot-order fallback actually decides a rank.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .domain import SLOTS, MatchRecord, TieBreakRule, check_no_duplicate_pairs
from .errors import InvalidInputError

SEP_POINTS = "points"
SEP_H2H_POINTS = "h2h-points"
SEP_H2H_GOAL_DIFF = "h2h-goal-difference"
SEP_GOAL_DIFF = "goal-difference"
SEP_GOALS_FOR = "goals-for"
SEP_POT_FALLBACK = "pot-fallback"


@dataclass(frozen=True)
class StandingRow:
    slot: int
    played: int
    won: int
    drawn: int
    lost: int
    goals_for: int
    goals_against: int

    @property
    def goal_diff(self) -> int:
        return self.goals_for - self.goals_against

    @property
    def points(self) -> int:
        return 3 * self.won + self.drawn


@dataclass(frozen=True)
class RankingTable:
    """Four rows in final order plus how each adjacent pair was separated."""

    rows: tuple[StandingRow, StandingRow, StandingRow, StandingRow]
    separated_by: tuple[str, str, str]

    @property
    def order(self) -> tuple[int, int, int, int]:
        return tuple(r.slot for r in self.rows)  # type: ignore[return-value]

    @property
    def tie_annotations(self) -> tuple[bool, bool, bool]:
        """True where only the pot-order fallback separated the pair."""
        return tuple(s == SEP_POT_FALLBACK for s in self.separated_by)  # type: ignore[return-value]

    def position_of(self, slot: int) -> int:
        for pos, row in enumerate(self.rows, start=1):
            if row.slot == slot:
                return pos
        raise InvalidInputError(f"slot {slot} not in table")

    @property
    def used_fallback(self) -> bool:
        return any(self.tie_annotations)


def _aggregate(matches: Sequence[MatchRecord]) -> dict[int, StandingRow]:
    won = {s: 0 for s in SLOTS}
    drawn = {s: 0 for s in SLOTS}
    lost = {s: 0 for s in SLOTS}
    gf = {s: 0 for s in SLOTS}
    ga = {s: 0 for s in SLOTS}
    for m in matches:
        h, a = m.home, m.away
        hg, ag = m.score.home_goals, m.score.away_goals
        gf[h] += hg
        ga[h] += ag
        gf[a] += ag
        ga[a] += hg
        if hg > ag:
            won[h] += 1
            lost[a] += 1
        elif hg == ag:
            drawn[h] += 1
            drawn[a] += 1
        else:
            won[a] += 1
            lost[h] += 1
    return {
        s: StandingRow(
            slot=s,
            played=won[s] + drawn[s] + lost[s],
            won=won[s],
            drawn=drawn[s],
            lost=lost[s],
            goals_for=gf[s],
            goals_against=ga[s],
        )
        for s in SLOTS
    }


def head_to_head_stats(
    matches: Iterable[MatchRecord], subset: Iterable[int]
) -> dict[int, tuple[int, int, int]]:
    """Per-slot (points, goal difference, goals for) in matches among ``subset``."""
    group = set(subset)
    if len(group) < 2:
        raise InvalidInputError("head-to-head subset needs at least 2 slots")
    pts = {s: 0 for s in group}
    gd = {s: 0 for s in group}
    gf = {s: 0 for s in group}
    for m in matches:
        if m.home not in group or m.away not in group:
            continue
        hg, ag = m.score.home_goals, m.score.away_goals
        gf[m.home] += hg
        gf[m.away] += ag
        gd[m.home] += hg - ag
        gd[m.away] += ag - hg
        if hg > ag:
            pts[m.home] += 3
        elif hg == ag:
            pts[m.home] += 1
            pts[m.away] += 1
        else:
            pts[m.away] += 3
    return {s: (pts[s], gd[s], gf[s]) for s in group}


def _sort_with_seps(
    slots: Sequence[int], keys: Mapping[int, tuple], labels: Sequence[str]
) -> tuple[list[int], list[str]]:
    """Order ``slots`` by descending key tuple, pot index last.

    Returns the order plus, per adjacent pair, the label of the first key
    component that differs (``labels`` parallel to the key components,
    with the pot fallback label implied when all components tie).
    """
    ordered = sorted(slots, key=lambda s: tuple(-k for k in keys[s]) + (s,))
    seps = []
    for x, y in zip(ordered, ordered[1:]):
        for kx, ky, lab in zip(keys[x], keys[y], labels):
            if kx != ky:
                seps.append(lab)
                break
        else:
            seps.append(SEP_POT_FALLBACK)
    return ordered, seps


def _break_points_tie(
    group: Sequence[int], matches: Sequence[MatchRecord], rows: Mapping[int, StandingRow],
    rule: TieBreakRule,
) -> tuple[list[int], list[str]]:
    overall = {s: (rows[s].goal_diff, rows[s].goals_for) for s in group}
    overall_labels = (SEP_GOAL_DIFF, SEP_GOALS_FOR)

    if rule is TieBreakRule.GOAL_DIFFERENCE:
        return _sort_with_seps(group, overall, overall_labels)

    h2h = head_to_head_stats(matches, group)
    key1 = {s: h2h[s][:2] for s in group}
    ordered, seps = _sort_with_seps(group, key1, (SEP_H2H_POINTS, SEP_H2H_GOAL_DIFF))

    # walk sub-groups still tied on the head-to-head keys
    out: list[int] = []
    out_seps: list[str] = []
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and key1[ordered[j]] == key1[ordered[i]]:
            j += 1
        sub = ordered[i:j]
        if out:
            out_seps.append(seps[i - 1])
        if len(sub) == 1:
            out.extend(sub)
        elif len(sub) < len(group):
            # strict subset: re-apply the head-to-head criteria once
            h2h2 = head_to_head_stats(matches, sub)
            key2 = {s: h2h2[s][:2] + overall[s] for s in sub}
            sub_ord, sub_seps = _sort_with_seps(
                sub, key2, (SEP_H2H_POINTS, SEP_H2H_GOAL_DIFF) + overall_labels
            )
            out.extend(sub_ord)
            out_seps.extend(sub_seps)
        else:
            # whole group tied on head-to-head: fall through to overall stats
            sub_ord, sub_seps = _sort_with_seps(sub, overall, overall_labels)
            out.extend(sub_ord)
            out_seps.extend(sub_seps)
        i = j
    return out, out_seps


def compute_table(matches: Iterable[MatchRecord], rule: TieBreakRule) -> RankingTable:
    """Standings over any valid set of played matches (partial or complete)."""
    ms = check_no_duplicate_pairs(matches)
    rows = _aggregate(ms)

    by_points = sorted(SLOTS, key=lambda s: (-rows[s].points, s))
    order: list[int] = []
    seps: list[str] = []
    i = 0
    while i < 4:
        j = i
        while j < 4 and rows[by_points[j]].points == rows[by_points[i]].points:
            j += 1
        group = by_points[i:j]
        if order:
            seps.append(SEP_POINTS)
        if len(group) == 1:
            order.extend(group)
        else:
            sub_ord, sub_seps = _break_points_tie(group, ms, rows, rule)
            order.extend(sub_ord)
            seps.extend(sub_seps)
        i = j

    return RankingTable(
        rows=tuple(rows[s] for s in order),  # type: ignore[arg-type]
        separated_by=tuple(seps),  # type: ignore[arg-type]
    )
