"""Core value types for a four-team double round-robin group.

Teams carry no names: a team is identified by its seeding pot index
(1 = strongest pot, 4 = weakest).  All types here are immutable and
validate their invariants on construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import InvalidInputError

SLOTS = (1, 2, 3, 4)

#: Goal cap for validated input.  The sentinel used to realise best/worst
#: scenarios (see :mod:`stakeless.classify`) is 100, one above this cap.
MAX_GOALS = 99


class Outcome(Enum):
    HOME_WIN = "home-win"
    DRAW = "draw"
    AWAY_WIN = "away-win"


class TieBreakRule(Enum):
    """How teams equal on points are separated."""

    GOAL_DIFFERENCE = "goal-difference"
    HEAD_TO_HEAD = "head-to-head"


class MatchClass(Enum):
    COMPETITIVE = "competitive"
    WEAKLY_STAKELESS = "weakly-stakeless"
    STRONGLY_STAKELESS = "strongly-stakeless"


def validate_slot(slot: int) -> int:
    if slot not in SLOTS:
        raise InvalidInputError(f"pot slot must be one of {SLOTS}, got {slot!r}")
    return slot


@dataclass(frozen=True)
class Score:
    """Final score of one match: non-negative integer goals per side."""

    home_goals: int
    away_goals: int

    def __post_init__(self) -> None:
        for g in (self.home_goals, self.away_goals):
            if not isinstance(g, int) or g < 0:
                raise InvalidInputError(f"goals must be non-negative integers, got {g!r}")


def outcome(score: Score) -> Outcome:
    if score.home_goals > score.away_goals:
        return Outcome.HOME_WIN
    if score.home_goals == score.away_goals:
        return Outcome.DRAW
    return Outcome.AWAY_WIN


@dataclass(frozen=True)
class MatchRecord:
    """One played match between two distinct slots."""

    home: int
    away: int
    score: Score

    def __post_init__(self) -> None:
        validate_slot(self.home)
        validate_slot(self.away)
        if self.home == self.away:
            raise InvalidInputError(f"a team cannot play itself (slot {self.home})")

    @property
    def ordered_pair(self) -> tuple[int, int]:
        return (self.home, self.away)


Matchday = tuple[MatchRecord, MatchRecord]


def all_ordered_pairs() -> list[tuple[int, int]]:
    """The 12 ordered (home, away) slot pairs of a double round robin."""
    return [(i, j) for i in SLOTS for j in SLOTS if i != j]


def _check_matchday(matches: Sequence[MatchRecord], index: int) -> None:
    if len(matches) != 2:
        raise InvalidInputError(f"matchday {index + 1} must have exactly 2 matches")
    covered = {matches[0].home, matches[0].away, matches[1].home, matches[1].away}
    if covered != set(SLOTS):
        raise InvalidInputError(
            f"matchday {index + 1} must cover all four slots, covers {sorted(covered)}"
        )


@dataclass(frozen=True)
class GroupResults:
    """Zero to six played matchdays of one group.

    Each matchday consists of two matches covering all four slots; every
    ordered (home, away) pair may appear at most once overall.  A complete
    season is six matchdays containing each of the 12 ordered pairs
    exactly once.
    """

    matchdays: tuple[Matchday, ...]

    def __post_init__(self) -> None:
        if len(self.matchdays) > 6:
            raise InvalidInputError("a group season has at most 6 matchdays")
        seen: set[tuple[int, int]] = set()
        for k, md in enumerate(self.matchdays):
            _check_matchday(md, k)
            for m in md:
                if m.ordered_pair in seen:
                    raise InvalidInputError(
                        f"ordered pair {m.home}-{m.away} appears more than once"
                    )
                seen.add(m.ordered_pair)

    @classmethod
    def from_matchdays(cls, matchdays: Iterable[Sequence[MatchRecord]]) -> "GroupResults":
        return cls(tuple(tuple(md) for md in matchdays))  # type: ignore[arg-type]

    @property
    def matches(self) -> tuple[MatchRecord, ...]:
        return tuple(m for md in self.matchdays for m in md)

    @property
    def num_matchdays(self) -> int:
        return len(self.matchdays)

    @property
    def is_complete(self) -> bool:
        return len(self.matchdays) == 6

    def prefix(self, k: int) -> "GroupResults":
        return GroupResults(self.matchdays[:k])


def check_no_duplicate_pairs(matches: Iterable[MatchRecord]) -> list[MatchRecord]:
    """Validate that each ordered pair occurs at most once; return the list."""
    out = list(matches)
    seen: set[tuple[int, int]] = set()
    for m in out:
        if m.ordered_pair in seen:
            raise InvalidInputError(f"ordered pair {m.home}-{m.away} appears more than once")
        seen.add(m.ordered_pair)
    return out


def remaining_ordered_pairs(matches: Iterable[MatchRecord]) -> list[tuple[int, int]]:
    """Ordered pairs of the double round robin not yet played."""
    played = {m.ordered_pair for m in check_no_duplicate_pairs(matches)}
    return [p for p in all_ordered_pairs() if p not in played]
