"""The twelve legal last-two-matchday schedules and their full fixtures.

A schedule fixes the two pairings of matchday 5 and matchday 6.  Its
four-character label reads: home and away slot of the matchday-5 match
involving the pot-1 team, then home and away slot of its matchday-6
match.  Matchdays 4/5/6 mirror matchdays 3/2/1 (home and away swapped),
no club plays more than two consecutive home or away matches, and every
club has one home and one away game within matchdays 1-2 and within
matchdays 5-6.
"""
from __future__ import annotations

from dataclasses import dataclass

from .domain import SLOTS, all_ordered_pairs
from .errors import InvalidScheduleError

Pair = tuple[int, int]

# (label, matchday-5 matches, matchday-6 matches), in canonical order
_TABLE_ROWS: list[tuple[str, tuple[Pair, Pair], tuple[Pair, Pair]]] = [
    ("1231", ((1, 2), (4, 3)), ((3, 1), (2, 4))),
    ("2113", ((2, 1), (3, 4)), ((1, 3), (4, 2))),
    ("1241", ((1, 2), (3, 4)), ((4, 1), (2, 3))),
    ("2114", ((2, 1), (4, 3)), ((1, 4), (3, 2))),
    ("1321", ((1, 3), (4, 2)), ((2, 1), (3, 4))),
    ("3112", ((3, 1), (2, 4)), ((1, 2), (4, 3))),
    ("1341", ((1, 3), (2, 4)), ((4, 1), (3, 2))),
    ("3114", ((3, 1), (4, 2)), ((1, 4), (2, 3))),
    ("1421", ((1, 4), (3, 2)), ((2, 1), (4, 3))),
    ("4112", ((4, 1), (2, 3)), ((1, 2), (3, 4))),
    ("1431", ((1, 4), (2, 3)), ((3, 1), (4, 2))),
    ("4113", ((4, 1), (3, 2)), ((1, 3), (2, 4))),
]


@dataclass(frozen=True)
class ScheduleSpec:
    """Pairings of the last two matchdays, identified by a 4-digit label."""

    label: str
    md5: tuple[Pair, Pair]
    md6: tuple[Pair, Pair]

    def last_two_pairs(self) -> set[Pair]:
        return set(self.md5) | set(self.md6)

    def first_eight_pairs(self) -> list[Pair]:
        """Ordered pairs played within matchdays 1-4 (set difference)."""
        rest = self.last_two_pairs()
        return [p for p in all_ordered_pairs() if p not in rest]

    def double_partner(self) -> dict[int, int]:
        """For each slot, the opponent it meets twice within matchdays 1-4."""
        counts: dict[frozenset[int], int] = {}
        for h, a in self.first_eight_pairs():
            counts[frozenset((h, a))] = counts.get(frozenset((h, a)), 0) + 1
        partner: dict[int, int] = {}
        for pair, n in counts.items():
            if n == 2:
                x, y = sorted(pair)
                partner[x] = y
                partner[y] = x
        return partner


@dataclass(frozen=True)
class FullFixture:
    """Six matchdays of two ordered pairings each."""

    matchdays: tuple[tuple[Pair, Pair], ...]


def _generated_rows() -> list[tuple[str, tuple[Pair, Pair], tuple[Pair, Pair]]]:
    """Construct the schedule list from first principles.

    The pot-1 team picks its matchday-5 opponent (3 ways), its matchday-6
    opponent (2 ways) and whether it is at home on matchday 5 or 6; all
    other orientations follow from the one-home-one-away rule for the
    last two matchdays.
    """
    rows = []
    for o5 in (2, 3, 4):
        for o6 in sorted(set(SLOTS) - {1, o5}):
            rest = next(iter(set(SLOTS) - {1, o5, o6}))
            for home5 in (True, False):
                if home5:
                    md5 = ((1, o5), (rest, o6))
                    md6 = ((o6, 1), (o5, rest))
                else:
                    md5 = ((o5, 1), (o6, rest))
                    md6 = ((1, o6), (rest, o5))
                label = f"{md5[0][0]}{md5[0][1]}{md6[0][0]}{md6[0][1]}"
                rows.append((label, md5, md6))
    return rows


if _generated_rows() != _TABLE_ROWS:  # typo guard for the hard-coded table
    raise AssertionError("hard-coded schedule table disagrees with its generator")

_SPECS = [ScheduleSpec(label, md5, md6) for label, md5, md6 in _TABLE_ROWS]
_BY_LABEL = {s.label: s for s in _SPECS}

ALL_LABELS = tuple(s.label for s in _SPECS)


def enumerate_schedules() -> list[ScheduleSpec]:
    """All 12 legal schedules, in canonical table order."""
    return list(_SPECS)


def schedule_from_label(label: str) -> ScheduleSpec:
    try:
        return _BY_LABEL[label]
    except KeyError:
        raise InvalidScheduleError(
            f"unknown schedule {label!r}; valid labels: {', '.join(ALL_LABELS)}"
        ) from None


def _mirror(md: tuple[Pair, Pair]) -> tuple[Pair, Pair]:
    return ((md[0][1], md[0][0]), (md[1][1], md[1][0]))


def expand_fixture(spec: ScheduleSpec) -> FullFixture:
    """Expand a schedule into six matchdays.

    Matchday 1 mirrors matchday 6, matchday 2 mirrors matchday 5, and
    matchdays 3/4 are the two legs of the remaining pairing, the lower
    slot of each pair hosting on matchday 4.
    """
    if _BY_LABEL.get(spec.label) != spec:
        raise InvalidScheduleError(f"not one of the 12 valid schedules: {spec!r}")
    used = {frozenset(p) for p in spec.last_two_pairs()}
    remaining = sorted(
        (tuple(sorted(pair)) for pair in
         ({frozenset((i, j)) for i in SLOTS for j in SLOTS if i < j} - used)),
    )
    md4 = (remaining[0], remaining[1])
    fixture = FullFixture(
        matchdays=(
            _mirror(spec.md6),
            _mirror(spec.md5),
            _mirror(md4),
            md4,
            spec.md5,
            spec.md6,
        )
    )
    violations = validate_fixture(fixture)
    if violations:  # cannot happen for the 12 legal specs
        raise InvalidScheduleError(f"expansion of {spec.label} invalid: {violations}")
    return fixture


def validate_fixture(fixture: FullFixture) -> list[str]:
    """Return the names of all violated fixture constraints (empty = valid)."""
    violations = []
    mds = fixture.matchdays
    if len(mds) != 6 or any(len(md) != 2 for md in mds):
        return ["WrongShape"]

    for k, md in enumerate(mds):
        covered = {md[0][0], md[0][1], md[1][0], md[1][1]}
        if covered != set(SLOTS):
            violations.append("SlotRepeatsInMatchday")
            break

    seen = [p for md in mds for p in md]
    if len(set(seen)) != len(seen):
        violations.append("DuplicatePairing")
    if set(seen) != set(all_ordered_pairs()):
        violations.append("MissingPairing")

    for early, late in ((0, 5), (1, 4), (2, 3)):
        if {frozenset(p) for p in mds[early]} != {frozenset(p) for p in mds[late]} or \
                set(mds[early]) & set(mds[late]):
            violations.append("NotMirror")
            break

    for s in SLOTS:
        pattern = ["H" if any(p[0] == s for p in md) else "A" for md in mds]
        for k in range(4):
            if pattern[k] == pattern[k + 1] == pattern[k + 2]:
                violations.append(
                    "ThreeConsecutiveHome" if pattern[k] == "H" else "ThreeConsecutiveAway"
                )
        if pattern[0] == pattern[1]:
            violations.append("HomeAwayImbalanceFirstTwo")
        if pattern[4] == pattern[5]:
            violations.append("HomeAwayImbalanceLastTwo")

    # dedupe, preserving first-seen order
    return list(dict.fromkeys(violations))
