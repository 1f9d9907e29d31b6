"""CSV dataset schema, validation, and the synthetic corpus generator.

One row per match::

    season,home_name,away_name,home_pot,away_pot,home_coeff,away_coeff,home_goals,away_goals

Team names are informational only.  Pots must be 1..4, goals 0..99,
coefficients positive (they are only consumed when a coefficient-rated
model family is requested).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import MAX_GOALS, SLOTS, Score
from .errors import InvalidInputError
from .fit import MatchObservation
from .model import ModelParams, sample_score
from .schedule import enumerate_schedules, expand_fixture

FIELDS = (
    "season", "home_name", "away_name", "home_pot", "away_pot",
    "home_coeff", "away_coeff", "home_goals", "away_goals",
)


@dataclass(frozen=True)
class DatasetRow:
    season: str
    home_name: str
    away_name: str
    home_pot: int
    away_pot: int
    home_coeff: float
    away_coeff: float
    home_goals: int
    away_goals: int

    def __post_init__(self) -> None:
        if self.home_pot not in SLOTS or self.away_pot not in SLOTS:
            raise InvalidInputError("pots must be integers 1..4")
        for g in (self.home_goals, self.away_goals):
            if not 0 <= g <= MAX_GOALS:
                raise InvalidInputError(f"goals must be 0..{MAX_GOALS}")
        if self.home_coeff < 0 or self.away_coeff < 0:
            raise InvalidInputError("coefficients must be non-negative")


def _parse_row(record: dict[str, str], lineno: int) -> DatasetRow:
    try:
        return DatasetRow(
            season=record["season"],
            home_name=record["home_name"],
            away_name=record["away_name"],
            home_pot=int(record["home_pot"]),
            away_pot=int(record["away_pot"]),
            home_coeff=float(record["home_coeff"]),
            away_coeff=float(record["away_coeff"]),
            home_goals=int(record["home_goals"]),
            away_goals=int(record["away_goals"]),
        )
    except (KeyError, ValueError, TypeError, InvalidInputError) as exc:
        raise InvalidInputError(f"line {lineno}: {exc}") from None


def read_dataset(path: str) -> list[DatasetRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != FIELDS:
            raise InvalidInputError(
                f"line 1: header must be {','.join(FIELDS)}"
            )
        return [_parse_row(rec, lineno) for lineno, rec in enumerate(reader, start=2)]


def write_dataset(rows: Iterable[DatasetRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for r in rows:
        writer.writerow([
            r.season, r.home_name, r.away_name, r.home_pot, r.away_pot,
            f"{r.home_coeff:g}", f"{r.away_coeff:g}", r.home_goals, r.away_goals,
        ])
    return buf.getvalue()


def to_observations(rows: Sequence[DatasetRow], rating: str) -> list[MatchObservation]:
    """Attach the rating column a model family consumes ("pot" or "coeff")."""
    if rating == "pot":
        return [
            MatchObservation(r.season, float(r.home_pot), float(r.away_pot),
                             Score(r.home_goals, r.away_goals))
            for r in rows
        ]
    if rating == "coeff":
        for k, r in enumerate(rows):
            if r.home_coeff <= 0 or r.away_coeff <= 0:
                raise InvalidInputError(
                    f"line {k + 2}: coefficient-rated models need positive coefficients"
                )
        return [
            MatchObservation(r.season, r.home_coeff, r.away_coeff,
                             Score(r.home_goals, r.away_goals))
            for r in rows
        ]
    raise InvalidInputError(f"unknown rating kind {rating!r}")


def synth_dataset(params: ModelParams, seasons: int, seed: int) -> list[DatasetRow]:
    """Synthetic corpus: ``seasons`` x 8 groups x 12 matches, pot-rated teams.

    Group g of each season follows legal schedule g mod 12; scores come
    from ``params`` with ratings equal to the pot index.  Coefficients
    are emitted equal to the pot index as well.
    """
    if seasons < 1:
        raise InvalidInputError("seasons must be >= 1")
    rng = np.random.default_rng([seed])
    specs = enumerate_schedules()
    rows = []
    for season_idx in range(seasons):
        season = f"S{season_idx + 1:02d}"
        for group in range(8):
            fixture = expand_fixture(specs[group % len(specs)])
            for matchday in fixture.matchdays:
                for home, away in matchday:
                    score = sample_score(params, float(home), float(away), rng)
                    rows.append(DatasetRow(
                        season=season,
                        home_name=f"{season}-G{group + 1}-P{home}",
                        away_name=f"{season}-G{group + 1}-P{away}",
                        home_pot=home,
                        away_pot=away,
                        home_coeff=float(home),
                        away_coeff=float(away),
                        home_goals=score.home_goals,
                        away_goals=score.away_goals,
                    ))
    return rows
