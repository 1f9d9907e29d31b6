"""Match-score models: log-linear Poisson rates, exact pmf, sampling.

Five parametric families are supported.  The 4-parameter variants tie
the opponent-rating weights to 1; the bivariate variant adds a shared
Poisson component with mean ``c`` to both sides, so the marginal means
are ``lambda + c``.  A sixth "baseline" family is a plain empirical
frequency table.

Ratings are UEFA club coefficients for the ``*-coeff`` families and the
seeding pot index (1..4) for the ``*-pot`` families.  Sampling inverts
uniforms from the caller's random stream, so equal seeds give equal
draw sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .domain import Score
from .errors import InvalidInputError, InvalidParameterError, UnsupportedFamilyError

FAMILY_6P_COEFF = "6p-coeff"
FAMILY_4P_COEFF = "4p-coeff"
FAMILY_6P_POT = "6p-pot"
FAMILY_4P_POT = "4p-pot"
FAMILY_BIVARIATE = "bivariate-coeff"
FAMILY_BASELINE = "baseline"

FOUR_PARAM_FAMILIES = (FAMILY_4P_COEFF, FAMILY_4P_POT)
SIX_PARAM_FAMILIES = (FAMILY_6P_COEFF, FAMILY_6P_POT)
PARAMETRIC_FAMILIES = FOUR_PARAM_FAMILIES + SIX_PARAM_FAMILIES + (FAMILY_BIVARIATE,)

_PARAM_KEYS = ("alpha_h", "alpha_a", "beta_h", "beta_a", "gamma_h", "gamma_a", "c")

#: Hard cap on sampled goals; equals the validated-input goal cap.
SAMPLE_GOAL_CAP = 99


@dataclass(frozen=True)
class ModelParams:
    family: str
    alpha_h: float
    alpha_a: float
    beta_h: float
    beta_a: float
    gamma_h: float = 1.0
    gamma_a: float = 1.0
    c: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in PARAMETRIC_FAMILIES + (FAMILY_BASELINE,):
            raise InvalidParameterError(f"unknown model family {self.family!r}")
        if self.c < 0:
            raise InvalidParameterError("covariance parameter c must be >= 0")
        if self.family != FAMILY_BIVARIATE and self.c != 0.0:
            raise InvalidParameterError(f"family {self.family} requires c = 0")
        if self.family in FOUR_PARAM_FAMILIES and (self.gamma_h != 1.0 or self.gamma_a != 1.0):
            raise InvalidParameterError(f"family {self.family} requires gamma_h = gamma_a = 1")

    @property
    def is_bivariate(self) -> bool:
        return self.family == FAMILY_BIVARIATE

    @property
    def uses_pot_rating(self) -> bool:
        return self.family in (FAMILY_4P_POT, FAMILY_6P_POT)


#: Published point estimates, by family.
PRESETS: Mapping[str, ModelParams] = {
    FAMILY_6P_COEFF: ModelParams(FAMILY_6P_COEFF, 0.335, 0.087, 0.006, 0.006, 0.833, 0.963),
    FAMILY_4P_COEFF: ModelParams(FAMILY_4P_COEFF, 0.409, 0.102, 0.006, 0.006),
    FAMILY_6P_POT: ModelParams(FAMILY_6P_POT, 0.464, 0.143, -0.177, -0.182, 0.910, 0.922),
    FAMILY_4P_POT: ModelParams(FAMILY_4P_POT, 0.424, 0.108, -0.169, -0.175),
    FAMILY_BIVARIATE: ModelParams(
        FAMILY_BIVARIATE, 0.335, 0.087, 0.006, 0.006, 0.833, 0.963, math.exp(-12.458)
    ),
}

#: Family used by default when simulating group seasons.
DEFAULT_SIMULATION_FAMILY = FAMILY_4P_POT


def rates(p: ModelParams, r_home: float, r_away: float) -> tuple[float, float]:
    """Expected goals (home, away) for one match between the given ratings."""
    if p.family == FAMILY_BASELINE:
        raise UnsupportedFamilyError("the baseline family has no rate parameters")
    if r_home <= 0 or r_away <= 0:
        raise InvalidParameterError("ratings must be positive")
    lam_h = math.exp(p.alpha_h + p.beta_h * (r_home - p.gamma_h * r_away))
    lam_a = math.exp(p.alpha_a + p.beta_a * (r_away - p.gamma_a * r_home))
    return lam_h, lam_a


def _log_poisson_pmf(k: int, lam: float) -> float:
    return k * math.log(lam) - lam - math.lgamma(k + 1.0)


def score_pmf(p: ModelParams, r_home: float, r_away: float, s: Score) -> float:
    """Probability of the exact score ``s`` under the model."""
    lam_h, lam_a = rates(p, r_home, r_away)
    h, a = s.home_goals, s.away_goals
    if not p.is_bivariate or p.c == 0.0:
        return math.exp(_log_poisson_pmf(h, lam_h) + _log_poisson_pmf(a, lam_a))
    c = p.c
    # shared-component form: sum over the latent common count k
    log_terms = [
        (h - k) * math.log(lam_h)
        + (a - k) * math.log(lam_a)
        + k * math.log(c)
        - math.lgamma(h - k + 1.0)
        - math.lgamma(a - k + 1.0)
        - math.lgamma(k + 1.0)
        for k in range(min(h, a) + 1)
    ]
    m = max(log_terms)
    return math.exp(-(lam_h + lam_a + c)) * math.exp(m) * sum(
        math.exp(t - m) for t in log_terms
    )


def poisson_inverse(lam: float, u: float) -> int:
    """Smallest k with CDF(k) >= u; sequential inversion, capped at 99."""
    p = math.exp(-lam)
    cdf = p
    k = 0
    while u > cdf and k < SAMPLE_GOAL_CAP:
        k += 1
        p *= lam / k
        cdf += p
    return k


def sample_score(p: ModelParams, r_home: float, r_away: float, rng: np.random.Generator) -> Score:
    """Draw one score.

    Consumes exactly two uniforms (home then away) per call, or three
    for the bivariate family (home, away, shared component).
    """
    lam_h, lam_a = rates(p, r_home, r_away)
    h = poisson_inverse(lam_h, rng.random())
    a = poisson_inverse(lam_a, rng.random())
    if p.is_bivariate:
        shared = poisson_inverse(p.c, rng.random())
        h = min(h + shared, SAMPLE_GOAL_CAP)
        a = min(a + shared, SAMPLE_GOAL_CAP)
    return Score(h, a)


@dataclass(frozen=True)
class BaselineTable:
    """Empirical score distribution: relative frequency per observed score."""

    probs: Mapping[Score, float]

    def __post_init__(self) -> None:
        total = sum(self.probs.values())
        if abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"baseline probabilities sum to {total}, expected 1")

    @classmethod
    def from_scores(cls, scores: Iterable[Score]) -> "BaselineTable":
        counts: dict[Score, int] = {}
        n = 0
        for s in scores:
            counts[s] = counts.get(s, 0) + 1
            n += 1
        if n == 0:
            raise InvalidInputError("cannot build a baseline from no scores")
        return cls({s: k / n for s, k in counts.items()})


def baseline_pmf(t: BaselineTable, s: Score) -> float:
    """Relative frequency of ``s`` in the training set, 0 if unseen."""
    return t.probs.get(s, 0.0)


def params_to_text(p: ModelParams) -> str:
    lines = [f"family = {p.family}"]
    lines += [f"{k} = {getattr(p, k)!r}" for k in _PARAM_KEYS]
    return "\n".join(lines) + "\n"


def params_from_text(text: str) -> ModelParams:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidInputError(f"parameter file line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    try:
        family = values.pop("family")
    except KeyError:
        raise InvalidInputError("parameter file missing 'family'") from None
    try:
        numeric = {k: float(values[k]) for k in _PARAM_KEYS if k in values}
    except ValueError as exc:
        raise InvalidInputError(f"bad numeric value in parameter file: {exc}") from None
    unknown = set(values) - set(_PARAM_KEYS)
    if unknown:
        raise InvalidInputError(f"unknown parameter keys: {sorted(unknown)}")
    return ModelParams(family=family, **numeric)


def preset(name: str) -> ModelParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnsupportedFamilyError(
            f"no preset named {name!r}; available: {', '.join(PRESETS)}"
        ) from None


def with_family(p: ModelParams, family: str) -> ModelParams:
    return replace(p, family=family)
