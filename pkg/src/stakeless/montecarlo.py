"""Season simulation over all legal schedules and report assembly.

Every run samples the 12 ordered-pair results once and evaluates all
requested schedules on those same results (common random numbers), so
schedule comparisons share their sampling noise.  Run ``i`` always draws
from the same fixed slice of a counter-based uniform stream keyed by the
seed, which makes reports bit-identical for any chunking or worker
count.

Stakeless probabilities are counted in two modes: the probability that a
matchday contains at least one such match (headline mode, which is what
the published per-matchday probabilities correspond to) and the expected
fraction of a matchday's two matches that are stakeless.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import engine
from .domain import TieBreakRule
from .errors import InvalidInputError, UnsupportedFamilyError
from .model import DEFAULT_SIMULATION_FAMILY, FAMILY_BASELINE, ModelParams, preset, rates
from .schedule import ALL_LABELS, ScheduleSpec, schedule_from_label

_CHUNK_RUNS = 1 << 15


class CountingMode(Enum):
    AT_LEAST_ONE = "at-least-one"
    PER_MATCH_FRACTION = "per-match"


@dataclass(frozen=True)
class SimulationConfig:
    runs: int = 1_000_000
    seed: int = 42
    rule: TieBreakRule = TieBreakRule.HEAD_TO_HEAD
    params: ModelParams = field(default_factory=lambda: preset(DEFAULT_SIMULATION_FAMILY))
    schedules: tuple[str, ...] = ALL_LABELS
    counting_mode: CountingMode = CountingMode.AT_LEAST_ONE
    threads: int = 0  # 0 = take STAKELESS_THREADS, default 1

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise InvalidInputError("runs must be >= 1")
        if self.params.family == FAMILY_BASELINE:
            raise UnsupportedFamilyError("cannot simulate from the baseline family")
        for label in self.schedules:
            schedule_from_label(label)
        if len(set(self.schedules)) != len(self.schedules):
            raise InvalidInputError("duplicate schedule labels")

    def effective_threads(self) -> int:
        if self.threads > 0:
            return self.threads
        env = os.environ.get("STAKELESS_THREADS", "").strip()
        return max(1, int(env)) if env else 1


@dataclass(frozen=True)
class ScheduleStats:
    """Simulation tallies for one schedule, as probabilities over runs."""

    label: str
    runs: int
    weak_md5_any: float
    weak_md5_frac: float
    strong_md5_frac: float
    weak_md6_any: float
    weak_md6_frac: float
    strong_md6_any: float
    strong_md6_frac: float
    fallback_tie_rate: float

    def probabilities(self, mode: CountingMode) -> tuple[float, float, float]:
        """(weak matchday 5, weak matchday 6, strong matchday 6) under ``mode``."""
        if mode is CountingMode.AT_LEAST_ONE:
            return (self.weak_md5_any, self.weak_md6_any, self.strong_md6_any)
        return (self.weak_md5_frac, self.weak_md6_frac, self.strong_md6_frac)


METRICS = ("weak_md5", "weak_md6", "strong_md6")


@dataclass(frozen=True)
class StakelessReport:
    runs: int
    seed: int
    rule: TieBreakRule
    counting_mode: CountingMode
    model_family: str
    rows: tuple[ScheduleStats, ...]

    def row(self, label: str) -> ScheduleStats:
        for r in self.rows:
            if r.label == label:
                return r
        raise InvalidInputError(f"schedule {label!r} not in report")

    def probability(self, label: str, metric: str) -> float:
        p5, p6, s6 = self.row(label).probabilities(self.counting_mode)
        return {"weak_md5": p5, "weak_md6": p6, "strong_md6": s6}[metric]

    def standard_error(self, label: str, metric: str) -> float:
        return error_bound(self.probability(label, metric), self.runs)

    def ranks(self, metric: str) -> dict[str, int]:
        """Competition ranks, 1 = lowest probability."""
        vals = {r.label: self.probability(r.label, metric) for r in self.rows}
        return {
            lab: 1 + sum(1 for v in vals.values() if v < val) for lab, val in vals.items()
        }


def error_bound(p: float, n: int) -> float:
    """Standard error of a simulated probability."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return math.sqrt(p * (1.0 - p) / n)


def _schedule_arrays(specs: list[ScheduleSpec]) -> tuple[np.ndarray, ...]:
    n = len(specs)
    md5 = np.zeros((n, 2), np.int64)
    md6 = np.zeros((n, 2), np.int64)
    played8 = np.zeros((n, 8), np.int64)
    double_partner = np.zeros((n, 4), np.int64)
    for k, spec in enumerate(specs):
        md5[k] = [engine.PAIR_INDEX[p] for p in spec.md5]
        md6[k] = [engine.PAIR_INDEX[p] for p in spec.md6]
        played8[k] = [engine.PAIR_INDEX[p] for p in spec.first_eight_pairs()]
        partner = spec.double_partner()
        double_partner[k] = [partner[s] - 1 for s in (1, 2, 3, 4)]
    return md5, md6, played8, double_partner


def _rate_tables(params: ModelParams) -> tuple[np.ndarray, np.ndarray, float]:
    lam_h = np.zeros(12)
    lam_a = np.zeros(12)
    for k, (i, j) in enumerate(engine.ORDERED_PAIRS):
        lam_h[k], lam_a[k] = rates(params, float(i), float(j))
    return lam_h, lam_a, float(params.c)


def draws_per_run(params: ModelParams) -> int:
    """Uniforms consumed per run; a multiple of 4 so chunks align exactly."""
    return 36 if params.is_bivariate else 24


def run_uniforms(seed: int, start_run: int, n_runs: int, k_per_run: int) -> np.ndarray:
    """Uniform block for runs [start_run, start_run + n_runs)."""
    gen = np.random.Generator(np.random.Philox(key=seed))
    gen.bit_generator.advance(start_run * k_per_run // 4)
    return gen.random((n_runs, k_per_run))


def _simulate_span(cfg: SimulationConfig, arrays, lam_h, lam_a, lam_c,
                   start: int, n: int) -> np.ndarray:
    md5, md6, played8, double_partner = arrays
    counts = np.zeros((md5.shape[0], 8), np.int64)
    k_per_run = draws_per_run(cfg.params)
    rule_id = (engine.RULE_HEAD_TO_HEAD if cfg.rule is TieBreakRule.HEAD_TO_HEAD
               else engine.RULE_GOAL_DIFF)
    uniforms = run_uniforms(cfg.seed, start, n, k_per_run)
    engine.simulate_chunk(uniforms, lam_h, lam_a, lam_c, engine.PAIR_HOME,
                          engine.PAIR_AWAY, md5, md6, played8, double_partner,
                          rule_id, 100, counts)
    return counts


def run_simulation(cfg: SimulationConfig) -> StakelessReport:
    """Simulate ``cfg.runs`` group seasons and tally stakeless matches."""
    specs = [schedule_from_label(lab) for lab in cfg.schedules]
    arrays = _schedule_arrays(specs)
    lam_h, lam_a, lam_c = _rate_tables(cfg.params)

    spans = [(s, min(_CHUNK_RUNS, cfg.runs - s)) for s in range(0, cfg.runs, _CHUNK_RUNS)]
    threads = cfg.effective_threads()
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(
                pool.map(lambda sp: _simulate_span(cfg, arrays, lam_h, lam_a, lam_c, *sp), spans)
            )
    else:
        partials = [_simulate_span(cfg, arrays, lam_h, lam_a, lam_c, *sp) for sp in spans]
    counts = np.sum(partials, axis=0)

    strong5 = int(counts[:, 2].sum())
    if strong5 != 0:
        raise AssertionError(
            f"invariant violated: {strong5} strongly stakeless matchday-5 matches observed"
        )

    n = cfg.runs
    rows = tuple(
        ScheduleStats(
            label=spec.label,
            runs=n,
            weak_md5_any=counts[k, 0] / n,
            weak_md5_frac=counts[k, 1] / (2 * n),
            strong_md5_frac=counts[k, 2] / (2 * n),
            weak_md6_any=counts[k, 3] / n,
            weak_md6_frac=counts[k, 4] / (2 * n),
            strong_md6_any=counts[k, 5] / n,
            strong_md6_frac=counts[k, 6] / (2 * n),
            fallback_tie_rate=counts[k, 7] / n,
        )
        for k, spec in enumerate(specs)
    )
    return StakelessReport(
        runs=n,
        seed=cfg.seed,
        rule=cfg.rule,
        counting_mode=cfg.counting_mode,
        model_family=cfg.params.family,
        rows=rows,
    )


def weighted_cost(row: ScheduleStats, w5: float, r: float,
                  mode: CountingMode = CountingMode.AT_LEAST_ONE) -> float:
    """Aggregate cost with matchday-6 weak cost normalised to 1."""
    if w5 < 0 or r < 0:
        raise InvalidInputError("cost weights must be non-negative")
    p5, p6, s6 = row.probabilities(mode)
    return w5 * p5 + p6 + r * s6


def cost_curve(report: StakelessReport, w5: float,
               r_values: list[float]) -> list[tuple[str, float, float]]:
    """(schedule, r, cost) triples for plotting, schedules in report order."""
    return [
        (row.label, r, weighted_cost(row, w5, r, report.counting_mode))
        for row in report.rows
        for r in r_values
    ]


def find_dominated(report: StakelessReport) -> list[tuple[str, str]]:
    """(dominated, dominator) pairs over the full 12-schedule report.

    T dominates S when T's estimate is no larger on all three
    probabilities and smaller on at least one by more than three standard
    errors of the difference.
    """
    if len(report.rows) != 12:
        raise InvalidInputError("dominance analysis needs all 12 schedules")
    out = []
    for s in report.rows:
        for t in report.rows:
            if s.label == t.label:
                continue
            not_worse = True
            clearly_better = False
            for metric in METRICS:
                ps = report.probability(s.label, metric)
                pt = report.probability(t.label, metric)
                if pt > ps:
                    not_worse = False
                    break
                se_diff = math.hypot(
                    report.standard_error(s.label, metric),
                    report.standard_error(t.label, metric),
                )
                if ps - pt > 3.0 * se_diff:
                    clearly_better = True
            if not_worse and clearly_better:
                out.append((s.label, t.label))
    return out
