"""Command-line surface: simulate, fit, evaluate, classify, synth.

Exit codes: 0 success, 2 input error, 3 insufficient data,
4 non-convergence.  Every command is deterministic given its flags;
wall-clock and timestamps appear only inside manifests.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .classify import classify_matchday, fixed_after_md4, fixed_after_md5, fixed_oracle
from .dataset import read_dataset, synth_dataset, to_observations, write_dataset
from .domain import (
    MatchClass,
    MatchRecord,
    Score,
    TieBreakRule,
    remaining_ordered_pairs,
)
from .errors import (
    BootstrapUnstableError,
    InvalidInputError,
    InvalidParameterError,
    InvalidScheduleError,
    InvalidStateError,
    StakelessError,
    UnsupportedFamilyError,
)
from .fit import (
    METRIC_SCORE,
    METRIC_SCORE_AND_OUTCOME,
    avg_distance,
    avg_hit_probability,
    baseline_predictor,
    bootstrap_ci,
    fit_mle,
    group_by_season,
    model_predictor,
    param_names,
)
from .model import (
    PRESETS,
    BaselineTable,
    ModelParams,
    params_from_text,
    params_to_text,
    preset,
)
from .montecarlo import (
    CountingMode,
    SimulationConfig,
    cost_curve,
    find_dominated,
    run_simulation,
    weighted_cost,
)
from .schedule import ALL_LABELS

EXIT_INPUT_ERROR = 2
EXIT_INSUFFICIENT_DATA = 3
EXIT_NON_CONVERGENCE = 4

_RULES = {r.value: r for r in TieBreakRule}
_COUNTING = {m.value: m for m in CountingMode}

#: r values used for the emitted cost curves.
DEFAULT_R_GRID = [round(0.1 * k, 1) for k in range(1, 10)] + [
    round(1.0 + 0.5 * k, 1) for k in range(0, 19)
]


def _fail(message: str, code: int) -> "SystemExit":
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(code)


def _manifest(command: str, config: dict, seed: int | None, started: float,
              outputs: dict) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config,
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }


def _manifest_text(manifest: dict) -> str:
    return "".join(
        f"# manifest {k} = {json.dumps(manifest[k], sort_keys=True)}\n"
        for k in sorted(manifest)
    )


def _load_params(value: str) -> ModelParams:
    if value in PRESETS:
        return preset(value)
    path = Path(value)
    if not path.is_file():
        raise InvalidInputError(
            f"{value!r} is neither a preset ({', '.join(PRESETS)}) nor a parameter file"
        )
    return params_from_text(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# simulate

def _parse_schedules(value: str) -> tuple[str, ...]:
    if value == "all":
        return ALL_LABELS
    labels = tuple(x.strip() for x in value.split(",") if x.strip())
    for lab in labels:
        if lab not in ALL_LABELS:
            raise InvalidScheduleError(
                f"unknown schedule {lab!r}; valid labels: {', '.join(ALL_LABELS)}"
            )
    return labels


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = SimulationConfig(
        runs=args.runs,
        seed=args.seed,
        rule=_RULES[args.rule],
        params=_load_params(args.model),
        schedules=_parse_schedules(args.schedules),
        counting_mode=_COUNTING[args.counting],
        threads=args.threads,
    )
    report = run_simulation(cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    ranks = {m: report.ranks(m) for m in ("weak_md5", "weak_md6", "strong_md6")}
    for r in report.rows:
        p5, p6, s6 = r.probabilities(report.counting_mode)
        rows.append({
            "schedule": r.label,
            "p_weak_md5": p5,
            "se_weak_md5": report.standard_error(r.label, "weak_md5"),
            "rank_weak_md5": ranks["weak_md5"][r.label],
            "p_weak_md6": p6,
            "se_weak_md6": report.standard_error(r.label, "weak_md6"),
            "rank_weak_md6": ranks["weak_md6"][r.label],
            "p_strong_md6": s6,
            "se_strong_md6": report.standard_error(r.label, "strong_md6"),
            "rank_strong_md6": ranks["strong_md6"][r.label],
            "alt_weak_md5": r.probabilities(_other_mode(report.counting_mode))[0],
            "alt_weak_md6": r.probabilities(_other_mode(report.counting_mode))[1],
            "alt_strong_md6": r.probabilities(_other_mode(report.counting_mode))[2],
            "fallback_tie_rate": r.fallback_tie_rate,
        })

    body = io.StringIO()
    writer = csv.writer(body, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in header])
    (out / "report.csv").write_text(body.getvalue(), encoding="utf-8")

    curve = cost_curve(report, args.w5, DEFAULT_R_GRID)
    body = io.StringIO()
    writer = csv.writer(body, lineterminator="\n")
    writer.writerow(["schedule", "r", "cost"])
    for label, r, cost in curve:
        writer.writerow([label, _fmt(r), _fmt(cost)])
    (out / "cost_curve.csv").write_text(body.getvalue(), encoding="utf-8")

    dominated = find_dominated(report) if len(report.rows) == 12 else []

    config_echo = {
        "runs": cfg.runs, "seed": cfg.seed, "rule": cfg.rule.value,
        "model": args.model, "family": cfg.params.family,
        "schedules": list(cfg.schedules), "counting": cfg.counting_mode.value,
        "w5": args.w5, "threads": cfg.effective_threads(),
    }
    manifest = _manifest(
        "simulate", config_echo, cfg.seed, started,
        {"report_csv": "report.csv", "cost_curve_csv": "cost_curve.csv",
         "report_json": "report.json"},
    )
    payload = {
        "manifest": manifest,
        "counting_mode": report.counting_mode.value,
        "schedules": rows,
        "dominated": [list(pair) for pair in dominated],
    }
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {out / 'report.json'} ({len(rows)} schedules, {cfg.runs} runs)")
    return 0


def _other_mode(mode: CountingMode) -> CountingMode:
    return (CountingMode.PER_MATCH_FRACTION if mode is CountingMode.AT_LEAST_ONE
            else CountingMode.AT_LEAST_ONE)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.8f}"
    return str(x)


# ---------------------------------------------------------------------------
# fit

def cmd_fit(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    rows = read_dataset(args.data)
    if len(rows) < 50:
        raise _fail(f"need at least 50 rows to fit, got {len(rows)}", EXIT_INSUFFICIENT_DATA)
    family = args.family
    rating = "pot" if family.endswith("pot") else "coeff"
    data = to_observations(rows, rating)
    result = fit_mle(data, family, tolerance=args.tolerance)
    intervals = None
    if args.bootstrap:
        intervals = bootstrap_ci(data, family, B=args.bootstrap, seed=args.seed,
                                 tolerance=args.tolerance)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "params.txt").write_text(params_to_text(result.params), encoding="utf-8")

    manifest = _manifest(
        "fit",
        {"data": args.data, "family": family, "bootstrap": args.bootstrap,
         "tolerance": args.tolerance, "rows": len(rows)},
        args.seed, started,
        {"params": "params.txt", "report": "fit_report.txt"},
    )
    lines = [
        f"family = {family}",
        f"observations = {len(data)}",
        f"log_likelihood = {result.log_likelihood!r}",
        f"converged = {str(result.converged).lower()}",
        f"iterations = {result.iterations}",
        f"gradient_norm = {result.gradient_norm!r}",
    ]
    for name in param_names(family):
        lines.append(f"{name} = {getattr(result.params, name)!r}")
        if intervals:
            lo, hi = intervals[name]
            lines.append(f"{name}_ci95 = {lo!r} {hi!r}")
    (out / "fit_report.txt").write_text(
        _manifest_text(manifest) + "\n".join(lines) + "\n", encoding="utf-8"
    )
    print(f"wrote {out / 'params.txt'} (log-likelihood {result.log_likelihood:.3f})")
    if not result.converged:
        raise _fail("fit did not reach the gradient tolerance", EXIT_NON_CONVERGENCE)
    return 0


# ---------------------------------------------------------------------------
# evaluate

def cmd_evaluate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    if not 0.5 < args.pi < 1.0:
        raise _fail(f"--pi must lie strictly between 0.5 and 1, got {args.pi}",
                    EXIT_INPUT_ERROR)
    rows = read_dataset(args.data)
    if not rows:
        raise _fail("dataset is empty", EXIT_INSUFFICIENT_DATA)
    params = _load_params(args.params)
    rating = "pot" if params.uses_pot_rating else "coeff"
    data = to_observations(rows, rating)

    baseline_rows = read_dataset(args.baseline_data) if args.baseline_data else rows
    table = BaselineTable.from_scores(
        Score(r.home_goals, r.away_goals) for r in baseline_rows
    )

    predictors = {"model": model_predictor(params), "baseline": baseline_predictor(table)}
    groups = {"all": data, **group_by_season(data)}
    lines = []
    for gname in sorted(groups):
        for pname, pred in predictors.items():
            obs = groups[gname]
            lines.append(
                f"hit_probability/{gname}/{pname} = "
                f"{avg_hit_probability(pred, obs)!r}"
            )
            for metric in (METRIC_SCORE, METRIC_SCORE_AND_OUTCOME):
                lines.append(
                    f"avg_distance/{metric}/{gname}/{pname} = "
                    f"{avg_distance(pred, obs, metric, args.pi)!r}"
                )

    manifest = _manifest(
        "evaluate",
        {"data": args.data, "params": args.params, "pi": args.pi,
         "baseline_data": args.baseline_data, "rows": len(rows)},
        None, started, {"metrics": str(args.out)},
    )
    text = _manifest_text(manifest) + "\n".join(lines) + "\n"
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {args.out} ({len(lines)} metrics)")
    return 0


# ---------------------------------------------------------------------------
# classify

_STATE_LINE = re.compile(
    r"^MD(?P<md>[1-6]):\s*(?P<home>[1-4])-(?P<away>[1-4])(?:\s+(?P<hg>\d+):(?P<ag>\d+))?\s*$"
)


def _parse_state(text: str) -> tuple[list[list[MatchRecord]], dict[int, list[tuple[int, int]]]]:
    played: dict[int, list[MatchRecord]] = {}
    pending: dict[int, list[tuple[int, int]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _STATE_LINE.match(line)
        if not m:
            raise InvalidInputError(
                f"line {lineno}: expected 'MD<k>: <home>-<away> [<h>:<a>]', got {line!r}"
            )
        md = int(m.group("md"))
        home, away = int(m.group("home")), int(m.group("away"))
        if m.group("hg") is not None:
            played.setdefault(md, []).append(
                MatchRecord(home, away, Score(int(m.group("hg")), int(m.group("ag"))))
            )
        else:
            pending.setdefault(md, []).append((home, away))
    if not played:
        raise InvalidInputError("state file contains no played matches")
    k = max(played)
    if sorted(played) != list(range(1, k + 1)) or any(len(played[i]) != 2 for i in played):
        raise InvalidInputError("played matchdays must form a complete prefix of 2-match days")
    if any(md <= k for md in pending):
        raise InvalidInputError("remaining pairings must come after the played matchdays")
    return [played[i] for i in range(1, k + 1)], pending


def cmd_classify(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    text = Path(args.state).read_text(encoding="utf-8")
    matchdays, pending = _parse_state(text)
    rule = _RULES[args.rule]
    matches = [m for md in matchdays for m in md]
    k = len(matchdays)

    if k == 4:
        fixed = fixed_after_md4(matches, rule)
        next_md = 5
    elif k == 5:
        fixed = fixed_after_md5(matches, rule)
        next_md = 6
    else:
        raise _fail(f"need 4 or 5 complete matchdays, got {k}", EXIT_INPUT_ERROR)

    next_pairs = pending.get(next_md)
    if next_pairs is None and k == 5:
        next_pairs = remaining_ordered_pairs(matches)
    if not next_pairs or len(next_pairs) != 2:
        raise _fail(f"state file must list the two matchday-{next_md} pairings",
                    EXIT_INPUT_ERROR)
    classes = classify_matchday(fixed, next_pairs)

    lines = [f"rule = {rule.value}", f"matchdays_played = {k}"]
    for slot in (1, 2, 3, 4):
        pos = fixed.positions[slot - 1]
        lines.append(f"fixed/{slot} = {pos if pos is not None else 'open'}")
    for (home, away), cls in zip(next_pairs, classes):
        lines.append(f"class/MD{next_md}/{home}-{away} = {cls.value}")

    oracle_ok = None
    if args.oracle:
        remaining = [p for md in sorted(pending) for p in pending[md]]
        if not remaining:
            remaining = remaining_ordered_pairs(matches)
        oracle = fixed_oracle(matches, remaining, rule)
        oracle_ok = oracle == fixed
        lines.append(f"oracle_agreement = {'yes' if oracle_ok else 'no'}")

    manifest = _manifest(
        "classify", {"state": args.state, "rule": rule.value, "oracle": args.oracle},
        None, started, {"classification": args.out or "-"},
    )
    body = "\n".join(lines) + "\n"
    print(body, end="")
    if args.out:
        Path(args.out).write_text(_manifest_text(manifest) + body, encoding="utf-8")
    if oracle_ok is False:
        raise _fail("decision procedure disagrees with the brute-force oracle", 1)
    return 0


# ---------------------------------------------------------------------------
# synth

def cmd_synth(args: argparse.Namespace) -> int:
    params = _load_params(args.params)
    rows = synth_dataset(params, seasons=args.seasons, seed=args.seed)
    Path(args.out).write_text(write_dataset(rows), encoding="utf-8")
    print(f"wrote {args.out} ({len(rows)} matches, {args.seasons} seasons)")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stakeless",
        description="Classify stakeless group matches and evaluate match schedules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte-Carlo schedule comparison")
    p.add_argument("--runs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--model", default="4p-pot", help="preset name or parameter file")
    p.add_argument("--rule", choices=sorted(_RULES), default="head-to-head")
    p.add_argument("--schedules", default="all", help="comma-separated labels or 'all'")
    p.add_argument("--counting", choices=sorted(_COUNTING), default="at-least-one")
    p.add_argument("--w5", type=float, default=1.0,
                   help="cost of a weakly stakeless matchday-5 match")
    p.add_argument("--threads", type=int, default=0,
                   help="worker threads (0 = STAKELESS_THREADS or 1)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood parameter estimation")
    p.add_argument("--data", required=True)
    p.add_argument("--family", choices=sorted(PRESETS), required=True)
    p.add_argument("--bootstrap", type=int, default=0, metavar="B")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="forecast-quality metrics vs the baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--params", required=True, help="parameter file or preset name")
    p.add_argument("--pi", type=float, default=0.9)
    p.add_argument("--baseline-data", default=None)
    p.add_argument("--out", default="metrics.txt")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", help="fixed positions and match classes for a state")
    p.add_argument("--state", required=True)
    p.add_argument("--rule", choices=sorted(_RULES), default="head-to-head")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check with the brute-force oracle")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seasons", type=int, default=17)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--params", default="4p-pot", help="preset name or parameter file")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, InvalidParameterError, InvalidScheduleError,
            InvalidStateError, UnsupportedFamilyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except BootstrapUnstableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NON_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
