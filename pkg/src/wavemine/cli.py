"""Command-line pipeline: synth, abstract, mine, matrix, evaluate, render.

Every run writes a run manifest (tool version, input digests, effective
config, per-stage timings; mining time is reported separately from loading
and abstraction).  All stages are deterministic for fixed inputs and seeds;
only the manifest's timing fields vary between reruns.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .abstraction import abstract_cohort, load_feature_config, feature_config_payload
from .encoding import (
    CohortIntervals,
    groups_from_payload,
    groups_to_payload,
    read_intervals_json,
    write_intervals_json,
)
from .errors import ConfigError, WaveMineError
from .ingest import carry_forward, parse_cohort, parse_outcomes, write_cohort_csv, write_outcomes_csv
from .matrix import (
    build_matrix,
    read_matrix_csv,
    sidecar_payload,
    write_matrix_csv,
    write_sidecar_json,
)
from .miner import MinerConfig, PatternResult, RiskStats, TemporalPattern, mine_with_stats, odds_ratio, relative_risk
from .survival import (
    DEFAULT_LAMBDA_GRID,
    cross_validate,
    cv_score_vector,
    rank_patterns,
    rr_score,
)
from .synth import SynthConfig, generate, parse_synth_config
from .viz import RenderPattern, RenderSpec, render_svg

log = logging.getLogger(__name__)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _read_json(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from None


def _run_manifest(path: Path, command: str, inputs: dict, config: dict, timings: dict) -> None:
    _write_json(
        path,
        {
            "tool": "wavemine",
            "version": __version__,
            "command": command,
            "input_digests": {name: _digest(Path(p)) for name, p in inputs.items()},
            "config": config,
            "timings_seconds": {k: round(v, 6) for k, v in timings.items()},
        },
    )


def _patterns_payload(results, config: MinerConfig, doc: CohortIntervals, n: int, events: int):
    # deliberately excludes runtime knobs (workers): the artifact is identical
    # for any degree of parallelism
    return {
        "config": {
            "minsup": config.minsup,
            "minsup_scope": config.minsup_scope,
            "risk_threshold": config.risk_sup,
            "measure": config.measure,
            "max_length": config.max_length,
        },
        "total_patients": n,
        "total_events": events,
        "levels": {f: dict(by) for f, by in sorted(doc.levels.items())},
        "patterns": [
            {
                "id": f"P{j + 1}",
                "key": r.pattern.key(),
                "groups": groups_to_payload(r.pattern.groups),
                "a": r.stats.a,
                "b": r.stats.b,
                "c": r.stats.c,
                "d": r.stats.d,
                "support_pop": r.stats.support_pop,
                "support_event": r.stats.support_event,
                "risk": r.stats.risk,
                "rr": relative_risk(r.stats),
                "odds_ratio": odds_ratio(r.stats),
                "matched_patient_ids": list(r.matched),
            }
            for j, r in enumerate(results)
        ],
    }


def _results_from_payload(payload) -> list[PatternResult]:
    out = []
    for entry in payload["patterns"]:
        pattern = TemporalPattern(groups=groups_from_payload(entry["groups"]), closed=True)
        stats = RiskStats(
            a=entry["a"],
            b=entry["b"],
            c=entry["c"],
            d=entry["d"],
            support_pop=entry["support_pop"],
            support_event=entry["support_event"],
            risk=entry["risk"],
        )
        out.append(
            PatternResult(pattern=pattern, stats=stats, matched=tuple(entry["matched_patient_ids"]))
        )
    return out


def _load_intervals(path: Path) -> CohortIntervals:
    with open(path, "r", encoding="utf-8") as fh:
        return read_intervals_json(fh)


MINE_DEFAULTS = {
    "minsup": 0.05,
    "minsup_scope": "event_group",
    "risk_threshold": 1.5,
    "measure": "rr",
    "max_length": None,
    "workers": 1,
}
EVAL_DEFAULTS = {"k": 5, "seed": 0, "lambda_grid": ",".join(str(x) for x in DEFAULT_LAMBDA_GRID)}


def _effective(args, defaults: dict) -> dict:
    """Flag > config file > built-in default."""
    doc = _read_json(Path(args.config)) if getattr(args, "config", None) else {}
    out = {}
    for name, default in defaults.items():
        value = getattr(args, name, None)
        if value is None:
            value = doc.get(name, default)
        out[name] = value
    return out


def _miner_config(eff: dict) -> MinerConfig:
    measure = eff["measure"]
    if measure not in ("rr", "or"):
        raise ConfigError(f"measure must be rr or or, got {measure!r}")
    return MinerConfig(
        minsup=float(eff["minsup"]),
        minsup_scope=eff["minsup_scope"],
        risk_sup=float(eff["risk_threshold"]),
        measure={"rr": "relative_risk", "or": "odds_ratio"}[measure],
        max_length=eff["max_length"],
        workers=int(eff["workers"]),
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args) -> int:
    t0 = time.perf_counter()
    if args.config:
        config = parse_synth_config(_read_json(Path(args.config)))
        if args.seed is not None:
            config = SynthConfig(
                **{**config.__dict__, "seed": args.seed}
            )
    else:
        config = SynthConfig(
            patients=args.patients,
            waves=args.waves,
            features=args.features,
            event_rate=args.event_rate,
            noise_rate=args.noise_rate,
            seed=args.seed if args.seed is not None else 0,
        )
    cohort, specs, manifest = generate(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "cohort.csv", "w", encoding="utf-8", newline="") as fh:
        write_cohort_csv(cohort, fh)
    with open(out_dir / "outcomes.csv", "w", encoding="utf-8", newline="") as fh:
        write_outcomes_csv(cohort.outcomes(), fh)
    _write_json(out_dir / "features.json", feature_config_payload(specs))
    _write_json(out_dir / "manifest.json", manifest)
    inputs = {"config": args.config} if args.config else {}
    _run_manifest(
        out_dir / "run_manifest.json",
        "synth",
        inputs,
        {"seed": config.seed, "patients": config.patients, "waves": config.waves,
         "features": config.features, "event_rate": config.event_rate,
         "noise_rate": config.noise_rate},
        {"synth": time.perf_counter() - t0},
    )
    print(f"synth: wrote cohort of {config.patients} patients to {out_dir}")
    return 0


def _abstract_stage(cohort_path: Path, outcomes_path: Path, features_path: Path,
                    wave_count: int | None, clip_to_outcome: bool) -> CohortIntervals:
    specs = load_feature_config(str(features_path))
    with open(outcomes_path, "r", encoding="utf-8") as fh:
        outcomes = parse_outcomes(fh)
    with open(cohort_path, "r", encoding="utf-8") as fh:
        cohort = parse_cohort(fh, specs, outcomes, wave_count=wave_count)
    cohort = carry_forward(cohort, clip_to_outcome=clip_to_outcome)
    return abstract_cohort(cohort, specs)


def _cmd_abstract(args) -> int:
    t0 = time.perf_counter()
    doc = _abstract_stage(
        Path(args.cohort), Path(args.outcomes), Path(args.features),
        args.wave_count, not args.carry_past_outcome,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        write_intervals_json(doc, fh)
    _run_manifest(
        Path(args.out + ".manifest.json"),
        "abstract",
        {"cohort": args.cohort, "outcomes": args.outcomes, "features": args.features},
        {"wave_count": args.wave_count, "carry_past_outcome": args.carry_past_outcome},
        {"abstract": time.perf_counter() - t0},
    )
    print(f"abstract: wrote intervals for {len(doc.patients)} patients to {args.out}")
    return 0


def _cmd_mine(args) -> int:
    t0 = time.perf_counter()
    doc = _load_intervals(Path(args.intervals))
    sequences = doc.sequences()
    config = _miner_config(_effective(args, MINE_DEFAULTS))
    load_time = time.perf_counter() - t0
    t1 = time.perf_counter()
    results, stats = mine_with_stats(sequences, config)
    mine_time = time.perf_counter() - t1
    events = sum(1 for s in sequences if s.event)
    _write_json(Path(args.out), _patterns_payload(results, config, doc, len(sequences), events))
    _run_manifest(
        Path(args.out + ".manifest.json"),
        "mine",
        {"intervals": args.intervals},
        {"minsup": config.minsup, "minsup_scope": config.minsup_scope,
         "risk_threshold": config.risk_sup, "measure": config.measure,
         "max_length": config.max_length, "workers": config.workers,
         "nodes": stats.nodes, "candidates": stats.candidates},
        {"load": load_time, "mining": mine_time},
    )
    print(f"mine: {len(results)} patterns ({stats.nodes} nodes) in {mine_time:.2f}s -> {args.out}")
    return 0


def _cmd_matrix(args) -> int:
    t0 = time.perf_counter()
    doc = _load_intervals(Path(args.intervals))
    payload = _read_json(Path(args.patterns))
    results = _results_from_payload(payload)
    sequences = doc.sequences()
    matrix = build_matrix(results, sequences, doc.outcomes())
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_matrix_csv(matrix, fh)
    sidecar = sidecar_payload(matrix, results)
    with open(args.out + ".cols.json", "w", encoding="utf-8") as fh:
        write_sidecar_json(sidecar, fh)
    _run_manifest(
        Path(args.out + ".manifest.json"),
        "matrix",
        {"intervals": args.intervals, "patterns": args.patterns},
        {},
        {"matrix": time.perf_counter() - t0},
    )
    print(f"matrix: {matrix.shape[0]}x{matrix.shape[1]} -> {args.out}")
    return 0


def _evaluate_stage(matrix_path: Path, sidecar_path: Path, k: int, seed: int, lam_grid):
    sidecar = _read_json(sidecar_path)
    with open(matrix_path, "r", encoding="utf-8") as fh:
        matrix = read_matrix_csv(fh, sidecar)
    cv = cross_validate(matrix, k=k, seed=seed, lam_grid=lam_grid)
    ranking = rank_patterns(cv.models, matrix)
    rr_by_key = {c["key"]: c["rr"] for c in sidecar["columns"] if "rr" in c}
    scores = rr_score(matrix, rr_by_key)
    rr_fold_c = cv_score_vector(matrix, scores, cv.folds)
    report = {
        "k": k,
        "seed": seed,
        "lambda_grid": list(lam_grid),
        "cox": {
            "fold_c": list(cv.fold_c),
            "mean_c": cv.mean_c,
            "chosen_lambda": list(cv.chosen_lambda),
            "converged": [m.converged for m in cv.models],
            "coefficients_per_fold": [m.coefficients.tolist() for m in cv.models],
        },
        "rr_score": {
            "fold_c": list(rr_fold_c),
            "mean_c": sum(rr_fold_c) / len(rr_fold_c),
        },
        "ranking": {
            "keys": list(ranking.ordered_keys),
            "rank_sums": [ranking.rank_sum[k_] for k_ in ranking.ordered_keys],
        },
    }
    return report


def _cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    eff = _effective(args, EVAL_DEFAULTS)
    k, seed = int(eff["k"]), int(eff["seed"])
    lam_grid = tuple(float(x) for x in str(eff["lambda_grid"]).split(","))
    sidecar_path = Path(args.sidecar if args.sidecar else args.matrix + ".cols.json")
    report = _evaluate_stage(Path(args.matrix), sidecar_path, k, seed, lam_grid)
    _write_json(Path(args.out), report)
    _run_manifest(
        Path(args.out + ".manifest.json"),
        "evaluate",
        {"matrix": args.matrix, "sidecar": str(sidecar_path)},
        {"k": k, "seed": seed, "lambda_grid": list(lam_grid)},
        {"evaluate": time.perf_counter() - t0},
    )
    print(f"evaluate: cox mean C={report['cox']['mean_c']:.3f} "
          f"rr mean C={report['rr_score']['mean_c']:.3f} -> {args.out}")
    return 0


def _render_stage(patterns_payload, ranking_keys, top: int) -> str:
    severity_of = {
        (feature, level): sev
        for feature, by in patterns_payload.get("levels", {}).items()
        for level, sev in by.items()
    }
    patterns = {
        entry["key"]: RenderPattern(
            groups=groups_from_payload(entry["groups"]), risk=entry["risk"]
        )
        for entry in patterns_payload["patterns"]
    }
    label = "RR" if patterns_payload.get("config", {}).get("measure") != "odds_ratio" else "OR"
    spec = RenderSpec(max_patterns=top, severity_of=severity_of, risk_label=label)
    return render_svg(ranking_keys, patterns, spec)


def _cmd_render(args) -> int:
    t0 = time.perf_counter()
    payload = _read_json(Path(args.patterns))
    if args.report:
        ranking_keys = _read_json(Path(args.report))["ranking"]["keys"]
    else:
        ranking_keys = [entry["key"] for entry in payload["patterns"]]
    svg = _render_stage(payload, ranking_keys, args.top)
    Path(args.out).write_text(svg, encoding="utf-8")
    inputs = {"patterns": args.patterns}
    if args.report:
        inputs["report"] = args.report
    _run_manifest(
        Path(args.out + ".manifest.json"),
        "render",
        inputs,
        {"top": args.top},
        {"render": time.perf_counter() - t0},
    )
    print(f"render: wrote {args.out}")
    return 0


def _cmd_pipeline(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    doc = _abstract_stage(
        Path(args.cohort), Path(args.outcomes), Path(args.features),
        args.wave_count, not args.carry_past_outcome,
    )
    with open(out_dir / "intervals.json", "w", encoding="utf-8") as fh:
        write_intervals_json(doc, fh)
    sequences = doc.sequences()
    timings["abstract"] = time.perf_counter() - t0

    eff = _effective(args, {**MINE_DEFAULTS, **EVAL_DEFAULTS, "top": 10})
    config = _miner_config(eff)
    t1 = time.perf_counter()
    results, stats = mine_with_stats(sequences, config)
    timings["mining"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    events = sum(1 for s in sequences if s.event)
    _write_json(out_dir / "patterns.json", _patterns_payload(results, config, doc, len(sequences), events))
    matrix = build_matrix(results, sequences, doc.outcomes())
    with open(out_dir / "matrix.csv", "w", encoding="utf-8", newline="") as fh:
        write_matrix_csv(matrix, fh)
    with open(out_dir / "matrix.csv.cols.json", "w", encoding="utf-8") as fh:
        write_sidecar_json(sidecar_payload(matrix, results), fh)
    timings["matrix"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    k, seed, top = int(eff["k"]), int(eff["seed"]), int(eff["top"])
    lam_grid = tuple(float(x) for x in str(eff["lambda_grid"]).split(","))
    report = _evaluate_stage(
        out_dir / "matrix.csv", out_dir / "matrix.csv.cols.json", k, seed, lam_grid
    )
    _write_json(out_dir / "report.json", report)
    timings["evaluate"] = time.perf_counter() - t3

    t4 = time.perf_counter()
    payload = _read_json(out_dir / "patterns.json")
    svg = _render_stage(payload, report["ranking"]["keys"], top)
    (out_dir / "patterns.svg").write_text(svg, encoding="utf-8")
    timings["render"] = time.perf_counter() - t4

    _run_manifest(
        out_dir / "run_manifest.json",
        "pipeline",
        {"cohort": args.cohort, "outcomes": args.outcomes, "features": args.features},
        {"minsup": config.minsup, "minsup_scope": config.minsup_scope,
         "risk_threshold": config.risk_sup, "measure": config.measure,
         "max_length": config.max_length, "workers": config.workers,
         "k": k, "seed": seed, "lambda_grid": list(lam_grid),
         "top": top, "nodes": stats.nodes},
        timings,
    )
    print(f"pipeline: {len(results)} patterns, cox mean C={report['cox']['mean_c']:.3f}, "
          f"outputs in {out_dir}")
    return 0


# ---------------------------------------------------------------------------


def _add_mine_flags(p: argparse.ArgumentParser) -> None:
    # defaults of None let a --config file fill unset flags (see MINE_DEFAULTS)
    p.add_argument("--minsup", type=float, default=None, help="minimum support fraction")
    p.add_argument("--minsup-scope", choices=("event_group", "population"), default=None)
    p.add_argument("--risk-threshold", type=float, default=None)
    p.add_argument("--measure", choices=("rr", "or"), default=None)
    p.add_argument("--max-length", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON file with default parameter values")


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=None, help="cross-validation folds")
    p.add_argument("--lambda-grid", default=None, help="comma-separated ridge penalties")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavemine",
        description="Mine high-relative-risk temporal patterns from wave-structured cohorts",
    )
    parser.add_argument("--version", action="version", version=f"wavemine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort with planted patterns")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="synth config JSON (incl. planted patterns)")
    p.add_argument("--patients", type=int, default=200)
    p.add_argument("--waves", type=int, default=5)
    p.add_argument("--features", type=int, default=5)
    p.add_argument("--event-rate", type=float, default=0.15)
    p.add_argument("--noise-rate", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("abstract", help="parse, carry forward, and abstract a cohort")
    p.add_argument("--cohort", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--wave-count", type=int, default=None)
    p.add_argument("--carry-past-outcome", action="store_true",
                   help="carry values past the outcome wave (default: clip)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_abstract)

    p = sub.add_parser("mine", help="mine high-risk patterns from intervals JSON")
    p.add_argument("--intervals", required=True)
    p.add_argument("--out", required=True)
    _add_mine_flags(p)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("matrix", help="build the patients x patterns design matrix")
    p.add_argument("--intervals", required=True)
    p.add_argument("--patterns", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_matrix)

    p = sub.add_parser("evaluate", help="cross-validated survival evaluation")
    p.add_argument("--matrix", required=True)
    p.add_argument("--sidecar", default=None, help="defaults to <matrix>.cols.json")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON file with default parameter values")
    _add_eval_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("render", help="render ranked patterns as SVG")
    p.add_argument("--patterns", required=True)
    p.add_argument("--report", default=None, help="report JSON providing the ranking")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("pipeline", help="run abstract -> mine -> matrix -> evaluate -> render")
    p.add_argument("--cohort", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--wave-count", type=int, default=None)
    p.add_argument("--carry-past-outcome", action="store_true")
    p.add_argument("--out-dir", required=True)
    _add_mine_flags(p)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_eval_flags(p)
    p.add_argument("--top", type=int, default=None)
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WaveMineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
