"""Command line entry point: ``pnapsac {generate,estimate,run,sweep-gamma}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

from .bench import (
    GAMMA_GRID,
    SCENE_KINDS,
    SceneSpec,
    aggregate,
    emit_report,
    generate_scene,
    run_benchmark,
    sweep_gamma,
    write_runs_csv,
)
from .core import dataset_load, dataset_save
from .engine import SAMPLERS, EngineConfig, estimate, evaluate_against_gt


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _engine_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float, default=None,
                   help="inlier threshold in pixels (default 3.2 for H, 1.0 for F and lines)")
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--gamma", type=float, default=None,
                   help="termination relaxation (default 0.1 for napsac/pnapsac, 0 otherwise)")
    p.add_argument("--max-iterations", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)


def _overrides(args) -> dict:
    return dict(threshold=args.threshold, confidence=args.confidence, gamma=args.gamma,
                max_iterations=args.max_iterations)


def _scene_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-inliers", type=int, default=100)
    p.add_argument("--n-outliers", type=int, default=400)
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--cluster-extent", type=float, default=None)


def _spec(kind: str, args, seed: int = 0) -> SceneSpec:
    return SceneSpec(kind, args.n_inliers, args.n_outliers, args.noise, args.cluster_extent, seed=seed)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pnapsac", description="Robust two-view and line fitting benchmark")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic scene as a correspondence file")
    g.add_argument("--scene", choices=SCENE_KINDS, default="localized-h")
    _scene_args(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)

    e = sub.add_parser("estimate", help="fit one model to a correspondence file")
    e.add_argument("input")
    e.add_argument("--problem", required=True, help="line | h | f")
    e.add_argument("--sampler", choices=SAMPLERS, default="pnapsac")
    _engine_args(e)
    e.add_argument("--output", default=None, help="write the report as JSON here (default stdout)")

    r = sub.add_parser("run", help="benchmark samplers on synthetic scenes")
    r.add_argument("--scenes", type=_names, default=["localized-h", "global-h", "localized-f"])
    r.add_argument("--sampler", "--samplers", dest="samplers", type=_names,
                   default=["uniform", "prosac", "napsac", "pnapsac"])
    r.add_argument("--runs", type=int, default=100)
    _scene_args(r)
    _engine_args(r)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--format", choices=("csv", "json", "markdown"), default="markdown")
    r.add_argument("--output", default=None, help="aggregate report path (default stdout)")
    r.add_argument("--runs-csv", default=None, help="per-run CSV path")
    r.add_argument("--no-timing", action="store_true", help="omit the timing column from the per-run CSV")

    s = sub.add_parser("sweep-gamma", help="iterations/failures as a function of gamma")
    s.add_argument("--scene", choices=SCENE_KINDS, default="localized-h")
    s.add_argument("--sampler", choices=SAMPLERS, default="pnapsac")
    s.add_argument("--gammas", type=_floats, default=list(GAMMA_GRID))
    s.add_argument("--runs", type=int, default=100)
    _scene_args(s)
    s.add_argument("--threshold", type=float, default=None)
    s.add_argument("--confidence", type=float, default=0.99)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("csv", "json", "markdown"), default="markdown")
    s.add_argument("--output", default=None)
    return ap


def _write(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _gamma_table(points, fmt: str) -> str:
    rows = [asdict(p) for p in points]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    cols = list(rows[0])
    if fmt == "csv":
        return "\n".join([",".join(cols)] + [",".join(repr(r[c]) for c in cols) for r in rows]) + "\n"
    out = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    out += ["| " + " | ".join(f"{r[c]:.4g}" for c in cols) + " |" for r in rows]
    return "\n".join(out) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "generate":
        dataset_save(generate_scene(_spec(args.scene, args, args.seed)), args.output)
        return 0

    if args.command == "estimate":
        ds = dataset_load(args.input)
        cfg = EngineConfig(problem=args.problem, sampler=args.sampler, seed=args.seed, **_overrides(args))
        rep = estimate(ds, cfg)
        out = {
            "success": rep.success,
            "model": None if rep.best_model is None else rep.best_model.params.tolist(),
            "score": rep.best_score.value,
            "inliers": rep.best_score.inlier_count,
            "inlier_indices": rep.best_score.inlier_indices.tolist(),
            "iterations": rep.iterations,
            "samples_rejected": rep.samples_rejected,
            "lo_invocations": rep.lo_invocations,
            "time_ms": rep.wall_time * 1e3,
        }
        ev = evaluate_against_gt(rep, ds)
        if ev.available:
            out["evaluation"] = asdict(ev)
        _write(json.dumps(out, indent=2) + "\n", args.output)
        return 0 if rep.success else 1

    if args.command == "run":
        specs = [_spec(kind, args) for kind in args.scenes]
        rows = run_benchmark(specs, args.samplers, args.runs, args.seed, workers=args.workers,
                             **_overrides(args))
        if args.runs_csv:
            write_runs_csv(rows, args.runs_csv, include_timing=not args.no_timing)
        _write(emit_report(aggregate(rows), args.format), args.output)
        return 0

    if args.command == "sweep-gamma":
        pts = sweep_gamma(_spec(args.scene, args), args.gammas, args.runs, args.seed, args.sampler,
                          threshold=args.threshold, confidence=args.confidence)
        _write(_gamma_table(pts, args.format), args.output)
        return 0
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
