"""Command line front end.

Two subcommands: `run` answers a single query on a model file, `bench`
regenerates the random-model convergence study and writes a CSV.  Both
are importable (`cmd_run`, `cmd_bench`) so tests can drive them without
a subprocess.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from multiprocessing import get_context

import numpy as np

from .engine import IV, ess, estimate_expectation, run_inference
from .errors import DegenerateGraphError, NoSurvivingSamplesError
from .oracle import exact_counterfactual, exact_interventional
from .scm import (
    BenchQuery,
    build_program,
    derive_seed,
    generate_query,
    generate_scm,
    load_model,
    load_query,
)

BENCH_COLUMNS = (
    "model_id",
    "n_samples",
    "engine",
    "estimate",
    "exact_value",
    "abs_error",
    "ess",
    "n_rejected",
    "wall_seconds",
    "seed",
)


@dataclass(frozen=True)
class BenchRow:
    model_id: str
    n_samples: int
    engine: str
    estimate: float
    exact_value: float
    abs_error: float
    ess: float
    n_rejected: int
    wall_seconds: float
    seed: int


def _exact_answer(scm, query: BenchQuery) -> float:
    evidence = dict(query.evidence)
    d, d_value = query.intervention
    if query.kind == IV:
        return exact_interventional(scm, evidence, {d: d_value}, query.target)
    return exact_counterfactual(scm, evidence, {d: d_value}, query.target)


def _dump_traces(result, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, (abducted, replay) in enumerate(result.traces):
            record = {
                "sample_index": i,
                "log_weight": abducted.log_weight,
                "choices": {a: e.value for a, e in abducted.entries.items()},
            }
            if replay is not None:
                record["replay_choices"] = {
                    a: e.value for a, e in replay.entries.items()
                }
            fh.write(json.dumps(record) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scm = load_model(args.model)
        query = load_query(args.query)
        program = None
        if args.engine != "exact":
            program = build_program(scm, query, style=args.engine)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    if args.engine == "exact":
        t0 = time.perf_counter()
        estimate = _exact_answer(scm, query)
        wall = time.perf_counter() - t0
        out = {
            "estimate": estimate,
            "ess": 0.0,
            "n_rejected": 0,
            "wall_seconds": wall,
            "n_samples": 0,
            "seed": args.seed,
        }
        print(json.dumps(out))
        return 0

    result = run_inference(
        program,
        args.samples,
        seed=args.seed,
        workers=args.workers,
        delta_tolerance=args.delta_tolerance,
        keep_traces=bool(args.dump_traces),
    )
    if args.dump_traces:
        _dump_traces(result, args.dump_traces)
    if result.degenerate:
        print("degenerate posterior: every sample was rejected", file=sys.stderr)
        return 2
    try:
        estimate = estimate_expectation(result)
    except NoSurvivingSamplesError as exc:
        print(f"degenerate posterior: {exc}", file=sys.stderr)
        return 2
    out = {
        "estimate": estimate,
        "ess": ess(result.log_weights),
        "n_rejected": result.n_rejected,
        "wall_seconds": result.wall_seconds,
        "n_samples": result.n_samples,
        "seed": args.seed,
    }
    print(json.dumps(out))
    return 0


def _bench_model(job) -> list[BenchRow]:
    index, base_seed, n_blocks, budgets, timing = job
    attempt = 0
    while True:
        gen = random.Random(derive_seed(base_seed, index, attempt))
        scm = generate_scm(gen, n_blocks=n_blocks)
        try:
            query = generate_query(gen, scm)
            break
        except DegenerateGraphError:
            attempt += 1
            print(
                f"model {index}: degenerate graph, regenerating (attempt {attempt})",
                file=sys.stderr,
            )

    model_id = f"m{index:03d}"
    t0 = time.perf_counter()
    exact_value = _exact_answer(scm, query)
    exact_wall = time.perf_counter() - t0

    rows = [
        BenchRow(
            model_id=model_id,
            n_samples=0,
            engine="exact",
            estimate=exact_value,
            exact_value=exact_value,
            abs_error=0.0,
            ess=0.0,
            n_rejected=0,
            wall_seconds=exact_wall if timing else 0.0,
            seed=base_seed,
        )
    ]
    for style in ("eager", "lazy"):
        program = build_program(scm, query, style=style)
        for n in budgets:
            run_seed = derive_seed(base_seed, index, n)
            result = run_inference(program, n, seed=run_seed)
            estimate = estimate_expectation(result)
            rows.append(
                BenchRow(
                    model_id=model_id,
                    n_samples=n,
                    engine=style,
                    estimate=estimate,
                    exact_value=exact_value,
                    abs_error=abs(estimate - exact_value),
                    ess=ess(result.log_weights),
                    n_rejected=result.n_rejected,
                    wall_seconds=result.wall_seconds if timing else 0.0,
                    seed=run_seed,
                )
            )
    return rows


def _row_cells(row: BenchRow) -> list[str]:
    cells = []
    for f in fields(BenchRow):
        v = getattr(row, f.name)
        cells.append(repr(v) if isinstance(v, float) else str(v))
    return cells


def write_bench_csv(rows: list[BenchRow], path: str) -> None:
    ordered = sorted(rows, key=lambda r: (r.model_id, r.engine, r.n_samples))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for row in ordered:
        writer.writerow(_row_cells(row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_bench_csv(path: str) -> list[BenchRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                BenchRow(
                    model_id=rec["model_id"],
                    n_samples=int(rec["n_samples"]),
                    engine=rec["engine"],
                    estimate=float(rec["estimate"]),
                    exact_value=float(rec["exact_value"]),
                    abs_error=float(rec["abs_error"]),
                    ess=float(rec["ess"]),
                    n_rejected=int(rec["n_rejected"]),
                    wall_seconds=float(rec["wall_seconds"]),
                    seed=int(rec["seed"]),
                )
            )
    return rows


def summarize(rows: list[BenchRow]) -> list[tuple[str, int, float, float, float]]:
    """Mean and 10th/90th percentile absolute error per engine and budget."""
    groups: dict[tuple[str, int], list[float]] = {}
    for row in rows:
        if row.engine == "exact":
            continue
        groups.setdefault((row.engine, row.n_samples), []).append(row.abs_error)
    out = []
    for (engine, n), errs in sorted(groups.items()):
        arr = np.asarray(errs)
        out.append(
            (
                engine,
                n,
                float(arr.mean()),
                float(np.percentile(arr, 10)),
                float(np.percentile(arr, 90)),
            )
        )
    return out


def cmd_bench(args: argparse.Namespace) -> int:
    budgets = tuple(int(s) for s in args.samples.split(","))
    timing = not args.no_timing
    jobs = [
        (i, args.seed, args.blocks, budgets, timing) for i in range(args.models)
    ]
    rows: list[BenchRow] = []
    if args.workers > 1:
        with ProcessPoolExecutor(
            max_workers=args.workers, mp_context=get_context("fork")
        ) as pool:
            for chunk in pool.map(_bench_model, jobs):
                rows.extend(chunk)
    else:
        for job in jobs:
            rows.extend(_bench_model(job))
    write_bench_csv(rows, args.out)
    for engine, n, mean, p10, p90 in summarize(rows):
        print(
            f"{engine} n={n}: mean abs error {mean:.5f} "
            f"(p10 {p10:.5f}, p90 {p90:.5f})"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whatif",
        description="Interventional and counterfactual queries on generative models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="answer one query on a model file")
    run.add_argument("--model", required=True, help="model JSON path")
    run.add_argument("--query", required=True, help="query JSON path")
    run.add_argument("--samples", type=int, default=1000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument(
        "--engine", choices=("eager", "lazy", "exact"), default="eager"
    )
    run.add_argument("--delta-tolerance", type=float, default=0.0)
    run.add_argument("--dump-traces", help="write sampled traces as JSONL")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="random-model convergence study")
    bench.add_argument("--models", type=int, default=50)
    bench.add_argument("--blocks", type=int, default=12)
    bench.add_argument("--samples", default="100,1000,5000")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--out", required=True, help="output CSV path")
    bench.add_argument(
        "--no-timing",
        action="store_true",
        help="zero the wall_seconds column for reproducible output",
    )
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
