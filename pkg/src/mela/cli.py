"""Command-line surface: run, baseline, eval-listing, report, render-prompt.

Exit codes: 0 success, 1 run failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import heuristics, orchestrator, prompts, report, store
from .baselines import ALGORITHMS, run_baseline
from .core import (
    ConfigError,
    HeuristicIndividual,
    PROBLEM_IDS,
    RunConfig,
    SeedStream,
    Status,
    load_config_file,
    validate_config,
)
from .llm import GatewayError, LiveBackend, load_cassette, record_cassette
from .problems import build_problem, reference_description
from .sandbox import SandboxLimits, TrustedLocalRuntime, spawn_worker
from .search import evaluate_heuristic

FEASIBLE_WSN = 1000.0  # penalty threshold; below it every constraint holds


def _sandbox_factory(kind: str, limits: SandboxLimits):
    if kind == "worker":
        return lambda: spawn_worker(limits)
    if kind == "local":
        return lambda: TrustedLocalRuntime()
    raise ValueError(f"unknown sandbox kind {kind!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mela")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="full prompt-evolution run")
    run_p.add_argument("--problem", choices=PROBLEM_IDS)
    run_p.add_argument("--config", help="YAML config file; flags override its fields")
    run_p.add_argument("--backend", choices=("live", "record", "replay"), default="record")
    run_p.add_argument("--cassette", help="cassette file (replay) or previous out dir")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--runs", type=int, default=None)
    run_p.add_argument("--init-pop", type=int, default=None)
    run_p.add_argument("--evo-pop", type=int, default=None)
    run_p.add_argument("--budget", type=int, default=None)
    run_p.add_argument("--repair-limit", type=int, default=None)
    run_p.add_argument("--temperature", type=float, default=None)
    run_p.add_argument("--model", default=None)
    run_p.add_argument("--no-problem-analysis", action="store_true")
    run_p.add_argument("--no-metacognition", action="store_true")
    run_p.add_argument("--no-error-repair", action="store_true")
    run_p.add_argument("--sandbox", choices=("worker", "local"), default="worker")
    run_p.add_argument("--out", required=True)

    base_p = sub.add_parser("baseline", help="run a traditional metaheuristic")
    base_p.add_argument("--alg", choices=ALGORITHMS, required=True)
    base_p.add_argument("--problem", choices=PROBLEM_IDS, required=True)
    base_p.add_argument("--runs", type=int, default=3)
    base_p.add_argument("--agents", type=int, default=None)
    base_p.add_argument("--iters", type=int, default=None)
    base_p.add_argument("--seed", type=int, default=0)
    base_p.add_argument("--out", default=None)

    eval_p = sub.add_parser("eval-listing", help="run a bundled heuristic through the harness")
    eval_p.add_argument("--listing", type=int, choices=(1, 2, 3, 4), required=True)
    eval_p.add_argument("--problem", choices=PROBLEM_IDS, default=None)
    eval_p.add_argument("--seed", type=int, default=0)
    eval_p.add_argument("--runs", type=int, default=3)
    eval_p.add_argument("--sandbox", choices=("worker", "local"), default="worker")

    report_p = sub.add_parser("report", help="summary statistics and convergence plots")
    report_p.add_argument("run_dirs", nargs="+")
    report_p.add_argument("--out", required=True)

    render_p = sub.add_parser("render-prompt", help="print a rendered prompt")
    render_p.add_argument("--stage", choices=prompts.STAGES, required=True)
    render_p.add_argument("--problem", choices=PROBLEM_IDS, default="wsn")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "baseline":
            return _cmd_baseline(args)
        if args.command == "eval-listing":
            return _cmd_eval_listing(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "render-prompt":
            return _cmd_render_prompt(args)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (GatewayError, store.StoreError, RuntimeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


def _assemble_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config_file(args.config) if args.config else RunConfig(problem=args.problem or "")
    updates: dict[str, object] = {}
    if args.problem:
        updates["problem"] = args.problem
    if args.init_pop is not None:
        updates["init_pop"] = args.init_pop
    if args.evo_pop is not None:
        updates["evo_pop"] = args.evo_pop
    if args.budget is not None:
        updates["total_budget"] = args.budget
    if args.repair_limit is not None:
        updates["repair_limit"] = args.repair_limit
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.runs is not None:
        updates["runs"] = args.runs
    llm = cfg.llm
    if args.temperature is not None or args.model is not None:
        import dataclasses

        llm = dataclasses.replace(
            llm,
            **{
                k: v
                for k, v in {
                    "temperature": args.temperature,
                    "model": args.model,
                }.items()
                if v is not None
            },
        )
    ablation = cfg.ablation
    if args.no_problem_analysis or args.no_metacognition or args.no_error_repair:
        import dataclasses

        ablation = dataclasses.replace(
            ablation,
            problem_analysis=ablation.problem_analysis and not args.no_problem_analysis,
            metacognition=ablation.metacognition and not args.no_metacognition,
            error_repair=ablation.error_repair and not args.no_error_repair,
        )
    import dataclasses

    cfg = dataclasses.replace(cfg, llm=llm, ablation=ablation, **updates)
    if not cfg.problem:
        raise ConfigError(["no problem selected; pass --problem or --config"])
    return cfg


def _backend_for_run(args: argparse.Namespace, run_dir: Path, run_index: int):
    if args.backend in ("live", "record"):
        live = LiveBackend()
        return record_cassette(live, str(run_dir / store.CASSETTE_LOG))
    if not args.cassette:
        raise GatewayError("replay backend needs --cassette")
    cassette = Path(args.cassette)
    if cassette.is_dir():
        cassette = cassette / f"run_{run_index:03d}" / store.CASSETTE_LOG
    if not cassette.exists():
        raise GatewayError(f"replay miss: cassette {cassette} does not exist")
    return load_cassette(str(cassette))


def _cmd_run(args: argparse.Namespace) -> int:
    vcfg = validate_config(_assemble_config(args))
    out = Path(args.out)
    factory = _sandbox_factory(args.sandbox, SandboxLimits())
    run_dirs: list[str | Path] = []
    for k in range(vcfg.runs):
        run_dir = out / f"run_{k:03d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        backend = _backend_for_run(args, run_dir, k)
        run_stream = SeedStream(vcfg.seed).child(k)
        started = time.perf_counter()
        with store.EventLog(run_dir) as log:
            result = orchestrator.run(vcfg, backend, factory, run_stream, sink=log)
        store.write_run_artifacts(run_dir, result, time.perf_counter() - started)
        store.write_summary_report(run_dir, store.summarize([run_dir]))
        report.emit_convergence_plot([run_dir], run_dir / store.PLOTS_DIR / "convergence.svg")
        run_dirs.append(run_dir)
        best = f"{result.best.fitness!r} ({result.best.id})" if result.best else "none"
        print(f"run {k}: best fitness {best}")
    summary = store.summarize(run_dirs)
    store.write_summary_report(out, summary)
    report.emit_convergence_plot(run_dirs, out / store.PLOTS_DIR / "convergence.svg")
    print(store.format_summary(summary), end="")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    finals = []
    out = Path(args.out) if args.out else None
    for k in range(args.runs):
        stream = SeedStream(args.seed).child(k)
        problem = build_problem(args.problem, stream.child(orchestrator.LABEL_PROBLEM))
        result = run_baseline(
            args.alg, problem, args.agents, args.iters, stream.child(orchestrator.LABEL_EVAL)
        )
        finals.append(result.fitness)
        if out is not None:
            run_dir = out / f"run_{k:03d}"
            run_dir.mkdir(parents=True, exist_ok=True)
            store.write_convergence_table(run_dir, [(i + 1, b) for i, b in result.trace])
    mean = float(np.mean(finals))
    std = float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0
    print(f"{args.alg.upper()}  {args.problem}  Obj. {mean:.2f} ± {std:.2f}")
    return 0


def _cmd_eval_listing(args: argparse.Namespace) -> int:
    problem_id = args.problem or heuristics.LISTING_PROBLEMS[args.listing]
    native_kind = "matrix" if args.listing in (1, 2) else "position"
    if (problem_id in ("tsp", "bpp")) != (native_kind == "matrix"):
        print(f"error: listing {args.listing} does not fit problem {problem_id}", file=sys.stderr)
        return 2
    source = heuristics.listing_source(args.listing)
    individual = HeuristicIndividual(
        id=f"listing-{args.listing}",
        source=source,
        entry_name=heuristics.LISTING_ENTRY,
        thought="bundled fixture",
        generation=0,
        status=Status.PENDING,
    )
    factory = _sandbox_factory(args.sandbox, SandboxLimits())
    fitnesses = []
    for k in range(args.runs):
        stream = SeedStream(args.seed).child(k)
        problem = build_problem(problem_id, stream.child(orchestrator.LABEL_PROBLEM))
        with factory() as runtime:
            result = evaluate_heuristic(
                problem, individual, runtime, stream.child(orchestrator.LABEL_EVAL)
            )
        if not result.valid:
            print(f"seed {k}: error {result.error.message}")
            return 1
        verdict = ""
        if problem_id == "wsn":
            feasible = result.fitness < FEASIBLE_WSN
            verdict = "  feasible" if feasible else "  infeasible"
        print(f"seed {k}: fitness {result.fitness:.4f}{verdict}")
        fitnesses.append(result.fitness)
    print(f"mean fitness {float(np.mean(fitnesses)):.4f} over {args.runs} seeds")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    summary = store.summarize(list(args.run_dirs))
    store.write_summary_report(out, summary)
    report.emit_convergence_plot(
        list(args.run_dirs), out / store.PLOTS_DIR / "convergence.svg"
    )
    print(store.format_summary(summary), end="")
    return 0


def _cmd_render_prompt(args: argparse.Namespace) -> int:
    seed_code = heuristics.seed_source(args.problem)
    fixtures = {
        "analysis": {"problem": reference_description(args.problem)},
        "gen1": {
            "problem": reference_description(args.problem),
            "init_code": seed_code,
            "init_eval": prompts.EMPTY_HISTORY,
            "code": seed_code,
        },
        "gen2": {
            "metacognition": orchestrator.NO_REFLECTION,
            "init_code": seed_code,
            "init_eval": prompts.EMPTY_HISTORY,
            "code": seed_code,
        },
        "error": {"code_str": seed_code, "str_error": "(example error)"},
        "metacognition": {
            "thoughts": prompts.EMPTY_HISTORY,
            "errors": prompts.NO_ERRORS,
            "code": seed_code,
        },
    }
    system, prompt = prompts.render(args.stage, fixtures[args.stage])
    print("[system]")
    print(system)
    print("[prompt]")
    print(prompt, end="" if prompt.endswith("\n") else "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
