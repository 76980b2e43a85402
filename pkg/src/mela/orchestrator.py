"""The iterative heuristic-optimization loop.

One run: analyze the problem (one chat), generate the initial population,
then per generation evaluate everything in fresh sandboxes, repair failures
through the error prompt, reflect on the generation's thoughts/errors/best
code, and synthesize the next batch from the reflection. Ablation flags
drop individual stages without touching the loop structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, ContextManager, Protocol

from . import prompts
from .core import (
    ErrorRecord,
    HeuristicIndividual,
    SeedStream,
    Status,
    ValidatedConfig,
)
from .heuristics import seed_source
from .llm import Backend, ChatRequest, chat
from .problems import ProblemSpec, build_problem, reference_description
from .prompts import ExtractionError, extract_artifacts
from .search import EvaluationResult, HeuristicRuntime, evaluate_heuristic

# Child-stream labels under one run stream.
LABEL_PROBLEM = 1
LABEL_EVAL = 2

NO_REFLECTION = "(no reflection)"

SandboxFactory = Callable[[], ContextManager[HeuristicRuntime]]


class EventSink(Protocol):
    def emit(self, event_type: str, data: dict[str, Any]) -> int: ...


class NullSink:
    def emit(self, event_type: str, data: dict[str, Any]) -> int:
        return 0


@dataclass
class GenerationRecord:
    generation: int
    individuals: list[HeuristicIndividual]
    metacognition_text: str | None = None
    best_so_far: tuple[str, float] | None = None  # (individual id, fitness)
    sr_pre_repair: float = 0.0
    sr_post_repair: float = 0.0


@dataclass
class RunTotals:
    generated: int = 0
    valid: int = 0
    repaired: int = 0
    failed: int = 0


@dataclass
class RunResult:
    best: HeuristicIndividual | None
    generations: list[GenerationRecord]
    totals: RunTotals
    config: ValidatedConfig
    analysis_text: str | None = None
    traces: dict[str, tuple[tuple[int, float], ...]] = field(default_factory=dict)


@dataclass
class RepairOutcome:
    individual: HeuristicIndividual
    winning_attempt: int  # 0 when no attempt produced a valid candidate
    attempts: int


def success_rate(records: list[GenerationRecord], pre_repair: bool = False) -> float:
    """Fraction of generated heuristics that execute without error.

    Post-repair (default) counts repaired individuals as successes; the
    pre-repair figure counts only those that were valid on first evaluation.
    """
    generated = sum(len(r.individuals) for r in records)
    if generated == 0:
        raise ValueError("no individuals generated")
    if pre_repair:
        good = sum(
            1 for r in records for ind in r.individuals if ind.status is Status.VALID
        )
    else:
        good = sum(
            1
            for r in records
            for ind in r.individuals
            if ind.status in (Status.VALID, Status.REPAIRED)
        )
    return good / generated


def format_sr(fraction: float) -> str:
    return f"{fraction * 100:.2f}%"


class Orchestrator:
    def __init__(
        self,
        cfg: ValidatedConfig,
        backend: Backend,
        sandbox_factory: SandboxFactory,
        sink: EventSink | None = None,
        problem: ProblemSpec | None = None,
    ):
        self.cfg = cfg
        self.backend = backend
        self.sandbox_factory = sandbox_factory
        self.sink = sink or NullSink()
        self._problem_override = problem
        self._solution_index = 0
        self._last_trace: tuple[tuple[int, float], ...] = ()

    # ------------------------------------------------------------------ run

    def run(self, run_stream: SeedStream) -> RunResult:
        cfg = self.cfg
        problem = self._problem_override or build_problem(
            cfg.problem, run_stream.child(LABEL_PROBLEM)
        )
        eval_root = run_stream.child(LABEL_EVAL)
        self.sink.emit(
            "run_start",
            {"problem": cfg.problem, "config": cfg.to_dict(), "stream": run_stream.label()},
        )

        description = reference_description(cfg.problem)
        analysis_text = None
        if cfg.ablation.problem_analysis:
            analysis_text = self._chat_stage("analysis", {"problem": description})[1]
            self.sink.emit("analysis", {"text": analysis_text})
        problem_binding = (
            f"{analysis_text}\n{description}" if analysis_text else description
        )

        seed_code = seed_source(cfg.problem)
        generations: list[GenerationRecord] = []
        all_individuals: list[HeuristicIndividual] = []
        best: HeuristicIndividual | None = None
        traces: dict[str, tuple[tuple[int, float], ...]] = {}

        current = self.initialize_population(problem_binding, seed_code)
        for gen in range(cfg.generation_limit + 1):
            current, best = self._settle_generation(
                problem, eval_root, current, best, traces
            )
            record = GenerationRecord(
                generation=gen,
                individuals=current,
                best_so_far=(best.id, best.fitness) if best else None,
                sr_pre_repair=_generation_sr(current, pre_repair=True),
                sr_post_repair=_generation_sr(current, pre_repair=False),
            )
            generations.append(record)
            all_individuals.extend(current)
            self.sink.emit(
                "generation",
                {
                    "generation": gen,
                    "sr_pre_repair": record.sr_pre_repair,
                    "sr_post_repair": record.sr_post_repair,
                    "best_id": best.id if best else None,
                    "best_fitness": best.fitness if best else None,
                },
            )
            if gen == cfg.generation_limit:
                break
            meta_text = None
            if cfg.ablation.metacognition:
                best_code = best.source if best else seed_code
                meta_text = self.metacognize(record, best_code)
                record.metacognition_text = meta_text
                self.sink.emit("metacognition", {"generation": gen, "text": meta_text})
            current = self.generate_next(meta_text, best, all_individuals, seed_code, gen + 1)

        totals = RunTotals(
            generated=len(all_individuals),
            valid=sum(1 for i in all_individuals if i.status is Status.VALID),
            repaired=sum(1 for i in all_individuals if i.status is Status.REPAIRED),
            failed=sum(1 for i in all_individuals if i.status is Status.FAILED),
        )
        self.sink.emit(
            "run_end",
            {
                "generated": totals.generated,
                "valid": totals.valid,
                "repaired": totals.repaired,
                "failed": totals.failed,
                "best_id": best.id if best else None,
                "best_fitness": best.fitness if best else None,
                "sr_pre_repair": success_rate(generations, pre_repair=True),
                "sr_post_repair": success_rate(generations),
            },
        )
        return RunResult(
            best=best,
            generations=generations,
            totals=totals,
            config=cfg,
            analysis_text=analysis_text,
            traces=traces,
        )

    # ----------------------------------------------------------- generation

    def initialize_population(
        self, problem_binding: str, seed_code: str
    ) -> list[HeuristicIndividual]:
        bindings = {
            "problem": problem_binding,
            "init_code": seed_code,
            "init_eval": prompts.EMPTY_HISTORY,
            "code": seed_code,
        }
        return [
            self._generate_individual("gen1", bindings, generation=0, index=k)
            for k in range(self.cfg.init_pop)
        ]

    def generate_next(
        self,
        metacognition_text: str | None,
        best: HeuristicIndividual | None,
        history: list[HeuristicIndividual],
        seed_code: str,
        generation: int,
    ) -> list[HeuristicIndividual]:
        base_code = best.source if best else seed_code
        bindings = {
            "metacognition": metacognition_text or NO_REFLECTION,
            "init_code": base_code,
            "init_eval": prompts.build_history_digest(history),
            "code": base_code,
        }
        return [
            self._generate_individual("gen2", bindings, generation=generation, index=k)
            for k in range(self.cfg.evo_pop)
        ]

    def _generate_individual(
        self, stage: str, bindings: dict[str, str], generation: int, index: int
    ) -> HeuristicIndividual:
        prompt_digest, reply = self._chat_stage(stage, bindings)
        ind_id = f"g{generation}-i{index}"
        try:
            artifact = extract_artifacts(reply)
        except ExtractionError as exc:
            return HeuristicIndividual(
                id=ind_id,
                source=reply,
                entry_name="",
                thought="",
                generation=generation,
                status=Status.FAILED,
                errors=(ErrorRecord(phase="load", message=f"ExtractionError: {exc.reason}"),),
                parent_prompt_id=prompt_digest,
            )
        return HeuristicIndividual(
            id=ind_id,
            source=artifact.code,
            entry_name=artifact.entry_name,
            thought=artifact.thought,
            generation=generation,
            status=Status.PENDING,
            parent_prompt_id=prompt_digest,
        )

    # ----------------------------------------------------------- evaluation

    def _settle_generation(
        self,
        problem: ProblemSpec,
        eval_root: SeedStream,
        individuals: list[HeuristicIndividual],
        best: HeuristicIndividual | None,
        traces: dict[str, tuple[tuple[int, float], ...]],
    ) -> tuple[list[HeuristicIndividual], HeuristicIndividual | None]:
        settled: list[HeuristicIndividual] = []
        for ind in individuals:
            eval_stream = eval_root.child(self._solution_index)
            self._solution_index += 1
            if ind.status is Status.PENDING:
                result = self._evaluate(problem, ind, eval_stream)
                if result.valid:
                    ind = ind.replace(status=Status.VALID, fitness=result.fitness)
                    traces[ind.id] = result.trace
                else:
                    ind = ind.replace(
                        status=Status.FAILED,
                        errors=ind.errors + (result.error,),
                    )
            if ind.status is Status.FAILED and self.cfg.ablation.error_repair:
                outcome = self.repair(problem, ind, eval_stream)
                ind = outcome.individual
                if ind.status is Status.REPAIRED:
                    traces[ind.id] = self._last_trace
                self.sink.emit(
                    "repair",
                    {
                        "id": ind.id,
                        "attempts": outcome.attempts,
                        "winning_attempt": outcome.winning_attempt,
                        "status": ind.status.value,
                    },
                )
            settled.append(ind)
            if ind.fitness is not None and (best is None or ind.fitness < best.fitness):
                best = ind
            self.sink.emit(
                "individual",
                {
                    "id": ind.id,
                    "generation": ind.generation,
                    "status": ind.status.value,
                    "fitness": ind.fitness,
                    "entry_name": ind.entry_name,
                    "n_errors": len(ind.errors),
                    "parent_prompt_id": ind.parent_prompt_id,
                },
            )
        return settled, best

    def _evaluate(
        self, problem: ProblemSpec, ind: HeuristicIndividual, stream: SeedStream
    ) -> EvaluationResult:
        with self.sandbox_factory() as runtime:
            result = evaluate_heuristic(problem, ind, runtime, stream)
        self._last_trace = result.trace
        return result

    # --------------------------------------------------------------- repair

    def repair(
        self,
        problem: ProblemSpec,
        individual: HeuristicIndividual,
        eval_stream: SeedStream,
    ) -> RepairOutcome:
        """Up to M error-prompt chats; the best valid candidate replaces the
        original, otherwise every attempt's failure is logged."""
        assert individual.errors, "repair requires a recorded error"
        current_code = individual.source
        current_error = individual.errors[-1].message
        errors = list(individual.errors)
        candidates: list[tuple[float, int, Any, tuple[tuple[int, float], ...]]] = []

        for attempt in range(1, self.cfg.repair_limit + 1):
            digest, reply = self._chat_stage(
                "error",
                {"code_str": current_code, "str_error": current_error},
                stage_tag="error_repair",
            )
            try:
                artifact = extract_artifacts(reply)
            except ExtractionError as exc:
                errors.append(
                    ErrorRecord(
                        phase="load",
                        message=f"ExtractionError: {exc.reason}",
                        repair_attempt=attempt,
                    )
                )
                current_code, current_error = reply, f"ExtractionError: {exc.reason}"
                continue
            candidate = individual.replace(
                source=artifact.code,
                entry_name=artifact.entry_name,
                thought=artifact.thought or individual.thought,
                parent_prompt_id=digest,
                status=Status.PENDING,
                fitness=None,
            )
            result = self._evaluate(problem, candidate, eval_stream.child(attempt))
            if result.valid:
                candidates.append((result.fitness, attempt, artifact, result.trace))
            else:
                errors.append(
                    ErrorRecord(
                        phase=result.error.phase,
                        message=result.error.message,
                        traceback=result.error.traceback,
                        repair_attempt=attempt,
                    )
                )
                current_code, current_error = artifact.code, result.error.message

        if candidates:
            fitness, attempt, artifact, trace = min(candidates, key=lambda c: (c[0], c[1]))
            self._last_trace = trace
            repaired = individual.replace(
                source=artifact.code,
                entry_name=artifact.entry_name,
                thought=artifact.thought or individual.thought,
                status=Status.REPAIRED,
                fitness=fitness,
                errors=tuple(errors),
            )
            return RepairOutcome(repaired, winning_attempt=attempt, attempts=self.cfg.repair_limit)
        failed = individual.replace(
            status=Status.FAILED, fitness=None, errors=tuple(errors)
        )
        return RepairOutcome(failed, winning_attempt=0, attempts=self.cfg.repair_limit)

    # -------------------------------------------------------- metacognition

    def metacognize(self, record: GenerationRecord, best_code: str) -> str:
        bindings = {
            "thoughts": prompts.build_history_digest(record.individuals),
            "errors": prompts.build_error_digest(record.individuals),
            "code": best_code,
        }
        _, reply = self._chat_stage("metacognition", bindings)
        return reply

    # --------------------------------------------------------------- gateway

    def _chat_stage(
        self, stage: str, bindings: dict[str, str], stage_tag: str | None = None
    ) -> tuple[str, str]:
        system, prompt = prompts.render(stage, bindings)
        req = ChatRequest(
            system_role=system,
            user_prompt=prompt,
            temperature=self.cfg.llm.temperature,
            model=self.cfg.llm.model,
        )
        tag = stage_tag or {
            "analysis": "analysis",
            "gen1": "generation",
            "gen2": "generation",
            "error": "error_repair",
            "metacognition": "metacognition",
        }[stage]
        reply = chat(self.backend, req, tag)
        return req.digest(), reply


def _generation_sr(individuals: list[HeuristicIndividual], pre_repair: bool) -> float:
    if not individuals:
        return 0.0
    if pre_repair:
        good = sum(1 for i in individuals if i.status is Status.VALID)
    else:
        good = sum(1 for i in individuals if i.status in (Status.VALID, Status.REPAIRED))
    return good / len(individuals)


def run(
    cfg: ValidatedConfig,
    backend: Backend,
    sandbox_factory: SandboxFactory,
    run_stream: SeedStream,
    sink: EventSink | None = None,
    problem: ProblemSpec | None = None,
) -> RunResult:
    """Execute one full optimization run on the given seed stream."""
    return Orchestrator(cfg, backend, sandbox_factory, sink, problem).run(run_stream)
