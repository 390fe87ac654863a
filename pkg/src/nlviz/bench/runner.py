"""Per-case evaluation loop and the staged model cascade."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..chart import ChartExtract, Series
from ..compare import VectorPair, evaluate_vectors
from ..errors import (
    GatewayError,
    MissingDatabase,
    MissingTable,
    SandboxUnavailable,
    UnreadableFile,
)
from ..gateway import ModelParams, ModelSpec, Provider
from ..pipeline import DEFAULT_TIMEOUT_S, ExecError, run_completion
from ..prompts import PromptTemplates, QueryChain, build_prompt, default_templates, shape_request
from ..sandbox import SandboxClient
from ..tabular import (
    TableData,
    coerce_empty_to_null,
    load_delimited,
    load_sqlite_table,
    profile_columns,
)
from .cases import BenchCase, extract_bench_vectors
from .report import EvaluationReport, Outcome

log = logging.getLogger(__name__)


@dataclass
class EvalConfig:
    provider: Provider
    sandbox: SandboxClient
    db_dir: Path | None = None
    templates: PromptTemplates = field(default_factory=default_templates)
    params: ModelParams = field(default_factory=ModelParams)
    timeout_s: float = DEFAULT_TIMEOUT_S
    zero_fill: bool = False
    multiset_ties: bool = False
    coerce_empty: bool = False
    parallelism: int = 1


def resolve_db_path(db_dir: Path, db_id: str) -> Path:
    for candidate in (
        db_dir / f"{db_id}.sqlite",
        db_dir / f"{db_id}.db",
        db_dir / db_id / f"{db_id}.sqlite",
        db_dir / db_id / f"{db_id}.db",
    ):
        if candidate.is_file():
            return candidate
    raise MissingDatabase(f"no database file for db_id {db_id!r} under {db_dir}")


def _load_case_table(case: BenchCase, config: EvalConfig) -> TableData:
    if config.db_dir is None:
        raise MissingDatabase("no database directory configured")
    if case.vql:
        path = resolve_db_path(config.db_dir, case.db_id)
        table = load_sqlite_table(path, case.table_name or "")
    else:
        # Utterance cases reference a delimited dataset by name.
        path = config.db_dir / f"{case.db_id}.csv"
        table = load_delimited(path, name=case.db_id)
    if config.coerce_empty:
        table = coerce_empty_to_null(table)
    return table


def run_nvbench_case(case: BenchCase, model: ModelSpec, config: EvalConfig,
                     stage: int | None = None) -> Outcome:
    """Full pipeline for one case: load, prompt, submit, execute, compare."""
    base = dict(case_id=case.case_id, hardness=case.hardness, db_id=case.db_id,
                chart_kind=case.chart_kind, stage=stage)

    try:
        table = _load_case_table(case, config)
    except (MissingDatabase, MissingTable, UnreadableFile) as exc:
        return Outcome(result="Error", reason="load-failure", detail=str(exc),
                       infrastructure=isinstance(exc, MissingDatabase), **base)

    profile = profile_columns(table)
    chain = QueryChain(base_query=case.first_query)
    prompt = build_prompt(profile, chain, config.templates)
    request = shape_request(prompt, model, config.templates, config.params)

    try:
        completion = config.provider.submit(request, model)
    except GatewayError as exc:
        return Outcome(result="Error", reason="provider-failure", detail=str(exc), **base)

    try:
        _, result, _ = run_completion(prompt, completion, table, config.sandbox,
                                      config.timeout_s)
    except SandboxUnavailable as exc:
        return Outcome(result="Error", reason="provider-failure", detail=str(exc),
                       infrastructure=True, **base)

    if isinstance(result, ExecError):
        return Outcome(result="Error", reason=result.kind,
                       detail=result.message, **base)

    if case.reference_chart is not None:
        return _classify_against_chart(result, case, **base)
    return _classify_against_vectors(result, case, config, **base)


def _classify_against_vectors(chart: ChartExtract, case: BenchCase,
                              config: EvalConfig, **base) -> Outcome:
    reference = extract_bench_vectors(case)
    verdict = evaluate_vectors(
        chart.flatten(), reference, case.first_query,
        zero_fill_mode=config.zero_fill, multiset_ties=config.multiset_ties,
    )
    if verdict.matched:
        return Outcome(result="Match", **base)
    return Outcome(result="Mismatch", reason="vector-mismatch",
                   detail=_diff_text(verdict), **base)


def _series_pair(series: Series) -> VectorPair:
    return VectorPair(x=series.x, y=series.y)


def _classify_against_chart(chart: ChartExtract, case: BenchCase, **base) -> Outcome:
    """Utterance comparison: mark kind plus per-series vectors. Plausible
    correct-but-alternative presentations are flagged for adjudication."""
    reference = case.reference_chart
    if chart.mark_kind != reference.mark_kind:
        return Outcome(
            result="Mismatch", reason="vector-mismatch",
            detail=f"mark kind {chart.mark_kind} vs {reference.mark_kind}",
            adjudication_candidate=True, **base,
        )
    if len(chart.series) != len(reference.series):
        return Outcome(
            result="Mismatch", reason="vector-mismatch",
            detail=f"{len(chart.series)} series vs {len(reference.series)}",
            adjudication_candidate=True, **base,
        )
    for got, want in zip(chart.series, reference.series):
        verdict = evaluate_vectors(_series_pair(got), _series_pair(want),
                                   case.first_query)
        if not verdict.matched:
            return Outcome(result="Mismatch", reason="vector-mismatch",
                           detail=_diff_text(verdict), **base)
    return Outcome(result="Match", **base)


def _diff_text(verdict) -> str:
    if verdict.diff is None:
        return ""
    d = verdict.diff
    return f"first divergence at index {d.index}: {d.left!r} != {d.right!r}"


def run_nvbench_suite(cases: list[BenchCase], model: ModelSpec,
                      config: EvalConfig) -> EvaluationReport:
    """Evaluate every case exactly once; per-case errors are data."""
    report = EvaluationReport()
    runnable: list[BenchCase] = []
    for case in cases:
        if case.reference is None and case.reference_chart is None:
            # Benchmark damage: skip with an audit entry, never an Error.
            report.skipped.setdefault("malformed-reference", []).append(case.case_id)
            log.warning("skipping %s: malformed reference marks", case.case_id)
            continue
        runnable.append(case)

    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outcomes = list(pool.map(
                lambda c: run_nvbench_case(c, model, config), runnable
            ))
    else:
        outcomes = [run_nvbench_case(c, model, config) for c in runnable]
    # Deterministic report order regardless of worker scheduling.
    outcomes.sort(key=lambda o: o.case_id)
    report.outcomes = outcomes
    return report


def run_nlv_cascade(
    cases: list[BenchCase],
    models: list[ModelSpec],
    config: EvalConfig,
    case_runner=None,
) -> EvaluationReport:
    """Stage 1 evaluates everything with models[0]; each later stage retries
    only the still-unmatched cases with the next model. A case matched at
    stage k is never resubmitted."""
    if not models:
        raise ValueError("cascade needs at least one model")
    runner = case_runner or run_nvbench_case

    latest: dict[str, Outcome] = {}
    order = [c.case_id for c in cases]
    pending = list(cases)
    stage_summaries: list[dict] = []
    total = len(cases)

    for stage_no, model in enumerate(models, start=1):
        if not pending:
            stage_summaries.append(_stage_summary(stage_no, model, latest, total, order))
            continue
        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                outcomes = list(pool.map(
                    lambda c: runner(c, model, config, stage=stage_no), pending
                ))
        else:
            outcomes = [runner(c, model, config, stage=stage_no) for c in pending]
        for case, outcome in zip(pending, outcomes):
            latest[case.case_id] = outcome
        # Errors and mismatches both count as unsuccessful and move on.
        pending = [c for c in pending if latest[c.case_id].result != "Match"]
        stage_summaries.append(_stage_summary(stage_no, model, latest, total, order))

    report = EvaluationReport(
        outcomes=sorted((latest[cid] for cid in order if cid in latest),
                        key=lambda o: o.case_id),
        stages=stage_summaries,
    )
    return report


def _stage_summary(stage_no: int, model: ModelSpec, latest: dict[str, Outcome],
                   total: int, order: list[str]) -> dict:
    matched = sum(1 for cid in order
                  if cid in latest and latest[cid].result == "Match")
    return {
        "stage": stage_no,
        "model": model.model_name,
        "cumulative_matches": matched,
        "cumulative_rate": matched / total if total else 0.0,
    }
