"""Command-line interface: benchmark evaluation, reporting, and live sessions."""

from __future__ import annotations

import json
import shlex
import sys
from pathlib import Path

import click

from .bench.cases import load_hardness_index, load_nlv_corpus, load_nvbench_with_audit
from .bench.report import EvaluationReport, load_verdicts, merge_verdicts, write_review_report
from .bench.runner import EvalConfig, run_nlv_cascade, run_nvbench_suite
from .errors import NlvizError
from .gateway import (
    CassetteStore,
    HttpProvider,
    ModelParams,
    RecordingProvider,
    ReplayProvider,
    parse_model_spec,
)
from .prompts import QueryChain, default_templates, load_templates
from .sandbox import StubSandbox, SubprocessSandbox
from .session import SessionEngine


def _build_provider(replay: str | None, record: str | None):
    if replay:
        return ReplayProvider(CassetteStore(replay))
    live = HttpProvider()
    if record:
        return RecordingProvider(live, CassetteStore(record))
    return live


def _build_sandbox(stub_dir: str | None, runner_cmd: str | None):
    if stub_dir:
        return StubSandbox(stub_dir)
    if runner_cmd:
        return SubprocessSandbox(tuple(shlex.split(runner_cmd)))
    return SubprocessSandbox()


def _shared_eval_options(fn):
    fn = click.option("--replay", type=click.Path(exists=True, file_okay=False),
                      help="Replay cassettes from this directory (strict).")(fn)
    fn = click.option("--record", type=click.Path(file_okay=False),
                      help="Record live completions into this directory.")(fn)
    fn = click.option("--parallel", default=1, show_default=True, type=int)(fn)
    fn = click.option("--stub-sandbox", type=click.Path(exists=True, file_okay=False),
                      help="Serve pre-recorded chart extracts instead of executing.")(fn)
    fn = click.option("--runner-cmd", help="Sandbox runner command line.")(fn)
    fn = click.option("--templates", "templates_dir",
                      type=click.Path(exists=True, file_okay=False),
                      help="Prompt template directory (default: bundled).")(fn)
    fn = click.option("--timeout", default=30.0, show_default=True, type=float,
                      help="Per-script execution timeout in seconds.")(fn)
    fn = click.option("--out", "out_path", type=click.Path(dir_okay=False),
                      help="Write the JSON report here.")(fn)
    return fn


def _make_config(db_dir, replay, record, parallel, stub_sandbox, runner_cmd,
                 templates_dir, timeout, zero_fill=False, multiset_ties=False,
                 coerce_empty=False) -> EvalConfig:
    return EvalConfig(
        provider=_build_provider(replay, record),
        sandbox=_build_sandbox(stub_sandbox, runner_cmd),
        db_dir=Path(db_dir) if db_dir else None,
        templates=load_templates(templates_dir) if templates_dir else default_templates(),
        params=ModelParams(),
        timeout_s=timeout,
        zero_fill=zero_fill,
        multiset_ties=multiset_ties,
        coerce_empty=coerce_empty,
        parallelism=parallel,
    )


def _emit_report(report: EvaluationReport, out_path: str | None, by: str = "difficulty") -> None:
    if out_path:
        Path(out_path).write_text(report.to_json(), encoding="utf-8")
        click.echo(f"report written to {out_path}")
    click.echo(report.render_text(by=by))


@click.group()
def main() -> None:
    """Natural-language visualization engine and benchmark harness."""


@main.group("eval")
def eval_group() -> None:
    """Run benchmark evaluations."""


@eval_group.command("nvbench")
@click.option("--spec", "spec_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--db-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--model", required=True, help="provider:name:mode or a bare model name.")
@click.option("--hardness-index", type=click.Path(exists=True, dir_okay=False))
@click.option("--zero-fill", is_flag=True, help="Insert zero-valued categories before comparing.")
@click.option("--multiset-ties", is_flag=True, help="Compare tied-y runs as multisets.")
@click.option("--coerce-empty", is_flag=True,
              help="Treat empty strings in numeric columns as nulls at load.")
@_shared_eval_options
def eval_nvbench(spec_file, db_dir, model, hardness_index, zero_fill, multiset_ties,
                 coerce_empty, replay, record, parallel, stub_sandbox, runner_cmd,
                 templates_dir, timeout, out_path) -> None:
    """Evaluate filtered benchmark cases against one model."""
    index = load_hardness_index(hardness_index) if hardness_index else None
    filtered = load_nvbench_with_audit(spec_file, index)
    click.echo(
        f"loaded {filtered.total_seen} specs; kept {len(filtered.cases)}; excluded "
        + ", ".join(f"{k}={len(v)}" for k, v in sorted(filtered.exclusions.items()))
    )
    config = _make_config(db_dir, replay, record, parallel, stub_sandbox, runner_cmd,
                          templates_dir, timeout, zero_fill, multiset_ties, coerce_empty)
    report = run_nvbench_suite(filtered.cases, parse_model_spec(model), config)
    _emit_report(report, out_path)


@eval_group.command("nlv")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--references", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Per-chart reference extracts (JSON).")
@click.option("--data-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--models", required=True, help="Comma-separated cascade, first stage first.")
@click.option("--separator", default="|", show_default=True,
              help="Separator character for sequential utterance sets.")
@click.option("--review-out", type=click.Path(dir_okay=False),
              help="Write adjudication candidates for human review.")
@click.option("--verdicts", type=click.Path(exists=True, dir_okay=False),
              help="Re-ingest human verdicts and merge them into the report.")
@_shared_eval_options
def eval_nlv(corpus, references, data_dir, models, separator, review_out, verdicts,
             replay, record, parallel, stub_sandbox, runner_cmd, templates_dir,
             timeout, out_path) -> None:
    """Run the staged model cascade over the utterance corpus."""
    cases, audit = load_nlv_corpus(corpus, references, separator)
    if audit:
        click.echo("; ".join(f"excluded {len(v)} ({k})" for k, v in sorted(audit.items())))
    specs = [parse_model_spec(m.strip()) for m in models.split(",") if m.strip()]
    config = _make_config(data_dir, replay, record, parallel, stub_sandbox, runner_cmd,
                          templates_dir, timeout)
    report = run_nlv_cascade(cases, specs, config)
    report.skipped.update(audit)
    if review_out:
        n = write_review_report(report, review_out)
        click.echo(f"{n} adjudication candidates written to {review_out}")
    if verdicts:
        report = merge_verdicts(report, load_verdicts(verdicts))
    for stage in report.stages or []:
        click.echo(f"stage {stage['stage']} ({stage['model']}): "
                   f"{stage['cumulative_rate']:.0%} cumulative")
    _emit_report(report, out_path, by="chart")


@main.command("report")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--by", type=click.Choice(["difficulty", "database", "chart", "stage"]),
              default="difficulty", show_default=True)
@click.option("--top", default=10, show_default=True, type=int)
def report_cmd(input_path, by, top) -> None:
    """Render a saved JSON report as aligned text."""
    report = EvaluationReport.from_dict(json.loads(Path(input_path).read_text("utf-8")))
    click.echo(report.render_text(by=by, top=top))


@main.command("ask")
@click.argument("query")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--models", required=True, help="Comma-separated, up to three.")
@click.option("--then", "refinements", multiple=True, help="Refinement; repeatable.")
@click.option("--replay", type=click.Path(exists=True, file_okay=False))
@click.option("--record", type=click.Path(file_okay=False))
@click.option("--stub-sandbox", type=click.Path(exists=True, file_okay=False))
@click.option("--runner-cmd")
@click.option("--state-dir", type=click.Path(file_okay=False),
              help="Persist the session under this directory.")
def ask(query, dataset, models, refinements, replay, record, stub_sandbox,
        runner_cmd, state_dir) -> None:
    """One-shot session: ask, optionally refine, print per-model results."""
    dataset_path = Path(dataset)
    engine = SessionEngine(
        datasets_dir=dataset_path.parent,
        provider=_build_provider(replay, record),
        sandbox=_build_sandbox(stub_sandbox, runner_cmd),
        state_dir=state_dir,
    )
    specs = [parse_model_spec(m.strip()) for m in models.split(",") if m.strip()]
    try:
        session = engine.create_session(dataset_path.stem, specs)
        turns = [engine.post_query(session.session_id, query)]
        for text in refinements:
            turns.append(engine.refine_query(session.session_id, text))
    except NlvizError as exc:
        raise click.ClickException(str(exc))
    for i, turn in enumerate(turns, start=1):
        click.echo(f"turn {i}: {turn.effective_query}")
        for name, result in turn.results.items():
            if result.error:
                click.echo(f"  {name}: ERROR {result.error}")
            elif result.chart:
                pair = result.chart.flatten()
                click.echo(f"  {name}: {result.chart.mark_kind} "
                           f"x={list(pair.x)} y={list(pair.y)}")
            else:
                click.echo(f"  {name}: no chart")


@main.command("serve")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--datasets", "datasets_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--replay", type=click.Path(exists=True, file_okay=False))
@click.option("--record", type=click.Path(file_okay=False))
@click.option("--stub-sandbox", type=click.Path(exists=True, file_okay=False))
@click.option("--runner-cmd")
@click.option("--state-dir", type=click.Path(file_okay=False))
@click.option("--static-dir", type=click.Path(file_okay=False),
              help="Serve a built web UI from this directory.")
@click.option("--want-images", is_flag=True, help="Ask the sandbox to render images.")
def serve(port, host, datasets_dir, replay, record, stub_sandbox, runner_cmd,
          state_dir, static_dir, want_images) -> None:
    """Serve the session HTTP API (and optionally the web UI)."""
    import uvicorn

    from .service import create_app

    engine = SessionEngine(
        datasets_dir=datasets_dir,
        provider=_build_provider(replay, record),
        sandbox=_build_sandbox(stub_sandbox, runner_cmd),
        state_dir=state_dir,
        want_images=want_images,
    )
    app = create_app(engine, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
