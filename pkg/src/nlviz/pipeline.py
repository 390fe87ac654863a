"""Assemble prompt stub + completion into a script and run it in the sandbox."""

from __future__ import annotations

from dataclasses import dataclass

from .chart import ChartExtract
from .gateway import Completion
from .prompts import EngineeredPrompt
from .sandbox import SandboxClient, SandboxResult
from .tabular import TableData, export_delimited

DEFAULT_TIMEOUT_S = 30.0

EXEC_ERROR_KINDS = ("syntax", "runtime", "timeout", "truncated-script", "extraction-failure")


@dataclass(frozen=True)
class AssembledScript:
    prelude: str
    body: str

    @property
    def full_text(self) -> str:
        return self.prelude + self.body


@dataclass(frozen=True)
class ExecError:
    kind: str
    message: str
    stderr_excerpt: str = ""


def assemble_script(prompt: EngineeredPrompt, completion: Completion) -> AssembledScript:
    """Exact concatenation, prelude first; neither part is reformatted."""
    return AssembledScript(prelude=prompt.code_part, body=completion.text)


def execute_script(
    script: AssembledScript,
    table: TableData,
    sandbox: SandboxClient,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    want_image: bool = False,
) -> ChartExtract | ExecError:
    result, _ = execute_script_with_image(script, table, sandbox, timeout_s, want_image)
    return result


def execute_script_with_image(
    script: AssembledScript,
    table: TableData,
    sandbox: SandboxClient,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    want_image: bool = False,
) -> tuple[ChartExtract | ExecError, str | None]:
    if timeout_s <= 0:
        raise ValueError("timeout_s must be > 0")
    result: SandboxResult = sandbox.run(
        script_text=script.full_text,
        dataset=export_delimited(table),
        timeout_s=timeout_s,
        want_image=want_image,
    )
    if result.ok:
        return result.chart, result.image_path
    return ExecError(
        kind=result.error.kind,
        message=result.error.message,
        stderr_excerpt=result.error.stderr_excerpt,
    ), None


def run_completion(
    prompt: EngineeredPrompt,
    completion: Completion,
    table: TableData,
    sandbox: SandboxClient,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    want_image: bool = False,
) -> tuple[AssembledScript, ChartExtract | ExecError, str | None]:
    """Truncated completions short-circuit to an error before execution."""
    script = assemble_script(prompt, completion)
    if completion.finish_reason == "length":
        return script, ExecError(
            kind="truncated-script",
            message="completion hit the max_tokens limit; script is likely cut mid-statement",
        ), None
    result, image_path = execute_script_with_image(
        script, table, sandbox, timeout_s, want_image
    )
    return script, result, image_path
