"""Clients for the script-execution sandbox.

Execution never happens in this process. SubprocessSandbox spawns one
isolated worker per request and speaks line-delimited JSON over its
standard streams; StubSandbox serves pre-recorded responses keyed by the
script hash, which keeps the whole harness runnable offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .chart import ChartExtract, chart_from_wire, chart_to_wire
from .errors import SandboxUnavailable

RUNNER_CMD_ENV = "NLVIZ_RUNNER_CMD"
DEFAULT_RUNNER_CMD = ("viz-sandbox-runner",)
# Client-side kill margin on top of the runner's own deadline.
KILL_GRACE_S = 10.0


@dataclass(frozen=True)
class SandboxError:
    kind: str  # syntax | runtime | timeout | extraction-failure
    message: str
    stderr_excerpt: str = ""


@dataclass(frozen=True)
class SandboxResult:
    chart: ChartExtract | None = None
    error: SandboxError | None = None
    image_path: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def script_digest(script_text: str) -> str:
    return hashlib.sha256(script_text.encode("utf-8")).hexdigest()


def result_from_wire(data: dict) -> SandboxResult:
    if data.get("status") == "ok":
        return SandboxResult(
            chart=chart_from_wire(data["chart"]),
            image_path=data.get("image_path"),
        )
    err = data.get("error") or {}
    return SandboxResult(error=SandboxError(
        kind=err.get("kind", "runtime"),
        message=err.get("message", ""),
        stderr_excerpt=err.get("stderr_excerpt", ""),
    ))


def result_to_wire(result: SandboxResult) -> dict:
    if result.ok:
        return {
            "status": "ok",
            "chart": chart_to_wire(result.chart),
            "image_path": result.image_path,
        }
    return {
        "status": "error",
        "error": {
            "kind": result.error.kind,
            "message": result.error.message,
            "stderr_excerpt": result.error.stderr_excerpt,
        },
    }


class SandboxClient:
    def run(self, script_text: str, dataset: str, timeout_s: float,
            want_image: bool = False) -> SandboxResult:
        raise NotImplementedError


class SubprocessSandbox(SandboxClient):
    """One worker process per request; the worker jails itself."""

    def __init__(self, runner_cmd: tuple[str, ...] | None = None) -> None:
        if runner_cmd is None:
            env_cmd = os.environ.get(RUNNER_CMD_ENV)
            runner_cmd = tuple(shlex.split(env_cmd)) if env_cmd else DEFAULT_RUNNER_CMD
        self.runner_cmd = tuple(runner_cmd)

    def run(self, script_text: str, dataset: str, timeout_s: float,
            want_image: bool = False) -> SandboxResult:
        request = json.dumps({
            "script_text": script_text,
            "dataset": dataset,
            "timeout_s": timeout_s,
            "want_image": want_image,
        }, ensure_ascii=False)
        try:
            proc = subprocess.run(
                list(self.runner_cmd),
                input=request + "\n",
                capture_output=True,
                text=True,
                timeout=timeout_s + KILL_GRACE_S,
            )
        except FileNotFoundError as exc:
            raise SandboxUnavailable(f"runner command not found: {self.runner_cmd}") from exc
        except subprocess.TimeoutExpired:
            return SandboxResult(error=SandboxError(
                kind="timeout",
                message=f"runner gave no response within {timeout_s + KILL_GRACE_S:.0f}s",
            ))
        if proc.returncode != 0:
            raise SandboxUnavailable(
                f"runner exited {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        line = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else ""
        try:
            return result_from_wire(json.loads(line))
        except (json.JSONDecodeError, KeyError) as exc:
            raise SandboxUnavailable(f"malformed runner response: {exc}") from exc


class StubSandbox(SandboxClient):
    """Replay pre-recorded wire responses keyed by sha256(script_text).

    The store directory holds one JSON wire response per file, named
    <digest>.json. Unknown scripts raise SandboxUnavailable so a stale
    fixture is loud, never silently green.
    """

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)

    def run(self, script_text: str, dataset: str, timeout_s: float,
            want_image: bool = False) -> SandboxResult:
        path = self.directory / f"{script_digest(script_text)}.json"
        if not path.is_file():
            raise SandboxUnavailable(
                f"stub sandbox has no response for script {script_digest(script_text)[:12]}…"
            )
        return result_from_wire(json.loads(path.read_text("utf-8")))

    def store(self, script_text: str, result: SandboxResult) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / f"{script_digest(script_text)}.json"
        path.write_text(
            json.dumps(result_to_wire(result), ensure_ascii=False, indent=2, sort_keys=True),
            encoding="utf-8",
        )
        return path
