"""One-shot sandboxed execution of a plotting script.

Reads a single JSON request line on stdin, executes the script inside a
temp-dir jail with networking disabled and a wall-clock deadline, then
writes one JSON response line on stdout. Exit code 0 covers every
well-formed response, including error responses; nonzero means the
protocol itself failed.
"""

from __future__ import annotations

import io
import json
import os

os.environ.setdefault("MPLBACKEND", "Agg")

import signal
import socket
import sys
import tempfile
import traceback
from pathlib import Path

import matplotlib
import matplotlib.pyplot as plt

from .extract import NoChartDrawn, extract_chart

STDERR_EXCERPT_LIMIT = 2000


class ScriptTimeout(Exception):
    pass


def _disable_network() -> None:
    def guarded(*args, **kwargs):
        raise OSError("network access is disabled inside the sandbox")

    socket.socket = guarded
    socket.create_connection = guarded
    socket.socketpair = guarded


def _error(kind: str, message: str, stderr_excerpt: str = "") -> dict:
    return {
        "status": "error",
        "error": {
            "kind": kind,
            "message": message,
            "stderr_excerpt": stderr_excerpt[-STDERR_EXCERPT_LIMIT:],
        },
    }


def _materialize_dataset(dataset: str, jail: Path) -> None:
    target = jail / "data.csv"
    if "\n" not in dataset and len(dataset) < 4096:
        source = Path(dataset)
        if source.is_file():
            target.write_bytes(source.read_bytes())
            return
    target.write_text(dataset, encoding="utf-8")


def _run_script(script_text: str, timeout_s: float) -> tuple[dict | None, str]:
    """Returns (error_response | None, captured stderr)."""
    capture_out = io.StringIO()
    capture_err = io.StringIO()

    try:
        code = compile(script_text, "<script>", "exec")
    except SyntaxError:
        return _error("syntax", "script does not parse",
                      traceback.format_exc(limit=2)), ""

    def on_alarm(signum, frame):
        raise ScriptTimeout()

    old_handler = signal.signal(signal.SIGALRM, on_alarm)
    signal.setitimer(signal.ITIMER_REAL, timeout_s)
    old_stdout, old_stderr, old_stdin = sys.stdout, sys.stderr, sys.stdin
    sys.stdout, sys.stderr = capture_out, capture_err
    sys.stdin = io.StringIO("")
    try:
        exec(code, {"__name__": "__main__"})
        return None, capture_err.getvalue()
    except ScriptTimeout:
        return _error("timeout", f"execution exceeded {timeout_s:.1f}s",
                      capture_err.getvalue()), capture_err.getvalue()
    except BaseException:
        return _error("runtime", traceback.format_exc(limit=1).strip().splitlines()[-1],
                      traceback.format_exc() + capture_err.getvalue()), \
            capture_err.getvalue()
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old_handler)
        sys.stdout, sys.stderr, sys.stdin = old_stdout, old_stderr, old_stdin


def handle_request(request: dict) -> dict:
    script_text = request.get("script_text", "")
    dataset = request.get("dataset", "")
    timeout_s = float(request.get("timeout_s", 30.0))
    want_image = bool(request.get("want_image", False))

    matplotlib.use("Agg", force=True)
    plt.close("all")
    _disable_network()

    jail = Path(tempfile.mkdtemp(prefix="viz-sandbox-"))
    old_cwd = os.getcwd()
    os.chdir(jail)
    try:
        _materialize_dataset(dataset, jail)
        error, stderr_text = _run_script(script_text, timeout_s)
        if error is not None:
            return error

        fignums = plt.get_fignums()
        if not fignums:
            return _error("extraction-failure", "script drew no figures", stderr_text)
        fig = plt.figure(fignums[0])  # first figure wins
        try:
            chart = extract_chart(fig)
        except NoChartDrawn as exc:
            return _error("extraction-failure", str(exc), stderr_text)
        except Exception:
            return _error("extraction-failure", "could not read figure artists",
                          traceback.format_exc())

        response: dict = {"status": "ok", "chart": chart}
        if want_image:
            image = tempfile.NamedTemporaryFile(
                prefix="viz-chart-", suffix=".png", delete=False)
            fig.savefig(image.name, dpi=100, bbox_inches="tight")
            response["image_path"] = image.name
        return response
    finally:
        os.chdir(old_cwd)


def main() -> int:
    line = sys.stdin.readline()
    if not line.strip():
        print("empty request", file=sys.stderr)
        return 2
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        print(f"bad request json: {exc}", file=sys.stderr)
        return 2
    try:
        response = handle_request(request)
    except Exception:
        # Crash containment: any internal failure still answers the wire.
        response = _error("runtime", "sandbox runner internal failure",
                          traceback.format_exc())
    sys.stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
