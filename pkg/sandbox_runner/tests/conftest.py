from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parents[1] / "src"


@pytest.fixture
def invoke_runner():
    """Drive the runner exactly as a client would: one process, wire JSON."""

    def _invoke(script_text: str, dataset: str, timeout_s: float = 20.0,
                want_image: bool = False, kill_after: float = 40.0):
        request = json.dumps({
            "script_text": script_text,
            "dataset": dataset,
            "timeout_s": timeout_s,
            "want_image": want_image,
        })
        proc = subprocess.run(
            [sys.executable, "-m", "sandbox_runner.runner"],
            input=request + "\n",
            capture_output=True,
            text=True,
            timeout=kill_after,
            env={"PYTHONPATH": str(SRC), "PATH": "/usr/bin:/bin:/usr/local/bin",
                 "MPLBACKEND": "Agg", "HOME": "/tmp"},
        )
        assert proc.returncode == 0, proc.stderr
        return json.loads(proc.stdout.strip().splitlines()[-1])

    return _invoke
