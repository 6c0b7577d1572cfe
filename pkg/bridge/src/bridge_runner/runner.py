"""Subprocess sandbox around agent-generated CAD scripts.

Scripts are untrusted: each one runs in an isolated child interpreter with
a blocked socket layer, resource limits, a wall-clock timeout and the
working directory confined to the caller-provided workdir. The wire
contract is one JSON object describing the outcome.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

DEFAULT_TIMEOUT_SECONDS = 60.0
MAX_SCRIPT_BYTES = 256 * 1024

STATUS_OK = "ok"
STATUS_SCRIPT_ERROR = "script_error"
STATUS_TIMEOUT = "timeout"

EXIT_CODES = {STATUS_OK: 0, STATUS_SCRIPT_ERROR: 1, STATUS_TIMEOUT: 2}


@dataclass(frozen=True)
class BridgeResult:
    status: str
    stl_path: str | None = None
    kernel_face_count: int | None = None
    kernel_volume_mm3: float | None = None
    error_text: str | None = None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "stl_path": self.stl_path,
            "kernel_face_count": self.kernel_face_count,
            "kernel_volume_mm3": self.kernel_volume_mm3,
            "error_text": self.error_text,
        }

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def execute_script(
    script_path: str | Path,
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS,
    workdir: str | Path = ".",
) -> BridgeResult:
    """Run one CAD script in a sandboxed child and collect its STL output."""
    script_path = Path(script_path).resolve()
    workdir = Path(workdir).resolve()
    workdir.mkdir(parents=True, exist_ok=True)

    size = script_path.stat().st_size
    if size > MAX_SCRIPT_BYTES:
        return BridgeResult(
            status=STATUS_SCRIPT_ERROR,
            error_text=f"script exceeds the {MAX_SCRIPT_BYTES}-byte limit ({size} bytes)",
        )

    stl_path = workdir / "model.stl"
    env = {
        "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
        "PYTHONDONTWRITEBYTECODE": "1",
        "PYTHONHASHSEED": "0",
    }
    cmd = [
        sys.executable,
        "-I",
        "-m",
        "bridge_runner._bootstrap",
        str(script_path),
        str(stl_path),
    ]
    try:
        proc = subprocess.run(
            cmd,
            cwd=workdir,
            env=env,
            capture_output=True,
            text=True,
            timeout=timeout_seconds,
        )
    except subprocess.TimeoutExpired:
        return BridgeResult(
            status=STATUS_TIMEOUT,
            error_text=f"script exceeded the {timeout_seconds:g} s wall-clock limit",
        )

    if proc.returncode != 0:
        tail = (proc.stderr or "").strip()[-4000:]
        return BridgeResult(status=STATUS_SCRIPT_ERROR, error_text=tail or "nonzero exit")

    # the bootstrap prints its JSON as the final stdout line; anything the
    # script itself printed comes before it
    last_line = ""
    for line in (proc.stdout or "").strip().splitlines():
        if line.strip():
            last_line = line.strip()
    try:
        payload = json.loads(last_line)
    except json.JSONDecodeError:
        return BridgeResult(
            status=STATUS_SCRIPT_ERROR,
            error_text=f"runner produced no result payload (stdout tail: {last_line[:200]!r})",
        )
    return BridgeResult(
        status=STATUS_OK,
        stl_path=payload["stl_path"],
        kernel_face_count=int(payload["kernel_face_count"]),
        kernel_volume_mm3=float(payload["kernel_volume_mm3"]),
    )
