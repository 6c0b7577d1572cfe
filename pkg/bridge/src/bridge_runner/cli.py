"""CLI: `bridge <script-file> --timeout <s> --workdir <dir>`.

Prints one JSON object {status, stl_path, kernel_face_count,
kernel_volume_mm3, error_text}; exit code 0 ok, 1 script_error, 2 timeout.
"""

from __future__ import annotations

import argparse
import json
import sys

from .runner import DEFAULT_TIMEOUT_SECONDS, execute_script


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bridge",
        description="execute a parametric CAD script in a sandbox and export STL",
    )
    parser.add_argument("script", help="path to the CAD script")
    parser.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT_SECONDS,
                        help="wall-clock limit in seconds")
    parser.add_argument("--workdir", default=".", help="directory for exported artifacts")
    args = parser.parse_args(argv)

    result = execute_script(args.script, timeout_seconds=args.timeout, workdir=args.workdir)
    print(json.dumps(result.to_json()))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
