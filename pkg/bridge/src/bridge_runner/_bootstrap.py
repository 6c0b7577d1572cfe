"""Child-process entry: run one untrusted CAD script and report results.

Usage: python -I -m bridge_runner._bootstrap <script> <stl-out>

Network access is blocked by poisoning the socket module before the script
runs; address-space and CPU rlimits bound runaway scripts. On success the
last stdout line is a JSON object with the exported STL path and kernel
metadata; any exception propagates as a traceback on stderr with a nonzero
exit code.
"""

import json
import sys


def _block_network():
    import socket

    def blocked(*args, **kwargs):
        raise RuntimeError("network access is blocked inside the CAD sandbox")

    socket.socket = blocked
    socket.create_connection = blocked
    socket.getaddrinfo = blocked


def _limit_resources(cpu_seconds: int = 300, address_space: int = 2 << 30):
    try:
        import resource

        resource.setrlimit(resource.RLIMIT_CPU, (cpu_seconds, cpu_seconds))
        resource.setrlimit(resource.RLIMIT_AS, (address_space, address_space))
    except Exception:
        pass  # rlimits are best-effort on exotic platforms


def main() -> int:
    script_path, stl_path = sys.argv[1], sys.argv[2]
    _block_network()
    _limit_resources()

    import minicad

    with open(script_path) as fh:
        source = fh.read()
    namespace = {"__name__": "__main__", "__file__": script_path}
    code = compile(source, script_path, "exec")
    exec(code, namespace)

    result = namespace.get("result")
    if not isinstance(result, minicad.Shape):
        raise RuntimeError(
            "script must assign its final solid to a variable named 'result'"
        )
    result.export_stl(stl_path)
    payload = {
        "stl_path": stl_path,
        "kernel_face_count": result.face_count(),
        "kernel_volume_mm3": result.volume(),
    }
    sys.stdout.write(json.dumps(payload) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
