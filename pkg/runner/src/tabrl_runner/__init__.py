"""Execute one candidate script in a fresh namespace.

Protocol: ``runner --code <file> --cwd <dir>``. Exit 0 on success, 1 when
the script raises, 2 on protocol errors (missing file or directory).
stdout belongs exclusively to the script; the runner never writes to it.
The orchestrator owns all resource limits, so there is no in-runner
timeout.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tabrl-runner", add_help=True)
    parser.add_argument("--code", required=True, help="path to the candidate script")
    parser.add_argument("--cwd", required=True, help="workspace directory to run in")
    args = parser.parse_args(argv)

    if not os.path.isdir(args.cwd):
        print(f"tabrl-runner: workspace not found: {args.cwd}", file=sys.stderr)
        return 2
    os.chdir(args.cwd)
    try:
        with open(args.code, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        print(f"tabrl-runner: cannot read code file: {exc}", file=sys.stderr)
        return 2

    # Fresh namespace per candidate: no interpreter state leaks between rollouts.
    namespace: dict = {"__name__": "__main__", "__file__": args.code}
    try:
        exec(compile(source, args.code, "exec"), namespace)
    except SystemExit as exc:
        return int(exc.code or 0) if isinstance(exc.code, (int, type(None))) else 1
    except BaseException:
        traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
