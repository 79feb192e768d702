"""Command line: ``whichpath run | list | check``.

Exit codes: 0 ok, 1 configuration error, 2 invariant failure, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError, WhichPathError
from .hilbert import check_seed
from .runner import FORMATS, require_ok, run
from .scenarios import BUILTINS, list_scenarios, load_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3
ENV_OUT = "WHICHPATH_OUT"
ENV_SEED = "WHICHPATH_SEED"


def _seed(arg: str | None) -> int | None:
    raw = arg if arg is not None else os.environ.get(ENV_SEED)
    if raw is None:
        return None
    try:
        return check_seed(int(raw))
    except ValueError:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="whichpath", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write its artifacts")
    r.add_argument("--scenario", required=True, help="built-in name or path to a JSON scenario")
    r.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUT} or ./out/<name>)")
    r.add_argument("--format", choices=FORMATS, default="csv")
    r.add_argument("--seed", default=None, help=f"master seed, overrides the file and ${ENV_SEED}")

    sub.add_parser("list", help="list built-in scenarios")

    c = sub.add_parser("check", help="run the invariant suite without writing files")
    c.add_argument("--scenario", action="append", help="scenario to check (repeatable; default all built-ins)")
    c.add_argument("--seed", default=None)
    return ap


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, _seed(args.seed))
    out = args.out or os.environ.get(ENV_OUT) or os.path.join("out", scenario.name)
    report = run(scenario, out, args.format)
    for c in report.checks:
        print(c.line())
    print(f"{scenario.name}: wrote {len(report.files)} file(s) to {out} in {report.wall_time:.2f}s")
    require_ok(report)
    return EXIT_OK


def _cmd_list(args) -> int:
    width = max(len(n) for n in BUILTINS)
    for name, desc in list_scenarios():
        print(f"{name:<{width}}  {desc}")
    return EXIT_OK


def _cmd_check(args) -> int:
    names = args.scenario or list(BUILTINS)
    seed = _seed(args.seed)
    failed = False
    for name in names:
        report = run(load_scenario(name, seed), None)
        for c in report.checks:
            print(f"{report.scenario} {c.line()}")
        failed |= not report.ok
    return EXIT_INVARIANT if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "list": _cmd_list, "check": _cmd_check}[args.command]
    try:
        return handler(args)
    except WhichPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
