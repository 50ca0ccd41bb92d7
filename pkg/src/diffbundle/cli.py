"""Command-line driver: ``diffbundle run | describe | fixtures | export``.

Exit codes: 0 when every selected check passes, 1 when any fails, 2 for
usage errors (unknown suite, fixture or tolerance key).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .config import active, override_tolerances, parse_override, set_tolerances
from .suites import SUITES, RunContext, run_check, select

REPORT_SCHEMA = "diffbundle.report/1"


@dataclass
class RunConfig:
    suites: list[str] = field(default_factory=lambda: ["all"])
    fixtures: list[str] = field(default_factory=list)
    grid: int | None = None
    overrides: dict[str, float] = field(default_factory=dict)
    out: str | None = None
    csv: str | None = None
    jobs: int = 1
    seed: int = 0
    timings: bool = False


class UsageError(Exception):
    pass


def _worker(name: str, seed: int, grid: int | None, overrides: dict, suites, fixtures):
    set_tolerances(**overrides)
    check = next(c for c in select(suites, fixtures) if c.name == name)
    return run_check(check, RunContext(seed, grid))


def run(config: RunConfig) -> tuple[int, dict]:
    from .zoo import fixture_names

    try:
        checks = select(config.suites, config.fixtures or None)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    unknown = sorted(set(config.fixtures) - set(fixture_names()))
    if unknown:
        raise UsageError(f"unknown fixture(s): {', '.join(unknown)}")
    if not checks:
        raise UsageError("the selection contains no checks")
    with override_tolerances(**config.overrides):
        tolerances = dict(sorted(active().items()))
        ctx = RunContext(config.seed, config.grid)
        if config.jobs > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                futures = [pool.submit(_worker, c.name, config.seed, config.grid,
                                       config.overrides, config.suites, config.fixtures or None)
                           for c in checks]
                results = [f.result() for f in futures]
        else:
            results = [run_check(c, ctx) for c in checks]
    results.sort(key=lambda r: r.name)
    failed = [r.name for r in results if not r.verdict]
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "config": {"suites": sorted(config.suites), "fixtures": sorted(config.fixtures),
                   "grid": config.grid, "seed": config.seed,
                   "tolerance_overrides": dict(sorted(config.overrides.items()))},
        "tolerances": tolerances,
        "checks": [r.to_dict(config.timings) for r in results],
        "summary": {"total": len(results), "passed": len(results) - len(failed),
                    "failed": failed},
        "passed": not failed,
    }
    return (0 if not failed else 1), report


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8")


def report_csv(report: dict) -> str:
    """One row per check; nested details are left to the JSON report."""
    buf = io.StringIO()
    cols = ["name", "suite", "fixture", "anchor", "verdict", "max_violation"]
    if any("runtime" in c for c in report["checks"]):
        cols.append("runtime")
    writer = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in report["checks"]:
        writer.writerow(row)
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diffbundle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"diffbundle {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run check suites and write a JSON report")
    r.add_argument("--suite", action="append", default=None,
                   help=f"suite to run (repeatable): all, {', '.join(SUITES)}")
    r.add_argument("--fixture", action="append", default=[], help="limit to fixture-bound checks")
    r.add_argument("--grid", type=int, default=None, help="override fixture grid resolution")
    r.add_argument("--tol-override", action="append", default=[], metavar="KEY=VAL")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default=None, help="report path (stdout when omitted)")
    r.add_argument("--csv", default=None, help="also write a flat CSV summary here")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--timings", action="store_true",
                   help="include per-check runtimes (reports are then not reproducible)")

    d = sub.add_parser("describe", help="summarise a fixture")
    d.add_argument("name")
    sub.add_parser("fixtures", help="list fixture names")
    e = sub.add_parser("export", help="write a fixture's bundle description as JSON")
    e.add_argument("name")
    e.add_argument("--grid", type=int, default=None)
    e.add_argument("--out", default=None)
    return p


def _config(args) -> RunConfig:
    overrides = {}
    for text in args.tol_override:
        try:
            key, val = parse_override(text)
        except (KeyError, ValueError) as exc:
            raise UsageError(str(exc.args[0])) from None
        overrides[key] = val
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    return RunConfig(args.suite or ["all"], list(args.fixture), args.grid, overrides, args.out,
                     args.csv, args.jobs, args.seed, args.timings)


def _write(path: str | None, data: bytes) -> None:
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _config(args)
            code, report = run(config)
            _write(config.out, report_bytes(report))
            if config.csv:
                with open(config.csv, "w", encoding="utf-8", newline="") as fh:
                    fh.write(report_csv(report))
            for row in report["checks"]:
                print(f"{row['verdict'].upper():4s}  {row['name']}", file=sys.stderr)
            s = report["summary"]
            print(f"{s['passed']}/{s['total']} checks passed", file=sys.stderr)
            return code
        if args.command == "describe":
            from .zoo import describe
            try:
                print(describe(args.name))
            except KeyError:
                raise UsageError(f"unknown fixture {args.name!r}") from None
            return 0
        if args.command == "fixtures":
            from .zoo import fixture_names
            print("\n".join(fixture_names()))
            return 0
        if args.command == "export":
            from .bundle_io import bundle_to_json
            from .zoo import FIXTURES
            fx = FIXTURES.get(args.name)
            if fx is None or fx.kind not in ("bundle", "certificate"):
                raise UsageError(f"{args.name!r} is not an exportable bundle fixture")
            bundle = fx.build(args.grid) if args.grid else fx.build()
            _write(args.out, (bundle_to_json(bundle) + "\n").encode("utf-8"))
            return 0
    except UsageError as exc:
        print(f"diffbundle: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
