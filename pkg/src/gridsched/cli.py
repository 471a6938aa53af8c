"""gridsched command line: validate profiles, run scenarios, compare reports.

Exit codes: 0 success, 1 validation or report error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from .monitor import sla_to_csv
from .profiles import ProfileError, parse_profile
from .scenario import EXECUTION_MODELS, POLICIES, ConfigError, load_scenario
from .simkernel import run

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CONFIG = 2

REPORT_METRICS = (
    "jobs_submitted",
    "jobs_admitted",
    "jobs_rejected",
    "jobs_completed",
    "jobs_on_time",
    "deadline_misses",
    "integrity_alerts",
    "miss_rate",
    "on_time_fraction",
)


class BadReport(ValueError):
    pass


def write_atomic(path, text: str):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_validate(paths, out=None) -> int:
    out = out or sys.stdout
    status = EXIT_OK
    for p in paths:
        try:
            parse_profile(Path(p).read_text())
        except (OSError, ProfileError) as exc:
            print(f"{p}: ERROR {exc}", file=out)
            status = EXIT_INVALID
        else:
            print(f"{p}: OK", file=out)
    return status


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def cmd_simulate(scenario_path, out_path="report.json", seed=None, policy=None,
                 execution_model=None, traces=False, csv=False, quiet=False,
                 out=None) -> int:
    out = out or sys.stdout
    try:
        scenario = load_scenario(scenario_path).with_overrides(seed, policy, execution_model)
        result = run(scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_path = Path(out_path)
    write_atomic(out_path, result.to_json())
    if traces:
        write_atomic(_sibling(out_path, ".accounting.jsonl"), result.accounting_jsonl())
        write_atomic(_sibling(out_path, ".trace.jsonl"), result.trace_jsonl())
    if csv:
        write_atomic(_sibling(out_path, ".timeseries.csv"), result.timeseries_csv())
        write_atomic(_sibling(out_path, ".sla.csv"), sla_to_csv(result.report["sla"]))
    if not quiet:
        m = result.report["metrics"]
        print(
            f"{scenario.policy}/{scenario.execution_model} seed={scenario.seed}: "
            f"jobs={m['jobs_submitted']} on_time={100 * m['on_time_fraction']:.1f}% "
            f"rejects={m['jobs_rejected']} misses={m['deadline_misses']} -> {out_path}",
            file=out,
        )
    return EXIT_OK


def load_report(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BadReport(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise BadReport(f"{path}: not a JSON object")
    for section in ("scenario", "metrics"):
        if section not in data:
            raise BadReport(f"{path}: missing field '{section}'")
    for key in ("policy", "execution_model", "seed"):
        if key not in data["scenario"]:
            raise BadReport(f"{path}: missing field 'scenario.{key}'")
    for key in REPORT_METRICS:
        if key not in data["metrics"]:
            raise BadReport(f"{path}: missing field 'metrics.{key}'")
    return data


def _cell(v) -> str:
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def comparison_rows(reports) -> list:
    header = ["metric"] + [
        f"{r['scenario']['policy']}/{r['scenario']['execution_model']}#{r['scenario']['seed']}"
        for r in reports
    ]
    rows = [header]
    for key in REPORT_METRICS:
        rows.append([key] + [_cell(r["metrics"][key]) for r in reports])
    return rows


def cmd_report(paths, csv_path=None, out=None) -> int:
    out = out or sys.stdout
    try:
        reports = [load_report(p) for p in paths]
    except BadReport as exc:
        print(f"bad report: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rows = comparison_rows(reports)
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip(), file=out)
    if csv_path:
        write_atomic(csv_path, "".join(",".join(row) + "\n" for row in rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridsched", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check computer/application profile XML files")
    v.add_argument("paths", nargs="+")

    s = sub.add_parser("simulate", help="run a scenario and write a report")
    s.add_argument("--scenario", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--policy", choices=POLICIES)
    s.add_argument("--execution-model", choices=EXECUTION_MODELS)
    s.add_argument("--out", default="report.json")
    s.add_argument("--traces", action="store_true",
                   help="also write accounting and trace JSON lines next to the report")
    s.add_argument("--csv", action="store_true",
                   help="also write time-series and SLA CSV files next to the report")
    s.add_argument("--quiet", action="store_true")

    r = sub.add_parser("report", help="compare run reports side by side")
    r.add_argument("paths", nargs="+")
    r.add_argument("--csv", dest="csv_path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    if args.command == "validate":
        return cmd_validate(args.paths)
    if args.command == "simulate":
        if args.seed is not None and args.seed < 0:
            print("config error: --seed must be a non-negative integer", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_simulate(
            args.scenario, args.out, args.seed, args.policy, args.execution_model,
            args.traces, args.csv, args.quiet,
        )
    return cmd_report(args.paths, args.csv_path)


if __name__ == "__main__":
    sys.exit(main())
