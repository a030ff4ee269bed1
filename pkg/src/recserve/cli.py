"""Command-line entry point.

Exit codes: 0 ok, 1 config error, 2 trace error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .calibrate import calibrate
from .confidence import score
from .config import load_calibration, load_experiment, load_toml, parse_topology
from .errors import ConfigError, RecServeError, TraceError
from .experiment import compare, render_compare, render_report, render_rows, run
from .theory import theory_table
from .workload import parse_line, tasks_from, SyntheticSpec

log = logging.getLogger("recserve")

EXIT_OK, EXIT_CONFIG, EXIT_TRACE, EXIT_RUNTIME = 0, 1, 2, 3


@dataclass
class TraceDiagnostics:
    path: str
    task_count: int = 0
    tier_count: int | None = None
    violations: list[tuple[int, str]] = field(default_factory=list)
    violation_total: int = 0
    confidence_range: dict[int, tuple[float, float]] = field(default_factory=dict)
    io_error: str | None = None

    @property
    def ok(self) -> bool:
        return self.io_error is None and self.violation_total == 0

    def summary(self) -> str:
        if self.io_error:
            return f"{self.path}: {self.io_error}"
        return f"{self.task_count} tasks, {self.tier_count or 0} tiers, {self.violation_total} violations"

    def render(self) -> str:
        lines = [self.summary()]
        for line, msg in self.violations:
            lines.append(f"  line {line}: {msg}")
        if self.violation_total > len(self.violations):
            lines.append(f"  ... {self.violation_total - len(self.violations)} more")
        for tier, (lo, hi) in sorted(self.confidence_range.items()):
            lines.append(f"  tier {tier} confidence range [{lo:.6g}, {hi:.6g}]")
        return "\n".join(lines)


def validate_trace(path: str | Path, max_report: int = 20) -> TraceDiagnostics:
    """Check every line of a JSONL trace; keeps going past bad records."""
    diag = TraceDiagnostics(str(path))
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        diag.io_error = f"cannot open: {exc.strerror}"
        return diag
    with fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                task = parse_line(text, lineno)
                if diag.tier_count is None:
                    diag.tier_count = task.n_tiers
                elif task.n_tiers != diag.tier_count:
                    raise TraceError(f"record has {task.n_tiers} tiers, earlier records have {diag.tier_count}",
                                     lineno)
                confs = [score(ev, task.task_type) for ev in task.tier_evidence]
            except RecServeError as exc:
                diag.violation_total += 1
                if len(diag.violations) < max_report:
                    msg = str(exc)
                    prefix = f"line {lineno}: "
                    diag.violations.append((lineno, msg[len(prefix):] if msg.startswith(prefix) else msg))
                continue
            diag.task_count += 1
            for tier, c in enumerate(confs, start=1):
                lo, hi = diag.confidence_range.get(tier, (c, c))
                diag.confidence_range[tier] = (min(lo, c), max(hi, c))
    return diag


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _load(args):
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_experiment(args.config, args.seed)
    if args.format:
        cfg.format = args.format
    if args.out:
        cfg.out = args.out
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    report = run(cfg, threads=args.threads)
    _write(render_report(report, cfg.format), cfg.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    rows = compare(cfg, threads=args.threads)
    _write(render_compare(rows, cfg.format, cfg.echo), cfg.out)
    return EXIT_OK


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def cmd_theory(args) -> int:
    costs = _floats(args.costs) if args.costs else None
    payload = args.payload
    if args.config:
        doc = load_toml(args.config)
        if costs is None and "topology" in doc:
            costs = list(parse_topology(doc["topology"]).costs)
        if payload is None:
            exp = load_experiment(args.config, args.seed)
            if isinstance(exp.workload, SyntheticSpec):
                payload = exp.workload.mean_payload()
    costs = costs or [1.0, 5.0, 20.0]
    payload = payload if payload is not None else 1.0
    n = args.n or len(costs)
    if len(costs) != n:
        raise ConfigError(f"--n {n} does not match {len(costs)} costs")
    try:
        rows = theory_table(_floats(args.betas), n, payload, costs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write(render_rows(list(rows[0]) if rows else [], rows, args.format or "csv"), args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if not args.config:
        raise ConfigError("--config is required")
    exp, cal, template = load_calibration(args.config, args.seed)
    tasks = tasks_from(exp.workload)
    trace = calibrate(tasks, exp.topology, cal, template)
    log.info("converged=%s final_beta=%.6g rounds=%d", trace.converged, trace.final_beta, len(trace.rounds))
    fmt = args.format or exp.format
    if fmt == "json":
        text = json.dumps({"budget": trace.budget, "converged": trace.converged,
                           "final_beta": trace.final_beta, "rounds": trace.to_rows()}, indent=2) + "\n"
    else:
        text = render_rows(["round", "beta", "burden", "gamma"], trace.to_rows())
    _write(text, args.out or exp.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    path = args.path or args.trace
    if not path:
        raise ConfigError("validate-trace needs a trace path")
    diag = validate_trace(path, args.max_report)
    if (args.format or "text") == "json":
        text = json.dumps({"path": diag.path, "task_count": diag.task_count, "tier_count": diag.tier_count,
                           "violation_total": diag.violation_total,
                           "violations": [{"line": l, "message": m} for l, m in diag.violations],
                           "confidence_range": {str(k): list(v) for k, v in diag.confidence_range.items()},
                           "io_error": diag.io_error}, indent=2) + "\n"
    else:
        text = diag.render() + "\n"
    _write(text, args.out)
    return EXIT_OK if diag.ok else EXIT_TRACE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment TOML file")
    common.add_argument("--seed", type=int, help="override [experiment] seed (unsigned 64-bit)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    common.add_argument("--threads", type=int, default=1, help="replicas run on this many threads")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="recserve", description="Recursive offloading simulator for tiered inference serving.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common], help="run every configured method, emit the full report").set_defaults(func=cmd_run)
    sub.add_parser("compare", parents=[common], help="emit a long-format quality vs burden table").set_defaults(func=cmd_compare)

    t = sub.add_parser("theory", parents=[common], help="closed-form predictions as CSV")
    t.add_argument("--betas", default="0.1,0.3,0.5")
    t.add_argument("--n", type=int)
    t.add_argument("--costs", help="comma-separated per-tier costs, device first")
    t.add_argument("--payload", type=float, help="mean |x| + |y| in bytes")
    t.set_defaults(func=cmd_theory)

    sub.add_parser("calibrate", parents=[common], help="feedback-calibrate beta to a burden budget").set_defaults(func=cmd_calibrate)

    v = sub.add_parser("validate-trace", parents=[common], help="check a JSONL trace file")
    v.add_argument("path", nargs="?")
    v.add_argument("--trace", help=argparse.SUPPRESS)
    v.add_argument("--max-report", type=int, default=20)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except OSError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
