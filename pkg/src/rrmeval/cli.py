"""Command-line front end: simulate -> fom -> evaluate -> compare -> report, plus demo."""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from rrmeval import __version__, io
from rrmeval.density import DEFAULT_MODE, GAUGE_MODES
from rrmeval.errors import InvalidInputError, ModelValidationError, ParseError, RRMEvalError
from rrmeval.evaluation import evaluate
from rrmeval.fom import collect_measurements
from rrmeval.pipeline import DEMO_SEED, run_demo, untracked_by_alternative
from rrmeval.simulator import A_STU, NA_NSR, ScenarioConfig, policy_from_name, run_scenario

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

OUTPUT_ENV = "RRMEVAL_OUTPUT_DIR"

log = logging.getLogger("rrmeval")


def _default_out(sub: str) -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "rrmeval-out")) / sub


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch else dt.datetime.now(dt.timezone.utc)
    return when.isoformat(timespec="seconds")


def write_manifest(out_dir: Path, command: str, args: argparse.Namespace, inputs: list[Path],
                   seeds: list[int] | None = None, extra: dict | None = None) -> Path:
    flags = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
             if k not in {"func", "command"}}
    manifest = {
        "tool": "rrmeval", "version": __version__, "command": command, "flags": flags,
        "seeds": seeds or [], "inputs": {str(p): _sha256(p) for p in inputs if p.is_file()},
        "timestamp": _timestamp(), **(extra or {}),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1, default=str) + "\n", encoding="utf-8")
    return path


def _load_model(path: Path | None):
    return io.load_preference_model(path) if path else io.load_default_model()


# --- subcommands ------------------------------------------------------------------------


def _override(cfg: ScenarioConfig, seed: int | None, clutter: bool | None) -> ScenarioConfig:
    auto = cfg.scenario_id == f"seed{cfg.seed}" + ("-clutter" if cfg.clutter else "")
    cfg = replace(cfg, seed=cfg.seed if seed is None else seed, clutter=cfg.clutter if clutter is None else clutter)
    return replace(cfg, scenario_id="") if auto else cfg


def cmd_simulate(args) -> int:
    configs = io.load_scenario_configs(args.config)
    if args.seed is not None or args.clutter is not None:
        configs = [_override(c, args.seed, args.clutter) for c in configs]
    policy = policy_from_name(args.policy)
    out = args.out or _default_out("scenarios")
    written = []
    for cfg in configs:
        result = run_scenario(cfg, policy)
        written.append(io.write_scenario_output(result, out))
        print(f"{policy.kind} {cfg.scenario_id}: wrote {written[-1]}")
    write_manifest(out, "simulate", args, [args.config], [c.seed for c in configs],
                   {"policy": policy.kind, "clutter": sorted({c.clutter for c in configs})})
    return EXIT_OK


def _scenario_dirs(paths: list[Path]) -> list[Path]:
    dirs = []
    for p in paths:
        if (p / "meta.json").is_file():
            dirs.append(p)
        else:
            dirs.extend(sorted(d for d in p.iterdir() if (d / "meta.json").is_file()))
    if not dirs:
        raise InvalidInputError("no scenario output directories found")
    return dirs


def cmd_fom(args) -> int:
    outputs: dict = {}
    for d in _scenario_dirs(args.scenarios):
        run = io.read_scenario_output(d)
        outputs.setdefault(run.alternative_id, []).append(run)
    ms = collect_measurements(outputs)
    out = args.out or _default_out("measurements.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    io.save_measurements(ms, out)
    untracked = untracked_by_alternative(outputs, args.threshold)
    untracked_path = out.with_name(out.stem + "_untracked.json")
    untracked_path.write_text(json.dumps({"threshold": args.threshold, "counts": untracked}, sort_keys=True,
                                         indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(ms)} samples for {', '.join(outputs)} to {out}")
    print(f"untracked targets (completeness <= {args.threshold}): {untracked_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    ms = io.load_measurements(args.measurements, model.metrics)
    result = evaluate(model, ms, mode=args.gauge_mode, alpha=args.alpha, alternatives=args.alternative)
    out = args.out or _default_out("evaluation")
    out.mkdir(parents=True, exist_ok=True)
    formats = args.format or ["json", "markdown", "plotcsv"]
    targets = {"json": out / "report.json", "markdown": out / "report.md", "plotcsv": out / "plots"}
    for fmt in formats:
        io.write_report(result, targets[fmt], fmt)
    inputs = [args.measurements] + ([args.model] if args.model else [])
    write_manifest(out, "evaluate", args, inputs, extra={"model_digest": result.model_digest})
    for alt in result.alternatives:
        print(f"{alt}: {result.root_score(alt):.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = io.read_report(args.report_a), io.read_report(args.report_b)
    cmp = io.compare_reports(a, b, args.alt_a, args.alt_b)
    text = io.render_comparison_markdown(cmp)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    report = io.read_report(args.report)
    for path in io.write_report(report, args.out, args.format):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_demo(args) -> int:
    out = args.out or _default_out("demo")
    model = _load_model(args.model)
    conditions = run_demo(out, model, seed=args.seed, workers=args.jobs, mode=args.gauge_mode, alpha=args.alpha,
                          write_scenarios=not args.no_scenarios)
    write_manifest(out, "demo", args, [args.model] if args.model else [],
                   sorted({run.meta["config"]["seed"] for c in conditions.values()
                           for runs in c.outputs.values() for run in runs}),
                   {"clutter": [False, True], "model_digest": io.model_digest(model)})
    for name, cond in conditions.items():
        scores = ", ".join(f"{alt} {cond.result.root_score(alt):.4f}" for alt in (NA_NSR, A_STU))
        print(f"{name}: {scores}  -> {cond.files['json']}")
    return EXIT_OK


def cmd_model(args) -> int:
    model = _load_model(args.model)
    if args.out:
        io.save_preference_model(model, args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(io.dumps_preference_model(model))
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rrmeval", description=__doc__)
    p.add_argument("--version", action="version", version=f"rrmeval {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run scenarios for one policy and write their logs")
    s.add_argument("-c", "--config", type=Path, required=True, help="scenario TOML file")
    s.add_argument("-p", "--policy", required=True, choices=["na-nsr", "a-stu"])
    s.add_argument("-o", "--out", type=Path, help=f"output directory (default ${OUTPUT_ENV}/scenarios)")
    s.add_argument("--seed", type=int, help="override the config seed(s) with one seed")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--clutter", dest="clutter", action="store_const", const=True, default=None)
    g.add_argument("--no-clutter", dest="clutter", action="store_const", const=False)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fom", help="extract figures of merit from scenario logs into a measurement CSV")
    f.add_argument("scenarios", type=Path, nargs="+", help="scenario directories or their parent directories")
    f.add_argument("-o", "--out", type=Path, help="measurement CSV path")
    f.add_argument("--threshold", type=float, default=0.0, help="completeness at or below which a target is untracked")
    f.set_defaults(func=cmd_fom)

    e = sub.add_parser("evaluate", help="score alternatives with a preference model")
    e.add_argument("-m", "--measurements", type=Path, required=True)
    e.add_argument("--model", type=Path, help="preference model TOML (default: bundled model)")
    e.add_argument("--gauge-mode", choices=GAUGE_MODES, help=f"override leaf gauge mode (default {DEFAULT_MODE})")
    e.add_argument("--alpha", type=float, help="override OWA pessimism for every leaf (>= 1)")
    e.add_argument("--alternative", action="append", help="restrict to these alternatives (repeatable)")
    e.add_argument("--format", action="append", choices=io.REPORT_FORMATS, help="report formats (default all)")
    e.add_argument("-o", "--out", type=Path, help="output directory")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="per-node deltas between two reports (B minus A)")
    c.add_argument("report_a", type=Path)
    c.add_argument("report_b", type=Path)
    c.add_argument("--alt-a", help="alternative taken from report A (needed if it holds several)")
    c.add_argument("--alt-b", help="alternative taken from report B")
    c.add_argument("-o", "--out", type=Path, help="markdown output (default stdout)")
    c.set_defaults(func=cmd_compare)

    r = sub.add_parser("report", help="re-render a JSON report as markdown or plot CSVs")
    r.add_argument("report", type=Path)
    r.add_argument("--format", required=True, choices=["markdown", "plotcsv"])
    r.add_argument("-o", "--out", type=Path, required=True)
    r.set_defaults(func=cmd_report)

    d = sub.add_parser("demo", help="whole pipeline: both policies, with and without clutter")
    d.add_argument("-o", "--out", type=Path, help="output directory")
    d.add_argument("--seed", type=int, default=DEMO_SEED)
    d.add_argument("--jobs", type=int, default=1, help="worker processes for scenario runs")
    d.add_argument("--model", type=Path)
    d.add_argument("--gauge-mode", choices=GAUGE_MODES)
    d.add_argument("--alpha", type=float)
    d.add_argument("--no-scenarios", action="store_true", help="skip writing per-scenario logs")
    d.set_defaults(func=cmd_demo)

    m = sub.add_parser("model", help="print or save the (bundled or given) preference model")
    m.add_argument("--model", type=Path)
    m.add_argument("-o", "--out", type=Path)
    m.set_defaults(func=cmd_model)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return EXIT_PARSE
    except ModelValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for problem in exc.violations:
            print(f"  {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RRMEvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
