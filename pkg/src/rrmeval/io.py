"""File formats: preference models and scenario configs (TOML), measurements and
scenario logs (CSV), evaluation reports (JSON, markdown, plot CSV).

Schemas are documented in ``docs/formats.md``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
import warnings
from collections.abc import Iterable, Mapping
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import tomli_w

from rrmeval.aggregation import MobiusCapacity2Add
from rrmeval.density import OwaConfig
from rrmeval.errors import InvalidInputError, ModelValidationError, ParseError, Violation
from rrmeval.evaluation import EvaluationResult
from rrmeval.fom import Beam, RadarTimeline, ScenarioOutput, TrackRecord, TruthTrajectory
from rrmeval.model import (
    MODEL_VERSION, Aggregate, Leaf, MeasurementSet, MetricDef, PreferenceModel, Sample, iter_nodes, validate_model,
)
from rrmeval.simulator import ScenarioConfig
from rrmeval.utility import PiecewiseLinearUtility

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MEASUREMENT_HEADER = ("alternative_id", "metric_id", "scenario_id", "track_id", "value")
REPORT_FORMAT = "rrmeval-report"
REPORT_VERSION = 1
REPORT_DECIMALS = 12
REPORT_FORMATS = ("json", "markdown", "plotcsv")


def _read_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}", [Violation("toml", str(path), str(exc))]) from exc


def _fmt(x: float) -> str:
    """Shortest text that reads back to exactly the same float."""
    return repr(float(x))


# --- preference model ------------------------------------------------------------


def model_to_dict(model: PreferenceModel) -> dict:
    """Plain-data form of a model; the TOML file is this dict."""
    nodes = []
    for node, _ in iter_nodes(model.tree):
        if isinstance(node, Leaf):
            nodes.append({"id": node.id, "label": node.label, "metric": node.metric_id,
                          "utility": node.utility_id, "owa": node.owa_config_id})
        else:
            cap = node.capacity
            nodes.append({
                "id": node.id, "label": node.label, "children": [c.id for c in node.children],
                "capacity": {"singletons": list(cap.singletons),
                             "interactions": [[i, j, v] for (i, j), v in cap.pairs.items()]},
            })
    owa = {}
    for oid, cfg in model.owa_configs.items():
        entry: dict[str, Any] = {"weights": list(cfg.weights)} if cfg.weights is not None else {"alpha": cfg.alpha}
        if cfg.mode is not None:
            entry["mode"] = cfg.mode
        owa[oid] = entry
    return {
        "version": model.version,
        "metrics": {mid: {"direction": m.direction, "range": list(m.natural_range), "unit": m.unit, "label": m.label}
                    for mid, m in model.metrics.items()},
        "utilities": {uid: {"breakpoints": [list(p) for p in u.breakpoints]} for uid, u in model.utilities.items()},
        "owa": owa,
        "node": nodes,
    }


def model_digest(model: PreferenceModel) -> str:
    text = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def dumps_preference_model(model: PreferenceModel) -> str:
    return tomli_w.dumps(model_to_dict(model))


def save_preference_model(model: PreferenceModel, path: str | Path) -> None:
    Path(path).write_text(dumps_preference_model(model), encoding="utf-8")


class _Problems:
    def __init__(self):
        self.items: list[Violation] = []

    def add(self, where: str, message: str, code: str = "schema") -> None:
        self.items.append(Violation(code, where, message))


def _number(raw, where: str, problems: _Problems) -> float | None:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        problems.add(where, f"expected a number, got {raw!r}")
        return None
    return float(raw)


def model_from_dict(data: Mapping, source: str = "model") -> PreferenceModel:
    """Build a model from its plain-data form.

    Raises :class:`ParseError` for structural problems and
    :class:`ModelValidationError` when the model does not validate.
    """
    problems = _Problems()
    version = str(data.get("version", ""))
    if version != MODEL_VERSION:
        warnings.warn(f"{source}: model version {version!r}, expected {MODEL_VERSION!r}", stacklevel=3)

    metrics: dict[str, MetricDef] = {}
    for mid, raw in dict(data.get("metrics", {})).items():
        where = f"metrics.{mid}"
        rng = raw.get("range")
        if not (isinstance(rng, list) and len(rng) == 2):
            problems.add(f"{where}.range", "expected [lower, upper]")
            continue
        lo, hi = _number(rng[0], f"{where}.range", problems), _number(rng[1], f"{where}.range", problems)
        if lo is None or hi is None:
            continue
        metrics[mid] = MetricDef(mid, str(raw.get("direction", "")), (lo, hi), str(raw.get("unit", "")),
                                 str(raw.get("label", "")))

    utilities: dict[str, PiecewiseLinearUtility] = {}
    for uid, raw in dict(data.get("utilities", {})).items():
        pts = raw.get("breakpoints")
        try:
            utilities[uid] = PiecewiseLinearUtility(tuple((float(x), float(u)) for x, u in pts), id=uid)
        except (TypeError, ValueError, InvalidInputError):
            problems.add(f"utilities.{uid}.breakpoints", "expected a list of at least two [x, u] pairs")

    owa: dict[str, OwaConfig] = {}
    for oid, raw in dict(data.get("owa", {})).items():
        try:
            if "weights" in raw:
                owa[oid] = OwaConfig(oid, weights=tuple(float(w) for w in raw["weights"]), mode=raw.get("mode"))
            else:
                owa[oid] = OwaConfig(oid, alpha=float(raw["alpha"]), mode=raw.get("mode"))
        except (KeyError, TypeError, ValueError, InvalidInputError):
            problems.add(f"owa.{oid}", "expected alpha = <number> or weights = [numbers]")

    raw_nodes = data.get("node", [])
    by_id: dict[str, dict] = {}
    for k, raw in enumerate(raw_nodes):
        if "id" not in raw:
            problems.add(f"node[{k}]", "missing id")
            continue
        if raw["id"] in by_id:
            problems.add(f"node[{k}]", f"duplicate id {raw['id']!r}", "duplicate-node")
        by_id[raw["id"]] = raw | {"_index": k}
    child_ids = {c for raw in by_id.values() for c in raw.get("children", [])}
    roots = [nid for nid in by_id if nid not in child_ids]
    if len(roots) != 1:
        problems.add("node", f"expected exactly one root node, found {roots}", "tree-root")

    if problems.items:
        raise ParseError(f"{source}: {len(problems.items)} problem(s)", problems.items)

    building: set[str] = set()

    def build(nid: str):
        raw = by_id.get(nid)
        where = f"node {nid}"
        if raw is None:
            problems.add(where, "referenced as a child but not defined", "dangling-node")
            return None
        if nid in building:
            problems.add(where, "cycle in the criteria tree", "cycle")
            return None
        label = str(raw.get("label", ""))
        if "children" not in raw:
            missing = [f for f in ("metric", "utility", "owa") if f not in raw]
            if missing:
                problems.add(where, f"leaf is missing {', '.join(missing)}")
                return None
            return Leaf(nid, str(raw["metric"]), str(raw["utility"]), str(raw["owa"]), label)
        building.add(nid)
        children = [build(c) for c in raw["children"]]
        building.discard(nid)
        cap_raw = raw.get("capacity")
        try:
            if cap_raw is None:
                capacity = MobiusCapacity2Add.uniform(max(1, len(children)))
            else:
                pairs = {(int(i), int(j)): float(v) for i, j, v in cap_raw.get("interactions", [])}
                capacity = MobiusCapacity2Add(tuple(float(v) for v in cap_raw["singletons"]), pairs)
        except (KeyError, TypeError, ValueError, InvalidInputError) as exc:
            problems.add(f"{where}.capacity", f"malformed capacity ({exc})")
            return None
        if any(c is None for c in children):
            return None
        return Aggregate(nid, tuple(children), capacity, label)

    tree = build(roots[0])
    if problems.items or tree is None:
        raise ParseError(f"{source}: {len(problems.items)} problem(s)", problems.items)
    model = PreferenceModel(tree, metrics, utilities, owa, version or MODEL_VERSION)
    violations = validate_model(model)
    if violations:
        raise ModelValidationError(f"{source}: model does not validate", violations)
    return model


def load_preference_model(path: str | Path) -> PreferenceModel:
    return model_from_dict(_read_toml(path), str(path))


def default_model_path():
    return resources.files("rrmeval") / "data" / "default_model.toml"


def load_default_model() -> PreferenceModel:
    with resources.as_file(default_model_path()) as p:
        return load_preference_model(p)


# --- scenario configs ---------------------------------------------------------------


_SCENARIO_KEYS = {"duration", "seed", "seeds", "populations", "clutter", "launch_region_scale", "beam_budget",
                  "sectors", "scenario_id"}


def scenario_configs_from_dict(data: Mapping, source: str = "scenario") -> list[ScenarioConfig]:
    raw = dict(data.get("scenario", data))
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ParseError(f"{source}: unknown keys {sorted(unknown)}",
                         [Violation("schema", f"scenario.{k}", "unknown key") for k in sorted(unknown)])
    seeds = raw.pop("seeds", None)
    prefix = raw.pop("scenario_id", "")
    try:
        if seeds is None:
            return [ScenarioConfig(**raw, scenario_id=prefix)]
        return [ScenarioConfig(**raw, seed=int(s), scenario_id=f"{prefix}seed{int(s)}" if prefix else "")
                for s in seeds]
    except (TypeError, InvalidInputError) as exc:
        raise ParseError(f"{source}: {exc}", [Violation("schema", "scenario", str(exc))]) from exc


def load_scenario_configs(path: str | Path) -> list[ScenarioConfig]:
    return scenario_configs_from_dict(_read_toml(path), str(path))


# --- scenario outputs ----------------------------------------------------------------


def scenario_dirname(out: ScenarioOutput) -> str:
    slug = out.alternative_id.lower().replace("+", "-")
    return f"{slug}__{out.scenario_id}"


def write_scenario_output(out: ScenarioOutput, root: str | Path) -> Path:
    d = Path(root) / scenario_dirname(out)
    d.mkdir(parents=True, exist_ok=True)
    meta = {"scenario_id": out.scenario_id, "alternative_id": out.alternative_id, "sectors": out.sectors,
            "duration": out.timeline.duration, **out.meta}
    (d / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    with open(d / "truths.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target_id", "class", "t0", "t1"])
        for t in out.truths:
            w.writerow([t.target_id, t.target_class, _fmt(t.t0), _fmt(t.t1)])
    with open(d / "tracks.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target_id", "start", "end"])
        for tr in out.tracks:
            for a, b in tr.tracked_intervals:
                w.writerow([tr.target_id, _fmt(a), _fmt(b)])
    with open(d / "timeline.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "duration", "kind", "ref"])
        for beam in out.timeline.entries:
            w.writerow([_fmt(beam.t), _fmt(beam.duration), beam.kind, beam.ref])
    return d


def _csv_rows(path: Path, header: Iterable[str]) -> Iterable[tuple[int, dict]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != list(header):
            raise ParseError(f"{path}: expected header {','.join(header)}",
                             [Violation("header", f"{path} line 1", f"got {reader.fieldnames}")])
        for row in reader:
            yield reader.line_num, row


def read_scenario_output(d: str | Path) -> ScenarioOutput:
    d = Path(d)
    try:
        meta = json.loads((d / "meta.json").read_text(encoding="utf-8"))
        truths = tuple(TruthTrajectory(r["target_id"], r["class"], float(r["t0"]), float(r["t1"]))
                       for _, r in _csv_rows(d / "truths.csv", ["target_id", "class", "t0", "t1"]))
        intervals: dict[str, list[tuple[float, float]]] = {t.target_id: [] for t in truths}
        for _, r in _csv_rows(d / "tracks.csv", ["target_id", "start", "end"]):
            intervals.setdefault(r["target_id"], []).append((float(r["start"]), float(r["end"])))
        entries = tuple(Beam(float(r["t"]), float(r["duration"]), r["kind"], r["ref"])
                        for _, r in _csv_rows(d / "timeline.csv", ["t", "duration", "kind", "ref"]))
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"{d}: unreadable scenario output ({exc})") from exc
    tracks = tuple(TrackRecord(tid, tuple(ivs)) for tid, ivs in intervals.items())
    extra = {k: v for k, v in meta.items() if k not in {"scenario_id", "alternative_id", "sectors", "duration"}}
    return ScenarioOutput(meta["scenario_id"], meta["alternative_id"], truths, tracks,
                          RadarTimeline(float(meta["duration"]), entries), int(meta["sectors"]), extra)


# --- measurements ----------------------------------------------------------------------


def save_measurements(ms: MeasurementSet, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEASUREMENT_HEADER)
        for alt, metric, s in ms.rows():
            w.writerow([alt, metric, s.scenario_id, s.track_id or "", _fmt(s.value)])


def load_measurements(path: str | Path, metrics: Mapping[str, MetricDef] | None = None) -> MeasurementSet:
    """Read a measurement CSV. With ``metrics`` given, unknown metrics and
    out-of-range values are rejected too. All problems are reported at once."""
    problems: list[Violation] = []
    rows = []
    for line, r in _csv_rows(Path(path), MEASUREMENT_HEADER):
        where = f"line {line}"
        try:
            value = float(r["value"])
        except (TypeError, ValueError):
            problems.append(Violation("value", where, f"value {r['value']!r} is not a number"))
            continue
        if not math.isfinite(value):
            problems.append(Violation("value", where, f"value {r['value']!r} is not finite"))
            continue
        if not r["alternative_id"] or not r["metric_id"]:
            problems.append(Violation("schema", where, "alternative_id and metric_id are required"))
            continue
        if metrics is not None:
            metric = metrics.get(r["metric_id"])
            if metric is None:
                problems.append(Violation("unknown-metric", where, f"unknown metric {r['metric_id']!r}"))
                continue
            if not metric.contains(value):
                lo, hi = metric.natural_range
                problems.append(Violation("range", where, f"value {value} outside [{lo}, {hi}]"))
                continue
        rows.append((r["alternative_id"], r["metric_id"], Sample(value, r["scenario_id"], r["track_id"] or None)))
    if problems:
        raise ParseError(f"{path}: {len(problems)} bad row(s)", problems)
    return MeasurementSet.from_samples(rows)


# --- reports ---------------------------------------------------------------------------


def _r(x) -> float:
    return round(float(x), REPORT_DECIMALS) + 0.0


def _curve(values) -> list[float]:
    return [_r(v) for v in np.asarray(values, dtype=float)]


def result_to_dict(result: EvaluationResult) -> dict:
    leaves: dict[str, dict] = {}
    for alt, per_leaf in result.leaf_results.items():
        leaves[alt] = {}
        for leaf_id, lr in per_leaf.items():
            g = lr.gauge
            leaves[alt][leaf_id] = {
                "score": _r(g.score), "mode": g.mode, "n_samples": g.n_samples, "clamped": lr.clamped,
                "bandwidth": _r(g.density.bandwidth), "notes": list(g.notes),
                "criterion_density": _curve(g.density.values), "metric_density": _curve(lr.metric_density.values),
                "weight_curve": _curve(g.weight_curve),
            }
    return {
        "format": REPORT_FORMAT, "version": REPORT_VERSION,
        "model_digest": result.model_digest, "mode": result.mode, "alpha": result.alpha,
        "grid_size": result.grid_size, "alternatives": list(result.alternatives),
        "nodes": [{"id": n.id, "label": n.label, "depth": n.depth, "kind": n.kind, "parent": n.parent}
                  for n in result.nodes],
        "scores": {alt: {nid: _r(v) for nid, v in s.items()} for alt, s in result.scores.items()},
        "leaves": leaves,
        "warnings": list(result.warnings),
    }


def dumps_report_json(result: EvaluationResult | Mapping) -> str:
    data = result_to_dict(result) if isinstance(result, EvaluationResult) else result
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def render_markdown(report: Mapping) -> str:
    lines = ["# Evaluation report", "",
             f"- model digest: `{report['model_digest'][:16]}`",
             f"- gauge mode: {report['mode']}",
             f"- alpha override: {report['alpha'] if report['alpha'] is not None else 'none'}", ""]
    for alt in report["alternatives"]:
        scores = report["scores"][alt]
        lines += [f"## {alt}", "", "| Criterion | Gauge | Samples |", "|---|---:|---:|"]
        for node in report["nodes"]:
            indent = "&nbsp;&nbsp;" * node["depth"]
            leaf = report["leaves"].get(alt, {}).get(node["id"])
            n = str(leaf["n_samples"]) if leaf else ""
            lines.append(f"| {indent}{node['label']} | {scores[node['id']]:.3f} | {n} |")
        lines.append("")
    if report.get("warnings"):
        lines += ["## Warnings", ""] + [f"- {w}" for w in report["warnings"]] + [""]
    return "\n".join(lines)


def write_plot_csvs(report: Mapping, directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(0.0, 1.0, int(report["grid_size"]))
    written = []
    for alt in report["alternatives"]:
        for leaf_id, leaf in report["leaves"].get(alt, {}).items():
            p = d / f"{alt.lower().replace('+', '-')}__{leaf_id}.csv"
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["grid", "metric_density", "criterion_density", "weight_curve"])
                for row in zip(grid, leaf["metric_density"], leaf["criterion_density"], leaf["weight_curve"]):
                    w.writerow([_fmt(_r(v)) for v in row])
            written.append(p)
    return written


def write_report(result: EvaluationResult | Mapping, path: str | Path, format: str = "json") -> list[Path]:
    """Write one report. ``plotcsv`` treats ``path`` as a directory."""
    report = result_to_dict(result) if isinstance(result, EvaluationResult) else dict(result)
    path = Path(path)
    if format == "json":
        path.write_text(dumps_report_json(report), encoding="utf-8")
        return [path]
    if format == "markdown":
        path.write_text(render_markdown(report), encoding="utf-8")
        return [path]
    if format == "plotcsv":
        return write_plot_csvs(report, path)
    raise InvalidInputError(f"unknown report format {format!r}; expected one of {REPORT_FORMATS}")


def read_report(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: unreadable report ({exc})") from exc
    if data.get("format") != REPORT_FORMAT:
        raise ParseError(f"{path}: not an evaluation report")
    return data


# --- comparison ---------------------------------------------------------------------------


def _pick_alternative(report: Mapping, alt: str | None, which: str) -> str:
    alts = report["alternatives"]
    if alt is None:
        if len(alts) != 1:
            raise InvalidInputError(f"report {which} holds {alts}; choose one alternative")
        return alts[0]
    if alt not in alts:
        raise InvalidInputError(f"alternative {alt!r} not in report {which} ({alts})")
    return alt


def compare_reports(a: Mapping, b: Mapping, alt_a: str | None = None, alt_b: str | None = None) -> dict:
    """Per-node score deltas ``b - a``; ``winner`` is ``"a"``, ``"b"`` or ``"tie"``.

    Both reports must come from the same model and criteria tree.
    """
    if a["model_digest"] != b["model_digest"]:
        raise ModelValidationError("reports were produced with different preference models",
                                   [Violation("model-mismatch", "model_digest", f"{a['model_digest'][:16]} != "
                                              f"{b['model_digest'][:16]}")])
    ids_a = [n["id"] for n in a["nodes"]]
    ids_b = [n["id"] for n in b["nodes"]]
    if ids_a != ids_b:
        missing = sorted(set(ids_a) ^ set(ids_b))
        raise ModelValidationError("reports have different criteria trees",
                                   [Violation("structural-mismatch", "nodes", f"nodes differ: {missing}")])
    alt_a = _pick_alternative(a, alt_a, "A")
    alt_b = _pick_alternative(b, alt_b, "B")
    rows = []
    for node in a["nodes"]:
        sa, sb = a["scores"][alt_a][node["id"]], b["scores"][alt_b][node["id"]]
        delta = _r(sb - sa)
        winner = "tie" if delta == 0 else ("b" if delta > 0 else "a")
        rows.append({"id": node["id"], "label": node["label"], "depth": node["depth"],
                     "a": sa, "b": sb, "delta": delta, "winner": winner})
    return {"model_digest": a["model_digest"], "a": alt_a, "b": alt_b, "rows": rows}


def render_comparison_markdown(cmp: Mapping, label_a: str | None = None, label_b: str | None = None) -> str:
    a, b = label_a or cmp["a"], label_b or cmp["b"]
    lines = [f"# Comparison: {b} vs {a}", "",
             f"Delta is {b} minus {a}; `+` favours {b}, `-` favours {a}.", "",
             f"| Criterion | {a} | {b} | Delta | Winner |", "|---|---:|---:|---:|---|"]
    for row in cmp["rows"]:
        indent = "&nbsp;&nbsp;" * row["depth"]
        winner = {"a": a, "b": b}.get(row["winner"], "tie")
        lines.append(f"| {indent}{row['label']} | {row['a']:.3f} | {row['b']:.3f} | {row['delta']:+.3f} | {winner} |")
    return "\n".join(lines) + "\n"
