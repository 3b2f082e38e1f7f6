"""Alternatives, metrics, measurement sets and the hierarchical criteria tree."""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

import numpy as np

from rrmeval.aggregation import MobiusCapacity2Add, validate_capacity
from rrmeval.density import GAUGE_MODES, OwaConfig
from rrmeval.errors import InvalidInputError, Violation
from rrmeval.utility import DIRECTIONS, HIGHER_BETTER, LOWER_BETTER, PiecewiseLinearUtility, validate_utility

MODEL_VERSION = "1"


@dataclass(frozen=True)
class Alternative:
    id: str
    label: str = ""


NA_NSR = Alternative("NA+NSR", "Non-Adaptive, No Special Rate")
A_STU = Alternative("A+STU", "Adaptive, Special Track Update rates")


@dataclass(frozen=True)
class MetricDef:
    id: str
    direction: str
    natural_range: tuple[float, float]
    unit: str = ""
    label: str = ""

    def __post_init__(self):
        lo, hi = self.natural_range
        object.__setattr__(self, "natural_range", (float(lo), float(hi)))

    def contains(self, value: float) -> bool:
        lo, hi = self.natural_range
        return lo <= value <= hi


@dataclass(frozen=True)
class Sample:
    value: float
    scenario_id: str
    track_id: str | None = None


@dataclass(frozen=True)
class MeasurementSet:
    """Raw samples per ``(alternative_id, metric_id)``.

    Samples are kept individually; sample counts may differ between alternatives.
    """

    entries: Mapping[tuple[str, str], tuple[Sample, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", {k: tuple(v) for k, v in dict(self.entries).items()})

    @classmethod
    def from_samples(cls, rows: Iterable[tuple[str, str, Sample]]) -> MeasurementSet:
        grouped: dict[tuple[str, str], list[Sample]] = {}
        for alt, metric, sample in rows:
            grouped.setdefault((alt, metric), []).append(sample)
        return cls(grouped)

    def alternatives(self) -> list[str]:
        """Alternative ids in first-appearance order."""
        return list(dict.fromkeys(alt for alt, _ in self.entries))

    def metrics(self) -> list[str]:
        return list(dict.fromkeys(metric for _, metric in self.entries))

    def samples(self, alternative_id: str, metric_id: str) -> tuple[Sample, ...]:
        return self.entries.get((alternative_id, metric_id), ())

    def values(self, alternative_id: str, metric_id: str) -> np.ndarray:
        return np.array([s.value for s in self.samples(alternative_id, metric_id)], dtype=float)

    def rows(self) -> Iterator[tuple[str, str, Sample]]:
        for (alt, metric), samples in self.entries.items():
            for s in samples:
                yield alt, metric, s

    def restricted_to(self, alternative_ids: Iterable[str]) -> MeasurementSet:
        keep = set(alternative_ids)
        return MeasurementSet({k: v for k, v in self.entries.items() if k[0] in keep})

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())


@dataclass(frozen=True)
class Leaf:
    id: str
    metric_id: str
    utility_id: str
    owa_config_id: str
    label: str = ""


@dataclass(frozen=True)
class Aggregate:
    id: str
    children: tuple[CriteriaNode, ...]
    capacity: MobiusCapacity2Add
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


CriteriaNode = Leaf | Aggregate


def iter_nodes(tree: CriteriaNode, depth: int = 0) -> Iterator[tuple[CriteriaNode, int]]:
    """Depth-first pre-order traversal yielding ``(node, depth)``."""
    yield tree, depth
    if isinstance(tree, Aggregate):
        for child in tree.children:
            yield from iter_nodes(child, depth + 1)


def leaves(tree: CriteriaNode) -> list[Leaf]:
    return [node for node, _ in iter_nodes(tree) if isinstance(node, Leaf)]


def find_node(tree: CriteriaNode, node_id: str) -> CriteriaNode:
    for node, _ in iter_nodes(tree):
        if node.id == node_id:
            return node
    raise KeyError(node_id)


@dataclass(frozen=True)
class PreferenceModel:
    tree: CriteriaNode
    metrics: Mapping[str, MetricDef]
    utilities: Mapping[str, PiecewiseLinearUtility]
    owa_configs: Mapping[str, OwaConfig]
    version: str = MODEL_VERSION


def validate_model(model: PreferenceModel, measurements: MeasurementSet | None = None,
                   tol: float = 1e-9) -> list[Violation]:
    """List every reason ``model`` (and optionally ``measurements``) cannot be evaluated.

    An empty list means the pair is evaluable end to end.
    """
    out: list[Violation] = []

    for mid, metric in model.metrics.items():
        lo, hi = metric.natural_range
        if metric.direction not in DIRECTIONS:
            out.append(Violation("metric-direction", f"metric {mid}", f"unknown direction {metric.direction!r}"))
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            out.append(Violation("metric-range", f"metric {mid}", f"natural range [{lo}, {hi}] is not lo < hi"))

    for oid, cfg in model.owa_configs.items():
        if cfg.mode is not None and cfg.mode not in GAUGE_MODES:
            out.append(Violation("owa-mode", f"owa {oid}", f"unknown mode {cfg.mode!r}"))
        try:
            cfg.weights_for(1)
        except InvalidInputError as exc:
            out.append(Violation("owa-config", f"owa {oid}", str(exc)))

    seen: set[str] = set()
    utility_directions: dict[str, set[str]] = {}
    for node, _ in iter_nodes(model.tree):
        where = f"node {node.id}"
        if node.id in seen:
            out.append(Violation("duplicate-node", where, "node id appears more than once"))
        seen.add(node.id)
        if isinstance(node, Aggregate):
            if not node.children:
                out.append(Violation("empty-aggregate", where, "aggregate has no children"))
            if node.capacity.n != len(node.children):
                out.append(Violation(
                    "dimension-mismatch", where,
                    f"capacity over {node.capacity.n} criteria but {len(node.children)} children",
                ))
            for v in validate_capacity(node.capacity, tol):
                out.append(Violation(v.code, f"{where} {v.where}", v.message, v.margin))
            continue
        metric = model.metrics.get(node.metric_id)
        if metric is None:
            out.append(Violation("dangling-metric", where, f"unknown metric {node.metric_id!r}"))
        if node.utility_id not in model.utilities:
            out.append(Violation("dangling-utility", where, f"unknown utility {node.utility_id!r}"))
        elif metric is not None:
            utility_directions.setdefault(node.utility_id, set()).add(metric.direction)
        if node.owa_config_id not in model.owa_configs:
            out.append(Violation("dangling-owa", where, f"unknown OWA config {node.owa_config_id!r}"))

    for uid, directions in sorted(utility_directions.items()):
        for direction in sorted(directions & set(DIRECTIONS)):
            for v in validate_utility(model.utilities[uid], direction):
                out.append(Violation(v.code, f"utility {uid}: {v.where}", v.message, v.margin))

    if measurements is not None:
        out.extend(_validate_measurements(model, measurements))
    return out


def _validate_measurements(model: PreferenceModel, ms: MeasurementSet) -> list[Violation]:
    out: list[Violation] = []
    for (alt, mid), samples in ms.entries.items():
        where = f"samples {alt}/{mid}"
        metric = model.metrics.get(mid)
        if metric is None:
            out.append(Violation("unknown-metric", where, f"metric {mid!r} is not declared"))
            continue
        if not samples:
            out.append(Violation("empty-samples", where, "no samples"))
        for k, s in enumerate(samples):
            if not math.isfinite(s.value):
                out.append(Violation("non-finite", f"{where} #{k}", f"value {s.value!r}"))
            elif not metric.contains(s.value):
                lo, hi = metric.natural_range
                out.append(Violation("range", f"{where} #{k}", f"value {s.value} outside [{lo}, {hi}]"))
    leaf_metrics = list(dict.fromkeys(leaf.metric_id for leaf in leaves(model.tree)))
    for alt in ms.alternatives():
        for mid in leaf_metrics:
            if (alt, mid) not in ms.entries and mid in model.metrics:
                out.append(Violation("missing-samples", f"samples {alt}/{mid}", "no samples for a leaf metric"))
    return out


# --- bundled default -----------------------------------------------------------

TARGET_CLASSES = (
    "ballistic-missile", "commercial-aircraft", "recreational-aircraft", "bird", "ship", "recreational-boat",
)

COMPLETENESS_METRIC = {
    "ballistic-missile": "TC-BM",
    "commercial-aircraft": "TC-CommAC",
    "recreational-aircraft": "TC-RecAC",
    "bird": "TC-Birds",
    "ship": "TC-Ships",
    "recreational-boat": "TC-RecBoats",
}
TIME_FRAME = "TimeFrame"
TRACK_OCCUPANCY = "TrackOccupancy"

_CLASS_LABELS = {
    "ballistic-missile": "Ballistic Missiles",
    "commercial-aircraft": "Commercial Aircrafts",
    "recreational-aircraft": "Recreational Aircrafts",
    "bird": "Birds",
    "ship": "Ships",
    "recreational-boat": "Recreational Boats",
}

# Assumed shapes, not recovered values: the missile utility stays low until 90%
# completeness, the time-frame utility degrades linearly from 2 s to 12 s.
DEFAULT_UTILITIES = {
    "identity": PiecewiseLinearUtility(((0.0, 0.0), (1.0, 1.0)), id="identity"),
    "steep-90": PiecewiseLinearUtility(((0.0, 0.0), (0.9, 0.3), (1.0, 1.0)), id="steep-90"),
    "time-frame": PiecewiseLinearUtility(((0.0, 1.0), (2.0, 1.0), (12.0, 0.0)), id="time-frame"),
    "occupancy": PiecewiseLinearUtility(((0.0, 1.0), (1.0, 0.0)), id="occupancy"),
}
DEFAULT_OWA = {"pessimistic": OwaConfig("pessimistic", alpha=2.0)}


def _leaf(metric_id: str, utility_id: str, label: str) -> Leaf:
    return Leaf(metric_id, metric_id, utility_id, "pessimistic", label)


def _aggregate(node_id: str, label: str, children: list[CriteriaNode]) -> Aggregate:
    return Aggregate(node_id, tuple(children), MobiusCapacity2Add.uniform(len(children)), label)


def default_rrm_model() -> PreferenceModel:
    """The 8-leaf RRM criteria tree with placeholder (uniform, additive) capacities."""
    metrics = {
        mid: MetricDef(mid, HIGHER_BETTER, (0.0, 1.0), "fraction", f"Track completeness, {_CLASS_LABELS[cls]}")
        for cls, mid in COMPLETENESS_METRIC.items()
    }
    metrics[TIME_FRAME] = MetricDef(TIME_FRAME, LOWER_BETTER, (0.0, 3600.0), "s", "Time frame")
    metrics[TRACK_OCCUPANCY] = MetricDef(TRACK_OCCUPANCY, LOWER_BETTER, (0.0, 1.0), "fraction", "Track occupancy")

    def tc(cls: str) -> Leaf:
        utility = "steep-90" if cls == "ballistic-missile" else "identity"
        return _leaf(COMPLETENESS_METRIC[cls], utility, f"TC for {_CLASS_LABELS[cls]}")

    air = _aggregate("AirTargets", "Air Targets",
                     [tc(c) for c in ("ballistic-missile", "commercial-aircraft", "recreational-aircraft", "bird")])
    surface = _aggregate("SurfaceTargets", "Surface Targets", [tc("ship"), tc("recreational-boat")])
    root = _aggregate("RRMPerformance", "RRM performance", [
        _aggregate("Surveillance", "Surveillance", [_leaf(TIME_FRAME, "time-frame", "Time Frame")]),
        _aggregate("Tracking", "Tracking", [air, surface]),
        _aggregate("LoadBalancing", "Load Balancing", [_leaf(TRACK_OCCUPANCY, "occupancy", "Track Occupancy")]),
    ])
    return PreferenceModel(root, metrics, dict(DEFAULT_UTILITIES), dict(DEFAULT_OWA))


default_paper_model = default_rrm_model  # name kept for the documented API
