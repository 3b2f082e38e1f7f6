"""Bottom-up evaluation of a preference model over a measurement set."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from rrmeval.aggregation import choquet_2add
from rrmeval.density import DEFAULT_GRID_SIZE, DEFAULT_MODE, DensityEstimate, GaugeScore, OwaConfig, density_on_range, gauge_score
from rrmeval.errors import InvalidInputError, ModelValidationError
from rrmeval.model import Aggregate, CriteriaNode, Leaf, MeasurementSet, PreferenceModel, iter_nodes, validate_model

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeafResult:
    gauge: GaugeScore
    metric_density: DensityEstimate
    clamped: int


@dataclass(frozen=True)
class NodeInfo:
    id: str
    label: str
    depth: int
    kind: str  # "leaf" | "aggregate"
    parent: str | None


@dataclass
class EvaluationResult:
    model_digest: str
    mode: str
    alpha: float | None
    grid_size: int
    alternatives: list[str]
    nodes: list[NodeInfo]
    scores: dict[str, dict[str, float]] = field(default_factory=dict)
    leaf_results: dict[str, dict[str, LeafResult]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def root_id(self) -> str:
        return self.nodes[0].id

    def root_score(self, alternative_id: str) -> float:
        return self.scores[alternative_id][self.root_id()]


def node_table(tree: CriteriaNode) -> list[NodeInfo]:
    out: list[NodeInfo] = []
    parents: list[str] = []
    for node, depth in iter_nodes(tree):
        del parents[depth:]
        out.append(NodeInfo(node.id, node.label or node.id, depth,
                            "leaf" if isinstance(node, Leaf) else "aggregate",
                            parents[-1] if parents else None))
        parents.append(node.id)
    return out


def _override(cfg: OwaConfig, mode: str | None, alpha: float | None) -> OwaConfig:
    if alpha is not None:
        cfg = OwaConfig(cfg.id, alpha=alpha, mode=cfg.mode)
    if mode is not None:
        cfg = replace(cfg, mode=mode)
    return cfg


def evaluate(model: PreferenceModel, measurements: MeasurementSet, *, mode: str | None = None,
             alpha: float | None = None, alternatives: Sequence[str] | None = None,
             grid_size: int = DEFAULT_GRID_SIZE) -> EvaluationResult:
    """Score every node of ``model.tree`` for every alternative.

    ``mode`` and ``alpha`` override the per-leaf OWA configuration when given.
    Raises :class:`ModelValidationError` when the model or data are not evaluable.
    """
    from rrmeval.io import model_digest

    problems = validate_model(model, measurements)
    if problems:
        raise ModelValidationError(f"{len(problems)} validation problem(s)", problems)
    alts = list(alternatives) if alternatives is not None else measurements.alternatives()
    missing = sorted(set(alts) - set(measurements.alternatives()))
    if missing:
        raise InvalidInputError(f"no measurements for alternative(s) {missing}")
    result = EvaluationResult(model_digest(model), mode or DEFAULT_MODE, alpha, grid_size,
                              alts, node_table(model.tree))
    configs = {k: _override(v, mode, alpha) for k, v in model.owa_configs.items()}

    def visit(node: CriteriaNode, alt: str) -> float:
        if isinstance(node, Aggregate):
            child_scores = [visit(child, alt) for child in node.children]
            score = float(np.clip(choquet_2add(node.capacity, child_scores), 0.0, 1.0))
        else:
            metric = model.metrics[node.metric_id]
            utility = model.utilities[node.utility_id]
            raw = measurements.values(alt, node.metric_id)
            clamped = utility.out_of_span(raw)
            if clamped:
                msg = f"{alt}/{node.id}: {clamped} sample(s) outside utility span were clamped"
                log.warning(msg)
                result.warnings.append(msg)
            gauge = gauge_score(np.clip(utility(raw), 0.0, 1.0), configs[node.owa_config_id], grid_size=grid_size)
            lo, hi = metric.natural_range
            result.leaf_results[alt][node.id] = LeafResult(gauge, density_on_range(raw, lo, hi, grid_size), clamped)
            score = gauge.score
        result.scores[alt][node.id] = score
        return score

    for alt in alts:
        result.scores[alt] = {}
        result.leaf_results[alt] = {}
        visit(model.tree, alt)
    return result
