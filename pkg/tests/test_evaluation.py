from dataclasses import replace

import numpy as np
import pytest

from helpers import synthetic_measurements
from rrmeval.aggregation import MobiusCapacity2Add, choquet_2add
from rrmeval.density import SMOOTHED_QUANTILE_OWA
from rrmeval.errors import InvalidInputError, ModelValidationError
from rrmeval.evaluation import evaluate, node_table
from rrmeval.model import Aggregate, MeasurementSet, Sample, default_rrm_model, find_node, iter_nodes, leaves


@pytest.fixture(scope="module")
def result():
    ms = synthetic_measurements(("A", "B"), shift={"B": -0.2})
    return evaluate(default_rrm_model(), ms)


def test_every_node_scored_in_unit_interval(result):
    for alt in ("A", "B"):
        assert set(result.scores[alt]) == {n.id for n, _ in iter_nodes(default_rrm_model().tree)}
        assert all(0.0 <= v <= 1.0 for v in result.scores[alt].values())
        assert len(result.leaf_results[alt]) == 8


def test_aggregates_are_choquet_of_children(result):
    model = default_rrm_model()
    for node, _ in iter_nodes(model.tree):
        if isinstance(node, Aggregate):
            child = [result.scores["A"][c.id] for c in node.children]
            assert result.scores["A"][node.id] == pytest.approx(choquet_2add(node.capacity, child))


def test_worse_samples_score_lower(result):
    assert result.root_score("B") < result.root_score("A")


def test_single_sample_leaf_equals_utility():
    model = default_rrm_model()
    rows = [(alt, mid, s) for alt, mid, s in synthetic_measurements(("A",)).rows() if mid != "TC-BM"]
    rows.append(("A", "TC-BM", Sample(0.95, "s0", "m")))
    res = evaluate(model, MeasurementSet.from_samples(rows))
    assert res.scores["A"]["TC-BM"] == pytest.approx(0.65)


def test_alpha_override_is_pessimistic():
    ms = synthetic_measurements(("A",))
    model = default_rrm_model()
    roots = [evaluate(model, ms, alpha=a, mode=SMOOTHED_QUANTILE_OWA).root_score("A") for a in (1, 3)]
    assert roots[1] <= roots[0]


def test_interaction_changes_score():
    model = default_rrm_model()
    ms = synthetic_measurements(("A",), shift={"A": -0.3})
    tracking = find_node(model.tree, "Tracking")
    complementary = replace(tracking, capacity=MobiusCapacity2Add((0.3, 0.3), {(0, 1): 0.4}))

    def swap(node):
        if node.id == "Tracking":
            return complementary
        if isinstance(node, Aggregate):
            return replace(node, children=tuple(swap(c) for c in node.children))
        return node

    base = evaluate(model, ms)
    tuned = evaluate(replace(model, tree=swap(model.tree)), ms)
    air, surf = base.scores["A"]["AirTargets"], base.scores["A"]["SurfaceTargets"]
    assert tuned.scores["A"]["Tracking"] == pytest.approx(0.3 * air + 0.3 * surf + 0.4 * min(air, surf))


def test_invalid_inputs_raise():
    model = default_rrm_model()
    rows = list(synthetic_measurements(("A",)).rows()) + [("A", "TC-BM", Sample(1.5, "s0"))]
    with pytest.raises(ModelValidationError) as exc:
        evaluate(model, MeasurementSet.from_samples(rows))
    assert any(v.code == "range" for v in exc.value.violations)
    with pytest.raises(InvalidInputError):
        evaluate(model, synthetic_measurements(("A",)), alternatives=["Z"])


def test_clamped_samples_are_reported():
    rows = [r for r in synthetic_measurements(("A",)).rows() if r[1] != "TimeFrame"]
    rows.append(("A", "TimeFrame", Sample(30.0, "s0")))
    res = evaluate(default_rrm_model(), MeasurementSet.from_samples(rows))
    assert res.leaf_results["A"]["TimeFrame"].clamped == 1
    assert res.warnings


def test_node_table_parents():
    table = node_table(default_rrm_model().tree)
    by_id = {n.id: n for n in table}
    assert by_id["RRMPerformance"].parent is None
    assert by_id["TC-Birds"].parent == "AirTargets"
    assert [n.id for n in table][:2] == ["RRMPerformance", "Surveillance"]


def test_deterministic(result):
    again = evaluate(default_rrm_model(), synthetic_measurements(("A", "B"), shift={"B": -0.2}))
    assert again.scores == result.scores
    leaf = leaves(default_rrm_model().tree)[0].id
    assert np.array_equal(again.leaf_results["A"][leaf].gauge.density.values,
                          result.leaf_results["A"][leaf].gauge.density.values)
