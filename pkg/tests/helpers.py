"""Small builders shared by test modules."""

import numpy as np

from rrmeval.fom import Beam, RadarTimeline, ScenarioOutput, TrackRecord, TruthTrajectory, sector_ref
from rrmeval.model import COMPLETENESS_METRIC, TIME_FRAME, TRACK_OCCUPANCY, MeasurementSet, Sample


def synthetic_measurements(alternatives=("A", "B"), n=20, seed=0, shift=None) -> MeasurementSet:
    """Valid measurements for every leaf of the default model."""
    rng = np.random.default_rng(seed)
    shift = shift or {}
    rows = []
    for alt in alternatives:
        d = shift.get(alt, 0.0)
        for cls, mid in COMPLETENESS_METRIC.items():
            for k in range(n):
                v = float(np.clip(rng.beta(5, 2) + d, 0, 1))
                rows.append((alt, mid, Sample(v, f"s{k % 4}", f"{cls}-{k}")))
        for k in range(4):
            rows.append((alt, TIME_FRAME, Sample(float(rng.uniform(1.5, 6.0)), f"s{k}")))
            rows.append((alt, TRACK_OCCUPANCY, Sample(float(rng.uniform(0.3, 0.7)), f"s{k}")))
    return MeasurementSet.from_samples(rows)


def tiny_output(alt="A+STU", scenario="s0", occupancy=0.3) -> ScenarioOutput:
    truths = (TruthTrajectory("t0", "ballistic-missile", 0.0, 100.0), TruthTrajectory("t1", "bird", 0.0, 50.0))
    tracks = (TrackRecord("t0", ((10.0, 60.0),)),)
    beams = [Beam(float(t), 1.0, "surveillance", sector_ref(0)) for t in (0, 4, 8)]
    beams.append(Beam(20.0, occupancy * 100.0, "track-update", "t0"))
    return ScenarioOutput(scenario, alt, truths, tracks, RadarTimeline(100.0, tuple(beams)), sectors=1)
