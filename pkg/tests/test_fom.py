import logging

import pytest

from helpers import tiny_output
from rrmeval.errors import InvalidInputError
from rrmeval.fom import (
    Beam,
    RadarTimeline,
    TrackRecord,
    TruthTrajectory,
    collect_measurements,
    sector_ref,
    time_fractions,
    time_frame,
    track_completeness,
    track_occupancy,
    untracked_count,
)

ALIVE = TruthTrajectory("t", "bird", 0.0, 100.0)


def surv(t, k=0):
    return Beam(float(t), 1.0, "surveillance", sector_ref(k))


def test_track_completeness_cases():
    assert track_completeness(ALIVE, TrackRecord("t", ((10, 60),))) == 0.5
    assert track_completeness(ALIVE, TrackRecord("t")) == 0.0
    assert track_completeness(ALIVE, None) == 0.0
    assert track_completeness(ALIVE, TrackRecord("t", ((0, 100),))) == 1.0
    assert track_completeness(ALIVE, TrackRecord("t", ((-50, 20), (90, 200)))) == pytest.approx(0.3)


def test_bad_trajectories_and_tracks():
    with pytest.raises(InvalidInputError):
        TruthTrajectory("t", "bird", 5.0, 5.0)
    with pytest.raises(InvalidInputError):
        TruthTrajectory("t", "ufo", 0.0, 5.0)
    with pytest.raises(InvalidInputError):
        TrackRecord("t", ((10, 20), (15, 30)))


def test_time_frame_cases(caplog):
    assert time_frame(RadarTimeline(60.0, tuple(surv(t) for t in (0, 4, 8))), 1) == 4.0
    two = [surv(t, 0) for t in (0, 4, 8)] + [surv(t, 1) for t in (0, 6, 12)]
    assert time_frame(RadarTimeline(60.0, tuple(two)), 2) == 5.0
    with caplog.at_level(logging.WARNING):
        assert time_frame(RadarTimeline(60.0, (surv(3),)), 1) == 60.0
    assert "never revisited" in caplog.text


def test_track_occupancy_cases():
    assert track_occupancy(RadarTimeline(100.0, (Beam(0, 30.0, "track-update", "t"),))) == pytest.approx(0.3)
    assert track_occupancy(RadarTimeline(100.0)) == 0.0
    assert track_occupancy(RadarTimeline(100.0, (Beam(0, 100.0, "track-update", "t"),))) == 1.0


def test_time_fractions_sum_to_one():
    tl = RadarTimeline(100.0, (Beam(0, 30.0, "track-update", "t"), surv(40), surv(50)))
    f = time_fractions(tl)
    assert f["idle"] == pytest.approx(0.68)
    assert sum(f.values()) == pytest.approx(1.0, abs=1e-12)


def test_untracked_count():
    truths = [ALIVE, TruthTrajectory("m", "ballistic-missile", 0, 10)]
    counts = untracked_count(truths, [])
    assert counts["bird"] == 1 and counts["ballistic-missile"] == 1 and counts["ship"] == 0
    full = [TrackRecord("t", ((0, 100),)), TrackRecord("m", ((0, 10),))]
    assert all(v == 0 for v in untracked_count(truths, full).values())
    weak = [TrackRecord("t", ((0, 5),))]
    assert untracked_count([ALIVE], weak, threshold=0.1)["bird"] == 1
    assert untracked_count([ALIVE], weak)["bird"] == 0
    with pytest.raises(InvalidInputError):
        untracked_count([ALIVE], weak, threshold=1.0)


def test_collect_measurements_counts():
    truths = tuple(TruthTrajectory(f"m{k}", "ballistic-missile", 0, 10) for k in range(3))
    runs = []
    for k, occ in enumerate((0.3, 0.5)):
        base = tiny_output(scenario=f"s{k}", occupancy=occ)
        runs.append(type(base)(base.scenario_id, base.alternative_id, truths, (), base.timeline, 1))
    ms = collect_measurements({"A+STU": runs, "NA+NSR": runs[:1]})
    assert len(ms.samples("A+STU", "TC-BM")) == 6
    assert sorted(ms.values("A+STU", "TrackOccupancy")) == pytest.approx([0.3, 0.5])
    assert len(ms.samples("NA+NSR", "TC-BM")) == 3
    with pytest.raises(InvalidInputError):
        collect_measurements({"A+STU": []})


def test_collect_routes_by_class():
    ms = collect_measurements({"A+STU": [tiny_output()]})
    assert list(ms.values("A+STU", "TC-BM")) == [0.5]
    assert list(ms.values("A+STU", "TC-Birds")) == [0.0]
    assert list(ms.values("A+STU", "TimeFrame")) == [4.0]
