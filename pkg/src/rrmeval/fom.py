"""Figures of merit from ground truth, track records and radar timelines."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from rrmeval.errors import InvalidInputError
from rrmeval.model import COMPLETENESS_METRIC, TARGET_CLASSES, TIME_FRAME, TRACK_OCCUPANCY, MeasurementSet, Sample

log = logging.getLogger(__name__)

SURVEILLANCE = "surveillance"
TRACK_UPDATE = "track-update"
BEAM_KINDS = (SURVEILLANCE, TRACK_UPDATE)
DEFAULT_SECTORS = 16
SIG_DIGITS = 12


@dataclass(frozen=True)
class TruthTrajectory:
    target_id: str
    target_class: str
    t0: float
    t1: float

    def __post_init__(self):
        if self.target_class not in TARGET_CLASSES:
            raise InvalidInputError(f"unknown target class {self.target_class!r}")
        if not self.t0 < self.t1:
            raise InvalidInputError(f"target {self.target_id}: zero-length or reversed lifetime")


@dataclass(frozen=True)
class TrackRecord:
    target_id: str
    tracked_intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.tracked_intervals)
        for (a, b), nxt in zip(ivs, ivs[1:] + ((float("inf"), float("inf")),)):
            if not a <= b or b > nxt[0]:
                raise InvalidInputError(f"track {self.target_id}: intervals must be sorted and disjoint")
        object.__setattr__(self, "tracked_intervals", ivs)


@dataclass(frozen=True)
class Beam:
    t: float
    duration: float
    kind: str
    ref: str


@dataclass(frozen=True)
class RadarTimeline:
    duration: float
    entries: tuple[Beam, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))


def sector_ref(k: int) -> str:
    return f"sector:{k}"


def parse_sector(ref: str) -> int | None:
    head, _, tail = ref.partition(":")
    if head != "sector" or not tail.isdigit():
        return None
    return int(tail)


@dataclass(frozen=True)
class ScenarioOutput:
    """Everything one simulated scenario produces; input to :func:`collect_measurements`."""

    scenario_id: str
    alternative_id: str
    truths: tuple[TruthTrajectory, ...]
    tracks: tuple[TrackRecord, ...]
    timeline: RadarTimeline
    sectors: int = DEFAULT_SECTORS
    meta: Mapping = field(default_factory=dict)


def track_completeness(truth: TruthTrajectory, track: TrackRecord | None) -> float:
    """Fraction of the target's lifetime covered by tracked intervals."""
    life = truth.t1 - truth.t0
    if life <= 0:
        raise InvalidInputError(f"target {truth.target_id}: zero-length trajectory")
    if track is None:
        return 0.0
    covered = sum(max(0.0, min(b, truth.t1) - max(a, truth.t0)) for a, b in track.tracked_intervals)
    return min(1.0, covered / life)


def time_frame(timeline: RadarTimeline, sectors: int = DEFAULT_SECTORS) -> float:
    """Mean over sectors of each sector's mean surveillance revisit interval.

    A sector visited fewer than twice contributes the scenario duration.
    """
    if sectors < 1:
        raise InvalidInputError("need at least one sector")
    visits: dict[int, list[float]] = defaultdict(list)
    for beam in timeline.entries:
        if beam.kind == SURVEILLANCE:
            k = parse_sector(beam.ref)
            if k is not None and k < sectors:
                visits[k].append(beam.t)
    per_sector = []
    starved = 0
    for k in range(sectors):
        times = sorted(visits.get(k, ()))
        if len(times) < 2:
            starved += 1
            per_sector.append(timeline.duration)
        else:
            per_sector.append((times[-1] - times[0]) / (len(times) - 1))
    if starved:
        log.warning("%d sector(s) never revisited; counted as the scenario duration", starved)
    return sum(per_sector) / sectors


def time_fractions(timeline: RadarTimeline) -> dict[str, float]:
    """Fractions of scenario time spent on tracking, surveillance, and idle."""
    busy = {kind: 0.0 for kind in BEAM_KINDS}
    for beam in timeline.entries:
        busy[beam.kind] += beam.duration
    track = busy[TRACK_UPDATE] / timeline.duration
    surv = busy[SURVEILLANCE] / timeline.duration
    return {TRACK_UPDATE: track, SURVEILLANCE: surv, "idle": 1.0 - track - surv}


def track_occupancy(timeline: RadarTimeline) -> float:
    """Fraction of radar time spent on track-update beams."""
    return time_fractions(timeline)[TRACK_UPDATE]


def untracked_count(truths: Iterable[TruthTrajectory], tracks: Iterable[TrackRecord],
                    threshold: float = 0.0) -> dict[str, int]:
    """Per class, the number of targets whose completeness is at most ``threshold``."""
    if not 0.0 <= threshold < 1.0:
        raise InvalidInputError("threshold must lie in [0, 1)")
    by_target = {t.target_id: t for t in tracks}
    counts = Counter({cls: 0 for cls in TARGET_CLASSES})
    for truth in truths:
        if track_completeness(truth, by_target.get(truth.target_id)) <= threshold:
            counts[truth.target_class] += 1
    return dict(counts)


def _round(x: float) -> float:
    return float(f"{x:.{SIG_DIGITS}g}")


def collect_measurements(outputs: Mapping[str, Sequence[ScenarioOutput]]) -> MeasurementSet:
    """Turn scenario outputs per alternative into raw samples.

    One completeness sample per target and scenario, routed by class; one time
    frame and one occupancy sample per scenario. Values are rounded to 12
    significant digits so they survive a text round trip unchanged.
    """
    rows: list[tuple[str, str, Sample]] = []
    for alt, runs in outputs.items():
        if not runs:
            raise InvalidInputError(f"alternative {alt!r} has no scenarios")
        for run in runs:
            by_target = {t.target_id: t for t in run.tracks}
            for truth in run.truths:
                value = track_completeness(truth, by_target.get(truth.target_id))
                rows.append((alt, COMPLETENESS_METRIC[truth.target_class],
                             Sample(_round(value), run.scenario_id, truth.target_id)))
            rows.append((alt, TIME_FRAME, Sample(_round(time_frame(run.timeline, run.sectors)), run.scenario_id)))
            rows.append((alt, TRACK_OCCUPANCY, Sample(_round(track_occupancy(run.timeline)), run.scenario_id)))
    return MeasurementSet.from_samples(rows)
