"""Desk-scale radar resource management simulator.

Time advances in 1 s ticks, each split into ``beam_budget`` equal beam slots.
Every slot is either a track update or a surveillance dwell on one sector; there
is no spatial geometry, only a sector index and abstract range / closing-speed
scalars per target.

Random numbers come from numpy's PCG64 with one stream per purpose, derived with
``SeedSequence(seed, spawn_key=...)``: stream ``(0,)`` draws the ground truth,
``(1, k)`` the detections of target ``k``, ``(2,)`` the clutter false alarms.
Ground truth therefore depends only on the seed and populations, not on the
policy or the clutter flag.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from rrmeval.errors import InvalidInputError
from rrmeval.fom import (
    SURVEILLANCE, TRACK_UPDATE, Beam, RadarTimeline, ScenarioOutput, TrackRecord, TruthTrajectory, sector_ref,
)
from rrmeval.model import TARGET_CLASSES

RNG_NAME = "numpy.random.PCG64"
NA_NSR = "NA+NSR"
A_STU = "A+STU"
POLICY_KINDS = (NA_NSR, A_STU)
POLICY_ALIASES = {"na-nsr": NA_NSR, "a-stu": A_STU, NA_NSR.lower(): NA_NSR, A_STU.lower(): A_STU}

TICK = 1.0


@dataclass(frozen=True)
class ClassParams:
    code: str
    pd: float  # per-dwell detection probability without clutter
    small: bool  # small targets suffer the stronger clutter penalty
    agility: float  # s; track-update detection decays as exp(-lag / agility)
    lifetime: tuple[float, float]  # s
    speed: float  # range units per second at full closing speed
    threat: float  # crisp threat level fed to the fuzzy prioritizer
    closing: tuple[float, float]
    start_range: tuple[float, float]


CLASS_PARAMS: dict[str, ClassParams] = {
    "ballistic-missile": ClassParams("BM", 0.90, False, 6.0, (50.0, 120.0), 0.008, 1.0, (0.7, 1.0), (0.6, 1.0)),
    "commercial-aircraft": ClassParams("CA", 0.95, False, 40.0, (100.0, 300.0), 0.002, 0.25, (-1.0, 1.0), (0.2, 1.0)),
    "recreational-aircraft": ClassParams("RA", 0.80, True, 12.0, (80.0, 250.0), 0.0015, 0.5, (-1.0, 1.0), (0.1, 1.0)),
    "bird": ClassParams("BD", 0.70, True, 8.0, (60.0, 200.0), 0.0005, 0.0, (-1.0, 1.0), (0.0, 0.6)),
    "ship": ClassParams("SH", 0.95, False, 60.0, (200.0, 400.0), 0.0003, 0.5, (-1.0, 1.0), (0.1, 1.0)),
    "recreational-boat": ClassParams("RB", 0.80, True, 20.0, (100.0, 300.0), 0.0005, 0.25, (-1.0, 1.0), (0.0, 0.6)),
}

DEFAULT_POPULATIONS = {
    "ballistic-missile": 6,
    "commercial-aircraft": 20,
    "recreational-aircraft": 15,
    "bird": 25,
    "ship": 10,
    "recreational-boat": 15,
}

CLUTTER_PD_SMALL = 0.6
CLUTTER_PD_LARGE = 0.9
CLUTTER_FALSE_ALARM = 0.3  # per surveillance dwell in clutter
CONFIRM_PRIORITY = 0.0  # confirmation dwells queue behind every real track update
CONFIRM_HITS = 2
CONFIRM_WINDOW = 3
DROP_MISSES = 3


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 300.0
    seed: int = 0
    populations: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_POPULATIONS))
    clutter: bool = False
    launch_region_scale: float = 1.0
    beam_budget: float = 20.0
    sectors: int = 16
    scenario_id: str = ""

    def __post_init__(self):
        pops = {cls: int(self.populations.get(cls, 0)) for cls in TARGET_CLASSES}
        unknown = set(self.populations) - set(TARGET_CLASSES)
        if unknown:
            raise InvalidInputError(f"unknown target classes {sorted(unknown)}")
        if any(v < 0 for v in pops.values()):
            raise InvalidInputError("populations must be >= 0")
        if not self.duration > 0:
            raise InvalidInputError("duration must be > 0")
        if not self.beam_budget > 0:
            raise InvalidInputError("beam_budget must be > 0")
        if self.launch_region_scale < 0:
            raise InvalidInputError("launch_region_scale must be >= 0")
        if self.sectors < 1:
            raise InvalidInputError("sectors must be >= 1")
        object.__setattr__(self, "populations", pops)
        if not self.scenario_id:
            object.__setattr__(self, "scenario_id", f"seed{self.seed}" + ("-clutter" if self.clutter else ""))

    def as_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id, "duration": self.duration, "seed": self.seed,
            "populations": dict(self.populations), "clutter": self.clutter,
            "launch_region_scale": self.launch_region_scale, "beam_budget": self.beam_budget,
            "sectors": self.sectors,
        }


DEFAULT_BASE_INTERVALS = {
    "ballistic-missile": 2.0,
    "commercial-aircraft": 5.0,
    "recreational-aircraft": 3.0,
    "bird": 4.0,
    "ship": 8.0,
    "recreational-boat": 5.0,
}


@dataclass(frozen=True)
class Policy:
    kind: str
    fixed_interval: float = 2.0
    base_intervals: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_BASE_INTERVALS))
    i_min_factor: float = 0.25

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidInputError(f"unknown policy {self.kind!r}")
        if self.fixed_interval <= 0 or any(v <= 0 for v in self.base_intervals.values()):
            raise InvalidInputError("update intervals must be > 0")
        if not 0 < self.i_min_factor <= 1:
            raise InvalidInputError("i_min_factor must lie in (0, 1]")

    @property
    def adaptive(self) -> bool:
        return self.kind == A_STU


def policy_from_name(name: str) -> Policy:
    try:
        return Policy(POLICY_ALIASES[name.lower()])
    except KeyError:
        raise InvalidInputError(f"unknown policy {name!r}; use na-nsr or a-stu") from None


# --- fuzzy prioritization ----------------------------------------------------------


@dataclass(frozen=True)
class TargetState:
    target_class: str
    range: float
    closing_speed: float
    detectability: float = 1.0

    def __post_init__(self):
        if self.target_class not in TARGET_CLASSES:
            raise InvalidInputError(f"unknown target class {self.target_class!r}")
        if not (0.0 <= self.range <= 1.0 and -1.0 <= self.closing_speed <= 1.0 and 0.0 <= self.detectability <= 1.0):
            raise InvalidInputError("target state out of range")


def _tri(x, a: float, b: float, c: float):
    x = np.asarray(x, dtype=float)
    up = (x - a) / (b - a)
    down = (c - x) / (c - b)
    return np.clip(np.minimum(up, down), 0.0, 1.0)


_UNIVERSE = np.linspace(0.0, 1.0, 401)
_OUT = {
    "very-low": _tri(_UNIVERSE, -0.25, 0.0, 0.25),
    "low": _tri(_UNIVERSE, 0.0, 0.25, 0.5),
    "medium": _tri(_UNIVERSE, 0.25, 0.5, 0.75),
    "high": _tri(_UNIVERSE, 0.5, 0.75, 1.0),
    "very-high": _tri(_UNIVERSE, 0.75, 1.0, 1.25),
}

# (threat, range, closing, output); None = any. Every rule needs a threat term, so
# a low-threat target can only activate low-side outputs.
_RULES = (
    ("low", None, None, "very-low"),
    ("low", "near", "fast", "low"),
    ("medium", None, None, "low"),
    ("medium", "near", None, "medium"),
    ("medium", None, "fast", "medium"),
    ("medium", "near", "fast", "high"),
    ("high", "far", None, "high"),
    ("high", None, "receding", "high"),
    ("high", "mid", None, "very-high"),
    ("high", "near", None, "very-high"),
    ("high", None, "fast", "very-high"),
)


def fuzzy_priority(s: TargetState) -> float:
    """Mamdani inference (min/max, clipping) with centroid defuzzification, in [0, 1]."""
    threat = CLASS_PARAMS[s.target_class].threat
    grades = {
        "threat": {"low": _tri(threat, -0.5, 0.0, 0.5), "medium": _tri(threat, 0.0, 0.5, 1.0),
                   "high": _tri(threat, 0.5, 1.0, 1.5)},
        "range": {"near": _tri(s.range, -0.5, 0.0, 0.5), "mid": _tri(s.range, 0.0, 0.5, 1.0),
                  "far": _tri(s.range, 0.5, 1.0, 1.5)},
        "closing": {"receding": _tri(s.closing_speed, -2.0, -1.0, 0.0), "slow": _tri(s.closing_speed, -1.0, 0.0, 1.0),
                    "fast": _tri(s.closing_speed, 0.0, 1.0, 2.0)},
    }
    agg = np.zeros_like(_UNIVERSE)
    for threat_term, range_term, closing_term, out in _RULES:
        strength = float(grades["threat"][threat_term])
        if range_term is not None:
            strength = min(strength, float(grades["range"][range_term]))
        if closing_term is not None:
            strength = min(strength, float(grades["closing"][closing_term]))
        if strength > 0.0:
            agg = np.maximum(agg, np.minimum(strength, _OUT[out]))
    mass = agg.sum()
    if mass <= 0.0:
        return 0.0
    return float(np.dot(_UNIVERSE, agg) / mass)


def adaptive_update_interval(priority: float, base_interval: float, i_min_factor: float = 0.25) -> float:
    """``base * (f + (1 - priority) * (1 - f))``: from ``f * base`` at top priority to ``base``."""
    if not 0.0 <= priority <= 1.0:
        raise InvalidInputError("priority must lie in [0, 1]")
    return base_interval * (i_min_factor + (1.0 - priority) * (1.0 - i_min_factor))


# --- scheduling ----------------------------------------------------------------------


@dataclass(frozen=True)
class PendingUpdate:
    target_id: str
    due: float
    priority: float


@dataclass(frozen=True)
class TickSchedule:
    assignments: tuple[tuple[str, str], ...]  # (kind, ref) in slot order
    deferred: tuple[PendingUpdate, ...]


def schedule_tick(pending: Sequence[PendingUpdate], surveillance: Sequence[str], budget: int) -> TickSchedule:
    """Assign ``budget`` beam slots for one tick.

    Due track updates go first, highest priority first, then earliest due, then
    lowest target id. Updates beyond the budget are deferred. Remaining slots are
    filled from the surveillance queue in order.
    """
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    ordered = sorted(pending, key=lambda u: (-u.priority, u.due, u.target_id))
    served, deferred = ordered[:budget], ordered[budget:]
    slots = [(TRACK_UPDATE, u.target_id) for u in served]
    slots += [(SURVEILLANCE, ref) for ref in surveillance[: budget - len(slots)]]
    return TickSchedule(tuple(slots), tuple(deferred))


# --- scenario ------------------------------------------------------------------------


def confirm_ref(sector: int, n: int) -> str:
    return f"confirm:{sector}:{n}"


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


class _Target:
    __slots__ = ("truth", "params", "sector", "r0", "closing", "rng", "tracked", "hits", "misses",
                 "last_update", "next_due", "track_start", "intervals")

    def __init__(self, truth: TruthTrajectory, sector: int, r0: float, closing: float, rng):
        self.truth = truth
        self.params = CLASS_PARAMS[truth.target_class]
        self.sector = sector
        self.r0 = r0
        self.closing = closing
        self.rng = rng
        self.tracked = False
        self.hits: deque[bool] = deque(maxlen=CONFIRM_WINDOW)
        self.misses = 0
        self.last_update = 0.0
        self.next_due = 0.0
        self.track_start = 0.0
        self.intervals: list[tuple[float, float]] = []

    def alive(self, t: float) -> bool:
        return self.truth.t0 <= t < self.truth.t1

    def state(self, t: float) -> TargetState:
        r = self.r0 - self.closing * self.params.speed * (t - self.truth.t0)
        return TargetState(self.truth.target_class, min(1.0, max(0.0, r)), self.closing)

    def close(self, t: float) -> None:
        if self.tracked:
            if t > self.track_start:
                self.intervals.append((self.track_start, t))
            self.tracked = False
        self.hits.clear()
        self.misses = 0


def generate_truths(cfg: ScenarioConfig) -> list[tuple[TruthTrajectory, int, float, float]]:
    """Ground truth ``(trajectory, sector, start range, closing speed)`` for every target."""
    rng = _rng(cfg.seed, 0)
    bm_sectors = min(cfg.sectors, max(1, math.ceil(cfg.launch_region_scale * cfg.sectors / 4)))
    out = []
    for cls in TARGET_CLASSES:
        p = CLASS_PARAMS[cls]
        for i in range(cfg.populations[cls]):
            life = rng.uniform(*p.lifetime)
            t0 = rng.uniform(0.0, max(0.0, cfg.duration - min(life, cfg.duration) * 0.5))
            t1 = min(cfg.duration, t0 + life)
            sector = int(rng.integers(bm_sectors if cls == "ballistic-missile" else cfg.sectors))
            r0 = rng.uniform(*p.start_range)
            closing = rng.uniform(*p.closing)
            out.append((TruthTrajectory(f"{p.code}{i:03d}", cls, float(t0), float(t1)), sector, float(r0), float(closing)))
    return out


def run_scenario(cfg: ScenarioConfig, policy: Policy) -> ScenarioOutput:
    """Simulate one scenario under ``policy``; deterministic for fixed inputs."""
    slots = max(1, int(round(cfg.beam_budget * TICK)))
    dwell = TICK / slots
    targets = [_Target(truth, sector, r0, closing, _rng(cfg.seed, 1, k))
               for k, (truth, sector, r0, closing) in enumerate(generate_truths(cfg))]
    by_id = {tg.truth.target_id: tg for tg in targets}
    by_sector: dict[int, list[_Target]] = {}
    for tg in targets:
        by_sector.setdefault(tg.sector, []).append(tg)
    fa_rng = _rng(cfg.seed, 2)
    clutter_small = CLUTTER_PD_SMALL if cfg.clutter else 1.0
    clutter_large = CLUTTER_PD_LARGE if cfg.clutter else 1.0

    def pd(tg: _Target) -> float:
        return tg.params.pd * (clutter_small if tg.params.small else clutter_large)

    def priority(tg: _Target, t: float) -> float:
        return fuzzy_priority(tg.state(t)) if policy.adaptive else 0.5

    def interval(tg: _Target, t: float) -> float:
        if not policy.adaptive:
            return policy.fixed_interval
        return adaptive_update_interval(priority(tg, t), policy.base_intervals[tg.truth.target_class],
                                        policy.i_min_factor)

    entries: list[Beam] = []
    confirmations: list[tuple[float, int]] = []  # (detected at, sector) awaiting a confirmation dwell
    false_alarms: list[tuple[float, int]] = []
    cursor = 0
    deferred_total = 0
    n_ticks = int(math.ceil(cfg.duration / TICK))

    for tick in range(n_ticks):
        t = tick * TICK
        for tg in targets:
            if tg.tracked and tg.truth.t1 <= t:
                tg.close(tg.truth.t1)
        pending = [PendingUpdate(tg.truth.target_id, tg.next_due, priority(tg, t))
                   for tg in targets if tg.tracked and tg.next_due < t + TICK]
        pending += [PendingUpdate(confirm_ref(k, n), due, CONFIRM_PRIORITY) for n, (due, k) in enumerate(confirmations)]
        surveillance = [sector_ref((cursor + j) % cfg.sectors) for j in range(slots)]
        plan = schedule_tick(pending, surveillance, slots)
        deferred_total += len(plan.deferred)

        served_confirm: set[str] = set()
        for slot, (kind, ref) in enumerate(plan.assignments):
            now = t + slot * dwell
            if now >= cfg.duration:
                break
            entries.append(Beam(now, dwell, kind, ref))
            if kind == TRACK_UPDATE and ref.startswith("confirm:"):
                served_confirm.add(ref)
            elif kind == TRACK_UPDATE:
                tg = by_id[ref]
                if now >= tg.truth.t1:
                    tg.close(tg.truth.t1)
                    continue
                lag = now - tg.last_update
                if tg.rng.random() < pd(tg) * math.exp(-lag / tg.params.agility):
                    tg.last_update = now
                    tg.misses = 0
                else:
                    tg.misses += 1
                    if tg.misses >= DROP_MISSES:
                        tg.close(now)
                        continue
                tg.next_due = now + interval(tg, now)
            else:
                sector = (cursor) % cfg.sectors
                cursor += 1
                for tg in by_sector.get(sector, ()):
                    if tg.tracked or not tg.alive(now):
                        continue
                    tg.hits.append(bool(tg.rng.random() < pd(tg)))
                    if sum(tg.hits) >= CONFIRM_HITS:
                        tg.tracked = True
                        tg.hits.clear()
                        tg.track_start = tg.last_update = now
                        tg.misses = 0
                        tg.next_due = now + interval(tg, now)
                if cfg.clutter and fa_rng.random() < CLUTTER_FALSE_ALARM:
                    false_alarms.append((now, sector))
        confirmations = [c for n, c in enumerate(confirmations) if confirm_ref(c[1], n) not in served_confirm]
        confirmations += false_alarms
        false_alarms = []

    for tg in targets:
        tg.close(min(tg.truth.t1, cfg.duration))

    truths = tuple(tg.truth for tg in targets)
    tracks = tuple(TrackRecord(tg.truth.target_id, tuple(tg.intervals)) for tg in targets)
    meta = {
        "policy": policy.kind,
        "config": cfg.as_dict(),
        "rng": RNG_NAME,
        "numpy": np.__version__,
        "deferred_updates": deferred_total,
    }
    return ScenarioOutput(cfg.scenario_id, policy.kind, truths, tracks, RadarTimeline(cfg.duration, tuple(entries)),
                          cfg.sectors, meta)
