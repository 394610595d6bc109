"""Mission world model: geometry, regions, beacons, and stochastic parameters.

The world is a bounded 2D plane with axis-aligned rectangular regions of
interest, fixed communication beacons, and a set of stochastic parameters
that drive the mission simulator (per-tick disable probabilities by terrain
class, rescue outcome distribution, per-robot speed models, and named
environmental event probabilities).

Distances are Euclidean meters; durations are integer ticks unless a
function documents otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

DEFAULT_TERRAIN = "default"

# Proximity used when a location target is given as a point rather than a
# region: "reaching" the point means coming within this many meters.
POINT_REACH_EPS = 1.0


class WorldError(ValueError):
    """Raised when a world document fails validation.

    Carries the full diagnostic list so callers (CLI, HTTP service) can
    report every problem at once instead of the first.
    """

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Location:
    x: float
    y: float

    def to_json(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y}

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "Location":
        return Location(float(obj["x"]), float(obj["y"]))


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, loc: Location) -> bool:
        return self.x0 <= loc.x <= self.x1 and self.y0 <= loc.y <= self.y1

    def center(self) -> Location:
        return Location((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def nearest_point(self, loc: Location) -> Location:
        # Clamping gives the closest point of the rectangle; used for sound
        # lower bounds on travel distance to a region.
        return Location(min(max(loc.x, self.x0), self.x1), min(max(loc.y, self.y0), self.y1))

    def to_json(self) -> dict[str, float]:
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "Rect":
        return Rect(float(obj["x0"]), float(obj["y0"]), float(obj["x1"]), float(obj["y1"]))


@dataclass(frozen=True)
class Region:
    """A named axis-aligned area of interest.

    ``explore_capacity`` is advisory (the overcrowding alert compares the
    number of robots exploring the region against it); the simulator itself
    never blocks over-capacity exploration.
    """

    id: str
    rect: Rect
    risky: bool = False
    explore_capacity: int = 1
    terrain: str = DEFAULT_TERRAIN


@dataclass(frozen=True)
class Beacon:
    id: str
    location: Location
    comm_radius: float = 50.0


@dataclass(frozen=True)
class TerrainClass:
    """Per-tick disable probability and speed slowdown for one terrain kind.

    slowdown >= 1 divides speed, so a robot's configured max speed is a true
    upper bound on realized speed everywhere.
    """

    disable_prob: float = 0.0
    slowdown: float = 1.0


@dataclass(frozen=True)
class SpeedModel:
    """Nominal speed in meters/tick with a multiplicative noise range.

    One noise factor is drawn uniformly from [noise_lo, noise_hi] at the
    start of each travel leg and held for the whole leg.
    """

    nominal: float = 1.0
    noise_lo: float = 1.0
    noise_hi: float = 1.0

    def mean_noise(self) -> float:
        return (self.noise_lo + self.noise_hi) / 2.0

    def max_speed(self) -> float:
        return self.nominal * self.noise_hi


@dataclass(frozen=True)
class RescueOutcomeProbs:
    success: float = 0.8
    fail: float = 0.15
    rescuer_disabled: float = 0.05

    def __post_init__(self) -> None:
        probs = (self.success, self.fail, self.rescuer_disabled)
        if any(p < 0.0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise WorldError(
                [f"rescue outcome probabilities must be >= 0 and sum to 1, got {probs}"]
            )


@dataclass(frozen=True)
class StochasticParams:
    terrain: dict[str, TerrainClass] = field(default_factory=dict)
    rescue: RescueOutcomeProbs = field(default_factory=RescueOutcomeProbs)
    speed_default: SpeedModel = field(default_factory=SpeedModel)
    speed_per_robot: dict[str, SpeedModel] = field(default_factory=dict)
    event_probs: dict[str, float] = field(default_factory=dict)

    def terrain_class(self, name: str) -> TerrainClass:
        if name in self.terrain:
            return self.terrain[name]
        return self.terrain.get(DEFAULT_TERRAIN, TerrainClass())

    def speed_model(self, robot_id: str) -> SpeedModel:
        return self.speed_per_robot.get(robot_id, self.speed_default)


@dataclass(frozen=True)
class WorldMap:
    bounds: Rect
    regions: tuple[Region, ...] = ()
    beacons: tuple[Beacon, ...] = ()
    stochastic: StochasticParams = field(default_factory=StochasticParams)

    def region_by_id(self, region_id: str) -> Region | None:
        for r in self.regions:
            if r.id == region_id:
                return r
        return None

    def region_containing(self, loc: Location) -> Region | None:
        # Overlaps resolve to the first region in file order.
        for r in self.regions:
            if r.rect.contains(loc):
                return r
        return None

    def terrain_at(self, loc: Location) -> TerrainClass:
        r = self.region_containing(loc)
        name = r.terrain if r is not None else DEFAULT_TERRAIN
        return self.stochastic.terrain_class(name)


def distance(a: Location, b: Location) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def within(a: Location, b: Location, eps: float) -> bool:
    return distance(a, b) <= eps


def is_risky_region(world: WorldMap, q: str | Location) -> bool:
    """Risk flag of a region named by id, or of the region containing a point.

    A location outside every region is corridor space and never risky.
    """
    if isinstance(q, str):
        r = world.region_by_id(q)
        if r is None:
            raise WorldError([f"unknown region id {q!r}"])
        return r.risky
    r = world.region_containing(q)
    return r is not None and r.risky


def max_speed(world: WorldMap, robot_id: str) -> float:
    return world.stochastic.speed_model(robot_id).max_speed()


def min_travel_time(frm: Location, to: Location, speed: float) -> float:
    """Lower bound on travel ticks: straight-line distance over max speed.

    Fractional result, no rounding; terrain can only slow a robot down, so
    this is sound for impossibility proofs.
    """
    if speed <= 0.0:
        raise WorldError([f"max navigation speed must be positive, got {speed}"])
    return distance(frm, to) / speed


def robot_min_travel_time(world: WorldMap, robot_id: str, frm: Location, to: Location) -> float:
    return min_travel_time(frm, to, max_speed(world, robot_id))


def travel_duration(world: WorldMap, robot_id: str, frm: Location, to: Location) -> int:
    """Expected travel ticks along the straight line, rounded up.

    Expected effective speed is nominal x mean noise, divided by the terrain
    slowdown sampled along the segment.
    """
    model = world.stochastic.speed_model(robot_id)
    base = model.nominal * model.mean_noise()
    if base <= 0.0:
        raise WorldError([f"robot {robot_id}: expected speed must be positive, got {base}"])
    dist = distance(frm, to)
    if dist == 0.0:
        return 0
    # Integrate dt = ds / (base / slowdown(s)) with a fixed-step sample of
    # the segment; half-meter steps keep region boundaries sharp enough.
    steps = max(1, math.ceil(dist / 0.5))
    ticks = 0.0
    for k in range(steps):
        frac = (k + 0.5) / steps
        p = Location(frm.x + (to.x - frm.x) * frac, frm.y + (to.y - frm.y) * frac)
        ticks += (dist / steps) * world.terrain_at(p).slowdown / base
    return math.ceil(ticks - 1e-9)


# --- JSON round trip (schema 1) -------------------------------------------

WORLD_SCHEMA = 1


def world_to_json(world: WorldMap) -> dict[str, Any]:
    st = world.stochastic
    return {
        "schema": WORLD_SCHEMA,
        "bounds": world.bounds.to_json(),
        "regions": [
            {
                "id": r.id,
                "rect": r.rect.to_json(),
                "risky": r.risky,
                "capacity": r.explore_capacity,
                "terrain": r.terrain,
            }
            for r in world.regions
        ],
        "beacons": [
            {"id": b.id, "x": b.location.x, "y": b.location.y, "commRadius": b.comm_radius}
            for b in world.beacons
        ],
        "stochastic": {
            "terrain": {
                name: {"disable": tc.disable_prob, "slowdown": tc.slowdown}
                for name, tc in sorted(st.terrain.items())
            },
            "rescue": {
                "success": st.rescue.success,
                "fail": st.rescue.fail,
                "rescuerDisabled": st.rescue.rescuer_disabled,
            },
            "speed": {
                "default": _speed_to_json(st.speed_default),
                "perRobot": {rid: _speed_to_json(m) for rid, m in sorted(st.speed_per_robot.items())},
            },
            "events": dict(sorted(st.event_probs.items())),
        },
    }


def _speed_to_json(m: SpeedModel) -> dict[str, Any]:
    return {"nominal": m.nominal, "noise": [m.noise_lo, m.noise_hi]}


def _speed_from_json(obj: dict[str, Any], where: str, diags: list[str]) -> SpeedModel:
    nominal = float(obj.get("nominal", 1.0))
    noise = obj.get("noise", [1.0, 1.0])
    if not isinstance(noise, (list, tuple)) or len(noise) != 2:
        diags.append(f"{where}: noise must be [lo, hi]")
        noise = [1.0, 1.0]
    lo, hi = float(noise[0]), float(noise[1])
    if nominal <= 0:
        diags.append(f"{where}: nominal speed must be positive, got {nominal}")
    if not (0 < lo <= hi):
        diags.append(f"{where}: noise range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
    return SpeedModel(nominal, lo, hi)


def world_from_json(obj: dict[str, Any]) -> WorldMap:
    """Parse and validate a world document; raises WorldError listing every problem."""
    diags: list[str] = []
    if not isinstance(obj, dict):
        raise WorldError(["world document must be a JSON object"])
    if obj.get("schema") != WORLD_SCHEMA:
        diags.append(f"world.schema: expected {WORLD_SCHEMA}, got {obj.get('schema')!r}")

    try:
        bounds = Rect.from_json(obj.get("bounds", {}))
    except (KeyError, TypeError, ValueError):
        diags.append("world.bounds: must provide numeric x0, y0, x1, y1")
        bounds = Rect(0.0, 0.0, 0.0, 0.0)
    if not (bounds.x0 < bounds.x1 and bounds.y0 < bounds.y1):
        diags.append(f"world.bounds: degenerate rectangle {bounds}")

    regions: list[Region] = []
    seen_ids: set[str] = set()
    for i, robj in enumerate(obj.get("regions", [])):
        where = f"world.regions[{i}]"
        rid = str(robj.get("id", ""))
        if not rid:
            diags.append(f"{where}: missing id")
        if rid in seen_ids:
            diags.append(f"{where}: duplicate region id {rid!r}")
        seen_ids.add(rid)
        try:
            rect = Rect.from_json(robj.get("rect", {}))
        except (KeyError, TypeError, ValueError):
            diags.append(f"{where}: rect must provide numeric x0, y0, x1, y1")
            rect = Rect(0.0, 0.0, 0.0, 0.0)
        if not (rect.x0 < rect.x1 and rect.y0 < rect.y1):
            diags.append(f"{where}: degenerate rect (positive area required)")
        elif not (
            bounds.contains(Location(rect.x0, rect.y0))
            and bounds.contains(Location(rect.x1, rect.y1))
        ):
            diags.append(f"{where}: rect lies outside map bounds")
        capacity = int(robj.get("capacity", 1))
        if capacity < 0:
            diags.append(f"{where}: capacity must be >= 0")
        regions.append(
            Region(
                id=rid,
                rect=rect,
                risky=bool(robj.get("risky", False)),
                explore_capacity=capacity,
                terrain=str(robj.get("terrain", DEFAULT_TERRAIN)),
            )
        )

    beacons: list[Beacon] = []
    for i, bobj in enumerate(obj.get("beacons", [])):
        where = f"world.beacons[{i}]"
        try:
            loc = Location(float(bobj["x"]), float(bobj["y"]))
        except (KeyError, TypeError, ValueError):
            diags.append(f"{where}: must provide numeric x, y")
            loc = Location(0.0, 0.0)
        else:
            if not bounds.contains(loc):
                diags.append(f"{where}: location outside map bounds")
        beacons.append(Beacon(id=str(bobj.get("id", f"B{i}")), location=loc, comm_radius=float(bobj.get("commRadius", 50.0))))

    st = obj.get("stochastic", {})
    terrain: dict[str, TerrainClass] = {}
    for name, tobj in st.get("terrain", {}).items():
        where = f"world.stochastic.terrain[{name}]"
        p = float(tobj.get("disable", 0.0))
        slow = float(tobj.get("slowdown", 1.0))
        if not (0.0 <= p <= 1.0):
            diags.append(f"{where}: disable probability out of [0,1]: {p}")
        if slow < 1.0:
            diags.append(f"{where}: slowdown must be >= 1, got {slow}")
        terrain[name] = TerrainClass(disable_prob=p, slowdown=slow)
    terrain.setdefault(DEFAULT_TERRAIN, TerrainClass())

    robj = st.get("rescue", {})
    try:
        rescue = RescueOutcomeProbs(
            success=float(robj.get("success", 0.8)),
            fail=float(robj.get("fail", 0.15)),
            rescuer_disabled=float(robj.get("rescuerDisabled", 0.05)),
        )
    except WorldError as err:
        diags.append(f"world.stochastic.rescue: {err}")
        rescue = RescueOutcomeProbs()

    sobj = st.get("speed", {})
    speed_default = _speed_from_json(sobj.get("default", {}), "world.stochastic.speed.default", diags)
    speed_per_robot = {
        rid: _speed_from_json(m, f"world.stochastic.speed.perRobot[{rid}]", diags)
        for rid, m in sobj.get("perRobot", {}).items()
    }

    event_probs: dict[str, float] = {}
    for name, p in st.get("events", {}).items():
        p = float(p)
        if not (0.0 <= p <= 1.0):
            diags.append(f"world.stochastic.events[{name}]: probability out of [0,1]: {p}")
        event_probs[name] = p

    for r in regions:
        if r.terrain not in terrain:
            diags.append(f"world.regions[{r.id}]: unknown terrain class {r.terrain!r}")

    if diags:
        raise WorldError(diags)
    return WorldMap(
        bounds=bounds,
        regions=tuple(regions),
        beacons=tuple(beacons),
        stochastic=StochasticParams(
            terrain=terrain,
            rescue=rescue,
            speed_default=speed_default,
            speed_per_robot=speed_per_robot,
            event_probs=event_probs,
        ),
    )


def load_world(path: str | Path) -> WorldMap:
    with open(path, "r", encoding="utf-8") as fh:
        return world_from_json(json.load(fh))


def save_world(world: WorldMap, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(world_to_json(world), fh, indent=2, sort_keys=True)
        fh.write("\n")
