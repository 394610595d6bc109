"""Core mission vocabulary: tasks, robot states, events, and snapshots.

Robots execute instruction sets that expand into state machines over the
state taxonomy below. A robot's externally visible status at a tick is a
RobotSnapshot; the fleet's joint status is a GlobalSnapshot. The supporting
functions at the bottom are the building blocks used by instruction guards,
temporal-logic propositions, and the inference engine; they all read a
consistent snapshot view.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable

from .world import Location, Region, WorldMap, distance

HISTORY_CAP = 32


class TaskType(enum.Enum):
    EXPLORE = "explore"
    NAVIGATE = "navigate"
    RESCUE = "rescue"
    RENDEZVOUS = "rendezvous"
    RELAY = "relay"
    RETURN = "return"
    WAIT = "wait"


class StateType(enum.Enum):
    EXPLORING = "Exploring"
    NAVIGATING = "Navigating"
    TRAVEL_TO_EXPL = "TravelToExpl"
    TRAVEL_TO_RESC = "TravelToResc"
    RESCUING = "Rescuing"
    TRAVEL_TO_REND = "TravelToRend"
    WAIT_TO_REND = "WaitToRend"
    RENDEZVOUSING = "Rendezvousing"
    TRAVEL_TO_REL = "TravelToRel"
    RELAYING = "Relaying"
    RETURNING = "Returning"
    WAITING = "Waiting"
    RETURNED = "Returned"
    DISABLED = "Disabled"


# States that terminate a robot's participation in the mission.
TERMINAL_STATES = frozenset({StateType.RETURNED, StateType.DISABLED})

# States that count as "navigating" for the IsNav flag: every travel state
# plus point-to-point navigation.
NAV_STATES = frozenset(
    {
        StateType.NAVIGATING,
        StateType.TRAVEL_TO_EXPL,
        StateType.TRAVEL_TO_RESC,
        StateType.TRAVEL_TO_REL,
        StateType.TRAVEL_TO_REND,
    }
)

# Task each state type belongs to (Disabled belongs to none).
STATE_TASK: dict[StateType, TaskType | None] = {
    StateType.EXPLORING: TaskType.EXPLORE,
    StateType.TRAVEL_TO_EXPL: TaskType.EXPLORE,
    StateType.NAVIGATING: TaskType.NAVIGATE,
    StateType.TRAVEL_TO_RESC: TaskType.RESCUE,
    StateType.RESCUING: TaskType.RESCUE,
    StateType.TRAVEL_TO_REND: TaskType.RENDEZVOUS,
    StateType.WAIT_TO_REND: TaskType.RENDEZVOUS,
    StateType.RENDEZVOUSING: TaskType.RENDEZVOUS,
    StateType.TRAVEL_TO_REL: TaskType.RELAY,
    StateType.RELAYING: TaskType.RELAY,
    StateType.RETURNING: TaskType.RETURN,
    StateType.RETURNED: TaskType.RETURN,
    StateType.WAITING: TaskType.WAIT,
    StateType.DISABLED: None,
}

RESCUE_STATES = frozenset({StateType.TRAVEL_TO_RESC, StateType.RESCUING})
RELAY_STATES = frozenset({StateType.TRAVEL_TO_REL, StateType.RELAYING})


def state_task(state_type: StateType) -> TaskType | None:
    return STATE_TASK[state_type]


@dataclass(frozen=True)
class ArgValue:
    """Tagged argument of a state or event.

    kind is one of: robot, region, event, label, location, window, number,
    payload, unknown. Unknown marks arguments that are bound only at run
    time (a rescue target discovered by proximity); analyses must treat it
    as "could be anything".
    """

    kind: str
    value: Any = None

    @staticmethod
    def robot(robot_id: str) -> "ArgValue":
        return ArgValue("robot", robot_id)

    @staticmethod
    def region(region_id: str) -> "ArgValue":
        return ArgValue("region", region_id)

    @staticmethod
    def event(event_type: str) -> "ArgValue":
        return ArgValue("event", event_type)

    @staticmethod
    def label(text: str) -> "ArgValue":
        return ArgValue("label", text)

    @staticmethod
    def location(loc: Location) -> "ArgValue":
        return ArgValue("location", loc)

    @staticmethod
    def window(start: int, end: int) -> "ArgValue":
        return ArgValue("window", (int(start), int(end)))

    @staticmethod
    def number(x: float) -> "ArgValue":
        return ArgValue("number", float(x))

    @staticmethod
    def payload(key: str) -> "ArgValue":
        return ArgValue("payload", key)

    @staticmethod
    def unknown() -> "ArgValue":
        return ArgValue("unknown", None)

    def is_unknown(self) -> bool:
        return self.kind == "unknown"

    def to_json(self) -> dict[str, Any]:
        if self.kind == "location":
            return {"kind": "location", "x": self.value.x, "y": self.value.y}
        if self.kind == "window":
            return {"kind": "window", "start": self.value[0], "end": self.value[1]}
        if self.kind == "unknown":
            return {"kind": "unknown"}
        return {"kind": self.kind, "value": self.value}

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "ArgValue":
        kind = obj["kind"]
        if kind == "location":
            return ArgValue.location(Location(float(obj["x"]), float(obj["y"])))
        if kind == "window":
            return ArgValue.window(int(obj["start"]), int(obj["end"]))
        if kind == "unknown":
            return ArgValue.unknown()
        if kind == "number":
            return ArgValue.number(obj["value"])
        return ArgValue(kind, obj["value"])


UNKNOWN = ArgValue.unknown()


@dataclass(frozen=True)
class RobotState:
    type: StateType
    args: tuple[ArgValue, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {"type": self.type.value, "args": [a.to_json() for a in self.args]}

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "RobotState":
        return RobotState(
            StateType(obj["type"]),
            tuple(ArgValue.from_json(a) for a in obj.get("args", [])),
        )


@dataclass(frozen=True)
class Event:
    """An observed occurrence, identified structurally by type plus args.

    Argument layout by type (1-indexed, as used by count_events):
      rescue:         1=tick, 2=location, 3=rescuer, 4=rescued, 5=outcome label
      robot-disabled: 1=tick, 2=location, 3=robot
      robot-observed: 1=tick, 2=location, 3=observer, 4=observed, 5=state label
      environmental:  1=tick (type is the event's own name)
    """

    type: str
    args: tuple[ArgValue, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {"type": self.type, "args": [a.to_json() for a in self.args]}

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "Event":
        return Event(obj["type"], tuple(ArgValue.from_json(a) for a in obj.get("args", [])))


@dataclass(frozen=True)
class TeammateRecord:
    robot_id: str
    as_of: int
    state: RobotState
    location: Location

    def to_json(self) -> dict[str, Any]:
        return {
            "robotId": self.robot_id,
            "asOf": self.as_of,
            "state": self.state.to_json(),
            "location": self.location.to_json(),
        }

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "TeammateRecord":
        return TeammateRecord(
            obj["robotId"],
            int(obj["asOf"]),
            RobotState.from_json(obj["state"]),
            Location.from_json(obj["location"]),
        )


@dataclass(frozen=True)
class RobotSnapshot:
    id: str
    tick: int
    state: RobotState
    location: Location
    prev_state: RobotState | None = None
    events: tuple[Event, ...] = ()
    teammates: tuple[TeammateRecord, ...] = ()
    state_history: tuple[RobotState, ...] = ()  # index 0 = state one tick ago
    max_speed: float = 1.0
    model_ref: str | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "tick": self.tick,
            "state": self.state.to_json(),
            "location": self.location.to_json(),
            "events": [e.to_json() for e in self.events],
            "teammates": [t.to_json() for t in self.teammates],
            "stateHistory": [s.to_json() for s in self.state_history],
            "maxSpeed": self.max_speed,
        }
        if self.prev_state is not None:
            out["prevState"] = self.prev_state.to_json()
        if self.model_ref is not None:
            out["modelRef"] = self.model_ref
        return out

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "RobotSnapshot":
        return RobotSnapshot(
            id=obj["id"],
            tick=int(obj["tick"]),
            state=RobotState.from_json(obj["state"]),
            location=Location.from_json(obj["location"]),
            prev_state=RobotState.from_json(obj["prevState"]) if "prevState" in obj else None,
            events=tuple(Event.from_json(e) for e in obj.get("events", [])),
            teammates=tuple(TeammateRecord.from_json(t) for t in obj.get("teammates", [])),
            state_history=tuple(RobotState.from_json(s) for s in obj.get("stateHistory", []))[:HISTORY_CAP],
            max_speed=float(obj.get("maxSpeed", 1.0)),
            model_ref=obj.get("modelRef"),
        )


@dataclass(frozen=True)
class GlobalSnapshot:
    tick: int
    robots: dict[str, RobotSnapshot] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {"tick": self.tick, "robots": {rid: r.to_json() for rid, r in sorted(self.robots.items())}}

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "GlobalSnapshot":
        return GlobalSnapshot(
            int(obj["tick"]),
            {rid: RobotSnapshot.from_json(r) for rid, r in obj["robots"].items()},
        )


def append_event(events: tuple[Event, ...], ev: Event) -> tuple[Event, ...]:
    """Add an event with structural dedupe: re-ingesting a known event is a no-op."""
    if ev in events:
        return events
    return events + (ev,)


def merge_teammates(
    ours: tuple[TeammateRecord, ...], theirs: Iterable[TeammateRecord]
) -> tuple[TeammateRecord, ...]:
    """Elementwise newest-wins merge of teammate tables (by as_of tick)."""
    best: dict[str, TeammateRecord] = {t.robot_id: t for t in ours}
    for rec in theirs:
        cur = best.get(rec.robot_id)
        if cur is None or rec.as_of > cur.as_of:
            best[rec.robot_id] = rec
    return tuple(best[rid] for rid in sorted(best))


# --- Supporting functions over snapshots -----------------------------------


def nearby_robot_id(
    snap: GlobalSnapshot, robot_id: str, state_type: StateType, max_dist: float
) -> str | None:
    """Nearest other robot currently in state_type within max_dist; ties break to lowest id."""
    me = snap.robots[robot_id]
    best: tuple[float, str] | None = None
    for rid in sorted(snap.robots):
        if rid == robot_id:
            continue
        other = snap.robots[rid]
        if other.state.type is not state_type:
            continue
        d = distance(me.location, other.location)
        if d <= max_dist and (best is None or d < best[0]):
            best = (d, rid)
    return best[1] if best else None


def count_nearby_robots(
    snap: GlobalSnapshot, robot_id: str, state_type: StateType, max_dist: float
) -> int:
    me = snap.robots[robot_id]
    return sum(
        1
        for rid, other in snap.robots.items()
        if rid != robot_id
        and other.state.type is state_type
        and distance(me.location, other.location) <= max_dist
    )


def count_exploring_robots(snap: GlobalSnapshot, region_id: str) -> int:
    """Robots whose state says they are exploring the region.

    Deliberately argument-based rather than physical containment: a robot
    passing through the region while navigating elsewhere does not count.
    """
    n = 0
    for r in snap.robots.values():
        if r.state.type is StateType.EXPLORING and r.state.args:
            a = r.state.args[0]
            if a.kind == "region" and a.value == region_id:
                n += 1
    return n


def _arg_matches(actual: ArgValue, wanted: ArgValue, world: WorldMap | None) -> bool:
    if wanted.is_unknown() or actual.is_unknown():
        return True
    if wanted.kind == "region" and actual.kind == "location":
        if world is None:
            return False
        region = world.region_by_id(wanted.value)
        return region is not None and region.rect.contains(actual.value)
    if wanted.kind == "location" and actual.kind == "location":
        from .world import POINT_REACH_EPS, within

        return within(actual.value, wanted.value, POINT_REACH_EPS)
    return actual == wanted


def count_events(
    robot: RobotSnapshot,
    event_type: str,
    constraints: Iterable[tuple[int, ArgValue]] = (),
    world: WorldMap | None = None,
) -> int:
    """Count events of event_type in the robot's list matching all (argIndex, value) constraints.

    Arg indexes are 1-based. A region-valued constraint matches a location
    argument falling inside that region (world required); everything else
    matches structurally. Unknown on either side matches anything.
    """
    cons = list(constraints)
    n = 0
    for ev in robot.events:
        if ev.type != event_type:
            continue
        ok = True
        for idx, wanted in cons:
            if idx < 1 or idx > len(ev.args):
                raise ValueError(
                    f"event arg index {idx} out of range for {event_type!r} "
                    f"(arity {len(ev.args)})"
                )
            if not _arg_matches(ev.args[idx - 1], wanted, world):
                ok = False
                break
        if ok:
            n += 1
    return n


def to_rend(robot: RobotSnapshot) -> bool:
    return robot.state.type is StateType.TRAVEL_TO_REND


def end_rend(robot: RobotSnapshot) -> bool:
    """True right as a rendezvous concludes: just left the waiting state, or meeting now."""
    prev = robot.state_history[0] if robot.state_history else None
    left_wait = prev is not None and prev.type is StateType.WAIT_TO_REND and robot.state.type is not StateType.WAIT_TO_REND
    return left_wait or robot.state.type is StateType.RENDEZVOUSING


def is_nav(robot: RobotSnapshot) -> bool:
    return robot.state.type in NAV_STATES


def region_of(world: WorldMap, robot: RobotSnapshot) -> Region | None:
    return world.region_containing(robot.location)
