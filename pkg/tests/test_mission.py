"""Robot snapshots, events, and the snapshot query functions."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sentinel.mission import (
    UNKNOWN,
    ArgValue,
    Event,
    GlobalSnapshot,
    RobotSnapshot,
    RobotState,
    StateType,
    TaskType,
    TeammateRecord,
    append_event,
    count_events,
    count_exploring_robots,
    count_nearby_robots,
    end_rend,
    is_nav,
    merge_teammates,
    nearby_robot_id,
    state_task,
    to_rend,
)
from sentinel.world import Location


def robot(
    rid: str,
    x: float,
    y: float,
    st_type: StateType = StateType.WAITING,
    args: tuple = (),
    history: tuple = (),
    events: tuple = (),
) -> RobotSnapshot:
    return RobotSnapshot(
        id=rid,
        tick=5,
        state=RobotState(st_type, args),
        location=Location(x, y),
        events=events,
        teammates=(),
        state_history=tuple(RobotState(h, ()) for h in history),
    )


def snap(*robots: RobotSnapshot) -> GlobalSnapshot:
    return GlobalSnapshot(tick=5, robots={r.id: r for r in robots})


def test_state_task_mapping_total():
    for s in StateType:
        task = state_task(s)
        if s is StateType.DISABLED:
            assert task is None
        else:
            assert isinstance(task, TaskType)
    assert state_task(StateType.WAIT_TO_REND) is TaskType.RENDEZVOUS
    assert state_task(StateType.RETURNED) is TaskType.RETURN


def test_nearby_robot_id_picks_nearest():
    g = snap(
        robot("R1", 0, 0),
        robot("R2", 3, 0, StateType.DISABLED),
        robot("R3", 2, 0, StateType.DISABLED),
        robot("R4", 1, 0, StateType.EXPLORING),
    )
    assert nearby_robot_id(g, "R1", StateType.DISABLED, 20) == "R3"
    assert nearby_robot_id(g, "R1", StateType.DISABLED, 1) is None
    assert nearby_robot_id(g, "R1", StateType.RESCUING, 20) is None


def test_nearby_robot_id_tie_breaks_low_id():
    g = snap(
        robot("R1", 0, 0),
        robot("R3", 0, 4, StateType.DISABLED),
        robot("R2", 4, 0, StateType.DISABLED),
    )
    assert nearby_robot_id(g, "R1", StateType.DISABLED, 10) == "R2"


def test_nearby_robot_id_unknown_robot():
    g = snap(robot("R1", 0, 0))
    with pytest.raises(KeyError):
        nearby_robot_id(g, "R9", StateType.DISABLED, 10)


def test_count_nearby_hand_enumerated():
    # four robots around R1: two Disabled in range, one Disabled out of
    # range, one Exploring in range
    g = snap(
        robot("R1", 0, 0),
        robot("R2", 1, 1, StateType.DISABLED),
        robot("R3", -2, 0, StateType.DISABLED),
        robot("R4", 50, 50, StateType.DISABLED),
        robot("R5", 0, 1, StateType.EXPLORING),
    )
    assert count_nearby_robots(g, "R1", StateType.DISABLED, 10) == 2
    assert count_nearby_robots(g, "R1", StateType.DISABLED, 100) == 3
    assert count_nearby_robots(g, "R1", StateType.EXPLORING, 10) == 1
    assert count_nearby_robots(g, "R1", StateType.RESCUING, 10) == 0


def test_count_exploring_is_state_based_not_positional():
    inside_but_navigating = robot("R2", 10, 10, StateType.NAVIGATING)
    exploring_a = robot(
        "R3", 10, 12, StateType.EXPLORING, args=(ArgValue.region("AoI1"),)
    )
    exploring_b = robot(
        "R4", 90, 90, StateType.EXPLORING, args=(ArgValue.region("AoI1"),)
    )
    exploring_other = robot(
        "R5", 11, 11, StateType.EXPLORING, args=(ArgValue.region("AoI2"),)
    )
    g = snap(inside_but_navigating, exploring_a, exploring_b, exploring_other)
    assert count_exploring_robots(g, "AoI1") == 2
    assert count_exploring_robots(g, "AoI2") == 1
    assert count_exploring_robots(g, "AoI9") == 0


def rescue_event(tick: int, x: float, y: float, rescuer: str, target: str, outcome: str):
    return Event(
        "rescue",
        (
            ArgValue.number(tick),
            ArgValue.location(Location(x, y)),
            ArgValue.robot(rescuer),
            ArgValue.robot(target),
            ArgValue.label(outcome),
        ),
    )


def test_count_events_with_arg_constraints():
    events = (
        rescue_event(3, 10, 10, "R1", "R2", "fail"),
        rescue_event(5, 10, 10, "R1", "R2", "success"),
        rescue_event(7, 90, 90, "R1", "R2", "fail"),
        rescue_event(8, 10, 10, "R3", "R2", "fail"),
    )
    r = robot("R1", 0, 0, events=events)
    loc = ArgValue.location(Location(10, 10))
    # location + rescuer + target pinned: two of the four match
    n = count_events(
        r, "rescue", [(2, loc), (3, ArgValue.robot("R1")), (4, ArgValue.robot("R2"))]
    )
    assert n == 2
    assert count_events(r, "rescue", []) == 4
    assert count_events(r, "rescue", [(5, ArgValue.label("fail"))]) == 3
    assert count_events(r, "nope", []) == 0


def test_count_events_unknown_matches_anything():
    events = (rescue_event(3, 10, 10, "R1", "R2", "fail"),)
    r = robot("R1", 0, 0, events=events)
    assert count_events(r, "rescue", [(3, UNKNOWN)]) == 1


def test_count_events_bad_index():
    r = robot("R1", 0, 0, events=(rescue_event(3, 1, 1, "R1", "R2", "fail"),))
    with pytest.raises(ValueError):
        count_events(r, "rescue", [(0, ArgValue.robot("R1"))])
    with pytest.raises(ValueError):
        count_events(r, "rescue", [(6, ArgValue.robot("R1"))])


def test_append_event_dedupes_structurally():
    e = rescue_event(3, 10, 10, "R1", "R2", "fail")
    same = rescue_event(3, 10, 10, "R1", "R2", "fail")
    other = rescue_event(4, 10, 10, "R1", "R2", "fail")
    out = append_event((), e)
    out = append_event(out, same)
    out = append_event(out, other)
    assert len(out) == 2


def test_merge_teammates_newest_wins():
    older = TeammateRecord("R3", 4, RobotState(StateType.EXPLORING, ()), Location(1, 1))
    newer = TeammateRecord("R3", 9, RobotState(StateType.DISABLED, ()), Location(2, 2))
    merged = merge_teammates((older,), (newer,))
    assert merged == (newer,)
    # merging the stale copy back changes nothing
    assert merge_teammates(merged, (older,)) == (newer,)


def test_state_flags():
    trav = robot("R1", 0, 0, StateType.TRAVEL_TO_REND)
    assert to_rend(trav) and is_nav(trav) and not end_rend(trav)

    moved_on = robot(
        "R2", 0, 0, StateType.TRAVEL_TO_EXPL, history=(StateType.WAIT_TO_REND,)
    )
    assert end_rend(moved_on) and is_nav(moved_on) and not to_rend(moved_on)

    rend = robot("R3", 0, 0, StateType.RENDEZVOUSING)
    assert end_rend(rend) and not is_nav(rend)

    still_waiting = robot(
        "R4", 0, 0, StateType.WAIT_TO_REND, history=(StateType.WAIT_TO_REND,)
    )
    assert not end_rend(still_waiting)

    plain = robot("R5", 0, 0, StateType.EXPLORING, history=(StateType.EXPLORING,))
    assert not (to_rend(plain) or end_rend(plain) or is_nav(plain))

    no_history = robot("R6", 0, 0, StateType.EXPLORING)
    assert not end_rend(no_history)


def test_snapshot_json_round_trip():
    r = robot(
        "R1",
        3,
        4,
        StateType.EXPLORING,
        args=(ArgValue.region("AoI1"),),
        history=(StateType.TRAVEL_TO_EXPL,),
        events=(rescue_event(2, 1, 1, "R1", "R2", "success"),),
    )
    r2 = RobotSnapshot.from_json(r.to_json())
    assert r2 == r
    g = snap(r)
    assert GlobalSnapshot.from_json(g.to_json()) == g


def test_argvalue_json_round_trip():
    values = [
        ArgValue.robot("R1"),
        ArgValue.region("AoI1"),
        ArgValue.event("EventA"),
        ArgValue.label("fail"),
        ArgValue.location(Location(1.5, -2.5)),
        ArgValue.window(3, 9),
        ArgValue.number(7.25),
        UNKNOWN,
    ]
    for v in values:
        assert ArgValue.from_json(v.to_json()) == v


@given(st.integers(0, 6), st.integers(0, 6))
def test_property_count_matches_existence(n_match, n_other):
    robots = [robot("R0", 0, 0)]
    for k in range(n_match):
        robots.append(robot(f"R{k+1}", 1 + k, 0, StateType.DISABLED))
    for k in range(n_other):
        robots.append(robot(f"Q{k+1}", 1 + k, 1, StateType.EXPLORING))
    g = GlobalSnapshot(tick=5, robots={r.id: r for r in robots})
    count = count_nearby_robots(g, "R0", StateType.DISABLED, 100)
    found = nearby_robot_id(g, "R0", StateType.DISABLED, 100)
    assert count == n_match
    assert (found is not None) == (n_match > 0)


@given(st.integers(1, 8))
def test_property_count_events_monotone(n):
    base = tuple(
        rescue_event(t, 1, 1, "R1", "R2", "fail") for t in range(n)
    )
    r1 = robot("R1", 0, 0, events=base[:-1])
    r2 = robot("R1", 0, 0, events=base)
    assert count_events(r2, "rescue", []) >= count_events(r1, "rescue", [])
