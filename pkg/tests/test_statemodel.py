"""Task-model construction and state-machine expansion."""

import pytest

from sentinel.instructions import InstructionError, cond_to_text, parse_instruction
from sentinel.mission import StateType, TaskType
from sentinel.statemodel import (
    RESUME,
    StateTransitionModel,
    build_task_model,
    expand_to_state_model,
    validate_model,
)
from sentinel.world import Rect, Region, StochasticParams, WorldMap

CANONICAL = (
    "explore(AoI1); explore(AoI2); "
    "if nearby(Disabled, 20m) then rescue(nearest); "
    "if event(EventA) then { explore(AoI3); explore(AoI4) }"
)


def canonical_models():
    tm = build_task_model(parse_instruction(CANONICAL))
    return tm, expand_to_state_model(tm)


def state_ids(sm: StateTransitionModel, state: StateType) -> list[int]:
    return [n.id for n in sm.nodes if n.state is state]


# --- task model ----------------------------------------------------------------


def test_canonical_task_model_has_five_nodes():
    tm, _ = canonical_models()
    assert [n.task for n in tm.nodes] == [
        TaskType.EXPLORE,
        TaskType.EXPLORE,
        TaskType.RESCUE,
        TaskType.EXPLORE,
        TaskType.EXPLORE,
    ]
    assert [n.args[0].value for n in tm.nodes if n.task is TaskType.EXPLORE] == [
        "AoI1",
        "AoI2",
        "AoI3",
        "AoI4",
    ]
    assert tm.initial == 0
    assert len(tm.edges) == 7


def test_canonical_rule_and_jump_guard_both_preceding_tasks():
    tm, _ = canonical_models()
    rules = [e for e in tm.edges if e.kind == "rule"]
    jumps = [e for e in tm.edges if e.kind == "jump"]
    assert {(e.src, e.dst) for e in rules} == {(0, 2), (1, 2)}
    assert {(e.src, e.dst) for e in jumps} == {(0, 3), (1, 3)}
    resumes = [e for e in tm.edges if e.kind == "resume"]
    assert len(resumes) == 1 and resumes[0].src == 2 and resumes[0].dst == RESUME


def test_edge_priority_rules_then_jumps_then_flow():
    tm, _ = canonical_models()
    kinds = [e.kind for e in tm.out_edges(0)]
    assert kinds == ["rule", "jump", "seq"]


def test_rule_between_tasks_breaks_the_run():
    tm = build_task_model(
        parse_instruction(
            "explore(A); if event(Ea) then rescue(R2); explore(B); "
            "if event(Eb) then rescue(R3)"
        )
    )
    # second rule guards only explore(B), not explore(A)
    second_rule = [e for e in tm.edges if e.kind == "rule" and e.dst == 3]
    assert [e.src for e in second_rule] == [2]


def test_consecutive_rules_share_a_run():
    tm = build_task_model(
        parse_instruction(
            "explore(A); explore(B); "
            "if event(Ea) then rescue(R2); if event(Eb) then rescue(R3)"
        )
    )
    for action in (2, 3):
        srcs = {e.src for e in tm.edges if e.kind == "rule" and e.dst == action}
        assert srcs == {0, 1}


def test_while_loop_wiring():
    tm = build_task_model(
        parse_instruction(
            "navigate(P1); while countEvents(rescue) < 3 "
            "{ explore(AoI1); explore(AoI2) }; return"
        )
    )
    assert len(tm.nodes) == 4
    loops = {(e.src, e.dst) for e in tm.edges if e.kind == "loop"}
    exits = {(e.src, e.dst) for e in tm.edges if e.kind == "loop-exit"}
    assert loops == {(0, 1), (2, 1)}
    assert exits == {(0, 3), (2, 3)}
    # entering the loop is checked before leaving it
    kinds = [e.kind for e in tm.out_edges(0)]
    assert kinds == ["loop", "loop-exit"]


@pytest.mark.parametrize(
    "text,needle",
    [
        ("if event(Ea) then rescue(R2); explore(A)", "no preceding task"),
        ("if event(Ea) then { explore(A) }; explore(B)", "no preceding task"),
        ("while event(Ea) { explore(A) }", "first statement"),
        ("", "no task statements"),
    ],
)
def test_model_construction_rejects(text, needle):
    with pytest.raises(InstructionError, match=needle):
        build_task_model(parse_instruction(text))


# --- expansion -------------------------------------------------------------------


def test_canonical_expansion_states():
    _, sm = canonical_models()
    assert len(sm.nodes) == 11
    assert len(state_ids(sm, StateType.TRAVEL_TO_EXPL)) == 4
    assert len(state_ids(sm, StateType.EXPLORING)) == 4
    assert state_ids(sm, StateType.TRAVEL_TO_RESC) == [4]
    assert state_ids(sm, StateType.RESCUING) == [5]
    assert state_ids(sm, StateType.DISABLED) == [10]
    assert sm.initial == 0
    assert sm.disabled == 10
    assert sm.nodes[sm.initial].state is StateType.TRAVEL_TO_EXPL
    assert sm.nodes[sm.initial].args[0].value == "AoI1"


def test_canonical_rule_edges_host_on_exploring():
    _, sm = canonical_models()
    rules = [e for e in sm.edges if e.kind == "rule"]
    assert {(e.src, e.dst) for e in rules} == {(1, 4), (3, 4)}
    jumps = [e for e in sm.edges if e.kind == "jump"]
    assert {(e.src, e.dst) for e in jumps} == {(1, 6), (3, 6)}


def test_rescue_gets_resolve_and_abort_edges():
    _, sm = canonical_models()
    resolve = [e for e in sm.edges if e.kind == "resolve"]
    abort = [e for e in sm.edges if e.kind == "abort"]
    assert len(resolve) == 1 and resolve[0].src == 5 and resolve[0].dst == RESUME
    assert len(abort) == 1 and abort[0].src == 4 and abort[0].dst == RESUME
    # abort is checked before arrival at the casualty
    kinds = [e.kind for e in sm.out_edges(4)]
    assert kinds.index("abort") < kinds.index("arrive")


def test_disable_edges_cover_all_non_terminal_states():
    _, sm = canonical_models()
    disables = {e.src for e in sm.edges if e.kind == "disable"}
    assert disables == set(range(10))
    revive = [e for e in sm.edges if e.kind == "revive"]
    assert len(revive) == 1 and revive[0].src == 10 and revive[0].dst == RESUME


def test_reachable_set_from_late_thread_excludes_rescue():
    _, sm = canonical_models()
    start = [
        n.id
        for n in sm.nodes
        if n.state is StateType.EXPLORING and n.args and n.args[0].value == "AoI3"
    ][0]
    seen = {start}
    stack = [start]
    while stack:
        for e in sm.out_edges(stack.pop()):
            if e.dst != RESUME and e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    states = {sm.nodes[s].state for s in seen}
    assert len(seen) == 4
    assert StateType.TRAVEL_TO_RESC not in states
    assert StateType.RESCUING not in states
    assert StateType.DISABLED in states


def test_rendezvous_expansion():
    tm = build_task_model(parse_instruction("rendezvous(R2, AoI1, [10, 40]); return"))
    sm = expand_to_state_model(tm)
    trav = state_ids(sm, StateType.TRAVEL_TO_REND)[0]
    wait = state_ids(sm, StateType.WAIT_TO_REND)[0]
    rend = state_ids(sm, StateType.RENDEZVOUSING)[0]
    returning = state_ids(sm, StateType.RETURNING)[0]

    for sid in (trav, wait, rend):
        args = sm.nodes[sid].args
        assert args[0].value == "R2"
        assert args[1].value == "AoI1"
        assert args[2].value == (10, 40)

    meets = {(e.src, e.dst) for e in sm.edges if e.kind == "meet"}
    assert meets == {(trav, rend), (wait, rend)}
    expire = [e for e in sm.edges if e.kind == "expire"]
    assert [(e.src, e.dst) for e in expire] == [(wait, returning)]
    kinds = [e.kind for e in sm.out_edges(wait)]
    assert kinds.index("meet") < kinds.index("expire")
    progress = [e for e in sm.edges if e.kind == "progress"]
    assert [(e.src, e.dst) for e in progress] == [(rend, returning)]


def test_while_loop_expansion_preserves_guards_one_to_one():
    tm = build_task_model(
        parse_instruction(
            "navigate(P1); while countEvents(rescue) < 3 "
            "{ explore(AoI1); explore(AoI2) }; return"
        )
    )
    sm = expand_to_state_model(tm)
    task_guards = sorted(cond_to_text(e.guard) for e in tm.edges if e.guard is not None)
    state_guards = sorted(cond_to_text(e.guard) for e in sm.edges if e.guard is not None)
    assert task_guards == state_guards
    assert len(task_guards) == 4
    nav = state_ids(sm, StateType.NAVIGATING)[0]
    kinds = [e.kind for e in sm.out_edges(nav)]
    assert kinds.index("loop") < kinds.index("loop-exit")


def test_returned_is_terminal():
    tm = build_task_model(parse_instruction("return"))
    sm = expand_to_state_model(tm)
    returned = state_ids(sm, StateType.RETURNED)[0]
    assert sm.out_edges(returned) == ()


# --- validation -------------------------------------------------------------------


def small_world() -> WorldMap:
    regions = tuple(
        Region(rid, Rect(10.0 * i, 0, 10.0 * i + 5, 5))
        for i, rid in enumerate(["AoI1", "AoI2", "AoI3", "AoI4"])
    )
    return WorldMap(
        bounds=Rect(0, 0, 100, 100),
        regions=regions,
        beacons=(),
        stochastic=StochasticParams(),
    )


def test_validate_reports_runtime_binding_and_missing_return():
    _, sm = canonical_models()
    diags = validate_model(sm, small_world(), ("R1", "R2"))
    assert any("bound at run time" in d for d in diags)
    assert any("no reachable return" in d for d in diags)
    assert not any("unknown region" in d for d in diags)


def test_validate_flags_unknown_region_and_robot():
    tm = build_task_model(parse_instruction("explore(Nowhere); rescue(R9); return"))
    sm = expand_to_state_model(tm)
    diags = validate_model(sm, small_world(), ("R1", "R2"))
    assert any("unknown region 'Nowhere'" in d for d in diags)
    assert any("unknown robot 'R9'" in d for d in diags)


def test_validate_flags_identical_sibling_guards():
    tm = build_task_model(
        parse_instruction(
            "explore(AoI1); if event(Ea) then rescue(R2); if event(Ea) then rescue(R1)"
        )
    )
    sm = expand_to_state_model(tm)
    diags = validate_model(sm, small_world(), ("R1", "R2"))
    assert any("can never fire" in d for d in diags)


def test_validate_flags_unreachable_after_jump():
    # the jump abandons the thread, so a task written after it in the block
    # that can only be entered via the abandoned flow is still reachable;
    # an unguarded model where flow simply stops is reported instead
    tm = build_task_model(parse_instruction("explore(AoI1); rescue(R2)"))
    sm = expand_to_state_model(tm)
    diags = validate_model(sm, small_world(), ("R1", "R2"))
    assert any("no continuation" in d for d in diags)


def test_validate_clean_model_is_quiet():
    tm = build_task_model(parse_instruction("explore(AoI1); return"))
    sm = expand_to_state_model(tm)
    assert validate_model(sm, small_world(), ("R1",)) == []
