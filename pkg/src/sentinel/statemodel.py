"""Task transition models and their expansion into guarded state machines.

`build_task_model` turns a parsed instruction into a graph of task nodes:
sequential flow edges fire on task completion, service-rule edges interrupt
and later resume, jump edges abandon the current thread, while-loop edges
cycle. `expand_to_state_model` replaces each task node with its fixed state
sequence and attaches the stochastic disable/revive transitions, yielding
the machine the simulator and the inference engine both consume.

Edge priority within a node is list order: rules, then jumps, then flow.
First true guard wins at every tick.
"""

from __future__ import annotations

from dataclasses import dataclass

from .instructions import (
    CAnd,
    CNot,
    Cond,
    Instruction,
    InstructionError,
    JumpRule,
    ServiceRule,
    Statement,
    TaskCall,
    WhileLoop,
    collect_calls,
    cond_to_text,
)
from .mission import ArgValue, StateType, TaskType
from .world import WorldMap

# Order in which a node's outgoing edges are evaluated: interrupts beat
# thread jumps beat ordinary flow.
_PRIORITY = {"rule": 0, "jump": 1, "seq": 2, "loop": 2, "loop-exit": 2, "resume": 2}

RESUME = -1  # edge destination: whatever node the resume register holds


@dataclass(frozen=True)
class TaskNode:
    id: int
    task: TaskType
    args: tuple[ArgValue, ...]


@dataclass(frozen=True)
class TaskEdge:
    src: int
    dst: int  # RESUME for service-rule return edges
    guard: Cond | None  # None means "on completion of src"
    kind: str  # rule | jump | seq | loop | loop-exit | resume


@dataclass(frozen=True)
class TaskTransitionModel:
    nodes: tuple[TaskNode, ...]
    edges: tuple[TaskEdge, ...]
    initial: int

    def out_edges(self, node_id: int) -> tuple[TaskEdge, ...]:
        return tuple(e for e in self.edges if e.src == node_id)


@dataclass(frozen=True)
class StateNode:
    id: int
    state: StateType
    args: tuple[ArgValue, ...]
    task_node: int  # -1 for the shared Disabled node


@dataclass(frozen=True)
class StateEdge:
    src: int
    dst: int  # RESUME for resume-register destinations
    guard: Cond | None
    kind: str  # arrive | progress | meet | expire | resolve | abort |
    #            rule | jump | seq | loop | loop-exit | disable | revive


@dataclass(frozen=True)
class StateTransitionModel:
    nodes: tuple[StateNode, ...]
    edges: tuple[StateEdge, ...]
    initial: int
    disabled: int  # id of the shared Disabled node

    def out_edges(self, node_id: int) -> tuple[StateEdge, ...]:
        return tuple(e for e in self.edges if e.src == node_id)

    def node(self, node_id: int) -> StateNode:
        return self.nodes[node_id]


# --- instruction -> task model ----------------------------------------------


class _ModelBuilder:
    def __init__(self) -> None:
        self.nodes: list[TaskNode] = []
        self.edges: list[tuple[int, TaskEdge]] = []  # (creation order, edge)
        self._edge_seq = 0

    def add_node(self, task: TaskType, args: tuple[ArgValue, ...]) -> int:
        nid = len(self.nodes)
        self.nodes.append(TaskNode(nid, task, args))
        return nid

    def add_edge(self, src: int, dst: int, guard: Cond | None, kind: str) -> None:
        self.edges.append((self._edge_seq, TaskEdge(src, dst, guard, kind)))
        self._edge_seq += 1

    def build(self, ins: Instruction) -> TaskTransitionModel:
        entry, _exits = self.walk_block(ins.statements, [], top=True)
        if entry is None:
            raise InstructionError(["instruction-set contains no task statements"])
        order = sorted(
            range(len(self.edges)),
            key=lambda i: (
                self.edges[i][1].src,
                _PRIORITY[self.edges[i][1].kind],
                self.edges[i][0],
            ),
        )
        return TaskTransitionModel(
            nodes=tuple(self.nodes),
            edges=tuple(self.edges[i][1] for i in order),
            initial=entry,
        )

    def walk_block(
        self,
        stmts: tuple[Statement, ...],
        pending: list[tuple[int, Cond | None]],
        *,
        top: bool = False,
    ) -> tuple[int | None, list[tuple[int, Cond | None]]]:
        """Wire a statement block; returns (entry node, dangling completion exits).

        `pending` carries (node, guard) completion exits waiting for the next
        flow node. A service rule guards the run of task statements written
        immediately before it; consecutive rules share that run.
        """
        entry: int | None = None
        run: list[int] = []
        prev_was_task = False
        for s in stmts:
            if isinstance(s, TaskCall):
                nid = self.add_node(s.task, s.args)
                for src, guard in pending:
                    kind = "seq" if guard is None else "loop-exit"
                    self.add_edge(src, nid, guard, kind)
                pending = [(nid, None)]
                if entry is None:
                    entry = nid
                run = run + [nid] if prev_was_task else [nid]
                prev_was_task = True
            elif isinstance(s, ServiceRule):
                if not run:
                    raise InstructionError(
                        [f"{s.line}:{s.col}: service rule has no preceding task to guard"]
                    )
                action = self.add_node(s.action.task, s.action.args)
                for host in run:
                    self.add_edge(host, action, s.cond, "rule")
                self.add_edge(action, RESUME, None, "resume")
                prev_was_task = False
            elif isinstance(s, JumpRule):
                if not run:
                    raise InstructionError(
                        [f"{s.line}:{s.col}: jump has no preceding task to guard"]
                    )
                sub_entry, _sub_exits = self.walk_block(s.block, [])
                if sub_entry is None:
                    raise InstructionError(
                        [f"{s.line}:{s.col}: jump block contains no task statements"]
                    )
                for host in run:
                    self.add_edge(host, sub_entry, s.cond, "jump")
                # one-way: block exits dangle, the thread does not come back
                prev_was_task = False
            else:
                assert isinstance(s, WhileLoop)
                if not pending:
                    raise InstructionError(
                        [f"{s.line}:{s.col}: a loop cannot be the first statement"]
                    )
                sub_entry, sub_exits = self.walk_block(s.block, [])
                if sub_entry is None:
                    raise InstructionError(
                        [f"{s.line}:{s.col}: loop body contains no task statements"]
                    )
                for src, g in pending:
                    self.add_edge(src, sub_entry, _conj(g, s.cond), "loop")
                for src, g in sub_exits:
                    self.add_edge(src, sub_entry, _conj(g, s.cond), "loop")
                pending = [(src, _conj(g, CNot(s.cond))) for src, g in pending] + [
                    (src, _conj(g, CNot(s.cond))) for src, g in sub_exits
                ]
                run = []
                prev_was_task = False
        return entry, pending


def _conj(g: Cond | None, c: Cond) -> Cond:
    return c if g is None else CAnd(g, c)


def build_task_model(ins: Instruction) -> TaskTransitionModel:
    return _ModelBuilder().build(ins)


# --- task model -> state model ------------------------------------------------

# Fixed expansion per task, in travel-to-completion order.
_EXPANSION: dict[TaskType, tuple[StateType, ...]] = {
    TaskType.EXPLORE: (StateType.TRAVEL_TO_EXPL, StateType.EXPLORING),
    TaskType.NAVIGATE: (StateType.NAVIGATING,),
    TaskType.RESCUE: (StateType.TRAVEL_TO_RESC, StateType.RESCUING),
    TaskType.RENDEZVOUS: (
        StateType.TRAVEL_TO_REND,
        StateType.WAIT_TO_REND,
        StateType.RENDEZVOUSING,
    ),
    TaskType.RELAY: (StateType.TRAVEL_TO_REL, StateType.RELAYING),
    TaskType.RETURN: (StateType.RETURNING, StateType.RETURNED),
    TaskType.WAIT: (StateType.WAITING,),
}

# State that hosts interrupting rule/jump guards for each task.
_ACTIVE_STATE: dict[TaskType, StateType] = {
    TaskType.EXPLORE: StateType.EXPLORING,
    TaskType.NAVIGATE: StateType.NAVIGATING,
    TaskType.RESCUE: StateType.TRAVEL_TO_RESC,
    TaskType.RENDEZVOUS: StateType.WAIT_TO_REND,
    TaskType.RELAY: StateType.TRAVEL_TO_REL,
    TaskType.RETURN: StateType.RETURNING,
    TaskType.WAIT: StateType.WAITING,
}

# Completion edge kind leaving each task's final state.
_COMPLETION_KIND: dict[TaskType, str] = {
    TaskType.EXPLORE: "progress",
    TaskType.NAVIGATE: "arrive",
    TaskType.RESCUE: "resolve",
    TaskType.RENDEZVOUS: "progress",
    TaskType.RELAY: "progress",
    TaskType.RETURN: "progress",  # Returned is terminal; edge never fires
    TaskType.WAIT: "progress",
}


def expand_to_state_model(tm: TaskTransitionModel) -> StateTransitionModel:
    """Expand task nodes into state chains and attach stochastic transitions."""
    nodes: list[StateNode] = []
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    active: dict[int, int] = {}
    expire_src: dict[int, int] = {}

    for tn in tm.nodes:
        chain = _EXPANSION[tn.task]
        ids = []
        for st in chain:
            sid = len(nodes)
            nodes.append(StateNode(sid, st, tn.args, tn.id))
            ids.append(sid)
        first[tn.id] = ids[0]
        last[tn.id] = ids[-1]
        active[tn.id] = ids[chain.index(_ACTIVE_STATE[tn.task])]
        if tn.task is TaskType.RENDEZVOUS:
            expire_src[tn.id] = ids[1]

    edges: list[StateEdge] = []

    # intra-task progression
    for tn in tm.nodes:
        ids = [n.id for n in nodes if n.task_node == tn.id]
        if tn.task is TaskType.EXPLORE:
            edges.append(StateEdge(ids[0], ids[1], None, "arrive"))
        elif tn.task is TaskType.RESCUE:
            edges.append(StateEdge(ids[0], ids[1], None, "arrive"))
        elif tn.task is TaskType.RENDEZVOUS:
            trav, wait, rend = ids
            edges.append(StateEdge(trav, rend, None, "meet"))
            edges.append(StateEdge(trav, wait, None, "arrive"))
            edges.append(StateEdge(wait, rend, None, "meet"))
        elif tn.task is TaskType.RELAY:
            edges.append(StateEdge(ids[0], ids[1], None, "arrive"))
        elif tn.task is TaskType.RETURN:
            edges.append(StateEdge(ids[0], ids[1], None, "arrive"))

    # task-level edges
    for te in tm.edges:
        if te.kind == "rule":
            edges.append(StateEdge(active[te.src], first[te.dst], te.guard, "rule"))
        elif te.kind == "jump":
            edges.append(StateEdge(active[te.src], first[te.dst], te.guard, "jump"))
        elif te.kind == "resume":
            task = tm.nodes[te.src].task
            edges.append(
                StateEdge(last[te.src], RESUME, te.guard, _COMPLETION_KIND[task])
            )
            if task is TaskType.RESCUE:
                edges.append(StateEdge(first[te.src], RESUME, None, "abort"))
        else:  # seq / loop / loop-exit
            task = tm.nodes[te.src].task
            kind = _COMPLETION_KIND[task] if te.guard is None else te.kind
            edges.append(StateEdge(last[te.src], first[te.dst], te.guard, kind))
            if task is TaskType.RESCUE:
                edges.append(StateEdge(first[te.src], first[te.dst], None, "abort"))
            if task is TaskType.RENDEZVOUS and te.guard is None:
                edges.append(StateEdge(expire_src[te.src], first[te.dst], None, "expire"))

    # stochastic disable, shared Disabled node, rescue-revival resume
    disabled_id = len(nodes)
    nodes.append(StateNode(disabled_id, StateType.DISABLED, (), -1))
    for n in nodes[:-1]:
        if n.state is not StateType.RETURNED:
            edges.append(StateEdge(n.id, disabled_id, None, "disable"))
    edges.append(StateEdge(disabled_id, RESUME, None, "revive"))

    order = sorted(
        range(len(edges)),
        key=lambda i: (edges[i].src, _STATE_PRIORITY.get(edges[i].kind, 5), i),
    )
    return StateTransitionModel(
        nodes=tuple(nodes),
        edges=tuple(edges[i] for i in order),
        initial=first[tm.initial],
        disabled=disabled_id,
    )


# Rules interrupt anything; meet preempts both plain arrival and expiry;
# disable/revive are kernel built-ins and sort last for readability.
_STATE_PRIORITY = {
    "rule": 0,
    "jump": 1,
    "meet": 2,
    "abort": 2,
    "arrive": 3,
    "resolve": 3,
    "progress": 3,
    "expire": 4,
    "seq": 3,
    "loop": 3,
    "loop-exit": 4,
    "disable": 6,
    "revive": 6,
}


# --- validation ----------------------------------------------------------------


def validate_model(
    sm: StateTransitionModel,
    world: WorldMap | None = None,
    robot_ids: tuple[str, ...] = (),
) -> list[str]:
    """Static diagnostics; never raises. Empty list means nothing to report."""
    diags: list[str] = []
    if not sm.nodes:
        return ["model has no states"]

    # reachability over guard-stripped edges (revive counts; it can only
    # reach already-reachable nodes, but keeps the walk honest)
    seen = {sm.initial}
    stack = [sm.initial]
    adj: dict[int, list[int]] = {}
    for e in sm.edges:
        adj.setdefault(e.src, []).append(e.dst)
    while stack:
        cur = stack.pop()
        for dst in adj.get(cur, ()):
            if dst != RESUME and dst not in seen:
                seen.add(dst)
                stack.append(dst)
    unreachable_tasks = sorted(
        {sm.nodes[n].task_node for n in range(len(sm.nodes)) if n not in seen}
        - {-1}
    )
    for t in unreachable_tasks:
        diags.append(f"task node {t} is unreachable from the initial state")

    region_ids = {r.id for r in world.regions} if world is not None else None
    known_robots = set(robot_ids)

    for n in sm.nodes:
        for a in n.args:
            if a.is_unknown():
                diags.append(
                    f"state {n.id} ({n.state.value}): argument bound at run time"
                )
            elif region_ids is not None and a.kind == "region" and a.value not in region_ids:
                diags.append(f"state {n.id} ({n.state.value}): unknown region {a.value!r}")
            elif robot_ids and a.kind == "robot" and a.value not in known_robots:
                diags.append(f"state {n.id} ({n.state.value}): unknown robot {a.value!r}")

    for e in sm.edges:
        if e.guard is None:
            continue
        for call in collect_calls(e.guard):
            for a in call.args:
                if region_ids is not None and a.kind == "region" and a.value not in region_ids:
                    diags.append(f"guard on edge {e.src}->{e.dst}: unknown region {a.value!r}")
                if robot_ids and a.kind == "robot" and a.value not in known_robots:
                    diags.append(f"guard on edge {e.src}->{e.dst}: unknown robot {a.value!r}")

    # syntactically identical guards on sibling edges: classic oscillation risk
    by_src: dict[int, list[StateEdge]] = {}
    for e in sm.edges:
        if e.guard is not None:
            by_src.setdefault(e.src, []).append(e)
    for src, group in by_src.items():
        texts = [cond_to_text(e.guard) for e in group]
        for i in range(len(texts)):
            for j in range(i + 1, len(texts)):
                if texts[i] == texts[j]:
                    diags.append(
                        f"state {src}: two outgoing edges share guard "
                        f"{texts[i]!r}; the later one can never fire"
                    )

    resolved = {e.src for e in sm.edges if e.kind == "resolve"}
    for n in sm.nodes:
        if n.state is StateType.RESCUING and n.id not in resolved:
            diags.append(
                f"state {n.id}: rescue outcome has no continuation; "
                "the robot will hold there"
            )

    terminal_ok = any(
        n.state in (StateType.RETURNED,) and n.id in seen for n in sm.nodes
    )
    if not terminal_ok:
        diags.append("no reachable return: the robot can only stop by being disabled")
    return diags
