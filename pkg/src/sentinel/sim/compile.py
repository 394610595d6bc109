"""Compile world, state models, and initial beliefs into flat kernel arrays.

Every robot's state machine is flattened into one global node table (state
code, movement target, per-node parameters) with CSR edge lists whose order
IS the guard priority. Guard conditions become small RPN programs over a
float stack; the kernel interprets them against the pre-step snapshot.
Relay payload instruction-sets are compiled here too, recursively, so a
model swap at run time is just a jump to another initial node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..instructions import CAnd, CCall, CNot, COr, Cond, parse_instruction
from ..mission import ArgValue, Event, RobotSnapshot, StateType
from ..statemodel import (
    RESUME,
    StateTransitionModel,
    build_task_model,
    expand_to_state_model,
)
from ..world import DEFAULT_TERRAIN, POINT_REACH_EPS, Location, WorldMap, travel_duration

STATE_CODE: dict[StateType, int] = {s: i for i, s in enumerate(StateType)}
CODE_STATE: tuple[StateType, ...] = tuple(StateType)

# Event type codes: fixed built-ins, then environmental types in world order.
EV_RESCUE = 0
EV_DISABLED = 1
EV_OBSERVED = 2
EV_ENV0 = 3
BUILTIN_EVENT_TYPES = ("rescue", "robot-disabled", "robot-observed")

# Rescue outcome codes (column 6 of rescue event rows).
OUT_SUCCESS = 0
OUT_FAIL = 1
OUT_RESCUER_DISABLED = 2
OUT_NOOP = 3  # lost a conflict or target already safe; no event emitted
OUTCOME_CODE = {"success": OUT_SUCCESS, "fail": OUT_FAIL, "rescuerDisabled": OUT_RESCUER_DISABLED}
OUTCOME_NAME = {v: k for k, v in OUTCOME_CODE.items()}

# Edge kind codes, mirroring statemodel kind strings.
EK_RULE = 0
EK_JUMP = 1
EK_LOOP = 2
EK_LOOP_EXIT = 3
EK_PROGRESS = 4
EK_ARRIVE = 5
EK_MEET = 6
EK_EXPIRE = 7
EK_RESOLVE = 8
EK_ABORT = 9
EK_DISABLE = 10
EK_REVIVE = 11
_EDGE_KIND = {
    "rule": EK_RULE,
    "jump": EK_JUMP,
    "loop": EK_LOOP,
    "loop-exit": EK_LOOP_EXIT,
    "progress": EK_PROGRESS,
    "seq": EK_PROGRESS,
    "arrive": EK_ARRIVE,
    "meet": EK_MEET,
    "expire": EK_EXPIRE,
    "resolve": EK_RESOLVE,
    "abort": EK_ABORT,
    "disable": EK_DISABLE,
    "revive": EK_REVIVE,
}

# Movement target kinds.
TK_NONE = 0
TK_POINT = 1
TK_REGION = 2
TK_ROBOT = 3
TK_BASE = 4

# Dynamic rescue binding sentinel for node_trobot.
UNKNOWN_ROBOT = -2

# Guard program opcodes (column 0 of program rows).
OP_CONST = 0
OP_NOT = 1
OP_AND = 2
OP_OR = 3
OP_CMP = 4
OP_NEARBY = 5
OP_COUNT_NEARBY = 6
OP_COUNT_EXPLORING = 7
OP_COUNT_EVENTS = 8
OP_EVENT = 9
OP_TRAVEL_DUR = 10
OP_MIN_TRAVEL = 11
OP_IS_RISKY = 12
OP_IN_REGION = 13
OP_TO_REND = 14
OP_END_REND = 15
OP_IS_NAV = 16
OP_TICK = 17
OP_CONSTRAINT = 18  # data row following OP_COUNT_EVENTS

CMP_CODE = {"=": 0, "!=": 1, "<": 2, "<=": 3, ">": 4, ">=": 5}

# countEvents constraint value kinds.
CK_NUMBER = 0
CK_ROBOT = 1
CK_REGION = 2
CK_LOCATION = 3
CK_CODE = 4  # outcome or state code, matched against column 6

EVENT_LOG_CAP = 256
PROG_WIDTH = 6


class CompileError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass
class CompiledMission:
    """Flat arena consumed by the tick kernel plus object-layer lookups."""

    world: WorldMap
    base: Location
    start_tick: int
    explore_rate: float
    observe_radius: float
    rescue_range: float
    relay_range: float
    reach_eps: float

    robot_ids: list[str]
    region_ids: list[str]
    event_types: list[str]  # environmental names, code EV_ENV0 + index
    models: list[StateTransitionModel]
    model_keys: list[str]
    node_offset: list[int]  # model index -> first global node id
    node_states: list[StateType]  # per global node
    node_args: list[tuple[ArgValue, ...]]  # per global node

    # world arrays
    reg_rect: np.ndarray  # (RG, 4) f8
    reg_risky: np.ndarray  # (RG,) u1
    reg_terrain: np.ndarray  # (RG,) i4
    reg_area: np.ndarray  # (RG,) f8
    reg_capacity: np.ndarray  # (RG,) i4
    ter_disable: np.ndarray  # (TC,) f8
    ter_slow: np.ndarray  # (TC,) f8
    bounds: np.ndarray  # (4,) f8
    env_prob: np.ndarray  # (ET,) f8
    rescue_probs: np.ndarray  # (3,) f8
    base_xy: np.ndarray  # (2,) f8

    # model arrays
    node_state: np.ndarray  # (N,) i2
    node_model: np.ndarray  # (N,) i4
    node_tkind: np.ndarray  # (N,) i1
    node_tx: np.ndarray  # (N,) f8
    node_ty: np.ndarray  # (N,) f8
    node_tregion: np.ndarray  # (N,) i4
    node_trobot: np.ndarray  # (N,) i4
    node_wlo: np.ndarray  # (N,) i8
    node_whi: np.ndarray  # (N,) i8
    node_wait: np.ndarray  # (N,) f8
    node_payload: np.ndarray  # (N,) i4
    model_initial: np.ndarray  # (K,) i4 global ids
    model_disabled: np.ndarray  # (K,) i4

    edge_start: np.ndarray  # (N+1,) i4
    edge_dst: np.ndarray  # (M,) i4, RESUME -> -1
    edge_kind: np.ndarray  # (M,) i1
    edge_pstart: np.ndarray  # (M,) i4
    edge_plen: np.ndarray  # (M,) i4
    prog: np.ndarray  # (P, 6) f8
    td_ticks: np.ndarray  # (R, S_td) f8 travel-duration call sites
    mt_geom: np.ndarray  # (S_mt, 5) f8 min-travel geometry sites

    # robot arrays
    speed_nom: np.ndarray  # (R,) f8
    noise_lo: np.ndarray  # (R,) f8
    noise_hi: np.ndarray  # (R,) f8
    max_speed: np.ndarray  # (R,) f8
    init_node: np.ndarray  # (R,) i4
    init_model: np.ndarray  # (R,) i4
    init_revive: np.ndarray  # (R,) i4
    init_x: np.ndarray  # (R,) f8
    init_y: np.ndarray  # (R,) f8
    update_tick: np.ndarray  # (R,) i8 absolute

    # initial shared event knowledge
    init_ev_rows: np.ndarray  # (IE, 7) f8
    init_ev_learn: np.ndarray  # (R, IE) i8, -1 unknown

    @property
    def n_robots(self) -> int:
        return len(self.robot_ids)

    @property
    def n_nodes(self) -> int:
        return int(self.node_state.shape[0])

    def robot_index(self, robot_id: str) -> int:
        try:
            return self.robot_ids.index(robot_id)
        except ValueError:
            raise CompileError([f"unknown robot {robot_id!r}"]) from None

    def region_index(self, region_id: str) -> int:
        try:
            return self.region_ids.index(region_id)
        except ValueError:
            raise CompileError([f"unknown region {region_id!r}"]) from None

    def event_code(self, name: str) -> int:
        if name in BUILTIN_EVENT_TYPES:
            return BUILTIN_EVENT_TYPES.index(name)
        if name in self.event_types:
            return EV_ENV0 + self.event_types.index(name)
        raise CompileError([f"unknown event type {name!r}"])

    def event_name(self, code: int) -> str:
        if code < EV_ENV0:
            return BUILTIN_EVENT_TYPES[code]
        return self.event_types[code - EV_ENV0]

    def world_tuple(self) -> tuple:
        return (
            self.reg_rect,
            self.reg_risky,
            self.reg_terrain,
            self.reg_area,
            self.ter_disable,
            self.ter_slow,
            self.bounds,
            self.env_prob,
            self.rescue_probs,
            self.base_xy,
        )

    def model_tuple(self) -> tuple:
        return (
            self.node_state,
            self.node_tkind,
            self.node_tx,
            self.node_ty,
            self.node_tregion,
            self.node_trobot,
            self.node_wlo,
            self.node_whi,
            self.node_wait,
            self.node_payload,
            self.node_model,
            self.model_initial,
            self.model_disabled,
            self.edge_start,
            self.edge_dst,
            self.edge_kind,
            self.edge_pstart,
            self.edge_plen,
            self.prog,
            self.td_ticks,
            self.mt_geom,
        )

    def robot_tuple(self) -> tuple:
        return (
            self.speed_nom,
            self.noise_lo,
            self.noise_hi,
            self.max_speed,
            self.init_node,
            self.init_model,
            self.init_revive,
            self.init_x,
            self.init_y,
            self.update_tick,
            self.init_ev_rows,
            self.init_ev_learn,
        )

    def scalar_tuple(self) -> tuple:
        return (
            float(self.explore_rate),
            float(self.observe_radius),
            float(self.rescue_range),
            float(self.relay_range),
            float(self.reach_eps),
            int(self.start_tick),
        )


class _Compiler:
    def __init__(self, world: WorldMap, base: Location | None):
        self.world = world
        self.base = base if base is not None else world.bounds.center()
        self.region_ids = [r.id for r in world.regions]
        self.event_types = list(world.stochastic.event_probs)
        self.robot_ids: list[str] = []
        self.diags: list[str] = []

        # terrain table: index 0 is always the default class
        names = [DEFAULT_TERRAIN]
        for r in world.regions:
            if r.terrain not in names:
                names.append(r.terrain)
        for t in world.stochastic.terrain:
            if t not in names:
                names.append(t)
        self.ter_names = names

        self.models: list[StateTransitionModel] = []
        self.model_keys: list[str] = []
        self.node_offset: list[int] = []
        self.node_states: list[StateType] = []
        self.node_args: list[tuple[ArgValue, ...]] = []
        self._payload_cache: dict[str, int] = {}

        self.prog_rows: list[list[float]] = []
        self.td_sites: list[tuple[int, int]] = []
        self.mt_sites: list[tuple[float, float, float, float, float]] = []

    # --- model flattening -------------------------------------------------

    def add_model(self, key: str, sm: StateTransitionModel) -> int:
        for idx, existing in enumerate(self.models):
            if existing is sm:
                return idx
        idx = len(self.models)
        self.models.append(sm)
        self.model_keys.append(key)
        self.node_offset.append(-1)  # filled in flatten pass
        return idx

    def payload_model(self, text: str) -> int:
        if text in self._payload_cache:
            return self._payload_cache[text]
        try:
            sm = expand_to_state_model(build_task_model(parse_instruction(text)))
        except ValueError as exc:
            raise CompileError([f"relay payload does not compile: {exc}"]) from exc
        idx = self.add_model(f"payload:{text}", sm)
        self._payload_cache[text] = idx
        # payloads can nest
        self.scan_payloads(sm)
        return idx

    def scan_payloads(self, sm: StateTransitionModel) -> None:
        for n in sm.nodes:
            if n.state in (StateType.TRAVEL_TO_REL, StateType.RELAYING):
                self.payload_model(str(n.args[1].value))

    def flatten(self) -> None:
        total = 0
        for k, sm in enumerate(self.models):
            self.node_offset[k] = total
            total += len(sm.nodes)

        n = total
        self.node_state = np.zeros(n, np.int16)
        self.node_model = np.zeros(n, np.int32)
        self.node_tkind = np.zeros(n, np.int8)
        self.node_tx = np.zeros(n, np.float64)
        self.node_ty = np.zeros(n, np.float64)
        self.node_tregion = np.full(n, -1, np.int32)
        self.node_trobot = np.full(n, -1, np.int32)
        self.node_wlo = np.full(n, -1, np.int64)
        self.node_whi = np.full(n, -1, np.int64)
        self.node_wait = np.zeros(n, np.float64)
        self.node_payload = np.full(n, -1, np.int32)
        self.model_initial = np.zeros(len(self.models), np.int32)
        self.model_disabled = np.zeros(len(self.models), np.int32)

        edge_dst: list[int] = []
        edge_kind: list[int] = []
        edge_pstart: list[int] = []
        edge_plen: list[int] = []
        edge_start = np.zeros(n + 1, np.int32)

        for k, sm in enumerate(self.models):
            off = self.node_offset[k]
            self.model_initial[k] = off + sm.initial
            self.model_disabled[k] = off + sm.disabled
            for node in sm.nodes:
                g = off + node.id
                self.node_states.append(node.state)
                self.node_args.append(node.args)
                self.node_state[g] = STATE_CODE[node.state]
                self.node_model[g] = k
                self.fill_target(g, node.state, node.args)

        # edge pass needs payload models resolved first, so run it after
        # every model is known; CSR in global node order
        cursor = 0
        for g in range(n):
            edge_start[g] = cursor
            k = int(self.node_model[g])
            sm = self.models[k]
            off = self.node_offset[k]
            local = g - off
            for e in sm.out_edges(local):
                dst = -1 if e.dst == RESUME else off + e.dst
                kind = _EDGE_KIND[e.kind]
                if e.guard is None:
                    ps, pl = 0, 0
                else:
                    ps, pl = self.compile_cond(e.guard)
                edge_dst.append(dst)
                edge_kind.append(kind)
                edge_pstart.append(ps)
                edge_plen.append(pl)
                cursor += 1
        edge_start[n] = cursor

        self.edge_start = edge_start
        self.edge_dst = np.array(edge_dst, np.int32)
        self.edge_kind = np.array(edge_kind, np.int8)
        self.edge_pstart = np.array(edge_pstart, np.int32)
        self.edge_plen = np.array(edge_plen, np.int32)

    def fill_target(self, g: int, state: StateType, args: tuple[ArgValue, ...]) -> None:
        w = self.world
        if state in (StateType.TRAVEL_TO_EXPL, StateType.EXPLORING):
            self.node_tkind[g] = TK_REGION
            self.node_tregion[g] = self.region_idx(str(args[0].value))
        elif state is StateType.NAVIGATING:
            if args[0].kind == "location":
                self.node_tkind[g] = TK_POINT
                self.node_tx[g] = args[0].value.x
                self.node_ty[g] = args[0].value.y
            else:
                self.node_tkind[g] = TK_REGION
                self.node_tregion[g] = self.region_idx(str(args[0].value))
        elif state in (StateType.TRAVEL_TO_RESC, StateType.RESCUING):
            self.node_tkind[g] = TK_ROBOT
            self.node_trobot[g] = (
                UNKNOWN_ROBOT if args[0].is_unknown() else self.robot_idx(str(args[0].value))
            )
        elif state in (
            StateType.TRAVEL_TO_REND,
            StateType.WAIT_TO_REND,
            StateType.RENDEZVOUSING,
        ):
            self.node_tkind[g] = TK_POINT
            meet = args[1]
            if meet.kind == "location":
                self.node_tx[g] = meet.value.x
                self.node_ty[g] = meet.value.y
            else:
                c = w.regions[self.region_idx(str(meet.value))].rect.center()
                self.node_tx[g] = c.x
                self.node_ty[g] = c.y
            self.node_trobot[g] = self.robot_idx(str(args[0].value))
            lo, hi = args[2].value
            self.node_wlo[g] = int(lo)
            self.node_whi[g] = int(hi)
        elif state in (StateType.TRAVEL_TO_REL, StateType.RELAYING):
            self.node_tkind[g] = TK_ROBOT
            self.node_trobot[g] = self.robot_idx(str(args[0].value))
            self.node_payload[g] = self.payload_model(str(args[1].value))
        elif state is StateType.RETURNING or state is StateType.RETURNED:
            self.node_tkind[g] = TK_BASE
        elif state is StateType.WAITING:
            self.node_tkind[g] = TK_NONE
            self.node_wait[g] = float(args[0].value)

    def region_idx(self, region_id: str) -> int:
        try:
            return self.region_ids.index(region_id)
        except ValueError:
            raise CompileError([f"instruction references unknown region {region_id!r}"]) from None

    def robot_idx(self, robot_id: str) -> int:
        try:
            return self.robot_ids.index(robot_id)
        except ValueError:
            raise CompileError([f"instruction references unknown robot {robot_id!r}"]) from None

    def event_code(self, name: str) -> int:
        if name in BUILTIN_EVENT_TYPES:
            return BUILTIN_EVENT_TYPES.index(name)
        if name in self.event_types:
            return EV_ENV0 + self.event_types.index(name)
        raise CompileError([f"guard references unknown event type {name!r}"])

    # --- guard programs -----------------------------------------------------

    def compile_cond(self, cond: Cond) -> tuple[int, int]:
        start = len(self.prog_rows)
        self.emit_cond(cond)
        return start, len(self.prog_rows) - start

    def row(self, *vals: float) -> None:
        r = [0.0] * PROG_WIDTH
        for i, v in enumerate(vals):
            r[i] = float(v)
        self.prog_rows.append(r)

    def emit_cond(self, c: Cond) -> None:
        if isinstance(c, CAnd):
            self.emit_cond(c.left)
            self.emit_cond(c.right)
            self.row(OP_AND)
        elif isinstance(c, COr):
            self.emit_cond(c.left)
            self.emit_cond(c.right)
            self.row(OP_OR)
        elif isinstance(c, CNot):
            self.emit_cond(c.child)
            self.row(OP_NOT)
        elif isinstance(c, CCall):
            self.emit_call(c)
        else:
            raise CompileError([f"cannot compile condition node {type(c).__name__}"])

    def emit_call(self, c: CCall) -> None:
        f = c.func
        a = c.args
        if f == "nearby":
            unhelped = 1.0 if len(a) == 3 else 0.0
            self.row(OP_NEARBY, self.state_code(a[0]), float(a[1].value), unhelped)
        elif f == "countNearby":
            self.row(OP_COUNT_NEARBY, self.state_code(a[0]), float(a[1].value))
        elif f == "countExploring":
            self.row(OP_COUNT_EXPLORING, self.region_idx(str(a[0].value)))
        elif f == "countEvents":
            pairs = [(a[i], a[i + 1]) for i in range(1, len(a), 2)]
            self.row(OP_COUNT_EVENTS, self.event_code(str(a[0].value)), len(pairs))
            for idx, val in pairs:
                self.emit_constraint(int(idx.value), val)
        elif f == "event":
            self.row(OP_EVENT, self.event_code(str(a[0].value)))
        elif f == "travelDuration":
            site = len(self.td_sites)
            self.td_sites.append(
                (self.region_idx(str(a[0].value)), self.region_idx(str(a[1].value)))
            )
            self.row(OP_TRAVEL_DUR, site)
        elif f == "minTravelT":
            site = len(self.mt_sites)
            if a[0].kind == "location":
                p = a[0].value
                self.mt_sites.append((1.0, p.x, p.y, 0.0, 0.0))
            else:
                rect = self.world.regions[self.region_idx(str(a[0].value))].rect
                self.mt_sites.append((0.0, rect.x0, rect.y0, rect.x1, rect.y1))
            self.row(OP_MIN_TRAVEL, site)
        elif f == "isRiskyRegion":
            ridx = self.region_idx(str(a[0].value)) if a else -1
            self.row(OP_IS_RISKY, ridx)
        elif f == "inRegion":
            self.row(OP_IN_REGION, self.region_idx(str(a[0].value)))
        elif f == "toRend":
            self.row(OP_TO_REND)
        elif f == "endRend":
            self.row(OP_END_REND)
        elif f == "isNav":
            self.row(OP_IS_NAV)
        elif f == "currentTick":
            self.row(OP_TICK)
        else:
            raise CompileError([f"condition function {f!r} has no kernel lowering"])
        if c.cmp is not None:
            if not isinstance(c.rhs, (int, float)):
                raise CompileError(
                    [f"{f} comparison needs a numeric right-hand side, got {c.rhs!r}"]
                )
            self.row(OP_CMP, CMP_CODE[c.cmp], float(c.rhs))

    def state_code(self, arg: ArgValue) -> int:
        try:
            return STATE_CODE[StateType(str(arg.value))]
        except ValueError:
            raise CompileError([f"unknown state name {arg.value!r}"]) from None

    def emit_constraint(self, arg_idx: int, val: ArgValue) -> None:
        if val.kind == "number":
            self.row(OP_CONSTRAINT, arg_idx, CK_NUMBER, float(val.value))
        elif val.kind == "location":
            self.row(OP_CONSTRAINT, arg_idx, CK_LOCATION, val.value.x, val.value.y)
        else:
            name = str(val.value)
            if name in self.robot_ids:
                self.row(OP_CONSTRAINT, arg_idx, CK_ROBOT, self.robot_ids.index(name))
            elif name in self.region_ids:
                self.row(OP_CONSTRAINT, arg_idx, CK_REGION, self.region_ids.index(name))
            elif name in OUTCOME_CODE:
                self.row(OP_CONSTRAINT, arg_idx, CK_CODE, OUTCOME_CODE[name])
            elif name in (s.value for s in StateType):
                self.row(OP_CONSTRAINT, arg_idx, CK_CODE, STATE_CODE[StateType(name)])
            else:
                raise CompileError(
                    [f"countEvents value {name!r} is not a robot, region, outcome, or state"]
                )


def _initial_node(
    sm: StateTransitionModel, offset: int, state: "RobotState", what: str
) -> int:
    """Global node id matching a reported state; region/robot args narrow it."""
    candidates = []
    for n in sm.nodes:
        if n.state.value != state.type.value:
            continue
        ok = True
        for want, have in zip(state.args, n.args):
            if want.kind in ("region", "robot") and not have.is_unknown():
                if want.value != have.value:
                    ok = False
                    break
        if ok:
            candidates.append(n.id)
    if not candidates:
        raise CompileError(
            [f"{what}: reported state {state.type.value} does not occur in the robot's model"]
        )
    return offset + candidates[0]


def compile_mission(
    world: WorldMap,
    robot_ids: list[str],
    models: dict[str, StateTransitionModel],
    snapshots: dict[str, RobotSnapshot],
    update_ticks: dict[str, int],
    base: Location | None = None,
    explore_rate: float = 100.0,
    observe_radius: float = 20.0,
    rescue_range: float = 2.0,
    relay_range: float = 2.0,
) -> CompiledMission:
    """Build the flat arena. Raises CompileError on any unresolved reference."""
    missing = [r for r in robot_ids if r not in models or r not in snapshots]
    if missing:
        raise CompileError([f"robot {r!r} lacks a model or snapshot" for r in missing])
    if not robot_ids:
        raise CompileError(["mission needs at least one robot"])

    c = _Compiler(world, base)
    c.robot_ids = list(robot_ids)

    for rid in robot_ids:
        c.add_model(f"robot:{rid}", models[rid])
    for rid in robot_ids:
        c.scan_payloads(models[rid])
    c.flatten()

    # world arrays
    rg = len(world.regions)
    reg_rect = np.zeros((rg, 4), np.float64)
    reg_risky = np.zeros(rg, np.uint8)
    reg_terrain = np.zeros(rg, np.int32)
    reg_area = np.zeros(rg, np.float64)
    reg_capacity = np.zeros(rg, np.int32)
    for i, r in enumerate(world.regions):
        reg_rect[i] = (r.rect.x0, r.rect.y0, r.rect.x1, r.rect.y1)
        reg_risky[i] = 1 if r.risky else 0
        reg_terrain[i] = c.ter_names.index(r.terrain)
        reg_area[i] = (r.rect.x1 - r.rect.x0) * (r.rect.y1 - r.rect.y0)
        reg_capacity[i] = r.explore_capacity
    ter_disable = np.array(
        [world.stochastic.terrain_class(t).disable_prob for t in c.ter_names], np.float64
    )
    ter_slow = np.array(
        [world.stochastic.terrain_class(t).slowdown for t in c.ter_names], np.float64
    )
    bounds = np.array(
        (world.bounds.x0, world.bounds.y0, world.bounds.x1, world.bounds.y1), np.float64
    )
    env_prob = np.array(
        [world.stochastic.event_probs[t] for t in c.event_types], np.float64
    )
    rp = world.stochastic.rescue
    rescue_probs = np.array((rp.success, rp.fail, rp.rescuer_disabled), np.float64)

    # robots
    nr = len(robot_ids)
    speed_nom = np.zeros(nr, np.float64)
    noise_lo = np.zeros(nr, np.float64)
    noise_hi = np.zeros(nr, np.float64)
    max_speed_a = np.zeros(nr, np.float64)
    init_node = np.zeros(nr, np.int32)
    init_model = np.zeros(nr, np.int32)
    init_revive = np.zeros(nr, np.int32)
    init_x = np.zeros(nr, np.float64)
    init_y = np.zeros(nr, np.float64)
    upd = np.zeros(nr, np.int64)

    start_tick = min(int(update_ticks[r]) for r in robot_ids)

    from ..mission import RobotState  # local import to avoid cycle at module load

    for i, rid in enumerate(robot_ids):
        sp = world.stochastic.speed_model(rid)
        speed_nom[i] = sp.nominal
        noise_lo[i] = sp.noise_lo
        noise_hi[i] = sp.noise_hi
        max_speed_a[i] = sp.max_speed()
        snap = snapshots[rid]
        init_x[i] = snap.location.x
        init_y[i] = snap.location.y
        upd[i] = int(update_ticks[rid])
        k = c.add_model(f"robot:{rid}", models[rid])
        off = c.node_offset[k]
        init_model[i] = k
        sm = models[rid]
        if snap.state.type is StateType.DISABLED:
            init_node[i] = c.model_disabled[k]
            if snap.prev_state is not None:
                init_revive[i] = _initial_node(sm, off, snap.prev_state, rid)
            else:
                init_revive[i] = c.model_initial[k]
        else:
            init_node[i] = _initial_node(sm, off, snap.state, rid)
            init_revive[i] = init_node[i]

    # shared initial event knowledge: union of reported lists
    all_events: list[Event] = []
    learn: list[list[int]] = []
    for i, rid in enumerate(robot_ids):
        for ev in snapshots[rid].events:
            try:
                j = all_events.index(ev)
            except ValueError:
                all_events.append(ev)
                learn.append([-1] * nr)
                j = len(all_events) - 1
            learn[j][i] = start_tick
    init_ev_rows = np.zeros((len(all_events), 7), np.float64)
    for j, ev in enumerate(all_events):
        init_ev_rows[j] = _event_to_row(ev, c)
    init_ev_learn = (
        np.array(learn, np.int64).T.copy() if all_events else np.zeros((nr, 0), np.int64)
    )

    td_ticks = np.zeros((nr, max(1, len(c.td_sites))), np.float64)
    for s, (r1, r2) in enumerate(c.td_sites):
        f = world.regions[r1].rect.center()
        t = world.regions[r2].rect.center()
        for i, rid in enumerate(robot_ids):
            td_ticks[i, s] = travel_duration(world, rid, f, t)
    mt_geom = (
        np.array(c.mt_sites, np.float64) if c.mt_sites else np.zeros((1, 5), np.float64)
    )

    prog = (
        np.array(c.prog_rows, np.float64)
        if c.prog_rows
        else np.zeros((1, PROG_WIDTH), np.float64)
    )

    return CompiledMission(
        world=world,
        base=c.base,
        start_tick=start_tick,
        explore_rate=float(explore_rate),
        observe_radius=float(observe_radius),
        rescue_range=float(rescue_range),
        relay_range=float(relay_range),
        reach_eps=POINT_REACH_EPS,
        robot_ids=c.robot_ids,
        region_ids=c.region_ids,
        event_types=c.event_types,
        models=c.models,
        model_keys=c.model_keys,
        node_offset=c.node_offset,
        node_states=c.node_states,
        node_args=c.node_args,
        reg_rect=reg_rect,
        reg_risky=reg_risky,
        reg_terrain=reg_terrain,
        reg_area=reg_area,
        reg_capacity=reg_capacity,
        ter_disable=ter_disable,
        ter_slow=ter_slow,
        bounds=bounds,
        env_prob=env_prob,
        rescue_probs=rescue_probs,
        base_xy=np.array((c.base.x, c.base.y), np.float64),
        node_state=c.node_state,
        node_model=c.node_model,
        node_tkind=c.node_tkind,
        node_tx=c.node_tx,
        node_ty=c.node_ty,
        node_tregion=c.node_tregion,
        node_trobot=c.node_trobot,
        node_wlo=c.node_wlo,
        node_whi=c.node_whi,
        node_wait=c.node_wait,
        node_payload=c.node_payload,
        model_initial=c.model_initial,
        model_disabled=c.model_disabled,
        edge_start=c.edge_start,
        edge_dst=c.edge_dst,
        edge_kind=c.edge_kind,
        edge_pstart=c.edge_pstart,
        edge_plen=c.edge_plen,
        prog=prog,
        td_ticks=td_ticks,
        mt_geom=mt_geom,
        speed_nom=speed_nom,
        noise_lo=noise_lo,
        noise_hi=noise_hi,
        max_speed=max_speed_a,
        init_node=init_node,
        init_model=init_model,
        init_revive=init_revive,
        init_x=init_x,
        init_y=init_y,
        update_tick=upd,
        init_ev_rows=init_ev_rows,
        init_ev_learn=init_ev_learn,
    )


def _event_to_row(ev: Event, c: _Compiler) -> np.ndarray:
    """Lower an object Event to a kernel row; unknown fields become -1/NaN."""
    row = np.full(7, -1.0, np.float64)
    row[2] = np.nan
    row[3] = np.nan
    row[0] = c.event_code(ev.type)
    for pos, arg in enumerate(ev.args, start=1):
        if arg.kind == "number" and pos == 1:
            row[1] = float(arg.value)
        elif arg.kind == "location" and pos == 2:
            row[2] = arg.value.x
            row[3] = arg.value.y
        elif arg.kind == "robot" and pos == 3:
            row[4] = c.robot_ids.index(arg.value) if arg.value in c.robot_ids else -1
        elif arg.kind == "robot" and pos == 4:
            row[5] = c.robot_ids.index(arg.value) if arg.value in c.robot_ids else -1
        elif arg.kind == "label" and pos == 5:
            if arg.value in OUTCOME_CODE:
                row[6] = OUTCOME_CODE[arg.value]
            else:
                try:
                    row[6] = STATE_CODE[StateType(str(arg.value))]
                except ValueError:
                    row[6] = -1
    return row


def row_to_event(row: np.ndarray, mission: CompiledMission) -> Event:
    """Lift a kernel event row back to the object layer."""
    code = int(row[0])
    name = mission.event_name(code)
    args: list[ArgValue] = [ArgValue.number(float(row[1]))]
    if code < EV_ENV0:
        args.append(ArgValue.location(Location(float(row[2]), float(row[3]))))
        if row[4] >= 0:
            args.append(ArgValue.robot(mission.robot_ids[int(row[4])]))
        if code in (EV_RESCUE, EV_OBSERVED) and row[5] >= 0:
            args.append(ArgValue.robot(mission.robot_ids[int(row[5])]))
        if code == EV_RESCUE and row[6] >= 0:
            args.append(ArgValue.label(OUTCOME_NAME[int(row[6])]))
        if code == EV_OBSERVED and row[6] >= 0:
            args.append(ArgValue.label(CODE_STATE[int(row[6])].value))
    return Event(name, tuple(args))
