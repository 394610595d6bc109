"""Instruction-set language: tokenizer, parser, condition expressions, printer.

An instruction-set is a `;`-separated list of statements:

    task statements   explore(AoI1); rescue(R2); wait(15t); return
    service rules     if nearby(Disabled, 20m) then rescue(nearest)
    standing jumps    if event(EventA) then { explore(AoI3); explore(AoI4) }
    flow loops        while currentTick() < 120t { explore(AoI1) }

A service rule interrupts the robot, runs one task, and resumes the
interrupted task where it left off. A jump abandons the current thread for
its block. Both are standing: they guard every task in the immediately
preceding contiguous run of task statements (consecutive rules share that
run). `else` is reserved and rejected.

Conditions are boolean expressions over the supporting-function registry
(see FUNCTIONS), comparisons, and and/or/not. Distances take an `m` suffix,
tick counts a `t` suffix.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterator

from .mission import ArgValue, StateType, TaskType

_STATE_NAMES = {s.value: s for s in StateType}


class InstructionError(ValueError):
    """Syntax or validation failure, carrying source position diagnostics."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def _fail(msg: str, line: int, col: int) -> "InstructionError":
    return InstructionError([f"{line}:{col}: {msg}"])


# --- condition expressions --------------------------------------------------

# name -> (min arity, max arity, result kind)
# Guard-usable supporting functions. neverRescue/neverRelay quantify over
# reachable-state sets and are valid only in inference queries, so they are
# recognized here but rejected in instruction guards.
FUNCTIONS: dict[str, tuple[int, int, str]] = {
    "nearby": (2, 3, "bool"),
    "countNearby": (2, 2, "num"),
    "countExploring": (1, 1, "num"),
    "countEvents": (1, 11, "num"),
    "event": (1, 1, "bool"),
    "travelDuration": (2, 2, "num"),
    "minTravelT": (1, 1, "num"),
    "isRiskyRegion": (0, 1, "bool"),
    "inRegion": (1, 1, "bool"),
    "toRend": (0, 0, "bool"),
    "endRend": (0, 0, "bool"),
    "isNav": (0, 0, "bool"),
    "currentTick": (0, 0, "num"),
    "neverRescue": (2, 2, "bool"),
    "neverRelay": (2, 2, "bool"),
}

_INFERENCE_ONLY = frozenset({"neverRescue", "neverRelay"})
_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Cond:
    """Base class for condition expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class CAnd(Cond):
    left: Cond
    right: Cond


@dataclass(frozen=True)
class COr(Cond):
    left: Cond
    right: Cond


@dataclass(frozen=True)
class CNot(Cond):
    child: Cond


@dataclass(frozen=True)
class CCall(Cond):
    """A supporting-function call, optionally compared against a constant.

    Numeric functions require a comparison; boolean ones stand alone.
    """

    func: str
    args: tuple[ArgValue, ...] = ()
    cmp: str | None = None
    rhs: float | str | None = None


def cond_to_text(c: Cond) -> str:
    return _print_cond(c, 0)


def _print_cond(c: Cond, prec: int) -> str:
    if isinstance(c, COr):
        s = f"{_print_cond(c.left, 1)} or {_print_cond(c.right, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(c, CAnd):
        s = f"{_print_cond(c.left, 2)} and {_print_cond(c.right, 2)}"
        return f"({s})" if prec > 2 else s
    if isinstance(c, CNot):
        return f"not {_print_cond(c.child, 3)}"
    assert isinstance(c, CCall)
    args = ", ".join(arg_to_text(a) for a in c.args)
    s = f"{c.func}({args})"
    if c.cmp is not None:
        rhs = c.rhs if isinstance(c.rhs, str) else _num_text(float(c.rhs))
        s = f"{s} {c.cmp} {rhs}"
    return s


def _num_text(v: float) -> str:
    return str(int(v)) if v == int(v) else repr(v)


def arg_to_text(a: ArgValue) -> str:
    if a.kind == "unknown":
        return "nearest"
    if a.kind == "location":
        return f"({_num_text(a.value.x)}, {_num_text(a.value.y)})"
    if a.kind == "window":
        return f"[{a.value[0]}t, {a.value[1]}t]"
    if a.kind == "number":
        return _num_text(float(a.value))
    if a.kind == "payload":
        return '"' + str(a.value).replace('"', '\\"') + '"'
    if a.kind == "distance":
        return f"{_num_text(float(a.value))}m"
    if a.kind == "duration":
        return f"{_num_text(float(a.value))}t"
    return str(a.value)


# --- pseudocode AST ---------------------------------------------------------


@dataclass(frozen=True)
class TaskCall:
    task: TaskType
    args: tuple[ArgValue, ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ServiceRule:
    cond: Cond
    action: TaskCall
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class JumpRule:
    cond: Cond
    block: tuple[Any, ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class WhileLoop:
    cond: Cond
    block: tuple[Any, ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Statement = TaskCall | ServiceRule | JumpRule | WhileLoop


@dataclass(frozen=True)
class Instruction:
    statements: tuple[Statement, ...]

    def to_text(self) -> str:
        return instruction_to_text(self)


def instruction_to_text(ins: Instruction) -> str:
    return ";\n".join(_stmt_text(s, "") for s in ins.statements)


def _block_text(block: tuple[Statement, ...], indent: str) -> str:
    inner = ";\n".join(_stmt_text(s, indent + "  ") for s in block)
    return "{\n" + inner + "\n" + indent + "}"


def _stmt_text(s: Statement, indent: str) -> str:
    if isinstance(s, TaskCall):
        if not s.args:
            return f"{indent}{s.task.value}"
        args = ", ".join(arg_to_text(a) for a in s.args)
        return f"{indent}{s.task.value}({args})"
    if isinstance(s, ServiceRule):
        return f"{indent}if {cond_to_text(s.cond)} then {_stmt_text(s.action, '')}"
    if isinstance(s, JumpRule):
        return f"{indent}if {cond_to_text(s.cond)} then {_block_text(s.block, indent)}"
    assert isinstance(s, WhileLoop)
    return f"{indent}while {cond_to_text(s.cond)} {_block_text(s.block, indent)}"


# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)(?P<suffix>[mt]\b)?
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<op><=|>=|!=|[=<>;(){},\[\]])
    """,
    re.VERBOSE,
)

_KEYWORDS = frozenset({"if", "then", "else", "while", "and", "or", "not", "nearest"})
_TASK_NAMES = {t.value: t for t in TaskType}


@dataclass(frozen=True)
class _Tok:
    kind: str  # number | name | string | op | eof
    text: str
    line: int
    col: int
    value: float | None = None
    suffix: str | None = None


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise _fail(f"unexpected character {text[pos]!r}", line, col)
        frag = m.group(0)
        if m.lastgroup not in ("ws", "comment") and not m.group("ws"):
            if m.group("number"):
                toks.append(
                    _Tok("number", frag, line, col, float(m.group("number")), m.group("suffix"))
                )
            elif m.group("name"):
                toks.append(_Tok("name", frag, line, col))
            elif m.group("string"):
                toks.append(_Tok("string", frag, line, col))
            else:
                toks.append(_Tok("op", frag, line, col))
        nl = frag.count("\n")
        if nl:
            line += nl
            col = len(frag) - frag.rfind("\n")
        else:
            col += len(frag)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


# --- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect_op(self, op: str) -> _Tok:
        t = self.peek()
        if t.kind != "op" or t.text != op:
            raise _fail(f"expected {op!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def at_op(self, op: str) -> bool:
        t = self.peek()
        return t.kind == "op" and t.text == op

    # statements

    def parse_instruction(self, *, top: bool = True) -> Instruction:
        stmts = self.parse_statements(end=None if top else "}")
        if top:
            t = self.peek()
            if t.kind != "eof":
                raise _fail(f"unexpected {t.text!r}", t.line, t.col)
        return Instruction(tuple(stmts))

    def parse_statements(self, end: str | None) -> list[Statement]:
        stmts: list[Statement] = []
        while True:
            t = self.peek()
            if t.kind == "eof" or (end is not None and t.kind == "op" and t.text == end):
                break
            stmts.append(self.parse_statement())
            if self.at_op(";"):
                self.next()
            else:
                break
        return stmts

    def parse_statement(self) -> Statement:
        t = self.peek()
        if t.kind != "name":
            raise _fail(f"expected a statement, found {t.text or 'end of input'!r}", t.line, t.col)
        if t.text == "if":
            return self.parse_if()
        if t.text == "while":
            return self.parse_while()
        if t.text == "else":
            raise _fail("'else' is reserved and not part of the language", t.line, t.col)
        return self.parse_task_call()

    def parse_if(self) -> Statement:
        t = self.next()
        cond = self.parse_cond()
        kw = self.peek()
        if kw.kind != "name" or kw.text != "then":
            raise _fail("expected 'then' after condition", kw.line, kw.col)
        self.next()
        if self.at_op("{"):
            block = self.parse_block()
            return JumpRule(cond, block, t.line, t.col)
        action = self.parse_task_call()
        return ServiceRule(cond, action, t.line, t.col)

    def parse_while(self) -> WhileLoop:
        t = self.next()
        cond = self.parse_cond()
        block = self.parse_block()
        return WhileLoop(cond, block, t.line, t.col)

    def parse_block(self) -> tuple[Statement, ...]:
        self.expect_op("{")
        stmts = self.parse_statements(end="}")
        self.expect_op("}")
        if not stmts:
            t = self.peek()
            raise _fail("empty block", t.line, t.col)
        return tuple(stmts)

    def parse_task_call(self) -> TaskCall:
        t = self.next()
        if t.text in _KEYWORDS:
            raise _fail(f"{t.text!r} cannot start a task statement", t.line, t.col)
        task = _TASK_NAMES.get(t.text)
        if task is None:
            raise _fail(f"unknown task {t.text!r}", t.line, t.col)
        args: tuple[ArgValue, ...] = ()
        if self.at_op("("):
            args = self.parse_args()
        call = TaskCall(task, args, t.line, t.col)
        _check_task_args(call)
        return TaskCall(task, _retag_task_args(call), t.line, t.col)

    def parse_args(self) -> tuple[ArgValue, ...]:
        self.expect_op("(")
        args: list[ArgValue] = []
        while not self.at_op(")"):
            if args:
                self.expect_op(",")
            args.append(self.parse_arg())
        self.expect_op(")")
        return tuple(args)

    def parse_arg(self) -> ArgValue:
        t = self.peek()
        if t.kind == "number":
            self.next()
            if t.suffix == "m":
                return ArgValue("distance", t.value)
            if t.suffix == "t":
                return ArgValue("duration", t.value)
            return ArgValue.number(t.value)
        if t.kind == "string":
            self.next()
            body = t.text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
            return ArgValue.payload(body)
        if t.kind == "op" and t.text == "(":
            self.next()
            x = self._number("x coordinate")
            self.expect_op(",")
            y = self._number("y coordinate")
            self.expect_op(")")
            from .world import Location

            return ArgValue.location(Location(x, y))
        if t.kind == "op" and t.text == "[":
            self.next()
            lo = self._number("window start")
            self.expect_op(",")
            hi = self._number("window end")
            self.expect_op("]")
            if lo > hi:
                raise _fail(f"window [{lo:g}, {hi:g}] is empty", t.line, t.col)
            return ArgValue.window(int(lo), int(hi))
        if t.kind == "name":
            self.next()
            if t.text == "nearest":
                return ArgValue.unknown()
            if t.text in _STATE_NAMES:
                return ArgValue.label(t.text)
            return ArgValue.label(t.text)
        raise _fail(f"expected an argument, found {t.text or 'end of input'!r}", t.line, t.col)

    def _number(self, what: str) -> float:
        t = self.next()
        if t.kind != "number":
            raise _fail(f"expected {what}, found {t.text or 'end of input'!r}", t.line, t.col)
        return float(t.value)

    # conditions (precedence: or < and < not < atom)

    def parse_cond(self) -> Cond:
        c = self.parse_cond_and()
        while self.peek().kind == "name" and self.peek().text == "or":
            self.next()
            c = COr(c, self.parse_cond_and())
        return c

    def parse_cond_and(self) -> Cond:
        c = self.parse_cond_unary()
        while self.peek().kind == "name" and self.peek().text == "and":
            self.next()
            c = CAnd(c, self.parse_cond_unary())
        return c

    def parse_cond_unary(self) -> Cond:
        t = self.peek()
        if t.kind == "name" and t.text == "not":
            self.next()
            return CNot(self.parse_cond_unary())
        if t.kind == "op" and t.text == "(":
            self.next()
            c = self.parse_cond()
            self.expect_op(")")
            return c
        return self.parse_call()

    def parse_call(self) -> CCall:
        t = self.next()
        if t.kind != "name" or t.text in _KEYWORDS:
            raise _fail(f"expected a condition, found {t.text or 'end of input'!r}", t.line, t.col)
        spec = FUNCTIONS.get(t.text)
        if spec is None:
            raise _fail(f"unknown function {t.text!r}", t.line, t.col)
        lo, hi, kind = spec
        args: tuple[ArgValue, ...] = ()
        if self.at_op("("):
            args = self.parse_args()
        if not (lo <= len(args) <= hi):
            want = str(lo) if lo == hi else f"{lo}..{hi}"
            raise _fail(f"{t.text} takes {want} arguments, got {len(args)}", t.line, t.col)
        if t.text in _INFERENCE_ONLY:
            raise _fail(
                f"{t.text} is an inference-side literal and cannot guard instructions",
                t.line,
                t.col,
            )
        args = _retag_call_args(t.text, args, t.line, t.col)
        cmp_tok = self.peek()
        if cmp_tok.kind == "op" and cmp_tok.text in _CMP_OPS:
            self.next()
            rhs_tok = self.next()
            if rhs_tok.kind == "number":
                rhs: float | str = float(rhs_tok.value)
            elif rhs_tok.kind == "name" and rhs_tok.text not in _KEYWORDS:
                rhs = rhs_tok.text
            else:
                raise _fail("comparison needs a number or name on the right", rhs_tok.line, rhs_tok.col)
            if kind != "num":
                raise _fail(f"{t.text} is boolean and cannot be compared", t.line, t.col)
            return CCall(t.text, args, cmp_tok.text, rhs)
        if kind == "num":
            raise _fail(f"{t.text} is numeric and needs a comparison", t.line, t.col)
        return CCall(t.text, args)


def _retag_call_args(
    func: str, args: tuple[ArgValue, ...], line: int, col: int
) -> tuple[ArgValue, ...]:
    """Resolve bare-name arguments into their schema kinds."""
    out = list(args)
    if func in ("nearby", "countNearby"):
        st = args[0]
        if st.kind != "label" or st.value not in _STATE_NAMES:
            raise _fail(f"{func}: first argument must be a state name", line, col)
        if args[1].kind not in ("distance", "number"):
            raise _fail(f"{func}: second argument must be a distance", line, col)
        if func == "nearby" and len(args) == 3:
            flag = args[2]
            if flag.kind != "label" or flag.value != "unhelped":
                raise _fail("nearby: third argument must be the 'unhelped' filter", line, col)
    elif func in ("countExploring", "isRiskyRegion", "inRegion"):
        if args and args[0].kind == "label":
            out[0] = ArgValue.region(str(args[0].value))
        elif args and args[0].kind != "region":
            raise _fail(f"{func} takes a region id", line, col)
    elif func == "travelDuration":
        for i in (0, 1):
            if args[i].kind != "label":
                raise _fail("travelDuration takes two region ids", line, col)
            out[i] = ArgValue.region(str(args[i].value))
    elif func == "minTravelT":
        if args[0].kind == "label":
            out[0] = ArgValue.region(str(args[0].value))
        elif args[0].kind != "location":
            raise _fail("minTravelT takes a region id or point", line, col)
    elif func == "event":
        if args[0].kind != "label":
            raise _fail("event takes an event type name", line, col)
        out[0] = ArgValue.event(str(args[0].value))
    elif func == "countEvents":
        if args[0].kind != "label":
            raise _fail("countEvents: first argument must be an event type", line, col)
        out[0] = ArgValue.event(str(args[0].value))
        rest = args[1:]
        if len(rest) % 2 != 0:
            raise _fail("countEvents takes an event type plus (index, value) pairs", line, col)
        for k in range(0, len(rest), 2):
            idx = rest[k]
            if idx.kind != "number" or float(idx.value) != int(idx.value) or int(idx.value) < 1:
                raise _fail("countEvents: argument indexes must be positive integers", line, col)
    return tuple(out)


_TASK_ARITY: dict[TaskType, tuple[int, int]] = {
    TaskType.EXPLORE: (1, 1),
    TaskType.NAVIGATE: (1, 1),
    TaskType.RESCUE: (1, 1),
    TaskType.RENDEZVOUS: (3, 3),
    TaskType.RELAY: (2, 2),
    TaskType.RETURN: (0, 0),
    TaskType.WAIT: (1, 1),
}


def _check_task_args(call: TaskCall) -> None:
    lo, hi = _TASK_ARITY[call.task]
    if not (lo <= len(call.args) <= hi):
        want = str(lo) if lo == hi else f"{lo}..{hi}"
        raise _fail(f"{call.task.value} takes {want} arguments, got {len(call.args)}", call.line, call.col)
    a = call.args
    t = call.task
    if t is TaskType.EXPLORE and a[0].kind != "label":
        raise _fail("explore takes a region id", call.line, call.col)
    if t is TaskType.NAVIGATE and a[0].kind not in ("label", "location"):
        raise _fail("navigate takes a region id or a point", call.line, call.col)
    if t is TaskType.RESCUE and a[0].kind not in ("label", "unknown"):
        raise _fail("rescue takes a robot id or 'nearest'", call.line, call.col)
    if t is TaskType.RENDEZVOUS:
        if a[0].kind != "label":
            raise _fail("rendezvous: first argument must be a robot id", call.line, call.col)
        if a[1].kind not in ("label", "location"):
            raise _fail("rendezvous: second argument must be a region id or point", call.line, call.col)
        if a[2].kind != "window":
            raise _fail("rendezvous: third argument must be a [start, end] window", call.line, call.col)
    if t is TaskType.RELAY:
        if a[0].kind != "label":
            raise _fail("relay: first argument must be a robot id", call.line, call.col)
        if a[1].kind != "payload":
            raise _fail("relay: second argument must be a quoted instruction-set", call.line, call.col)
    if t is TaskType.WAIT and a[0].kind not in ("duration", "number"):
        raise _fail("wait takes a tick duration", call.line, call.col)


def _retag_task_args(call: TaskCall) -> tuple[ArgValue, ...]:
    a = list(call.args)
    t = call.task
    if t in (TaskType.EXPLORE, TaskType.NAVIGATE) and a[0].kind == "label":
        a[0] = ArgValue.region(str(a[0].value))
    elif t is TaskType.RESCUE and a[0].kind == "label":
        a[0] = ArgValue.robot(str(a[0].value))
    elif t is TaskType.RENDEZVOUS:
        a[0] = ArgValue.robot(str(a[0].value))
        if a[1].kind == "label":
            a[1] = ArgValue.region(str(a[1].value))
    elif t is TaskType.RELAY:
        a[0] = ArgValue.robot(str(a[0].value))
    return tuple(a)


def parse_instruction(text: str) -> Instruction:
    """Parse instruction-set text; raises InstructionError with line:col positions."""
    return _Parser(text).parse_instruction()


def collect_calls(c: Cond) -> Iterator[CCall]:
    if isinstance(c, CCall):
        yield c
    elif isinstance(c, CNot):
        yield from collect_calls(c.child)
    elif isinstance(c, (CAnd, COr)):
        yield from collect_calls(c.left)
        yield from collect_calls(c.right)
