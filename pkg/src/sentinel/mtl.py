"""Metric temporal logic over finite mission traces.

Formulas are evaluated on finite traces with end-of-mission stuttering: the
final snapshot conceptually repeats forever, so every operator has a defined
value at every position. Intervals are inclusive [lo, hi] tick offsets
relative to the evaluation position; an omitted interval means [0, inf).

Semantics at position t:
  X f          : f at t+1
  F[a,b] f     : exists s in [t+a, t+b] with f at s
  G[a,b] f     : f at every s in [t+a, t+b]
  f U[a,b] g   : exists s with s-t in [a, b], g at s, and f at every u with t < u < s
  [{k}]        : the singleton interval [k, k]

The production evaluator computes whole truth vectors bottom-up over a
batch of traces at once (numpy, one column per tick, one row per episode),
which is what makes ensemble probability estimation cheap. Probability
queries P[cmp threshold] compare a Monte-Carlo estimate of the satisfaction
probability at tick 0 against the threshold; estimates carry Wilson score
confidence intervals.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

import numpy as np

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


# --- Formula AST ------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: int
    hi: int | None  # None = unbounded

    def __post_init__(self):
        if self.lo < 0:
            raise MtlError(f"interval lower bound must be >= 0, got {self.lo}")
        if self.hi is not None and self.hi < self.lo:
            raise MtlError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def unbounded() -> "Interval":
        return Interval(0, None)

    @staticmethod
    def point(k: int) -> "Interval":
        return Interval(k, k)

    def is_unbounded_default(self) -> bool:
        return self.lo == 0 and self.hi is None

    def to_text(self) -> str:
        if self.is_unbounded_default():
            return ""
        if self.hi is not None and self.hi == self.lo:
            return f"[{{{self.lo}}}]"
        hi = "inf" if self.hi is None else str(self.hi)
        return f"[{self.lo},{hi}]"


class Formula:
    """Base class; nodes are frozen dataclasses and compare structurally."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Prop(Formula):
    """Atomic proposition, keyed by its canonical name.

    term carries the parsed snapshot expression for binder layers; a bare
    name (term None) must be bound externally.
    """

    name: str
    term: "PropTerm | None" = field(default=None, compare=False)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    interval: Interval
    child: Formula


@dataclass(frozen=True)
class Always(Formula):
    interval: Interval
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    interval: Interval
    left: Formula
    right: Formula


@dataclass(frozen=True)
class MtlQuery:
    """P[cmp threshold] formula: a probability threshold over satisfaction at tick 0."""

    cmp: str  # one of >=, >, <=, <
    threshold: float
    formula: Formula

    def to_text(self) -> str:
        return f"P[{self.cmp} {_fmt_num(self.threshold)}] {to_text(self.formula)}"


class MtlError(ValueError):
    pass


# --- Snapshot proposition terms ---------------------------------------------

# Functions usable as atomic propositions, with their argument layout. The
# binder layers (object traces and compact trace batches) interpret these;
# the evaluator itself only sees named bool vectors.
PROP_FUNCS = {
    "state": ("robot",),
    "at": None,  # at(robot, region) or at(robot, x, y[, eps])
    "riskyAt": ("robot",),
    "countExploring": ("region",),
    "countNearby": ("robot", "state", "number"),
    "nearby": ("robot", "state", "number"),
    "countEvents": None,  # countEvents(robot, type[, idx, value]...)
    "event": ("robot", "event"),
    "toRend": ("robot",),
    "endRend": ("robot",),
    "isNav": ("robot",),
    "tick": (),
}

NUMERIC_PROP_FUNCS = {"countExploring", "countNearby", "countEvents", "tick"}


@dataclass(frozen=True)
class PropTerm:
    """Parsed atomic term: func(args) optionally compared against rhs."""

    func: str
    args: tuple[Any, ...] = ()
    cmp: str | None = None
    rhs: Any = None

    def to_text(self) -> str:
        inner = ",".join(_fmt_arg(a) for a in self.args)
        base = self.func if self.func == "var" else f"{self.func}({inner})"
        if self.func == "var":
            base = self.args[0]
        if self.cmp is None:
            return base
        return f"{base} {self.cmp} {_fmt_arg(self.rhs)}"


def _fmt_num(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return repr(x)


def _fmt_arg(a: Any) -> str:
    if isinstance(a, float):
        return _fmt_num(a)
    return str(a)


# --- Parser -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d+|\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_-]*)"
    r"|(?P<op>->|>=|<=|!=|[()\[\]{},&|!<>=]))"
)

_KEYWORDS = {"U", "F", "G", "X", "P", "true", "false", "inf", "and", "or", "not"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise MtlError(f"unexpected character {text[pos]!r} at column {pos}")
        pos = m.end()
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start()))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start()))
        else:
            tokens.append(("op", m.group("op"), m.start()))
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, col = self.next()
        if val != value:
            raise MtlError(f"expected {value!r} at column {col}, got {val!r}")

    def at(self, value: str) -> bool:
        return self.peek()[1] == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.next()
            return True
        return False

    # query := 'P' '[' cmp num ']' formula
    def parse_query(self) -> MtlQuery:
        self.expect("P")
        self.expect("[")
        kind, cmp_op, col = self.next()
        if cmp_op not in (">=", ">", "<=", "<"):
            raise MtlError(f"expected probability comparator at column {col}, got {cmp_op!r}")
        kind, val, col = self.next()
        if kind != "num":
            raise MtlError(f"expected probability threshold at column {col}")
        threshold = float(val)
        if not (0.0 <= threshold <= 1.0):
            raise MtlError(f"probability threshold out of [0,1]: {threshold}")
        self.expect("]")
        f = self.parse_formula()
        self.expect("")
        return MtlQuery(cmp_op, threshold, f)

    def parse_formula(self) -> Formula:
        return self._implies()

    def _implies(self) -> Formula:
        left = self._or()
        if self.accept("->"):
            return Implies(left, self._implies())
        return left

    def _or(self) -> Formula:
        f = self._and()
        while self.at("|") or self.at("or"):
            self.next()
            f = Or(f, self._and())
        return f

    def _and(self) -> Formula:
        f = self._until()
        while self.at("&") or self.at("and"):
            self.next()
            f = And(f, self._until())
        return f

    def _until(self) -> Formula:
        f = self._unary()
        if self.at("U"):
            self.next()
            iv = self._interval()
            return Until(iv, f, self._unary())
        return f

    def _unary(self) -> Formula:
        kind, val, col = self.peek()
        if val in ("!", "not"):
            self.next()
            return Not(self._unary())
        if val == "F":
            self.next()
            return Eventually(self._interval(), self._unary())
        if val == "G":
            self.next()
            return Always(self._interval(), self._unary())
        if val == "X":
            self.next()
            return Next(self._unary())
        return self._atom()

    def _interval(self) -> Interval:
        if not self.at("["):
            return Interval.unbounded()
        self.expect("[")
        if self.accept("{"):
            kind, val, col = self.next()
            if kind != "num":
                raise MtlError(f"expected tick count at column {col}")
            self.expect("}")
            self.expect("]")
            return Interval.point(int(val))
        kind, lo, col = self.next()
        if kind != "num":
            raise MtlError(f"expected interval bound at column {col}")
        self.expect(",")
        kind, hi, col = self.next()
        if kind == "name" and hi == "inf":
            bound: int | None = None
        elif kind == "num":
            bound = int(hi)
        else:
            raise MtlError(f"expected interval upper bound at column {col}")
        self.expect("]")
        return Interval(int(lo), bound)

    def _atom(self) -> Formula:
        kind, val, col = self.peek()
        if val == "(":
            self.next()
            f = self.parse_formula()
            self.expect(")")
            return f
        if val == "true":
            self.next()
            return TrueF()
        if val == "false":
            self.next()
            return FalseF()
        if kind != "name":
            raise MtlError(f"expected proposition at column {col}, got {val!r}")
        return self._prop()

    def _prop(self) -> Prop:
        kind, fname, col = self.next()
        if fname in _KEYWORDS:
            raise MtlError(f"keyword {fname!r} cannot start a proposition (column {col})")
        args: tuple[Any, ...] = ()
        func = "var"
        if self.at("("):
            if fname not in PROP_FUNCS:
                raise MtlError(f"unknown proposition function {fname!r} at column {col}")
            func = fname
            self.next()
            arglist: list[Any] = []
            if not self.at(")"):
                while True:
                    akind, aval, acol = self.next()
                    if akind == "num":
                        arglist.append(float(aval))
                    elif akind == "name":
                        arglist.append(aval)
                    else:
                        raise MtlError(f"bad proposition argument at column {acol}")
                    if not self.accept(","):
                        break
            self.expect(")")
            args = tuple(arglist)
        else:
            args = (fname,)
        cmp_op: str | None = None
        rhs: Any = None
        if self.peek()[1] in (">=", ">", "<=", "<", "=", "!="):
            cmp_op = self.next()[1]
            rkind, rval, rcol = self.next()
            if rkind == "num":
                rhs = float(rval)
            elif rkind == "name":
                rhs = rval
            else:
                raise MtlError(f"bad comparison operand at column {rcol}")
        term = PropTerm(func, args, cmp_op, rhs)
        _check_prop_term(term, col)
        return Prop(term.to_text(), term)


def _check_prop_term(term: PropTerm, col: int) -> None:
    if term.func == "var":
        if term.cmp is not None:
            raise MtlError(f"bare proposition {term.args[0]!r} cannot be compared (column {col})")
        return
    numeric = term.func in NUMERIC_PROP_FUNCS
    if numeric and term.cmp is None:
        raise MtlError(f"{term.func}(...) is numeric and needs a comparison (column {col})")
    if term.func == "state" and term.cmp not in ("=", "!="):
        raise MtlError(f"state(...) must be compared with = or != (column {col})")
    if not numeric and term.func != "state" and term.cmp is not None:
        raise MtlError(f"{term.func}(...) is boolean and takes no comparison (column {col})")


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    f = p.parse_formula()
    p.expect("")
    return f


def parse_query(text: str) -> MtlQuery:
    return _Parser(text).parse_query()


# --- Printing ---------------------------------------------------------------


def to_text(f: Formula) -> str:
    return _print(f, 0)


_PREC = {Implies: 1, Or: 2, And: 3, Until: 4}


def _print(f: Formula, parent_prec: int) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, Not):
        return "!" + _print(f.child, 9)
    if isinstance(f, Next):
        return "X " + _print(f.child, 9)
    if isinstance(f, Eventually):
        return "F" + f.interval.to_text() + " " + _print(f.child, 9)
    if isinstance(f, Always):
        return "G" + f.interval.to_text() + " " + _print(f.child, 9)
    if isinstance(f, (And, Or, Implies, Until)):
        prec = _PREC[type(f)]
        if isinstance(f, Until):
            body = _print(f.left, prec + 1) + " U" + f.interval.to_text() + " " + _print(f.right, prec + 1)
        else:
            op = {And: "&", Or: "|", Implies: "->"}[type(f)]
            right_prec = prec if isinstance(f, Implies) else prec + 1
            left_prec = prec + 1 if isinstance(f, Implies) else prec
            body = _print(f.left, left_prec) + f" {op} " + _print(f.right, right_prec)
        if prec < parent_prec:
            return "(" + body + ")"
        return body
    raise TypeError(f"unknown formula node {type(f).__name__}")


def collect_props(f: Formula) -> Iterator[Prop]:
    if isinstance(f, Prop):
        yield f
    elif isinstance(f, (Not, Next, Eventually, Always)):
        yield from collect_props(f.child)
    elif isinstance(f, (And, Or, Implies, Until)):
        yield from collect_props(f.left)
        yield from collect_props(f.right)


# --- Evaluation -------------------------------------------------------------

_INF = 1 << 30


def eval_matrix(f: Formula, props: dict[str, np.ndarray]) -> np.ndarray:
    """Truth matrix of f: shape (episodes, ticks), entry [e, t] = truth at t.

    Proposition matrices must share one shape and already encode per-episode
    stuttering (each episode's final snapshot value repeated through the
    last column).
    """
    shape = next(iter(props.values())).shape if props else None
    if shape is None:
        raise MtlError("formula evaluation needs at least one bound proposition matrix")
    return _eval_vec(f, props, shape)


def _eval_vec(f: Formula, props: dict[str, np.ndarray], shape: tuple[int, int]) -> np.ndarray:
    E, n_cols = shape
    T = n_cols - 1
    if isinstance(f, TrueF):
        return np.ones(shape, dtype=bool)
    if isinstance(f, FalseF):
        return np.zeros(shape, dtype=bool)
    if isinstance(f, Prop):
        try:
            v = props[f.name]
        except KeyError:
            raise MtlError(f"unbound proposition {f.name!r}") from None
        if v.shape != shape:
            raise MtlError(f"proposition {f.name!r} has shape {v.shape}, expected {shape}")
        return v.astype(bool, copy=False)
    if isinstance(f, Not):
        return ~_eval_vec(f.child, props, shape)
    if isinstance(f, And):
        return _eval_vec(f.left, props, shape) & _eval_vec(f.right, props, shape)
    if isinstance(f, Or):
        return _eval_vec(f.left, props, shape) | _eval_vec(f.right, props, shape)
    if isinstance(f, Implies):
        return (~_eval_vec(f.left, props, shape)) | _eval_vec(f.right, props, shape)
    if isinstance(f, Next):
        v = _eval_vec(f.child, props, shape)
        return np.concatenate([v[:, 1:], v[:, -1:]], axis=1)
    if isinstance(f, Eventually):
        v = _eval_vec(f.child, props, shape)
        return _window_any(v, f.interval, T)
    if isinstance(f, Always):
        v = _eval_vec(f.child, props, shape)
        return ~_window_any(~v, f.interval, T)
    if isinstance(f, Until):
        return _until(
            _eval_vec(f.left, props, shape),
            _eval_vec(f.right, props, shape),
            f.interval,
            T,
        )
    raise TypeError(f"unknown formula node {type(f).__name__}")


def _window_any(v: np.ndarray, iv: Interval, T: int) -> np.ndarray:
    """For each t: any(v at s) for s in [t+lo, t+hi], indices clamped to T (stuttering)."""
    t_arr = np.arange(T + 1)
    a = np.minimum(t_arr + iv.lo, T)
    b = np.minimum(t_arr + (iv.hi if iv.hi is not None else _INF), T)
    csum = np.cumsum(v.astype(np.int64), axis=1)
    upper = csum[:, b]
    lower = np.where(a > 0, csum[:, np.maximum(a - 1, 0)], 0)
    return (upper - lower) > 0


def _until(phi: np.ndarray, psi: np.ndarray, iv: Interval, T: int) -> np.ndarray:
    """exists s, s-t in [lo, hi]: psi at s and phi at all u with t < u < s."""
    E = phi.shape[0]
    t_arr = np.arange(T + 1)

    # fail[e, t] = first index u >= t where phi is false (clamped trace), else INF.
    fail = np.full((E, T + 1), _INF, dtype=np.int64)
    idx = np.where(phi[:, T], _INF, T)
    fail[:, T] = idx
    for t in range(T - 1, -1, -1):
        fail[:, t] = np.where(phi[:, t], fail[:, t + 1], t)

    # First phi-failure strictly after t, accounting for the stuttered tail:
    # past T the trace repeats column T, so if phi[T] is false the failure
    # shows up at T+1 when t = T.
    fail_next = np.empty_like(fail)
    fail_next[:, :T] = fail[:, 1:]
    fail_next[:, T] = np.where(phi[:, T], _INF, T + 1)

    a = t_arr + iv.lo  # (T+1,) broadcast over episodes
    hi = iv.hi if iv.hi is not None else _INF
    b = np.minimum(np.minimum(t_arr + hi, _INF), fail_next)  # (E, T+1)

    csum = np.cumsum(psi.astype(np.int64), axis=1)
    b_cl = np.minimum(b, T)
    a_cl = np.minimum(a, T)
    upper = np.take_along_axis(csum, b_cl, axis=1)
    lower = np.where(a_cl > 0, np.take_along_axis(csum, np.maximum(a_cl - 1, 0)[None, :].repeat(E, 0), axis=1), 0)
    any_psi = (upper - lower) > 0
    return (a[None, :] <= b) & any_psi


def eval_at(f: Formula, props: dict[str, np.ndarray], t: int = 0) -> np.ndarray:
    """Truth of f at position t for every episode; t past the end reads the stuttered value."""
    m = eval_matrix(f, props)
    return m[:, min(t, m.shape[1] - 1)]


# --- Probability estimation ---------------------------------------------------


def wilson_interval(successes: int, n: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return (0.0, 1.0)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class EstimateResult:
    """Probability estimate for one formula over an episode ensemble.

    For smart (rare-event forced) runs, p_hat = conditional_p_hat *
    event_prob and the forced site names are recorded; for plain runs the
    conditional fields stay None and p_hat = successes / n.
    """

    formula: str
    n_episodes: int
    successes: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    method: str = "monte-carlo"
    conditional_p_hat: float | None = None
    event_prob: float | None = None
    forced_events: tuple[str, ...] = ()
    truncated_episodes: int = 0
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "formula": self.formula,
            "episodes": self.n_episodes,
            "successes": self.successes,
            "pHat": self.p_hat,
            "ci95": [self.ci_lo, self.ci_hi],
            "method": self.method,
        }
        if self.conditional_p_hat is not None:
            out["conditionalPHat"] = self.conditional_p_hat
            out["eventProb"] = self.event_prob
            out["forcedEvents"] = list(self.forced_events)
        if self.truncated_episodes:
            out["truncatedEpisodes"] = self.truncated_episodes
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def estimate_probability(
    f: Formula,
    props: dict[str, np.ndarray],
    truncated: np.ndarray | None = None,
) -> EstimateResult:
    """Estimate P(f at tick 0) over an ensemble given bound proposition matrices."""
    sat = eval_at(f, props, 0)
    n = int(sat.shape[0])
    successes = int(np.count_nonzero(sat))
    p = successes / n if n else 0.0
    lo, hi = wilson_interval(successes, n)
    n_trunc = int(np.count_nonzero(truncated)) if truncated is not None else 0
    warns: tuple[str, ...] = ()
    if n_trunc:
        warns = (
            f"{n_trunc} episode(s) hit the tick limit before all robots terminated; "
            "eventualities are scored on the observed prefix only",
        )
    return EstimateResult(
        formula=to_text(f),
        n_episodes=n,
        successes=successes,
        p_hat=p,
        ci_lo=lo,
        ci_hi=hi,
        truncated_episodes=n_trunc,
        warnings=warns,
    )


_CMP_FUNCS: dict[str, Callable[[float, float], bool]] = {
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
}


def check_query(query: MtlQuery, result: EstimateResult) -> bool:
    """Whether the estimated probability satisfies the query's threshold comparison."""
    return _CMP_FUNCS[query.cmp](result.p_hat, query.threshold)
