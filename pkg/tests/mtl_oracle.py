"""Brute-force reference evaluator for metric temporal logic on finite traces.

Deliberately naive: direct recursion over the defining semantics, explicit
loops over witness positions, index clamping for end-of-trace stuttering.
Kept independent of the production evaluator (which is vectorized and
incremental) so the two can be compared on random cases.

Propositions are given as plain Python bool lists covering ticks 0..t_end;
positions past t_end repeat the final value (stuttering).
"""

from __future__ import annotations

from sentinel.mtl import (
    Always,
    And,
    Eventually,
    FalseF,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    Prop,
    TrueF,
    Until,
)

Props = dict[str, list[bool]]


def oracle_eval(f: Formula, props: Props, t: int, t_end: int, _memo: dict | None = None) -> bool:
    """Truth of f at position t on the stuttered finite trace."""
    if _memo is None:
        _memo = {}
    key = (id(f), t)
    if key in _memo:
        return _memo[key]
    result = _eval(f, props, t, t_end, _memo)
    _memo[key] = result
    return result


def _lookup(props: Props, name: str, s: int, t_end: int) -> bool:
    return props[name][min(s, t_end)]


def _eval(f: Formula, props: Props, t: int, t_end: int, memo: dict) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Prop):
        return _lookup(props, f.name, t, t_end)
    if isinstance(f, Not):
        return not oracle_eval(f.child, props, t, t_end, memo)
    if isinstance(f, And):
        return oracle_eval(f.left, props, t, t_end, memo) and oracle_eval(f.right, props, t, t_end, memo)
    if isinstance(f, Or):
        return oracle_eval(f.left, props, t, t_end, memo) or oracle_eval(f.right, props, t, t_end, memo)
    if isinstance(f, Implies):
        return (not oracle_eval(f.left, props, t, t_end, memo)) or oracle_eval(f.right, props, t, t_end, memo)
    if isinstance(f, Next):
        return oracle_eval(f.child, props, t + 1, t_end, memo)
    if isinstance(f, Eventually):
        lo, hi = f.interval.lo, f.interval.hi
        first = t + lo
        # Positions at or past t_end all have the same truth value, so one
        # representative position there is enough.
        cap = max(t_end, first)
        last = cap if hi is None else min(t + hi, cap)
        for s in range(first, last + 1):
            if oracle_eval(f.child, props, s, t_end, memo):
                return True
        return False
    if isinstance(f, Always):
        lo, hi = f.interval.lo, f.interval.hi
        first = t + lo
        cap = max(t_end, first)
        last = cap if hi is None else min(t + hi, cap)
        for s in range(first, last + 1):
            if not oracle_eval(f.child, props, s, t_end, memo):
                return False
        return True
    if isinstance(f, Until):
        lo, hi = f.interval.lo, f.interval.hi
        first = t + lo
        # Smallest witness dominates: if any s > max(t_end + 1, first) works,
        # so does the earliest in-window position at or past t_end + 1.
        cap = max(t_end + 1, first)
        last = cap if hi is None else min(t + hi, cap)
        for s in range(first, last + 1):
            if not oracle_eval(f.right, props, s, t_end, memo):
                continue
            if all(oracle_eval(f.left, props, u, t_end, memo) for u in range(t + 1, s)):
                return True
        return False
    raise TypeError(f"unknown formula node {type(f).__name__}")
