"""Counter-based random draws for the simulation kernel.

Every stochastic decision is a pure function of
(masterSeed, episode, tick-or-leg counter, robot, channel) pushed through a
splitmix64-style avalanche. Draws are therefore independent of evaluation
order, episodes own disjoint streams by construction, and the numba and
plain-numpy backends produce bitwise-identical values.

The numpy path emits RuntimeWarnings on wrapping uint64 multiplies (the
wrap itself is correct); kernel entry points run under
np.errstate(over="ignore") to keep that quiet.
"""

import numpy as np

from .backend import maybe_njit

U64 = np.uint64

GOLD = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_INV53 = np.float64(1.0 / 9007199254740992.0)  # 2**-53

# Draw channels. Speed is keyed by per-robot leg counter, everything else by
# the tick being produced.
CH_DISABLE = 0
CH_SPEED = 1
CH_RESCUE = 2
CH_EVENT0 = 4  # environmental event type k uses channel CH_EVENT0 + k


@maybe_njit(cache=True)
def mix64(h):
    h = U64(h)
    h = (h ^ (h >> U64(30))) * _M1
    h = (h ^ (h >> U64(27))) * _M2
    return h ^ (h >> U64(31))


@maybe_njit(cache=True)
def draw_u64(master, episode, key, robot, channel):
    """One 64-bit word for the (episode, key, robot, channel) draw site."""
    h = U64(master)
    h = mix64(h ^ (U64(episode) + GOLD))
    h = mix64(h ^ (U64(key) + GOLD))
    h = mix64(h ^ (U64(robot) + GOLD))
    h = mix64(h ^ (U64(channel) + GOLD))
    return h


@maybe_njit(cache=True)
def draw_uniform(master, episode, key, robot, channel):
    """Uniform float64 in [0, 1) with 53 random bits."""
    return np.float64(draw_u64(master, episode, key, robot, channel) >> U64(11)) * _INV53
