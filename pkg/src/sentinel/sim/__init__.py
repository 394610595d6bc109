"""Compiled mission simulation: RNG, arena compiler, tick kernel, estimators."""

from .backend import BACKEND, maybe_njit

__all__ = ["BACKEND", "maybe_njit"]
