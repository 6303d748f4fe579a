"""Small shared helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Divergent:
    """Marker returned by normalizer evaluators when the total mass is infinite."""

    reason: str

    def __bool__(self) -> bool:
        return False


def is_divergent(value) -> bool:
    return isinstance(value, Divergent)


def as_rng(seed_or_rng=None) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def as_function(value):
    """Wrap constants and mappings so they can be called like coefficient functions."""
    if callable(value):
        return value
    if isinstance(value, dict):
        return value.__getitem__
    return lambda *_: value
