"""Named functions on the Hilbert ball used as cover targets.

Each target is vectorized over leading axes and maps B_1 into itself.
Registering by name lets a certificate say what it covers and lets
``verify`` recompute sampled residuals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Target:
    name: str
    fn: Callable
    text: str


def _sq(x):
    return np.sum(np.abs(x) ** 2, axis=-1, keepdims=True)


def bump(x):
    x = np.asarray(x)
    return (1 - _sq(x)) * x


def half(x):
    return 0.5 * np.asarray(x)


def identity(x):
    return np.asarray(x)


def radial_square(x):
    x = np.asarray(x)
    return np.sqrt(_sq(x)) * x


TARGETS = {
    t.name: t
    for t in (
        Target("bump", bump, "(1 - |x|^2) x"),
        Target("half", half, "x / 2"),
        Target("identity", identity, "x"),
        Target("radial_square", radial_square, "|x| x"),
    )
}
