"""Synthetic data: linked twist map orbits and two-regime sequences.

The linked twist map on the unit square is iterated as::

    s[i+1] = s[i] + r * t[i] * (1 - t[i])      mod 1
    t[i+1] = t[i] + r * s[i+1] * (1 - s[i+1])  mod 1

from a uniformly random start in [0, 1)^2. Random numbers come from
``numpy.random.default_rng(seed)`` (PCG64); sample ``k`` of a dataset uses
the seed ``seed + k`` so datasets can be generated in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ORBIT_R_VALUES",
    "OrbitSpec",
    "changepoint_sequence",
    "orbit",
    "orbit_dataset",
    "twist_orbit",
]

ORBIT_R_VALUES = (2.5, 3.5, 4.0, 4.1, 4.3)


@dataclass(frozen=True)
class OrbitSpec:
    r: float
    n_points: int
    seed: int = 0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")


def _mod1(x: float) -> float:
    return x - np.floor(x)


def twist_orbit(r: float, s0: float, t0: float, n_points: int) -> np.ndarray:
    """Iterate the map from ``(s0, t0)``; the start is the first row."""
    out = np.empty((n_points, 2))
    s, t = float(s0), float(t0)
    for i in range(n_points):
        out[i] = (s, t)
        s = _mod1(s + r * t * (1.0 - t))
        t = _mod1(t + r * s * (1.0 - s))
    return out


def orbit(spec: OrbitSpec) -> np.ndarray:
    """Orbit of ``spec.n_points`` points from a seeded uniform start."""
    rng = np.random.default_rng(spec.seed)
    s0, t0 = rng.random(2)
    return twist_orbit(spec.r, s0, t0, spec.n_points)


def orbit_dataset(r_values=ORBIT_R_VALUES, per_class: int = 1, n_points: int = 1000, seed: int = 0):
    """``per_class`` orbits for each ``r``; labels index into ``r_values``.

    Returns a list of ``(cloud, label)`` ordered class by class.
    """
    r_values = list(r_values)
    if not r_values:
        raise ValueError("r_values must be non-empty")
    out = []
    k = 0
    for label, r in enumerate(r_values):
        for _ in range(per_class):
            out.append((orbit(OrbitSpec(float(r), n_points, seed + k)), label))
            k += 1
    return out


def changepoint_sequence(r_before: float, r_after: float, n_before: int, n_after: int,
                         n_points: int = 200, seed: int = 0) -> list[np.ndarray]:
    """Orbits from regime ``r_before`` followed by regime ``r_after``.

    The true change index (first sample of the second regime, 0-based) is
    ``n_before``.
    """
    if n_before < 2 or n_after < 2:
        raise ValueError("each regime needs at least 2 samples")
    rs = [r_before] * n_before + [r_after] * n_after
    return [orbit(OrbitSpec(float(r), n_points, seed + k)) for k, r in enumerate(rs)]
