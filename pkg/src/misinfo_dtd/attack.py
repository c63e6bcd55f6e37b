"""Recommendation-layer misinformation on the guidance signal.

The attack understates the displayed cost of every path that traverses at
least one targeted link, by a fraction gamma, on days inside the attack
window. It touches only the displayed costs, never the traffic state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netio import NetworkModel, TargetSet


@dataclass(frozen=True)
class AttackSpec:
    """Intensity, targeted links, and active-day window (inclusive)."""

    gamma: float
    targets: TargetSet
    day_start: int
    day_end: int

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"attack intensity {self.gamma} outside [0, 1]")
        if self.day_start > self.day_end:
            raise ValueError("attack window start exceeds end")

    def active(self, day: int) -> bool:
        return self.day_start <= day <= self.day_end


def path_flags(net: NetworkModel, targets: TargetSet) -> np.ndarray:
    """0/1 per flattened path: 1 iff the path uses a targeted link."""
    hit = set(targets.link_ids)
    flags = [1.0 if hit.intersection(path.links) else 0.0
             for od_paths in net.paths for path in od_paths]
    return np.asarray(flags, dtype=float)


def guidance_signal(experienced, spec: AttackSpec, flags, day: int) -> np.ndarray:
    """Displayed costs: (1 - gamma) * c on flagged paths while the attack
    is live, the true costs otherwise."""
    c = np.asarray(experienced, dtype=float)
    if spec.gamma == 0.0 or not spec.active(day):
        return c
    return c * (1.0 - spec.gamma * np.asarray(flags, dtype=float))
