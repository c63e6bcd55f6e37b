"""Day-to-day learning and route choice.

Perceived costs blend yesterday's perception with a convex mix of the
experienced cost and the guidance signal, weighted by the class reliance.
Route choice is multinomial logit restricted to a bounded-rationality
admissible set: only paths within an indifference band of the perceived
best are considered.

Paths for all OD pairs live on one flattened axis; ``od_starts`` holds the
first path index of each OD segment (paths of one OD are contiguous).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClassProfile:
    """Behavioral parameters of one traveler class."""

    name: str
    share: float          # population fraction, shares sum to 1
    delta: float          # indifference band (s)
    theta: float          # logit sensitivity (1/s)
    lambda_bar: float     # max guidance reliance in [0, 1]
    w_f: float            # failure evidence weight
    w_s: float            # success evidence weight, w_f >= w_s > 0
    epsilon: float        # guidance accuracy tolerance (s)

    def validate(self) -> None:
        if not 0.0 <= self.share <= 1.0:
            raise ValueError(f"class {self.name}: share {self.share} outside [0, 1]")
        if self.delta < 0:
            raise ValueError(f"class {self.name}: negative indifference band")
        if self.theta < 0:
            raise ValueError(f"class {self.name}: negative logit sensitivity")
        if not 0.0 <= self.lambda_bar <= 1.0:
            raise ValueError(f"class {self.name}: reliance cap outside [0, 1]")
        if not self.w_f >= self.w_s > 0:
            raise ValueError(f"class {self.name}: needs w_f >= w_s > 0")
        if self.epsilon <= 0:
            raise ValueError(f"class {self.name}: accuracy tolerance must be positive")


def segment_lengths(od_starts: np.ndarray, n_paths: int) -> np.ndarray:
    return np.diff(np.append(od_starts, n_paths))


def _spread(per_od: np.ndarray, od_starts: np.ndarray, n_paths: int) -> np.ndarray:
    """Broadcast one value per OD segment back onto the path axis."""
    return np.repeat(per_od, segment_lengths(od_starts, n_paths), axis=-1)


def _per_class(param, costs_ndim: int):
    """Promote a per-class parameter vector for broadcasting against (K, P)."""
    arr = np.asarray(param, dtype=float)
    if costs_ndim == 2 and arr.ndim == 1:
        return arr[:, None]
    return arr


def update_perceived(prev, experienced, guidance, reliance_k, memory: float):
    """Blend memory, experience, and guidance into next perceived costs.

    Works per class (prev (P,), scalar reliance) or batched (prev (K, P),
    reliance (K,)). experienced/guidance are (P,).
    """
    prev = np.asarray(prev, dtype=float)
    c = np.asarray(experienced, dtype=float)
    guide = np.asarray(guidance, dtype=float)
    lam = _per_class(reliance_k, prev.ndim)
    if prev.shape[-1] != c.shape[0] or c.shape != guide.shape:
        raise ValueError("perceived/experienced/guidance dimensions disagree")
    return memory * prev + (1.0 - memory) * ((1.0 - lam) * c + lam * guide)


def admissible_mask(perceived, delta_k, od_starts) -> np.ndarray:
    """Paths within the class indifference band of the per-OD perceived best.

    The band is inclusive, so the mask always contains the argmin.
    """
    perceived = np.asarray(perceived, dtype=float)
    n_paths = perceived.shape[-1]
    best = np.minimum.reduceat(perceived, od_starts, axis=-1)
    band = _spread(best, od_starts, n_paths) + _per_class(delta_k, perceived.ndim)
    return perceived <= band


def mnl_probabilities(perceived, mask, theta_k, od_starts) -> np.ndarray:
    """Logit probabilities over the admissible set, per class and OD.

    Costs are shifted by the per-OD minimum before exponentiation; the
    shift cancels in the ratio, so probabilities are invariant to adding
    a constant to all costs of an OD.
    """
    perceived = np.asarray(perceived, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    n_paths = perceived.shape[-1]
    best = _spread(np.minimum.reduceat(perceived, od_starts, axis=-1), od_starts, n_paths)
    weight = np.exp(-_per_class(theta_k, perceived.ndim) * (perceived - best))
    weight = np.where(mask, weight, 0.0)
    total = _spread(np.add.reduceat(weight, od_starts, axis=-1), od_starts, n_paths)
    return weight / total


def next_day_flows(probabilities, od_demand, shares, od_starts) -> np.ndarray:
    """Assign class demand to paths: f_r^k = share_k * q_w * P_r^k.

    probabilities: (K, P); od_demand: (n_od,); shares: (K,). Returns (K, P).
    """
    probabilities = np.asarray(probabilities, dtype=float)
    q = np.asarray(od_demand, dtype=float)
    shares = np.asarray(shares, dtype=float)
    n_paths = probabilities.shape[-1]
    class_demand = shares[:, None] * _spread(q[None, :], od_starts, n_paths)
    return class_demand * probabilities
