"""Beta-evidence trust dynamics.

Each traveler class carries an evidence pair (alpha, beta). Expected trust
is alpha / (alpha + beta). Every day the flow-weighted guidance error is
classified against the class accuracy tolerance; a success reinforces
alpha, a failure reinforces beta, and both decay with a forgetting factor.
Failures are weighted more heavily than successes (w_f > w_s), which makes
trust erode faster than it rebuilds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: tiny initial failure evidence so T is defined (and ~1) on day one
BETA_SEED = 1e-6


@dataclass(frozen=True)
class TrustState:
    """Per-class evidence arrays; ``trust()`` derives T = alpha/(alpha+beta)."""

    alpha: np.ndarray
    beta: np.ndarray

    def trust(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)


def initial_state(w_s: np.ndarray, forget: float) -> TrustState:
    """Start at the accurate-guidance attractor alpha = w_s/(1-forget).

    A seed beta keeps alpha+beta positive, so initial trust is just
    below 1 rather than 0/0.
    """
    alpha0 = np.asarray(w_s, dtype=float) / (1.0 - forget)
    beta0 = np.full_like(alpha0, BETA_SEED)
    return TrustState(alpha=alpha0, beta=beta0)


def guidance_error(flows, guidance, experienced, class_demand) -> np.ndarray:
    """Flow-weighted mean absolute gap between displayed and experienced cost.

    flows: (K, P) per-class path flows; guidance/experienced: (P,) costs;
    class_demand: (K,) total demand per class, must be positive.
    """
    flows = np.asarray(flows, dtype=float)
    gap = np.abs(np.asarray(guidance, dtype=float) - np.asarray(experienced, dtype=float))
    q = np.asarray(class_demand, dtype=float)
    if np.any(q <= 0):
        raise ValueError("every class with positive share needs positive demand")
    return flows @ gap / q


def classify(error, tolerance) -> np.ndarray:
    """1 when the error is within tolerance, else 0. Ties (e == eps) count
    as accurate; the rule is fixed so runs are deterministic."""
    return (np.asarray(error, dtype=float) <= np.asarray(tolerance, dtype=float)).astype(float)


def update_evidence(state: TrustState, xi, forget: float, w_s, w_f) -> TrustState:
    """One evidence step: alpha' = forget*alpha + w_s*xi, beta' = forget*beta + w_f*(1-xi)."""
    xi = np.asarray(xi, dtype=float)
    alpha = forget * state.alpha + np.asarray(w_s, dtype=float) * xi
    beta = forget * state.beta + np.asarray(w_f, dtype=float) * (1.0 - xi)
    return TrustState(alpha=alpha, beta=beta)


def reliance(trust_value, reliance_cap) -> np.ndarray:
    """Guidance reliance: the class cap scaled by current trust."""
    return np.asarray(reliance_cap, dtype=float) * np.asarray(trust_value, dtype=float)
