"""Closed-form calculators: activation threshold, stability bounds,
two-route benchmark equilibrium with its leading-order predictions, and
the post-attack trust recovery law.

These are independent of the simulator; cross-checks between the two
live in the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


# ---------------------------------------------------------------------------
# Activation threshold
# ---------------------------------------------------------------------------

def error_scale(flows, costs, flags, class_demand: float) -> float:
    """First-day error per unit intensity: D = (1/Q) sum f_r w_r c_r."""
    if class_demand <= 0:
        raise ValueError("class demand must be positive")
    f = np.asarray(flows, dtype=float)
    return float(np.sum(f * np.asarray(flags) * np.asarray(costs)) / class_demand)


def gamma_hat(flows, costs, flags, epsilon: float, class_demand: float) -> float:
    """Smallest intensity that first-day error detection can notice.

    Returns math.inf when the class places no flow on flagged paths.
    """
    if epsilon <= 0:
        raise ValueError("tolerance must be positive")
    scale = error_scale(flows, costs, flags, class_demand)
    if scale <= 0.0:
        return math.inf
    return epsilon / scale


# ---------------------------------------------------------------------------
# Stability bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityInputs:
    b: float           # marginal cost slope (s per unit flow)
    l_psi: float       # Lipschitz bound of the route-choice response
    lambda_bar: float  # reliance cap
    c_max: float       # cost scale bound (s)
    forget: float      # evidence forgetting factor
    w_s: float
    w_f: float
    l_rho: float       # Lipschitz constant of the error response

    def validate(self) -> None:
        for name, v in self.__dict__.items():
            if v <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.forget < 1.0:
            raise ValueError("forget must lie in (0,1)")


def stability_bounds(inp: StabilityInputs):
    """(gamma1, gamma2, gamma_star); all None when 2 b L_psi >= 1."""
    inp.validate()
    bl = inp.b * inp.l_psi
    if 2.0 * bl >= 1.0:
        return None, None, None
    gamma1 = (1.0 - 2.0 * bl) / (
        inp.lambda_bar * (bl + inp.c_max * (1.0 - inp.forget) / inp.w_s))
    gamma2 = (1.0 - inp.forget) / (inp.w_f * inp.l_rho * inp.b * inp.l_psi)
    return gamma1, gamma2, min(gamma1, gamma2)


def lpsi_estimate(theta: float, delta: float = 0.0,
                  n_grid: int = 20001) -> float:
    """Max slope of the smoothed two-route choice response.

    The response is a binary logit applied to the cost difference after
    soft-shrinking it by the indifference band (differences within the
    band are progressively discounted): at delta=0 this is the pure
    logit with slope theta/4 at the origin; a wider band flattens the
    response, so the estimate is nonincreasing in delta.
    """
    if theta < 0 or delta < 0:
        raise ValueError("theta and delta must be nonnegative")
    if theta == 0.0:
        return 0.0
    if delta == 0.0:
        return theta / 4.0
    half = delta + 8.0 / theta
    grid = np.linspace(-half, half, n_grid)
    shrunk = grid - delta * np.tanh(grid / delta)
    resp = 1.0 / (1.0 + np.exp(np.clip(theta * shrunk, -700, 700)))
    slopes = np.abs(np.diff(resp) / np.diff(grid))
    return float(np.max(slopes))


# ---------------------------------------------------------------------------
# Two-route benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkClass:
    share: float
    theta: float
    lambda_bar: float
    trust0: float


@dataclass(frozen=True)
class TwoLinkSpec:
    c0: float
    b: float
    classes: tuple
    gamma: float
    demand: float = 1.0
    attacked: int = 0    # route index whose displayed cost is understated

    def validate(self) -> None:
        if self.b <= 0 or self.c0 <= 0:
            raise ValueError("need b > 0 and c0 > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0,1]")
        if self.attacked not in (0, 1):
            raise ValueError("attacked route index must be 0 or 1")
        if abs(self.demand - 1.0) > 1e-12:
            raise ValueError("benchmark formulas assume unit demand")
        if abs(sum(c.share for c in self.classes) - 1.0) > 1e-9:
            raise ValueError("class shares must sum to 1")


def compliance_index(classes) -> tuple:
    """(chi, theta_sum): trust-weighted and raw logit-sensitivity sums.

    Accepts BenchmarkClass instances or (share, theta, lambda_bar, trust0)
    tuples.
    """
    chi = 0.0
    theta_sum = 0.0
    total = 0.0
    for c in classes:
        share, theta, lam, t0 = (
            (c.share, c.theta, c.lambda_bar, c.trust0)
            if isinstance(c, BenchmarkClass) else tuple(c))
        chi += share * theta * lam * t0
        theta_sum += share * theta
        total += share
    if abs(total - 1.0) > 1e-9:
        raise ValueError("class shares must sum to 1")
    return chi, theta_sum


@dataclass
class TwoLinkResult:
    x_star: float          # equilibrium share on route 0
    iterations: int
    residual: float
    deviation_pred: float  # leading-order |x* - 1/2|
    poatt_pred: float      # leading-order relative excess TSTT
    chi: float
    theta_sum: float
    c_mid: float

    def tstt(self, x: float, spec: TwoLinkSpec) -> float:
        c1 = spec.c0 + spec.b * x
        c2 = spec.c0 + spec.b * (1.0 - x)
        return c1 * x + c2 * (1.0 - x)


_DAMPING = 0.5
_MAX_ITER = 100_000
_FP_TOL = 1e-12


def two_link_equilibrium(spec: TwoLinkSpec) -> TwoLinkResult:
    """Damped fixed point of the attacked multi-class logit split.

    Also evaluates the closed-form small-gamma predictions
    gamma c0_mid chi / (4 + 2 b Theta) for the deviation magnitude and
    2 b c0_mid chi^2 gamma^2 / (4 + 2 b Theta)^2 for relative excess
    TSTT, with c0_mid the symmetric-split cost.
    """
    spec.validate()
    discount = [c.lambda_bar * c.trust0 * spec.gamma for c in spec.classes]

    def response(x: float) -> float:
        c = (spec.c0 + spec.b * x, spec.c0 + spec.b * (1.0 - x))
        total = 0.0
        for k, cls in enumerate(spec.classes):
            z0 = c[0] * (1.0 - (discount[k] if spec.attacked == 0 else 0.0))
            z1 = c[1] * (1.0 - (discount[k] if spec.attacked == 1 else 0.0))
            total += cls.share / (1.0 + math.exp(cls.theta * (z0 - z1)))
        return total

    x = 0.5
    residual = math.inf
    for it in range(1, _MAX_ITER + 1):
        target = response(x)
        residual = abs(target - x)
        if residual < _FP_TOL:
            break
        x = x + _DAMPING * (target - x)
    else:
        raise RuntimeError(
            f"two-route fixed point did not converge; last residual {residual:.3e}")

    chi, theta_sum = compliance_index(spec.classes)
    c_mid = spec.c0 + spec.b / 2.0
    denom = 4.0 + 2.0 * spec.b * theta_sum
    deviation_pred = spec.gamma * c_mid * chi / denom
    poatt_pred = 2.0 * spec.b * c_mid * (chi * spec.gamma / denom) ** 2
    return TwoLinkResult(x_star=x, iterations=it, residual=residual,
                         deviation_pred=deviation_pred, poatt_pred=poatt_pred,
                         chi=chi, theta_sum=theta_sum, c_mid=c_mid)


# ---------------------------------------------------------------------------
# Recovery law
# ---------------------------------------------------------------------------

def recovery_closed_form(alpha0, beta0, w_s, forget, n: int) -> tuple:
    """Evidence n accurate days after the attack stops: (alpha_n, beta_n, T_n).

    Accepts scalars or broadcastable numpy arrays for the state/parameter
    arguments; ``n`` is a single day count.
    """
    if not np.all((0.0 < np.asarray(forget)) & (np.asarray(forget) < 1.0)):
        raise ValueError("forget must lie in (0,1)")
    if n < 0:
        raise ValueError("n must be nonnegative")
    attractor = w_s / (1.0 - forget)
    decay = forget ** n
    alpha_n = attractor + (alpha0 - attractor) * decay
    beta_n = beta0 * decay
    return alpha_n, beta_n, alpha_n / (alpha_n + beta_n)


def recovery_time_solver(alpha0: float, beta0: float, w_s: float,
                         forget: float, target_trust: float,
                         n_cap: int = 100_000):
    """Smallest n with T_n >= target; None if not reached within n_cap days."""
    if target_trust >= 1.0:
        return None
    for n in range(n_cap + 1):
        _, _, t_n = recovery_closed_form(alpha0, beta0, w_s, forget, n)
        if t_n >= target_trust:
            return n
    return None
