"""Parameters, state and closed-form solutions of the intention/nudge model.

Each individual ``i`` carries a behavioral intention ``x_i`` in (-1, 1) and a
nudge ``y_i`` in [0, 1].  Between actions

    dx_i/dt = [sA*alpha_i + sS*(gamma_i - muS)] * sC*(gamma_i + muC) * (1 - x_i^2)
    dy_i/dt = -r * y_i

where ``gamma_i`` is the mean nudge of everybody else.  When ``x_i`` reaches the
threshold ``tau`` it is reset to 0 and ``y_i`` jumps to 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ParameterError",
    "DomainError",
    "NoPeriodError",
    "GlobalParams",
    "IndividualConfig",
    "SystemState",
    "TwoBodyConstants",
    "margin",
    "gamma",
    "vector_field",
    "apply_reset",
    "tanh_solution",
    "first_action_time",
    "two_body_solution",
]

# 1 - |u| below this is treated as having left the open interval (-1, 1).
EDGE_EPS = 1e-12


class ParameterError(ValueError):
    """A parameter violates its admissible range."""


class DomainError(ValueError):
    """An argument falls outside the domain of a closed-form expression."""


class NoPeriodError(DomainError):
    """The leading individual has a non-positive rate, so no period exists."""


def _check_open_unit(name, value):
    if not (math.isfinite(value) and 1.0 - abs(value) >= EDGE_EPS):
        raise DomainError(f"{name}={value!r} must lie strictly inside (-1, 1)")


@dataclass(frozen=True)
class GlobalParams:
    """Population-wide constants.  Construction validates every range."""

    sigma_a: float
    sigma_s: float
    sigma_c: float
    mu_s: float
    mu_c: float
    r: float
    tau: float
    n: int = 2

    def __post_init__(self):
        for name in ("sigma_a", "sigma_s", "sigma_c", "mu_c", "r"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ParameterError(f"{name} must be finite and >= 0, got {v!r}")
        if not (0.0 <= self.mu_s <= 1.0):
            raise ParameterError(f"mu_s must lie in [0, 1], got {self.mu_s!r}")
        if not (0.0 < self.tau < 1.0):
            raise ParameterError(f"tau must lie in (0, 1), got {self.tau!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    def with_n(self, n: int) -> "GlobalParams":
        return GlobalParams(self.sigma_a, self.sigma_s, self.sigma_c, self.mu_s,
                            self.mu_c, self.r, self.tau, n)

    def as_dict(self) -> dict:
        return {
            "sigma_a": self.sigma_a, "sigma_s": self.sigma_s, "sigma_c": self.sigma_c,
            "mu_s": self.mu_s, "mu_c": self.mu_c, "r": self.r, "tau": self.tau,
            "n": self.n,
        }

    @property
    def alpha_boundary(self) -> float:
        """The attitude at which the unaided drift vanishes (``inf`` if sigma_a == 0)."""
        if self.sigma_a == 0.0:
            return math.inf if self.sigma_s * self.mu_s > 0 else -math.inf
        return self.sigma_s * self.mu_s / self.sigma_a

    def rate(self, alpha: float) -> float:
        """Unaided growth constant ``A = (sA*alpha - sS*muS) * sC * muC``."""
        return margin(self, alpha) * self.sigma_c * self.mu_c

    def max_rate(self, alpha: float) -> float:
        """Upper bound on ``dx/dt`` over all admissible gamma and x."""
        return (self.sigma_a * alpha + self.sigma_s - self.sigma_s * self.mu_s) \
            * self.sigma_c * (1.0 + self.mu_c)


def margin(params: GlobalParams, alpha: float) -> float:
    """Sign term ``sA*alpha - sS*muS`` deciding unaided growth or decay."""
    return params.sigma_a * alpha - params.sigma_s * params.mu_s


@dataclass(frozen=True)
class IndividualConfig:
    alpha: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if not (-1.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (-1, 1), got {self.alpha!r}")
        if not (-1.0 < self.x0 < 1.0):
            raise ParameterError(f"x0 must lie in (-1, 1), got {self.x0!r}")
        if not (0.0 <= self.y0 <= 1.0):
            raise ParameterError(f"y0 must lie in [0, 1], got {self.y0!r}")


@dataclass(frozen=True)
class SystemState:
    t: float
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ParameterError("x and y must be vectors of equal length")
        if np.any(np.abs(x) >= 1.0):
            raise ParameterError("every x_i must lie in (-1, 1)")
        if np.any((y < 0.0) | (y > 1.0)):
            raise ParameterError("every y_i must lie in [0, 1]")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.x)


def gamma(i: int, y: Sequence[float], n: int) -> float:
    """Mean nudge felt by individual ``i`` (zero for a lone individual)."""
    if not 0 <= i < n or len(y) != n:
        raise IndexError(f"individual {i} out of range for n={n}")
    if n == 1:
        return 0.0
    return math.fsum(y[j] for j in range(n) if j != i) / (n - 1)


def vector_field(state: SystemState, params: GlobalParams, alphas: Sequence[float]):
    """Return ``(dx, dy)`` at ``state``."""
    n = state.n
    if len(alphas) != n:
        raise ParameterError("need one alpha per individual")
    x, y = state.x, state.y
    dx = np.empty(n)
    for i in range(n):
        g = gamma(i, y, n)
        drive = params.sigma_a * alphas[i] + params.sigma_s * (g - params.mu_s)
        dx[i] = drive * params.sigma_c * (g + params.mu_c) * (1.0 - x[i]) * (1.0 + x[i])
    return dx, -params.r * y


def apply_reset(state: SystemState, actors: Iterable[int]) -> SystemState:
    """Reset every actor to ``x = 0, y = 1``; time and everyone else unchanged."""
    actors = sorted(set(actors))
    if not actors:
        raise ValueError("apply_reset called with an empty actor set")
    x = state.x.copy()
    y = state.y.copy()
    for i in actors:
        if not 0 <= i < state.n:
            raise IndexError(f"individual {i} out of range for n={state.n}")
        x[i] = 0.0
        y[i] = 1.0
    return SystemState(state.t, x, y)


def tanh_solution(A: float, u0: float, t: float) -> float:
    """Intention after time ``t`` with no nudge active, from ``u0``."""
    _check_open_unit("u0", u0)
    return math.tanh(A * t + math.atanh(u0))


def first_action_time(A: float, u0: float, tau: float) -> float:
    """Unaided time for an intention to climb from ``u0`` to ``tau``."""
    if not A > 0.0:
        raise NoPeriodError(f"rate A={A!r} is not positive; the threshold is never reached")
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau={tau!r} must lie in (0, 1)")
    _check_open_unit("u0", u0)
    if u0 > tau:
        raise DomainError(f"u0={u0!r} already exceeds tau={tau!r}")
    return (math.atanh(tau) - math.atanh(u0)) / A


@dataclass(frozen=True)
class TwoBodyConstants:
    """Derived scalars for the pair (alpha1, alpha2) with alpha1 the leader.

    Over one period of the leader, starting at one of its actions, the follower
    obeys ``x2(t) = tanh(A2 t + B e^{-rt} + C e^{-2rt} + D(u0))``.
    """

    A1: float
    A2: float
    B: float
    C: float
    T: float
    M: float
    r: float = field(repr=False)

    @classmethod
    def from_params(cls, params: GlobalParams, alpha1: float, alpha2: float) -> "TwoBodyConstants":
        if not params.r > 0.0:
            raise DomainError("closed forms need decaying nudges (r > 0)")
        A1 = params.rate(alpha1)
        if not A1 > 0.0:
            raise NoPeriodError(f"A1={A1!r} <= 0: individual 1 never acts unaided")
        m2 = margin(params, alpha2)
        sc = params.sigma_c
        A2 = m2 * sc * params.mu_c
        B = -(m2 * sc + params.sigma_s * sc * params.mu_c) / params.r
        C = -params.sigma_s * sc / (2.0 * params.r)
        T = math.atanh(params.tau) / A1
        # B*(e^{-rT} - 1) + C*(e^{-2rT} - 1) via expm1 for small-T accuracy
        em1 = math.expm1(-params.r * T)
        em2 = math.expm1(-2.0 * params.r * T)
        M = A2 * T + B * em1 + C * em2
        return cls(A1, A2, B, C, T, M, params.r)

    def D(self, u0: float) -> float:
        _check_open_unit("u0", u0)
        return math.atanh(u0) - self.B - self.C

    def log_odds_shift(self, t: float) -> float:
        """Change of ``atanh(x2)`` accumulated over ``[0, t]`` of a period."""
        return (self.A2 * t + self.B * math.expm1(-self.r * t)
                + self.C * math.expm1(-2.0 * self.r * t))


def two_body_solution(k: TwoBodyConstants, u0: float, t: float) -> float:
    """Follower intention ``t`` after an action of the leader, from ``u0``."""
    if not 0.0 <= t <= k.T:
        raise DomainError(f"t={t!r} outside one period [0, {k.T!r}]")
    _check_open_unit("u0", u0)
    return math.tanh(math.atanh(u0) + k.log_odds_shift(t))
