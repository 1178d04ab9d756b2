"""Two-individual theory: the per-period invariant, the period map and its
fixed-point structure, action-count bounds, the regime table and the
minimal-attitude special case.

Throughout, individual 1 is the *leader* (larger attitude) and individual 2
the *follower*.  ``M`` is the net change of ``atanh(x2)`` over one period of
the leader; it does not depend on where the follower starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .lambertw import MINUS_ONE, PRINCIPAL, lambert_w
from .model import (
    DomainError,
    GlobalParams,
    NoPeriodError,
    ParameterError,
    TwoBodyConstants,
    _check_open_unit,
    margin,
    tanh_solution,
)

__all__ = [
    "NO_ACTION",
    "PARTIAL_ACTION",
    "FULL_ACTION",
    "UNDETERMINED",
    "Classification",
    "ActionBounds",
    "AlwaysIncreasingError",
    "NeverIncreasingError",
    "invariant_M",
    "map_f",
    "map_f_rational",
    "fixed_point_xstar",
    "t_crit",
    "action_bounds",
    "classify_two",
    "min_alpha1_for_action_B0",
    "min_alpha1_bisect",
    "b0_alpha2",
]

NO_ACTION = "NoAction"
PARTIAL_ACTION = "PartialAction"
FULL_ACTION = "FullAction"
UNDETERMINED = "Undetermined"
TAGS = (NO_ACTION, PARTIAL_ACTION, FULL_ACTION, UNDETERMINED)

# |M| below this is treated as exactly zero.
M_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Classification:
    """Regime verdict.  ``actors`` holds 0-based indices of persistent actors."""

    tag: str
    actors: Tuple[int, ...] = ()
    M: Optional[float] = None
    margins: Tuple[float, ...] = ()
    note: str = ""

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown classification tag {self.tag!r}")
        object.__setattr__(self, "actors", tuple(sorted(self.actors)))
        object.__setattr__(self, "margins", tuple(self.margins))
        if self.tag == PARTIAL_ACTION and not self.actors:
            raise ValueError("PartialAction needs a nonempty actor set")
        if self.margins and self.tag == PARTIAL_ACTION and len(self.actors) >= len(self.margins):
            raise ValueError("PartialAction actors must be a strict subset")

    @property
    def n_actors(self) -> int:
        return len(self.actors)

    def as_dict(self) -> dict:
        return {
            "tag": self.tag,
            "actors": [i + 1 for i in self.actors],
            "M": self.M,
            "margins": list(self.margins),
        }


@dataclass(frozen=True)
class ActionBounds:
    """Periods needed for the follower to pass ``x*`` (m) and then ``tau`` (n_after)."""

    m: int
    n_after: int
    T: float = field(repr=False)
    x_T: float = field(repr=False, default=math.nan)
    x_star: float = field(repr=False, default=math.nan)

    def __post_init__(self):
        if self.m < 1 or self.n_after < 0:
            raise ValueError("need m >= 1 and n_after >= 0")

    @property
    def horizon(self) -> float:
        return (self.m + self.n_after) * self.T


class AlwaysIncreasingError(DomainError):
    """The follower's drift stays positive for the whole nudge; no sign change."""


class NeverIncreasingError(DomainError):
    """Even a fresh nudge cannot make the follower's drift positive."""


def _require_decay(params):
    if not params.r > 0.0:
        raise DomainError("analytic results need decaying nudges (r > 0)")


def invariant_M(params: GlobalParams, alpha1: float, alpha2: float) -> float:
    """Net change of ``atanh(x2)`` over one unaided period of individual 1."""
    return TwoBodyConstants.from_params(params, alpha1, alpha2).M


def map_f(M: float, x: float) -> float:
    """Advance the follower by one period, ignoring the threshold."""
    _check_open_unit("x", x)
    return math.tanh(M + math.atanh(x))


def map_f_rational(M: float, x: float) -> float:
    """Same map written with the tanh addition formula."""
    _check_open_unit("x", x)
    th = math.tanh(M)
    return (x + th) / (1.0 + x * th)


def fixed_point_xstar(M: float) -> float:
    """Point in (-1, 0) where the period map has unit slope (needs ``M > 0``).

    Below it the map expands, above it the map contracts.  Evaluated as
    ``-tanh(M) / (1 + sech(M))``, which is algebraically the root
    ``-(1 - sqrt(1 - tanh(M)^2)) / tanh(M)`` without the cancellation at small M.
    """
    if not M > 0.0:
        raise DomainError(f"x* needs M > 0, got {M!r}")
    th = math.tanh(M)
    sech = 1.0 / math.cosh(M) if M < 700.0 else 0.0
    return -th / (1.0 + sech)


def t_crit(params: GlobalParams, alpha2: float) -> float:
    """Time after a leader action at which the follower's drift changes sign."""
    _require_decay(params)
    if params.sigma_s == 0.0:
        raise NeverIncreasingError("sigma_s = 0: nudges do not move the drift sign")
    arg = params.mu_s - params.sigma_a * alpha2 / params.sigma_s
    if arg <= 0.0:
        raise AlwaysIncreasingError(
            f"log argument {arg!r} <= 0: drift positive throughout the nudge")
    if arg > 1.0:
        raise NeverIncreasingError(
            f"log argument {arg!r} > 1: drift never positive")
    return -math.log(arg) / params.r


def action_bounds(params: GlobalParams, alpha1: float, alpha2: float,
                  x2_0: float = 0.0) -> ActionBounds:
    """Upper bound ``(m + n_after) * T`` on the follower's first action time.

    The follower starts at ``x2_0``, drifts unaided over the first period and
    is then advanced period by period with the map.
    """
    k = TwoBodyConstants.from_params(params, alpha1, alpha2)
    if not k.M > M_ZERO_TOL:
        raise DomainError(f"bounds need M > 0, got M={k.M!r}")
    tau = params.tau
    if x2_0 >= tau:
        raise DomainError("follower already at the threshold")
    M = k.M
    xs = fixed_point_xstar(M)
    x_T = tanh_solution(k.A2, x2_0, k.T)
    if x_T > xs:
        m = 1
    else:
        m = max(1, math.ceil(abs(xs - x_T) / (map_f(M, x_T) - x_T)))
    # x2(mT) = f^(m-1)(x2(T)) in atanh coordinates
    x_m = math.tanh(math.atanh(x_T) + (m - 1) * M)
    step_at_tau = map_f(M, tau) - tau
    n_after = max(0, math.ceil((tau - x_m) / step_at_tau))
    return ActionBounds(m, n_after, k.T, x_T, xs)


def classify_two(params: GlobalParams, alpha1: float, alpha2: float) -> Classification:
    """Regime of a two-individual system started from rest.

    Inputs may be unordered; actors are reported in the caller's indexing.
    """
    m1, m2 = margin(params, alpha1), margin(params, alpha2)
    swap = alpha2 > alpha1
    lead_alpha, follow_alpha = (alpha2, alpha1) if swap else (alpha1, alpha2)
    lead_margin, follow_margin = (m2, m1) if swap else (m1, m2)
    leader = 1 if swap else 0
    margins = (m1, m2)

    # A zero rate (no control, no decay) leaves the leader frozen.
    lead_rate = params.rate(lead_alpha)
    if lead_margin <= 0.0 or lead_rate <= 0.0:
        return Classification(NO_ACTION, (), None, margins)
    if follow_margin >= 0.0:
        return Classification(FULL_ACTION, (0, 1), None, margins)
    if params.r == 0.0:
        # Nudges never fade: the follower's drift sign is fixed after the first nudge.
        boosted = params.sigma_a * follow_alpha + params.sigma_s * (1.0 - params.mu_s)
        tag = FULL_ACTION if boosted > 0.0 else PARTIAL_ACTION
        actors = (0, 1) if tag == FULL_ACTION else (leader,)
        return Classification(tag, actors, None, margins, note="r=0")
    M = invariant_M(params, lead_alpha, follow_alpha)
    if M > M_ZERO_TOL:
        return Classification(FULL_ACTION, (0, 1), M, margins)
    return Classification(PARTIAL_ACTION, (leader,), M, margins)


def _period_root_B0(params: GlobalParams) -> float:
    """Positive period at which M vanishes when B = 0.

    With B = 0, M(T) = A2*T + C*(exp(-2rT) - 1).  Putting a = 2rC/A2 the roots
    are T = (a + W(-a e^{-a})) / (2r); one branch returns the trivial T = 0.
    """
    sc, mc, r = params.sigma_c, params.mu_c, params.r
    A2 = -params.sigma_s * mc * sc * mc
    C = -params.sigma_s * sc / (2.0 * r)
    a = 2.0 * r * C / A2
    z = -a * math.exp(-a)
    best = None
    for branch in (PRINCIPAL, MINUS_ONE):
        try:
            w = lambert_w(branch, z)
        except DomainError:
            continue
        T = (a + w) / (2.0 * r)
        # discard the trivial root and anything numerically indistinguishable from it
        if T > 1e-9 * max(1.0, a / (2.0 * r)):
            best = T if best is None else max(best, T)
    if best is None:
        raise DomainError(f"no nontrivial period solves M = 0 (a={a!r} <= 1)")
    return best


def min_alpha1_for_action_B0(params: GlobalParams) -> float:
    """Smallest leader attitude that makes the follower act, in the B = 0 case.

    The follower attitude is pinned to ``sS*(muS - muC)/sA``.  Raises
    :class:`DomainError` if that attitude or the answer leaves (-1, 1).
    """
    _require_decay(params)
    if params.sigma_a == 0.0 or params.sigma_s == 0.0:
        raise ParameterError("B = 0 special case needs sigma_a > 0 and sigma_s > 0")
    if params.sigma_c == 0.0 or params.mu_c == 0.0:
        raise NoPeriodError("sigma_c * mu_c = 0: the leader has no finite period")
    alpha2 = params.sigma_s * (params.mu_s - params.mu_c) / params.sigma_a
    if not -1.0 < alpha2 < 1.0:
        raise DomainError(f"B = 0 needs alpha2={alpha2!r} inside (-1, 1)")
    T = _period_root_B0(params)
    # T = atanh(tau) / ((sA*alpha1 - sS*muS) * sC * muC)
    alpha1 = (math.atanh(params.tau) / (T * params.sigma_c * params.mu_c)
              + params.sigma_s * params.mu_s) / params.sigma_a
    if not -1.0 < alpha1 < 1.0:
        raise DomainError(f"minimal alpha1={alpha1!r} falls outside (-1, 1)")
    return alpha1


def b0_alpha2(params: GlobalParams) -> float:
    """Follower attitude at which B vanishes."""
    return params.sigma_s * (params.mu_s - params.mu_c) / params.sigma_a


def min_alpha1_bisect(params: GlobalParams, alpha2: float, tol: float = 1e-12,
                      hi: float = 1.0 - 1e-12) -> float:
    """Leader attitude at which ``M(alpha1, alpha2)`` turns positive, by bisection.

    The lower end starts just above the margin line, where the period is
    long and ``M`` negative; the upper end is ``hi``.  Raises
    :class:`DomainError` when the ends do not bracket a sign change.
    """
    lo = max(params.alpha_boundary, alpha2)
    lo = lo + max(1e-9, 1e-9 * abs(lo))

    def M(a1):
        return TwoBodyConstants.from_params(params, a1, alpha2).M

    if not lo < hi:
        raise DomainError("empty leader interval")
    m_lo, m_hi = M(lo), M(hi)
    if not (m_lo <= 0.0 < m_hi):
        raise DomainError(f"M does not change sign on [{lo!r}, {hi!r}] "
                          f"(M={m_lo!r}, {m_hi!r})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if M(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
