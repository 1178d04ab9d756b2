"""Event-driven integration of the n-individual hybrid system."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernel
from .analytic import (
    FULL_ACTION,
    NO_ACTION,
    PARTIAL_ACTION,
    UNDETERMINED,
    Classification,
)
from .model import GlobalParams, IndividualConfig, ParameterError, SystemState, margin

__all__ = [
    "SimulationError",
    "ActionEvent",
    "SimConfig",
    "Trajectory",
    "simulate",
    "empirical_classify",
    "simulate_and_classify",
    "default_config",
    "unaided_periods",
]

RTOL = 1e-9
# Trailing per-period change of atanh(x) treated as "no trend".
TREND_TOL = 1e-6
# Intentions closer than this to +-1 carry no usable trend information.
SATURATION = 1e-8


class SimulationError(RuntimeError):
    """Integration broke down; ``t_last`` is the last time with a good state."""

    def __init__(self, message, t_last=math.nan):
        super().__init__(f"{message} (last good t={t_last!r})")
        self.t_last = t_last


@dataclass(frozen=True)
class ActionEvent:
    individual: int
    t: float


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt_max: float
    event_tol: float = 1e-10
    sample_every: Optional[float] = None
    horizon_periods: int = 40

    def __post_init__(self):
        if self.sample_every is None:
            object.__setattr__(self, "sample_every", self.t_end)
        for name in ("t_end", "dt_max", "event_tol", "sample_every"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        if not self.event_tol < self.dt_max:
            raise ParameterError("need event_tol < dt_max")
        if not self.dt_max <= self.sample_every:
            raise ParameterError("need dt_max <= sample_every")
        if int(self.horizon_periods) != self.horizon_periods or self.horizon_periods < 1:
            raise ParameterError("horizon_periods must be a positive integer")

    def as_dict(self) -> dict:
        return {"t_end": self.t_end, "dt_max": self.dt_max, "event_tol": self.event_tol,
                "sample_every": self.sample_every, "horizon_periods": self.horizon_periods}


def unaided_periods(params: GlobalParams, alphas: Sequence[float]) -> List[float]:
    """Unaided period ``atanh(tau)/A_i`` of every positive-rate individual."""
    out = []
    for a in alphas:
        A = params.rate(a)
        if A > 0.0:
            out.append(math.atanh(params.tau) / A)
    return out


def default_config(params: GlobalParams, alphas: Sequence[float], horizon_periods=40,
                   sample_every=None, quiet_t_end=100.0) -> SimConfig:
    """Horizon of ``horizon_periods`` of the fastest unaided individual."""
    periods = unaided_periods(params, alphas)
    if periods:
        T_min = min(periods)
        t_end = horizon_periods * T_min
        dt_max = T_min / 50.0
    else:
        t_end = quiet_t_end
        dt_max = quiet_t_end / 50.0
    if sample_every is not None:
        dt_max = min(dt_max, sample_every)
    return SimConfig(t_end=t_end, dt_max=dt_max, event_tol=1e-10,
                     sample_every=sample_every, horizon_periods=horizon_periods)


@dataclass
class Trajectory:
    """Sampled states plus the ordered action log.

    ``t``, ``x``, ``y`` are arrays of shape (k,), (k, n), (k, n).  ``event_x``
    has one row per logged event: everybody's intentions just before the reset.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    events: List[ActionEvent]
    event_x: np.ndarray
    t_end: float
    params: GlobalParams
    alphas: Tuple[float, ...]
    config: Optional[SimConfig] = None
    ignore_threshold: Tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def states(self) -> List[SystemState]:
        return [SystemState(t, x, y) for t, x, y in zip(self.t, self.x, self.y)]

    def event_times(self, individual: int) -> np.ndarray:
        return np.array([e.t for e in self.events if e.individual == individual])

    def actors(self) -> Tuple[int, ...]:
        return tuple(sorted({e.individual for e in self.events}))

    def first_action(self, individual: int) -> float:
        ts = self.event_times(individual)
        return float(ts[0]) if len(ts) else math.inf


class _Integrator:
    """Stateful driver around the compiled stepper."""

    def __init__(self, params, alphas, x0, y0, cfg, ignore=()):
        n = len(alphas)
        self.n = n
        self.params = params
        self.alphas = np.asarray(alphas, dtype=float)
        self.p = np.array([params.sigma_a, params.sigma_s, params.sigma_c, params.mu_s,
                           params.mu_c, params.r, params.tau])
        self.cfg = cfg
        self.active = np.ones(n, dtype=np.bool_)
        for i in ignore:
            self.active[i] = False
        with np.errstate(divide="ignore"):
            self.z = np.concatenate([np.asarray(x0, float), np.log(np.asarray(y0, float))])
        self.t = 0.0
        self.h = cfg.dt_max
        self.events: List[ActionEvent] = []
        self.event_x: List[np.ndarray] = []
        self.last_event = np.full(n, -math.inf)
        self.ts = []
        self.xs = []
        self.ys = []

    @property
    def x(self):
        return self.z[: self.n]

    @property
    def y(self):
        return np.exp(self.z[self.n:])

    def record(self):
        self.ts.append(self.t)
        self.xs.append(self.x.copy())
        self.ys.append(self.y)

    def fire(self, actors):
        pre = self.x.copy()
        for i in actors:
            if self.t - self.last_event[i] < self.cfg.event_tol:
                raise SimulationError(
                    f"individual {i} acted twice within event_tol", self.t)
            self.last_event[i] = self.t
            self.events.append(ActionEvent(int(i), self.t))
            self.event_x.append(pre)
            self.z[i] = 0.0
            self.z[self.n + i] = 0.0  # ln 1

    def actors_at_threshold(self):
        tau = self.params.tau
        dz = np.empty_like(self.z)
        _kernel.rhs(self.z, self.alphas, self.p, dz)
        x = self.x
        hit = (x >= tau) | (x + dz[: self.n] * self.cfg.event_tol >= tau)
        return [i for i in range(self.n) if self.active[i] and hit[i]]

    def run_until(self, t_stop):
        cfg = self.cfg
        while True:
            status, t, z, h = _kernel.advance(
                self.z, self.t, t_stop, self.h, self.alphas, self.p, self.active,
                RTOL, cfg.dt_max, cfg.event_tol)
            self.t, self.z, self.h = t, z, h
            if status == _kernel.DONE:
                return
            if status == _kernel.EVENT:
                self.fire(self.actors_at_threshold())
                continue
            if status == _kernel.NONFINITE:
                raise SimulationError("non-finite state", self.t)
            raise SimulationError("step size underflow", self.t)

    def trajectory(self, t_end, alphas, ignore):
        ex = np.array(self.event_x) if self.event_x else np.empty((0, self.n))
        return Trajectory(np.array(self.ts), np.array(self.xs), np.array(self.ys),
                          list(self.events), ex, t_end, self.params, tuple(alphas),
                          self.cfg, tuple(sorted(ignore)))


def _start(params, individuals, cfg, ignore):
    if len(individuals) != params.n:
        raise ParameterError(f"got {len(individuals)} individuals for n={params.n}")
    ignore = tuple(sorted(set(ignore)))
    for i in ignore:
        if not 0 <= i < params.n:
            raise ParameterError(f"ignore_threshold index {i} out of range")
    alphas = [ind.alpha for ind in individuals]
    x0 = [min(ind.x0, params.tau) if i not in ignore else ind.x0
          for i, ind in enumerate(individuals)]
    y0 = [ind.y0 for ind in individuals]
    integ = _Integrator(params, alphas, x0, y0, cfg, ignore)
    # an individual starting at or above tau acts immediately
    clamped = [i for i in range(params.n) if i not in ignore and x0[i] >= params.tau]
    if clamped:
        integ.fire(clamped)
    return integ, alphas, ignore


def simulate(params: GlobalParams, individuals: Sequence[IndividualConfig], cfg: SimConfig,
             ignore_threshold: Iterable[int] = ()) -> Trajectory:
    """Integrate the hybrid system on ``[0, cfg.t_end]``.

    Individuals listed in ``ignore_threshold`` evolve as if they had no
    threshold (they never act); this is how the per-period behaviour of a
    follower is observed in isolation.
    """
    integ, alphas, ignore = _start(params, individuals, cfg, ignore_threshold)
    integ.record()
    k = 1
    while True:
        target = k * cfg.sample_every
        if target >= cfg.t_end - 1e-9 * cfg.sample_every:
            # a rounding sliver before t_end would give a near-duplicate sample
            target = cfg.t_end
        integ.run_until(target)
        integ.record()
        if target >= cfg.t_end:
            break
        k += 1
    return integ.trajectory(cfg.t_end, alphas, ignore)


def _reference_actor(traj):
    counts = {}
    for e in traj.events:
        counts[e.individual] = counts.get(e.individual, 0) + 1
    if not counts:
        return None
    return max(sorted(counts), key=lambda i: counts[i])


def trailing_change(traj: Trajectory, j: int) -> Optional[float]:
    """Change of ``atanh(x_j)`` between the last two actions of the busiest actor."""
    ref = _reference_actor(traj)
    if ref is None or ref == j:
        return None
    idx = [k for k, e in enumerate(traj.events) if e.individual == ref]
    if len(idx) < 2:
        return None
    a, b = traj.event_x[idx[-2], j], traj.event_x[idx[-1], j]
    if max(abs(a), abs(b)) > 1.0 - SATURATION:
        # pinned at +-1 in float64; what is left of atanh(x) is rounding noise
        return None
    return math.atanh(b) - math.atanh(a)


def empirical_classify(traj: Trajectory, params: GlobalParams = None,
                       cfg: SimConfig = None) -> Classification:
    """Regime read off a trajectory: an individual acts iff it has an event."""
    params = params or traj.params
    n = traj.n
    actors = traj.actors()
    margins = tuple(margin(params, a) for a in traj.alphas)
    if not actors:
        return Classification(NO_ACTION, (), None, margins)
    if len(actors) == n:
        return Classification(FULL_ACTION, actors, None, margins)
    for j in range(n):
        if j in actors:
            continue
        d = trailing_change(traj, j)
        if d is not None and 0.0 < d <= TREND_TOL:
            return Classification(UNDETERMINED, actors, None, margins,
                                  note=f"individual {j} trailing change {d:.3g}")
    return Classification(PARTIAL_ACTION, actors, None, margins)


def simulate_and_classify(params: GlobalParams, individuals: Sequence[IndividualConfig],
                          cfg: SimConfig, max_periods: int = 20000):
    """Simulate, classify, and keep integrating while a non-actor is still climbing.

    Integration stops early once every individual has acted.  The extension
    targets the extrapolated crossing of every climbing non-actor and is
    capped at ``max_periods`` unaided periods of the fastest individual; a
    non-actor still climbing at the cap yields ``Undetermined``.
    Returns ``(classification, trajectory)``.
    """
    cfg = replace(cfg, sample_every=cfg.t_end, dt_max=min(cfg.dt_max, cfg.t_end))
    integ, alphas, ignore = _start(params, individuals, cfg, ())
    integ.record()
    # once everybody has acted the verdict is final, so integrate period by period
    chunk = cfg.t_end / cfg.horizon_periods
    k = 0
    while integ.t < cfg.t_end:
        k += 1
        integ.run_until(min(k * chunk, cfg.t_end))
        if len({e.individual for e in integ.events}) == params.n:
            break
    periods = unaided_periods(params, alphas)
    t_cap = max(periods and min(periods) * max_periods or 0.0, cfg.t_end)
    tau_w = math.atanh(params.tau)
    while True:
        traj = integ.trajectory(integ.t, alphas, ignore)
        verdict = empirical_classify(traj, params, cfg)
        if verdict.tag != PARTIAL_ACTION:
            break
        ref = _reference_actor(traj)
        ref_times = traj.event_times(ref)
        period = ref_times[-1] - ref_times[-2]
        needed = []
        for j in range(traj.n):
            if j in verdict.actors:
                continue
            d = trailing_change(traj, j)
            if d is not None and d > 0.0:
                needed.append((tau_w - math.atanh(integ.x[j])) / d)
        if not needed or integ.t >= t_cap:
            if needed:
                verdict = Classification(UNDETERMINED, verdict.actors, None, verdict.margins,
                                         note="non-actor still climbing at the horizon cap")
            break
        t_next = min(t_cap, integ.t + (1.25 * max(needed) + 3.0) * period)
        integ.run_until(t_next)
    integ.record()
    return verdict, integ.trajectory(integ.t, alphas, ignore)
