"""Grid scans over attitude space and the analytic regime boundaries."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analytic import (
    FULL_ACTION,
    NO_ACTION,
    PARTIAL_ACTION,
    TAGS,
    UNDETERMINED,
    Classification,
    classify_two,
)
from .model import (
    DomainError,
    GlobalParams,
    IndividualConfig,
    ParameterError,
    TwoBodyConstants,
    margin,
)
from .simulate import SimConfig, SimulationError, default_config, simulate_and_classify

__all__ = [
    "AxisRange",
    "SweepSpec",
    "SweepResult",
    "CellError",
    "run_sweep",
    "trace_boundary_M0",
    "linear_boundary",
    "cell_M",
    "FIG6_PARAMS",
]

MODES = ("analytic", "simulated", "both")

# Globals of the published two-individual partition.  sigma_a and mu_s are
# not given there; these values put the margin line at alpha = 0.25.
FIG6_PARAMS = GlobalParams(sigma_a=1.0, sigma_s=0.5, sigma_c=0.5, mu_s=0.5, mu_c=0.05,
                           r=0.86, tau=0.8, n=2)
_EDGE = 1e-12


@dataclass(frozen=True)
class AxisRange:
    """``steps`` equal cells on ``[lo, hi]``; samples sit at the cell centers."""

    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 2:
            raise ParameterError("each axis needs at least 2 steps")
        if not (-1.0 <= self.lo < self.hi <= 1.0):
            raise ParameterError(f"axis [{self.lo}, {self.hi}] must be an increasing "
                                 "subinterval of [-1, 1]")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.steps

    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.steps) + 0.5) * self.width


@dataclass(frozen=True)
class SweepSpec:
    params: GlobalParams
    alpha_ranges: Tuple[AxisRange, ...]
    mode: str = "both"
    sim_cfg: Optional[SimConfig] = None
    max_periods: int = 20000

    def __post_init__(self):
        ranges = tuple(r if isinstance(r, AxisRange) else AxisRange(*r)
                       for r in self.alpha_ranges)
        object.__setattr__(self, "alpha_ranges", ranges)
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(ranges) != self.params.n:
            raise ParameterError(f"need one alpha range per individual (n={self.params.n})")
        if self.mode != "simulated" and self.params.n != 2:
            raise ParameterError("analytic classification exists only for n = 2")
        if self.params.n > 3:
            raise ParameterError("sweeps are limited to n <= 3")

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(r.steps for r in self.alpha_ranges)

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "alpha_ranges": [[r.lo, r.hi, r.steps] for r in self.alpha_ranges],
            "mode": self.mode,
            "sim_cfg": None if self.sim_cfg is None else self.sim_cfg.as_dict(),
            "max_periods": self.max_periods,
        }


@dataclass(frozen=True)
class CellError:
    message: str


@dataclass
class SweepResult:
    spec: SweepSpec
    axes: List[np.ndarray]
    analytic: Optional[np.ndarray]
    empirical: Optional[np.ndarray]
    M: Optional[np.ndarray]
    agreement: Optional[np.ndarray]
    near_boundary: Optional[np.ndarray]
    boundary_lin: Optional[np.ndarray]
    boundary_M0: Optional[np.ndarray]
    errors: Dict[Tuple[int, ...], str] = field(default_factory=dict)
    events: Optional[Dict[Tuple[int, ...], tuple]] = None

    @property
    def grid(self) -> np.ndarray:
        """Empirical verdicts when simulated, analytic otherwise."""
        return self.empirical if self.empirical is not None else self.analytic

    def tags(self, which: str = "grid") -> np.ndarray:
        g = getattr(self, which)
        out = np.empty(g.shape, dtype=object)
        for idx in np.ndindex(g.shape):
            c = g[idx]
            out[idx] = c.tag if isinstance(c, Classification) else "Error"
        return out

    def counts(self, which: str = "grid") -> Dict[str, int]:
        t = self.tags(which)
        return {tag: int(np.sum(t == tag)) for tag in (*TAGS, "Error") if np.any(t == tag)}

    def actor_counts(self) -> Dict[int, int]:
        out: Dict[int, int] = {}
        for c in self.grid.flat:
            if isinstance(c, Classification) and c.tag != UNDETERMINED:
                out[c.n_actors] = out.get(c.n_actors, 0) + 1
        return dict(sorted(out.items()))

    def comparable(self, exclude_near_boundary: bool = False) -> np.ndarray:
        """Cells where both verdicts exist and the empirical one is decided."""
        if self.agreement is None:
            raise ValueError("agreement only exists for mode='both'")
        emp = self.tags("empirical")
        ok = (emp != UNDETERMINED) & (emp != "Error")
        if exclude_near_boundary:
            ok &= ~self.near_boundary
        return ok

    def agreement_rate(self, exclude_near_boundary: bool = False) -> float:
        ok = self.comparable(exclude_near_boundary)
        if not ok.any():
            return math.nan
        return float(np.mean(self.agreement[ok]))

    def summary(self) -> dict:
        out = {"counts": self.counts(), "errors": len(self.errors)}
        if self.spec.params.n == 3:
            out["actor_counts"] = {str(k): v for k, v in self.actor_counts().items()}
        if self.agreement is not None:
            out["agreement_rate"] = self.agreement_rate()
            out["agreement_rate_off_boundary"] = self.agreement_rate(True)
            out["undetermined"] = int(np.sum(self.tags("empirical") == UNDETERMINED))
        return out


def cell_M(params: GlobalParams, a1: float, a2: float) -> float:
    """M for the ordered pair, or NaN when the leader has no period."""
    lead, follow = (a1, a2) if a1 >= a2 else (a2, a1)
    try:
        return TwoBodyConstants.from_params(params, lead, follow).M
    except DomainError:
        return math.nan


def _eval_cell(task):
    params, alphas, mode, sim_cfg, max_periods, keep = task
    analytic = empirical = events = None
    err = None
    if mode in ("analytic", "both"):
        analytic = classify_two(params, *alphas)
    if mode in ("simulated", "both"):
        hp = sim_cfg.horizon_periods if sim_cfg is not None else 40
        cfg = default_config(params, alphas, horizon_periods=hp)
        if sim_cfg is not None:
            cfg = SimConfig(cfg.t_end, cfg.dt_max, sim_cfg.event_tol, None, hp)
        try:
            empirical, traj = simulate_and_classify(
                params, [IndividualConfig(a) for a in alphas], cfg, max_periods)
            if keep:
                events = tuple((e.individual, e.t) for e in traj.events)
        except (SimulationError, FloatingPointError, ValueError) as exc:
            err = f"{type(exc).__name__}: {exc}"
    return analytic, empirical, err, events


def _near_boundary(params, a1, a2, h1, h2, tag):
    for d1, d2 in product((-0.5, 0.0, 0.5), repeat=2):
        b1 = min(max(a1 + d1 * h1, -1.0 + _EDGE), 1.0 - _EDGE)
        b2 = min(max(a2 + d2 * h2, -1.0 + _EDGE), 1.0 - _EDGE)
        if classify_two(params, b1, b2).tag != tag:
            return True
    return False


def linear_boundary(params: GlobalParams, lo: float = 0.0) -> np.ndarray:
    """L-shaped edge of the no-action region: one margin zero, the other not positive."""
    ab = params.alpha_boundary
    return np.array([[ab, lo], [ab, ab], [lo, ab]])


def trace_boundary_M0(params: GlobalParams, alpha1_range) -> np.ndarray:
    """Points ``(alpha1, alpha2)`` with ``M = 0`` and alpha2 below the margin line.

    For every leader attitude the follower attitude is bisected to full
    floating-point resolution; samples without a sign change are dropped.
    """
    rng = alpha1_range if isinstance(alpha1_range, AxisRange) else None
    if rng is not None:
        a1s = rng.centers()
    else:
        lo, hi, steps = alpha1_range
        a1s = np.linspace(lo, hi, int(steps))
    ab = params.alpha_boundary
    for a1 in a1s:
        if not params.rate(a1) > 0.0:
            raise DomainError(f"alpha1={a1!r} does not have a positive rate")
    lo2 = -1.0 + _EDGE
    hi2 = min(ab, 1.0 - _EDGE)
    pts = []
    for a1 in a1s:
        hi_a = min(hi2, a1)
        f_lo = TwoBodyConstants.from_params(params, a1, lo2).M
        f_hi = TwoBodyConstants.from_params(params, a1, hi_a).M
        if not (f_lo <= 0.0 < f_hi):
            continue
        a, b = lo2, hi_a
        while True:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if TwoBodyConstants.from_params(params, a1, mid).M > 0.0:
                b = mid
            else:
                a = mid
        pts.append((float(a1), b))
    return np.array(pts).reshape(-1, 2)


def run_sweep(spec: SweepSpec, workers: int = 1, keep_events: bool = False) -> SweepResult:
    """Classify every grid cell; cell order and worker count do not affect the result.

    With ``keep_events`` the action log ``((individual, t), ...)`` of every
    simulated cell is kept in ``result.events``.
    """
    params = spec.params
    axes = [r.centers() for r in spec.alpha_ranges]
    shape = spec.shape
    idxs = list(np.ndindex(shape))
    tasks = [(params, tuple(float(axes[k][i[k]]) for k in range(len(i))), spec.mode,
              spec.sim_cfg, spec.max_periods, keep_events) for i in idxs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_cell, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_eval_cell(t) for t in tasks]

    analytic = np.empty(shape, dtype=object) if spec.mode != "simulated" else None
    empirical = np.empty(shape, dtype=object) if spec.mode != "analytic" else None
    errors = {}
    events = {} if keep_events and spec.mode != "analytic" else None
    for i, (a, e, err, ev) in zip(idxs, results):
        if events is not None and ev is not None:
            events[i] = ev
        if analytic is not None:
            analytic[i] = a
        if empirical is not None:
            empirical[i] = e if err is None else CellError(err)
        if err is not None:
            errors[i] = err

    M = agreement = near = b_lin = b_M0 = None
    if params.n == 2:
        M = np.array([[cell_M(params, a1, a2) for a2 in axes[1]] for a1 in axes[0]])
        b_lin = linear_boundary(params, min(r.lo for r in spec.alpha_ranges))
        r1 = spec.alpha_ranges[0]
        fine = AxisRange(max(r1.lo, params.alpha_boundary), r1.hi, max(r1.steps, 2)) \
            if params.alpha_boundary < r1.hi else None
        if fine is not None:
            b_M0 = trace_boundary_M0(params, fine)
        else:
            b_M0 = np.empty((0, 2))
    if spec.mode == "both":
        h1, h2 = (r.width for r in spec.alpha_ranges)
        agreement = np.zeros(shape, dtype=bool)
        near = np.zeros(shape, dtype=bool)
        for i in idxs:
            a, e = analytic[i], empirical[i]
            agreement[i] = isinstance(e, Classification) and e.tag == a.tag \
                and e.actors == a.actors
            near[i] = _near_boundary(params, axes[0][i[0]], axes[1][i[1]], h1, h2, a.tag)
    return SweepResult(spec, axes, analytic, empirical, M, agreement, near, b_lin, b_M0, errors,
                       events)
