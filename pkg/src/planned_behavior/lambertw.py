"""Real branches of the Lambert W function.

``W(z)`` solves ``w * exp(w) = z``.  For ``-1/e <= z < 0`` there are two real
solutions: the principal branch ``W0 >= -1`` and the lower branch
``W_{-1} <= -1``.
"""
from __future__ import annotations

import math

from .model import DomainError

__all__ = ["lambert_w", "PRINCIPAL", "MINUS_ONE"]

PRINCIPAL = "principal"
MINUS_ONE = "minus_one"

_INV_E = math.exp(-1.0)
# Series of W about the branch point in p = +-sqrt(2(e z + 1)).
_BRANCH_SERIES = (-1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0,
                  769.0 / 17280.0, -221.0 / 8505.0)


def _branch_series(p):
    w = 0.0
    for c in reversed(_BRANCH_SERIES):
        w = w * p + c
    return w


def _initial_guess(branch, z, p):
    if branch == PRINCIPAL:
        if p < 0.5:
            return _branch_series(p)
        if z < 3.0:
            return math.log1p(z) * (1.0 - 0.25 * math.log1p(z) / (1.0 + math.log1p(z)))
        lz = math.log(z)
        return lz - math.log(lz) + math.log(lz) / lz
    if p < 0.5:
        return _branch_series(-p)
    l1 = math.log(-z)
    l2 = math.log(-l1)
    return l1 - l2 + l2 / l1


def lambert_w(branch: str, z: float) -> float:
    """Evaluate ``W_branch(z)`` for real ``z``.

    ``branch`` is ``"principal"`` or ``"minus_one"``.  The result satisfies
    ``|w e^w - z| <= 1e-12 * max(1, |z|)``.
    """
    if branch not in (PRINCIPAL, MINUS_ONE):
        raise ValueError(f"unknown branch {branch!r}")
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"z={z!r} is not finite")
    q = 2.0 * (math.e * z + 1.0)
    if q < -1e-14:
        raise DomainError(f"z={z!r} is below the branch point -1/e")
    if branch == MINUS_ONE and z >= 0.0:
        raise DomainError(f"lower branch requires -1/e <= z < 0, got {z!r}")
    if branch == PRINCIPAL and z == 0.0:
        return 0.0
    p = math.sqrt(max(q, 0.0))
    if p < 1e-3:
        # Newton/Halley lose accuracy where W'(z) blows up; the series is exact here.
        return _branch_series(p if branch == PRINCIPAL else -p)

    w = _initial_guess(branch, z, p)
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= 4e-16 * (1.0 + abs(w)):
            break
    return w
