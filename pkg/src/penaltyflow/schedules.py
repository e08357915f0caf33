"""Penalty schedules ``beta(t)`` and the growth-condition verifier.

Registered families are globally C^1 on ``[0, inf)``:

* ``power``  ``beta(t) = (1 + t)**alpha``, ``alpha >= 0``
* ``exp``    ``beta(t) = beta0 * exp(k t)``, ``k >= 0``
* ``const``  ``beta(t) = beta0``

A :class:`CustomSchedule` wraps user callables together with a claimed growth
constant; its verdicts are grid-checked only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convex import DescriptorError, _take

#: tolerance on ``beta_dot >= 0`` on the verification grid
NONNEG_TOL = 1e-12


class PenaltySchedule:
    family = "schedule"
    #: True when ``beta(t) -> +inf``
    divergent = False

    def beta(self, t):
        raise NotImplementedError

    def beta_dot(self, t):
        raise NotImplementedError

    def growth_sup(self, t0=0.0):
        """``sup_{t >= t0} beta_dot/beta`` in closed form, or None if unknown."""
        return None

    def inverse_integrable(self):
        """Whether ``int_0^inf dt / beta(t) < inf``; None if unknown."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class PowerSchedule(PenaltySchedule):
    family = "power"

    def __init__(self, alpha):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = float(alpha)
        self.divergent = self.alpha > 0

    def beta(self, t):
        return np.power(1.0 + np.asarray(t, dtype=float), self.alpha)

    def beta_dot(self, t):
        return self.alpha * np.power(1.0 + np.asarray(t, dtype=float), self.alpha - 1.0)

    def growth_sup(self, t0=0.0):
        return self.alpha / (1.0 + t0)

    def inverse_integrable(self):
        return self.alpha > 1.0

    def to_dict(self):
        return {"family": "power", "alpha": self.alpha}


class ExpSchedule(PenaltySchedule):
    family = "exp"

    def __init__(self, beta0=1.0, k=0.5):
        if beta0 <= 0 or k < 0:
            raise ValueError("need beta0 > 0 and k >= 0")
        self.beta0, self.k = float(beta0), float(k)
        self.divergent = self.k > 0

    def beta(self, t):
        return self.beta0 * np.exp(self.k * np.asarray(t, dtype=float))

    def beta_dot(self, t):
        return self.k * self.beta(t)

    def growth_sup(self, t0=0.0):
        return self.k

    def inverse_integrable(self):
        return self.k > 0

    def to_dict(self):
        return {"family": "exp", "beta0": self.beta0, "k": self.k}


class ConstSchedule(PenaltySchedule):
    family = "const"

    def __init__(self, beta0=1.0):
        if beta0 <= 0:
            raise ValueError("beta0 must be positive")
        self.beta0 = float(beta0)

    def beta(self, t):
        return np.full(np.shape(t), self.beta0) if np.ndim(t) else self.beta0

    def beta_dot(self, t):
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0

    def growth_sup(self, t0=0.0):
        return 0.0

    def inverse_integrable(self):
        return False

    def to_dict(self):
        return {"family": "const", "beta0": self.beta0}


class CustomSchedule(PenaltySchedule):
    """User-supplied ``beta``/``beta_dot`` (vectorized callables) with a claimed
    growth constant ``k``; not serializable."""

    family = "custom"

    def __init__(self, beta, beta_dot, k=None, divergent=False):
        self._beta, self._beta_dot = beta, beta_dot
        self.claimed_k = None if k is None else float(k)
        self.divergent = bool(divergent)

    def beta(self, t):
        return self._beta(t)

    def beta_dot(self, t):
        return self._beta_dot(t)

    def to_dict(self):
        raise TypeError("custom schedules cannot be serialized")

    def __repr__(self):
        return f"CustomSchedule(k={self.claimed_k}, divergent={self.divergent})"


def schedule_from_dict(d) -> PenaltySchedule:
    family = d.get("family") if isinstance(d, dict) else None
    where = f"schedule[{family}]"
    try:
        if family == "power":
            _take(d, ("alpha",), where=where, tag="family")
            return PowerSchedule(d["alpha"])
        if family == "exp":
            _take(d, ("k",), ("beta0",), where=where, tag="family")
            return ExpSchedule(d.get("beta0", 1.0), d["k"])
        if family == "const":
            _take(d, (), ("beta0",), where=where, tag="family")
            return ConstSchedule(d.get("beta0", 1.0))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError(f"{where}: {exc}") from exc
    raise DescriptorError(f"schedule.family: unknown family {family!r}")


def beta_tilde(s, k, gamma, t):
    """Reduced penalty ``(1 - k/gamma) * beta(t)``."""
    if not 0 <= k < gamma:
        raise ValueError(f"need 0 <= k < gamma, got k={k}, gamma={gamma}")
    return (1.0 - k / gamma) * s.beta(t)


@dataclass(frozen=True)
class GrowthReport:
    feasible: bool
    k_min: float
    t0: float
    margin: float
    gamma: float
    status: str          # "proved" (closed form) or "grid-checked"
    reason: str = ""
    divergent: bool = False
    grid_ratio_max: float = math.nan

    def to_dict(self):
        return {"feasible": self.feasible, "k_min": self.k_min, "t0": self.t0,
                "margin": self.margin, "gamma": self.gamma, "status": self.status,
                "reason": self.reason, "divergent": self.divergent,
                "grid_ratio_max": self.grid_ratio_max}


def default_grid(t0=0.0, span=1e4, n=2001):
    """Grid on ``[t0, t0 + span]``, uniform near ``t0`` and geometric beyond."""
    near = np.linspace(t0, t0 + 1.0, 201)
    far = t0 + np.geomspace(1.0, span, n)
    return np.unique(np.concatenate([near, far]))


def verify_growth(s, gamma, t0=0.0, grid=None) -> GrowthReport:
    """Check ``0 <= beta_dot <= k beta`` on ``[t0, inf)`` for some ``k < gamma``.

    For registered families the smallest feasible ``k`` is known in closed form
    and the grid only cross-checks it; custom schedules are checked on the grid
    against their claimed ``k`` (or the grid supremum when none is claimed).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if t0 < 0:
        raise ValueError("t0 must be nonnegative")
    grid = default_grid(t0) if grid is None else np.asarray(grid, dtype=float)
    grid = grid[grid >= t0]
    if grid.size == 0:
        raise ValueError("grid has no points at or after t0")
    with np.errstate(over="ignore", invalid="ignore"):
        b = np.asarray(s.beta(grid), dtype=float)
        bd = np.asarray(s.beta_dot(grid), dtype=float)
    if np.any(np.isnan(b)) or np.any(b <= 0):
        raise ValueError("beta must be positive on the grid")
    # fast-growing schedules overflow far out; the ratio is judged where beta is representable
    keep = np.isfinite(b) & np.isfinite(bd)
    if not keep[0]:
        raise ValueError("beta must be finite at t0")
    grid, b, bd = grid[keep], b[keep], bd[keep]
    ratio_max = float(np.max(bd / b))
    divergent = bool(s.divergent)

    k_closed = s.growth_sup(t0)
    if k_closed is not None:
        k_min, status = float(k_closed), "proved"
    else:
        claimed = getattr(s, "claimed_k", None)
        k_min = ratio_max if claimed is None else max(0.0, float(claimed))
        status = "grid-checked"

    def report(feasible, reason=""):
        return GrowthReport(feasible, k_min, float(t0), gamma - k_min, float(gamma),
                            status, reason, divergent, ratio_max)

    if np.any(bd < -NONNEG_TOL):
        where = float(grid[np.argmax(bd < -NONNEG_TOL)])
        return report(False, f"nonincreasing schedule: beta_dot < 0 at t={where:g}")
    if ratio_max > k_min * (1 + 1e-9) + 1e-12:
        return report(False, f"H_beta violated on grid: beta_dot/beta reaches "
                             f"{ratio_max:g} > k={k_min:g}")
    if k_min >= gamma:
        return report(False, f"H_beta violated: k_min={k_min:g} ≥ gamma={gamma:g}")
    return report(True)
