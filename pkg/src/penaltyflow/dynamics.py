"""Second-order penalty dynamics, its first-order companion and the
heavy-ball special case.

The second-order system is

    x'' + gamma x' + grad phi(x) + beta(t) grad psi(x) = 0,   x(0) = u0, x'(0) = v0,

and the first-order companion is ``x' = -grad phi(x) - beta(t) grad psi(x)``.
Trajectories are integrated with an adaptive Dormand-Prince 5(4) pair (or
fixed-step classical RK4) and sampled on a uniform output grid by cubic
Hermite interpolation between accepted steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from .convex import DimensionError, PenaltyFunction, ZeroFunction, _single
from .schedules import ConstSchedule, ExpSchedule, PowerSchedule, verify_growth

SYSTEMS = ("second_order", "first_order")
METHODS = ("dopri5", "rk4")

_STATUS_TEXT = {
    1: "step size underflow: the accepted step fell below {min_step:g} at t={t:g} "
       "(system too stiff for the explicit integrator)",
    2: "non-finite state or vector field at t={t:g}",
    3: "maximum number of steps exceeded at t={t:g}",
}


class IntegrationError(RuntimeError):
    """Integration aborted; ``partial`` holds the samples computed so far."""

    def __init__(self, message, partial=None, stats=None):
        super().__init__(message)
        self.partial = partial
        self.stats = stats


class GrowthConditionError(ValueError):
    """The schedule fails the growth condition and no override was given."""

    def __init__(self, report):
        super().__init__(report.reason)
        self.report = report


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProblemInstance:
    phi: object
    psi: PenaltyFunction
    gamma: float
    schedule: object
    u0: np.ndarray
    v0: np.ndarray
    analytic_solution: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not isinstance(self.psi, PenaltyFunction):
            raise TypeError("psi must be a PenaltyFunction (nonnegative, with a zero set)")
        n = self.phi.dim
        if self.psi.dim != n:
            raise DimensionError(f"phi has dimension {n} but psi has {self.psi.dim}")
        object.__setattr__(self, "u0", _frozen(_single(self.u0, n, "u0")))
        object.__setattr__(self, "v0", _frozen(_single(self.v0, n, "v0")))
        if self.analytic_solution is not None:
            object.__setattr__(self, "analytic_solution",
                               _frozen(_single(self.analytic_solution, n, "analytic_solution")))
        if self.phi.lower_bound is None:
            raise ValueError("phi must be bounded from below (lower_bound is required)")
        # nonempty zero set: the witness must lie in it
        if not self.psi.zero_set.contains(self.psi.zero_set.witness()):
            raise ValueError("psi zero set witness is not a member of the set")
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def dim(self):
        return self.phi.dim


@dataclass(frozen=True)
class State:
    t: float
    x: np.ndarray
    v: np.ndarray


def heavy_ball(phi, gamma, u0, v0, name="heavy-ball"):
    """Problem with ``psi = 0``: the heavy-ball system ``x'' + gamma x' + grad phi(x) = 0``."""
    return ProblemInstance(phi, ZeroFunction(phi.dim), gamma, ConstSchedule(1.0), u0, v0, name=name)


def _check_finite(vec, what, t):
    if not np.all(np.isfinite(vec)):
        raise FloatingPointError(f"non-finite {what} at t={t:g}")
    return vec


def rhs_second_order(p, s):
    """``(x', v')`` of the second-order system at state ``s``."""
    x = _single(s.x, p.dim, "x")
    v = _single(s.v, p.dim, "v")
    gphi = _check_finite(p.phi.gradient(x), "gradient of phi", s.t)
    gpsi = _check_finite(p.psi.gradient(x), "gradient of psi", s.t)
    return v.copy(), -p.gamma * v - gphi - float(p.schedule.beta(s.t)) * gpsi


def rhs_first_order(p, t, x):
    x = _single(x, p.dim, "x")
    gphi = _check_finite(p.phi.gradient(x), "gradient of phi", t)
    gpsi = _check_finite(p.psi.gradient(x), "gradient of psi", t)
    return -gphi - float(p.schedule.beta(t)) * gpsi


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``step`` is the fixed step of ``rk4`` (defaults to ``max_step`` when finite,
    else to the output spacing).  ``fused`` lets affine-gradient problems with a
    registered schedule run entirely inside the kernel.
    """

    method: str = "dopri5"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    initial_step: float = 0.1
    T_end: float = 100.0
    sample_count: int = 10001
    step: float | None = None
    fused: bool = True
    backend: str | None = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        for name in ("rel_tol", "abs_tol"):
            val = getattr(self, name)
            if not 0 < val < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.T_end > 0:
            raise ValueError("T_end must be positive")
        if not (self.max_step > 0 and self.initial_step > 0):
            raise ValueError("max_step and initial_step must be positive")
        if int(self.sample_count) < 2:
            raise ValueError("sample_count must be at least 2")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")

    @property
    def min_step(self):
        return 1e-12 * self.T_end

    def output_grid(self):
        return np.linspace(0.0, self.T_end, int(self.sample_count))

    def fixed_step(self):
        if self.step is not None:
            return self.step
        if math.isfinite(self.max_step):
            return self.max_step
        return self.T_end / (int(self.sample_count) - 1)


@dataclass(frozen=True)
class IntegrationStats:
    system: str
    method: str
    backend: str
    fused: bool
    steps: int
    rejected: int
    evaluations: int
    max_error: float
    status: int
    t_reached: float
    growth_feasible: bool | None = None
    growth_overridden: bool = False
    message: str = ""

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class Trajectory:
    """Samples ``(t, x, v)`` with cached ``phi``, ``psi``, ``beta`` and gradients.

    For the first-order system ``v`` holds the velocity ``x'`` evaluated from
    the vector field.  ``E`` is the energy column as stored; it is computed from
    the other columns at construction and may be replaced (e.g. when read back
    from CSV).
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    beta: np.ndarray
    beta_dot: np.ndarray
    grad_phi: np.ndarray
    grad_psi: np.ndarray
    E: np.ndarray
    stats: IntegrationStats | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("t", "x", "v", "phi", "psi", "beta", "beta_dot", "grad_phi", "grad_psi", "E"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self):
        return len(self.t)

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def T_end(self):
        return float(self.t[-1])

    def state(self, i):
        return State(float(self.t[i]), self.x[i].copy(), self.v[i].copy())

    def with_energy(self, E):
        """Copy with the stored energy column replaced."""
        return replace(self, E=E)

    def to_csv(self, path):
        """Write ``t, x_0..x_{n-1}, v_0..v_{n-1}, phi, psi, beta, E`` (round-trip precision)."""
        n = self.dim
        header = ",".join(["t"] + [f"x_{i}" for i in range(n)] + [f"v_{i}" for i in range(n)]
                          + ["phi", "psi", "beta", "E"])
        data = np.column_stack([self.t, self.x, self.v, self.phi, self.psi, self.beta, self.E])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def sample_trajectory(p, t, x, v, stats=None):
    """Build a :class:`Trajectory` from raw samples, caching all derived values."""
    t = np.asarray(t, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    phi = np.asarray(p.phi.value(x), dtype=float)
    psi = np.asarray(p.psi.value(x), dtype=float)
    beta = np.broadcast_to(np.asarray(p.schedule.beta(t), dtype=float), t.shape)
    beta_dot = np.broadcast_to(np.asarray(p.schedule.beta_dot(t), dtype=float), t.shape)
    E = 0.5 * np.sum(v * v, axis=1) + phi + beta * psi
    return Trajectory(t, x, v, phi, psi, beta, beta_dot,
                      p.phi.gradient(x), p.psi.gradient(x), E, stats)


def read_trajectory_csv(path):
    """Columns of a trajectory CSV as a dict of arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.asarray(data[name]) for name in data.dtype.names}


_SCHEDULE_CODES = {PowerSchedule: 1, ExpSchedule: 2, ConstSchedule: 0}


def _schedule_code(s):
    code = _SCHEDULE_CODES.get(type(s))
    if code == 1:
        return code, s.alpha, 0.0
    if code == 2:
        return code, s.beta0, s.k
    if code == 0:
        return code, s.beta0, 0.0
    return None


def _vector_field(p, system, kernels, fused):
    """Kernel field when the problem is affine-gradient, else a Python callable."""
    order = 2 if system == "second_order" else 1
    if fused:
        aphi, apsi = p.phi.affine_gradient(), p.psi.affine_gradient()
        sched = _schedule_code(p.schedule)
        if aphi is not None and apsi is not None and sched is not None:
            code, p0, p1 = sched
            return kernels.affine_field(aphi[0], aphi[1], apsi[0], apsi[1],
                                        p.gamma, order, code, p0, p1), True
    n, gamma = p.dim, p.gamma
    phi_grad, psi_grad, beta = p.phi.gradient, p.psi.gradient, p.schedule.beta
    if order == 2:
        def f(t, y):
            x, v = y[:n], y[n:]
            return np.concatenate((v, -gamma * v - phi_grad(x) - float(beta(t)) * psi_grad(x)))
    else:
        def f(t, y):
            return -phi_grad(y) - float(beta(t)) * psi_grad(y)
    return f, False


def initial_step(p, cfg):
    """``min(initial_step, 0.01 / (1 + L_phi + beta(0) L_psi))``."""
    scale = 1.0 + p.phi.lipschitz + float(p.schedule.beta(0.0)) * p.psi.lipschitz
    return min(cfg.initial_step, 0.01 / scale)


def integrate(p, cfg=None, system="second_order", override_growth=False):
    """Integrate ``p`` on ``[0, cfg.T_end]`` and sample it on ``cfg.output_grid()``.

    Raises
    ------
    GrowthConditionError
        second-order run whose schedule fails the growth condition, unless
        ``override_growth`` (the override is recorded in the stats).
    IntegrationError
        step-size underflow, non-finite state or step budget exhausted; the
        exception carries the partial trajectory.
    """
    cfg = cfg or IntegratorConfig()
    if system not in SYSTEMS:
        raise ValueError(f"system must be one of {SYSTEMS}")
    growth_ok = None
    if system == "second_order":
        report = verify_growth(p.schedule, p.gamma)
        growth_ok = report.feasible
        if not report.feasible and not override_growth:
            raise GrowthConditionError(report)

    backend = cfg.backend or _backend.DEFAULT_BACKEND
    kernels = _backend.get_kernels(backend)
    f, fused = _vector_field(p, system, kernels, cfg.fused)
    t_out = cfg.output_grid()
    y0 = np.concatenate((p.u0, p.v0)) if system == "second_order" else p.u0.copy()

    if cfg.method == "dopri5":
        Y, raw = kernels.dopri5(f, t_out, y0, cfg.rel_tol, cfg.abs_tol, initial_step(p, cfg),
                                cfg.max_step, cfg.min_step, cfg.max_steps)
    else:
        Y, raw = kernels.rk4(f, t_out, y0, cfg.fixed_step(), cfg.max_steps)
    n_filled, steps, rejected, evals, max_err, status, t_reached = raw
    message = "" if status == 0 else _STATUS_TEXT[status].format(min_step=cfg.min_step, t=t_reached)
    stats = IntegrationStats(system, cfg.method, backend, fused, int(steps), int(rejected),
                             int(evals), float(max_err), int(status), float(t_reached),
                             growth_ok, bool(override_growth and growth_ok is False), message)

    n = p.dim
    t_s, Y = t_out[:n_filled], Y[:n_filled]
    if system == "second_order":
        x, v = Y[:, :n], Y[:, n:]
    else:
        x = Y
        v = np.array([rhs_first_order(p, ti, xi) for ti, xi in zip(t_s, x)]) if len(x) else x
    traj = sample_trajectory(p, t_s, x, v, stats)
    if status != 0:
        raise IntegrationError(message, traj, stats)
    return traj
