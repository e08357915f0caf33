"""Benchmark problems ``min phi`` over ``argmin psi`` with known solutions.

Every factory returns a :class:`BenchmarkProblem` whose solution is derived in
closed form (projection, halfspace KKT, linear KKT system) and re-checked by
:func:`certify` through the variational inequality over sampled feasible points.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .convex import (AffineSubspace, Ball, DescriptorError, Halfspace, HuberHinge, Quadratic,
                     ShiftedSquaredNorm, SquaredDistance, ZeroFunction, _single, _take,
                     function_from_dict, penalty_from_dict, set_from_dict)
from .diagnostics import VI_TOL, json_safe
from .dynamics import ProblemInstance
from .schedules import ConstSchedule, PowerSchedule, schedule_from_dict

#: problems carrying a solution set instead of a point use this many probes
N_PROBES = 1000


@dataclass(frozen=True)
class BenchmarkProblem:
    """A problem instance with its analytic solution.

    ``z_star`` is None when the solution set has more than one point; then
    ``solution_set`` holds it (projection and membership oracle).
    """

    instance: ProblemInstance
    z_star: np.ndarray | None
    optimal_value: float
    provenance: str
    solution_set: object = None

    @property
    def name(self):
        return self.instance.name

    @property
    def strongly_convex(self):
        return self.instance.phi.strong_convexity > 0

    @property
    def divergent_beta(self):
        return bool(self.instance.schedule.divergent)

    @property
    def heavy_ball(self):
        return isinstance(self.instance.psi, ZeroFunction)

    def tags(self):
        return {"strongly_convex": self.strongly_convex, "divergent_beta": self.divergent_beta,
                "heavy_ball": self.heavy_ball}

    def distance_to_solution(self, x):
        if self.z_star is not None:
            return np.linalg.norm(np.asarray(x, dtype=float) - self.z_star, axis=-1)
        return self.solution_set.distance(x)

    def reference_point(self, x_terminal):
        """``z_star``, or the projection of ``x_terminal`` onto the solution set."""
        if self.z_star is not None:
            return self.z_star
        return self.solution_set.project(x_terminal)

    def with_instance(self, **changes):
        """Copy with fields of the instance replaced (schedule, gamma, u0, ...)."""
        return replace(self, instance=replace(self.instance, **changes))

    def to_dict(self):
        p = self.instance
        return json_safe({
            "name": p.name, "phi": p.phi.to_dict(), "psi": p.psi.to_dict(), "gamma": p.gamma,
            "schedule": p.schedule.to_dict(), "u0": p.u0, "v0": p.v0,
            "z_star": self.z_star, "optimal_value": self.optimal_value,
            "solution_set": None if self.solution_set is None else self.solution_set.to_dict(),
        })


def _problem(name, phi, psi, gamma, schedule, u0, v0, z, provenance, solution_set=None):
    n = phi.dim
    u0 = np.zeros(n) if u0 is None else u0
    v0 = np.zeros(n) if v0 is None else v0
    inst = ProblemInstance(phi, psi, gamma, schedule, u0, v0,
                           analytic_solution=z, name=name)
    if z is not None:
        value = float(phi.value(z))
    else:
        value = float(phi.value(solution_set.witness()))
    return BenchmarkProblem(inst, inst.analytic_solution, value, provenance, solution_set)


def make_affine_constrained_quadratic(a, C, gamma=3.0, schedule=None, u0=None, v0=None,
                                      name="affine-quadratic"):
    """``phi = 1/2|x - a|^2``, ``psi = 1/2 dist(x, C)^2`` for an affine subspace ``C``.

    The solution is the projection of ``a`` onto ``C``.
    """
    if not isinstance(C, AffineSubspace):
        raise TypeError("C must be an AffineSubspace")
    a = _single(a, C.dim, "a")
    z = C.project(a)
    return _problem(name, ShiftedSquaredNorm(a), SquaredDistance(C), gamma,
                    schedule or PowerSchedule(2.0), u0, v0, z,
                    "orthogonal projection of the unconstrained minimizer onto the subspace")


def make_quadratic_affine_problem(D, b, C, gamma=3.0, schedule=None, u0=None, v0=None,
                                  name="quadratic-affine"):
    """``phi = 1/2 <D x, x> - <b, x>`` (``D`` positive definite) over an affine subspace.

    The solution solves the KKT system ``[D A^T; A 0] [z; lam] = [b; c]``.
    """
    phi = Quadratic(D, b)
    if phi.strong_convexity <= 0:
        raise ValueError("D must be positive definite")
    m, n = C.A.shape
    K = np.block([[phi.A, C.A.T], [C.A, np.zeros((m, m))]])
    z = np.linalg.solve(K, np.concatenate([phi.b, C.b]))[:n]
    return _problem(name, phi, SquaredDistance(C), gamma, schedule or PowerSchedule(2.0),
                    u0, v0, z, "solution of the linear KKT system of the constrained quadratic")


def make_halfspace_problem(a, normal, offset, gamma=3.0, schedule=None, u0=None, v0=None,
                           penalty="dist2", delta=1.0, name="halfspace"):
    """``phi = 1/2|x - a|^2`` over ``{<normal, x> <= offset}``.

    ``penalty`` is ``"dist2"`` (squared distance) or ``"huber"`` (Huber-smoothed
    hinge with width ``delta``); both vanish exactly on the halfspace.
    """
    H = Halfspace(normal, offset)
    a = _single(a, H.dim, "a")
    u = H.normal
    excess = float(u @ a) - H.offset
    z = a.copy() if excess <= 0 else a - excess / float(u @ u) * u
    if penalty == "dist2":
        psi = SquaredDistance(H)
    elif penalty == "huber":
        psi = HuberHinge(normal, offset, delta)
    else:
        raise ValueError("penalty must be 'dist2' or 'huber'")
    how = ("unconstrained minimizer is feasible" if excess <= 0
           else "KKT: projection onto the bounding hyperplane")
    return _problem(name, ShiftedSquaredNorm(a), psi, gamma, schedule or PowerSchedule(2.0),
                    u0, v0, z, how)


def _flat_objective():
    # 1/2 (x_1 - 1)^2, flat in x_2
    return Quadratic(np.diag([1.0, 0.0]), [1.0, 0.0], 0.5)


def make_flat_objective_problem(gamma=3.0, schedule=None, u0=(-1.0, 1.0), v0=None,
                                name="flat-ball-2d"):
    """Merely convex ``phi = 1/2 (x_1 - 1)^2`` over the closed unit ball.

    ``phi`` only sees ``x_1``, and the only feasible point with ``x_1 = 1`` is
    ``(1, 0)``, so the solution set is the single point ``(1, 0)`` even though
    ``phi`` has a line of minimizers.  Along the circle ``phi`` grows only like
    ``theta**4 / 8``, so the approach is algebraic (roughly ``t**-0.5`` in the
    angle) rather than exponential.
    """
    C = Ball([0.0, 0.0], 1.0)
    return _problem(name, _flat_objective(), SquaredDistance(C), gamma,
                    schedule or PowerSchedule(2.0), np.asarray(u0, dtype=float), v0,
                    np.array([1.0, 0.0]),
                    "phi is minimal where x_1 = 1; the ball meets that line only at (1, 0)")


def make_heavy_ball_problem(gamma=1.0, u0=(1.0, 0.0), v0=None, name="heavy-ball-2d"):
    """``phi = 1/2|x|^2`` with ``psi = 0`` (heavy-ball system)."""
    u0 = np.asarray(u0, dtype=float)
    phi = ShiftedSquaredNorm(np.zeros(u0.size))
    return _problem(name, phi, ZeroFunction(u0.size), gamma, ConstSchedule(1.0), u0, v0,
                    np.zeros(u0.size), "unconstrained minimizer of a strongly convex quadratic")


def make_heavy_ball_flat_problem(gamma=1.0, u0=(0.0, 2.0), v0=None, name="heavy-ball-flat-2d"):
    """``phi = 1/2 (x_1 - 1)^2`` with ``psi = 0``: the solution set is the line ``x_1 = 1``."""
    S = AffineSubspace.hyperplane([1.0, 0.0], 1.0)
    return _problem(name, _flat_objective(), ZeroFunction(2), gamma, ConstSchedule(1.0),
                    np.asarray(u0, dtype=float), v0, None,
                    "unconstrained minimizers of phi form the line x_1 = 1", solution_set=S)


def _random_affine(n, m, rng):
    A = rng.standard_normal((m, n))
    return AffineSubspace(A, rng.standard_normal(m))


def _seeded_affine_quadratic(n, seed=0):
    rng = np.random.default_rng(seed)
    C = _random_affine(n, n // 2, rng)
    a = rng.standard_normal(n)
    return make_affine_constrained_quadratic(a, C, name=f"affine-quadratic-{n}d")


def _seeded_quadratic_affine(n, seed=0):
    rng = np.random.default_rng(seed)
    C = _random_affine(n, n // 2, rng)
    D = np.diag(rng.uniform(0.5, 2.0, n))
    return make_quadratic_affine_problem(D, rng.standard_normal(n), C,
                                         name=f"quadratic-affine-{n}d")


REGISTRY = {
    "affine-quadratic-2d": lambda: make_affine_constrained_quadratic(
        [2.0, 1.0], AffineSubspace.hyperplane([0.0, 1.0], 0.0), name="affine-quadratic-2d"),
    "affine-quadratic-diagonal-2d": lambda: make_affine_constrained_quadratic(
        [0.0, 3.0], AffineSubspace.hyperplane([1.0, -1.0], 0.0),
        name="affine-quadratic-diagonal-2d"),
    "affine-quadratic-10d": lambda: _seeded_affine_quadratic(10),
    "affine-quadratic-100d": lambda: _seeded_affine_quadratic(100),
    "quadratic-affine-10d": lambda: _seeded_quadratic_affine(10),
    "quadratic-affine-100d": lambda: _seeded_quadratic_affine(100),
    "halfspace-2d": lambda: make_halfspace_problem(
        [1.0, 1.0], [1.0, 1.0], 1.0, name="halfspace-2d"),
    "halfspace-inactive-2d": lambda: make_halfspace_problem(
        [0.0, 0.0], [1.0, 1.0], 1.0, u0=[2.0, 2.0], name="halfspace-inactive-2d"),
    "huber-halfspace-2d": lambda: make_halfspace_problem(
        [1.0, 1.0], [1.0, 1.0], 1.0, penalty="huber", name="huber-halfspace-2d"),
    "flat-ball-2d": make_flat_objective_problem,
    "heavy-ball-2d": make_heavy_ball_problem,
    "heavy-ball-flat-2d": make_heavy_ball_flat_problem,
}


def get_problem(name):
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; registered: {sorted(REGISTRY)}") from None


_PROBLEM_FIELDS = ("phi", "psi", "gamma", "schedule", "u0", "v0")
_PROBLEM_OPTIONAL = ("name", "z_star", "optimal_value", "solution_set")


def problem_from_dict(d):
    """Inverse of :meth:`BenchmarkProblem.to_dict`; unknown keys are rejected.

    ``z_star`` may be omitted (or null); the problem then has no reference
    solution unless ``solution_set`` is given.
    """
    _take(d, _PROBLEM_FIELDS, _PROBLEM_OPTIONAL, where="problem", tag="name")
    try:
        phi = function_from_dict(d["phi"])
        psi = penalty_from_dict(d["psi"])
        sched = schedule_from_dict(d["schedule"])
        S = None if d.get("solution_set") is None else set_from_dict(d["solution_set"])
        z = d.get("z_star")
        inst = ProblemInstance(phi, psi, float(d["gamma"]), sched, d["u0"], d["v0"],
                               analytic_solution=z, name=str(d.get("name", "inline")))
    except DescriptorError:
        raise
    except (TypeError, ValueError) as exc:
        raise DescriptorError(f"problem: {exc}") from exc
    if z is not None:
        value = float(phi.value(inst.analytic_solution))
    elif S is not None:
        value = float(phi.value(S.witness()))
    else:
        value = float("nan")
    if d.get("optimal_value") is not None and not np.isnan(value):
        if abs(float(d["optimal_value"]) - value) > 1e-12 * max(1.0, abs(value)):
            raise DescriptorError("problem.optimal_value: does not equal phi(z_star)")
    return BenchmarkProblem(inst, inst.analytic_solution, value, "supplied in the descriptor", S)


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    max_vi_violation: float       # max over probes of -<grad phi(z), y - z>
    membership: float             # dist(z, zero set)
    penalty_at_solution: float    # psi(z)
    value_violation: float        # max over probes of phi(z) - phi(y)
    n_probes: int
    failed: tuple = ()

    def to_dict(self):
        return json_safe(self.__dict__)


def certify(bp, n_probes=N_PROBES, seed=0, vi_tol=VI_TOL):
    """Re-derive optimality of the stored solution.

    Checks ``psi(z) <= 1e-12``, ``dist(z, C) <= 1e-8``, the variational
    inequality ``<grad phi(z), y - z> >= -vi_tol`` and ``phi(y) >= phi(z) - 1e-9``
    over ``n_probes`` feasible ``y``, and ``optimal_value = phi(z)``.  Problems
    with a solution set certify sampled points of that set instead of one ``z``.
    """
    p = bp.instance
    C = p.psi.zero_set
    rng = np.random.default_rng(seed)
    if bp.z_star is not None:
        Z = bp.z_star[None, :]
    else:
        Z = bp.solution_set.sample(rng, 8)
    Y = C.sample(rng, n_probes)
    phiY = p.phi.value(Y)
    vi = -np.inf
    membership = 0.0
    pen = 0.0
    val = -np.inf
    for z in Z:
        g = p.phi.gradient(z)
        vi = max(vi, float(np.max(-((Y - z) @ g))))
        membership = max(membership, float(C.distance(z)))
        pen = max(pen, float(p.psi.value(z)))
        val = max(val, float(np.max(p.phi.value(z) - phiY)))
    failed = []
    if pen > 1e-12:
        failed.append(f"psi(z) = {pen:g} > 1e-12")
    if membership > 1e-8:
        failed.append(f"dist(z, zero set) = {membership:g} > 1e-8")
    if vi > vi_tol:
        failed.append(f"variational inequality violated by {vi:g}")
    if val > 1e-9:
        failed.append(f"a feasible probe has lower phi by {val:g}")
    if abs(float(p.phi.value(Z[0])) - bp.optimal_value) > 1e-12 * max(1.0, abs(bp.optimal_value)):
        failed.append("optimal_value differs from phi(z)")
    return CertificateReport(not failed, vi, membership, pen, val, int(n_probes), tuple(failed))
