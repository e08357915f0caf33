import numpy as np
import pytest

from penaltyflow import (AffineSubspace, IntegratorConfig, PowerSchedule, ProblemInstance,
                         ShiftedSquaredNorm, SquaredDistance, integrate)
from penaltyflow.convex import (Ball, Box, Halfspace, HuberHinge,
                                LogSumExp, Quadratic, ZeroFunction)
from penaltyflow.dynamics import sample_trajectory


def line_x2_zero():
    return AffineSubspace.hyperplane([0.0, 1.0], 0.0)


def flagship_instance(**kw):
    args = dict(gamma=3.0, schedule=PowerSchedule(2.0), u0=[0.0, 0.0], v0=[0.0, 0.0])
    args.update(kw)
    return ProblemInstance(ShiftedSquaredNorm([2.0, 1.0]), SquaredDistance(line_x2_zero()),
                           name="flagship", **args)


@pytest.fixture(scope="session")
def flagship():
    return flagship_instance()


@pytest.fixture(scope="session")
def flagship_traj(flagship):
    return integrate(flagship, IntegratorConfig(T_end=100.0, sample_count=10001))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def equilibrium_trajectory(p, z, T=10.0, n=101):
    t = np.linspace(0.0, T, n)
    x = np.tile(np.asarray(z, dtype=float), (n, 1))
    return sample_trajectory(p, t, x, np.zeros_like(x))


def library_functions():
    """One instance of every function kind of the library, in 2 or 3 dimensions."""
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    affine3 = AffineSubspace([[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]], [1.0, 0.5])
    return {
        "quadratic": Quadratic(A, [1.0, -1.0], 0.3),
        "quadratic-flat": Quadratic(np.diag([1.0, 0.0]), [1.0, 0.0], 0.5),
        "sqnorm": ShiftedSquaredNorm([2.0, 1.0]),
        "logsumexp": LogSumExp(3),
        "dist2-line": SquaredDistance(line_x2_zero()),
        "dist2-halfspace": SquaredDistance(Halfspace([1.0, 1.0], 1.0)),
        "dist2-ball": SquaredDistance(Ball([0.0, 0.0], 1.0)),
        "dist2-box": SquaredDistance(Box([-1.0, 0.0], [2.0, 0.5])),
        "dist2-affine-3d": SquaredDistance(affine3),
        "huber": HuberHinge([1.0, 2.0], 0.5, delta=0.7),
        "zero": ZeroFunction(2),
    }
