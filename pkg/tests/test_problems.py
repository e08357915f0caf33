import json

import numpy as np
import pytest
from scipy.linalg import null_space
from scipy.optimize import minimize

from penaltyflow import IntegratorConfig, convergence_report, integrate
from penaltyflow.convex import AffineSubspace, DescriptorError
from penaltyflow.problems import (REGISTRY, certify, get_problem, make_halfspace_problem,
                                  make_quadratic_affine_problem, problem_from_dict)
from penaltyflow.schedules import PowerSchedule


def null_space_solution(D, b, A, c):
    """Minimize 1/2 x'Dx - b'x subject to Ax = c by eliminating the constraint."""
    x_p = np.linalg.lstsq(A, c, rcond=None)[0]
    N = null_space(A)
    w = np.linalg.solve(N.T @ D @ N, N.T @ (b - D @ x_p))
    return x_p + N @ w


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_certifies(name):
    bp = get_problem(name)
    rep = certify(bp)
    assert rep.passed, rep.failed
    assert bp.name == name
    json.dumps(bp.to_dict(), allow_nan=False)


@pytest.mark.parametrize("name", ["quadratic-affine-10d", "quadratic-affine-100d",
                                  "affine-quadratic-10d", "affine-quadratic-100d"])
def test_kkt_matches_null_space_route(name):
    bp = get_problem(name)
    phi, C = bp.instance.phi, bp.instance.psi.zero_set
    D = phi.A if hasattr(phi, "A") else np.eye(phi.dim)
    b = phi.b if hasattr(phi, "b") else phi.center
    z = null_space_solution(D, b, C.A, C.b)
    np.testing.assert_allclose(bp.z_star, z, atol=1e-9)


def test_kkt_small_example():
    C = AffineSubspace([[1.0, 1.0]], [1.0])
    bp = make_quadratic_affine_problem(np.diag([1.0, 3.0]), [0.0, 0.0], C)
    # minimize x^2/2 + 3y^2/2 on x + y = 1: x = 3/4, y = 1/4
    np.testing.assert_allclose(bp.z_star, [0.75, 0.25], atol=1e-14)
    with pytest.raises(ValueError):
        make_quadratic_affine_problem(np.diag([1.0, 0.0]), [0.0, 0.0], C)


@pytest.mark.parametrize("a", [[1.0, 1.0], [3.0, -1.0], [0.0, 0.0], [-2.0, 5.0]])
def test_halfspace_against_slsqp(a):
    bp = make_halfspace_problem(a, [1.0, 1.0], 1.0)
    res = minimize(lambda x: 0.5 * np.sum((x - a) ** 2), np.zeros(2), method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda x: 1.0 - x[0] - x[1]}],
                   options={"ftol": 1e-14})
    np.testing.assert_allclose(bp.z_star, res.x, atol=1e-6)
    with pytest.raises(ValueError):
        make_halfspace_problem(a, [1.0, 1.0], 1.0, penalty="l1")


def test_flat_ball_solution_is_unique_point():
    bp = get_problem("flat-ball-2d")
    np.testing.assert_array_equal(bp.z_star, [1.0, 0.0])
    assert not bp.strongly_convex and bp.divergent_beta
    # other minimizers of phi are infeasible
    assert bp.instance.psi.value([1.0, 0.5]) > 0


def test_heavy_ball_flat_solution_set():
    bp = get_problem("heavy-ball-flat-2d")
    assert bp.z_star is None and bp.tags()["heavy_ball"]
    np.testing.assert_allclose(bp.reference_point([3.0, 2.0]), [1.0, 2.0])
    assert bp.distance_to_solution([3.0, 2.0]) == pytest.approx(2.0)


@pytest.mark.parametrize("name", ["affine-quadratic-2d", "affine-quadratic-diagonal-2d",
                                  "quadratic-affine-10d", "halfspace-2d",
                                  "halfspace-inactive-2d", "huber-halfspace-2d", "heavy-ball-2d"])
def test_trajectories_reach_solution(name):
    bp = get_problem(name)
    traj = integrate(bp.instance, IntegratorConfig(T_end=100.0, sample_count=2001))
    rep = convergence_report(traj, bp.instance, z=bp.z_star)
    assert rep.passed, rep.checks()


def test_descriptor_round_trip():
    for name in sorted(REGISTRY):
        bp = get_problem(name)
        again = problem_from_dict(json.loads(json.dumps(bp.to_dict())))
        assert again.to_dict() == bp.to_dict()


def test_descriptor_errors():
    d = get_problem("affine-quadratic-2d").to_dict()
    with pytest.raises(DescriptorError, match="unknown"):
        problem_from_dict({**d, "extra": 1})
    with pytest.raises(DescriptorError, match="optimal_value"):
        problem_from_dict({**d, "optimal_value": 3.0})
    with pytest.raises(DescriptorError):
        problem_from_dict({**d, "gamma": -1.0})
    bare = problem_from_dict({k: v for k, v in d.items() if k != "z_star"} | {"optimal_value": None})
    assert bare.z_star is None and np.isnan(bare.optimal_value)
    with pytest.raises(KeyError, match="registered"):
        get_problem("nope")


def test_with_instance():
    bp = get_problem("affine-quadratic-2d").with_instance(schedule=PowerSchedule(1.5), gamma=2.0)
    assert bp.instance.gamma == 2.0 and bp.instance.schedule.alpha == 1.5
    assert bp.z_star is not None
