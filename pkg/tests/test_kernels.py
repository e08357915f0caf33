import numpy as np
import pytest
from scipy.integrate import solve_ivp

from penaltyflow import _backend, _pykernels
from penaltyflow import IntegratorConfig, get_problem, integrate

BACKENDS = _backend.available()
needs_compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="extension not built")


def oscillator(t, y):
    return np.array([y[1], -y[0]])


@pytest.mark.parametrize("backend", BACKENDS)
def test_hermite_output_exact_on_cubic(backend):
    k = _backend.get_kernels(backend)
    t_out = np.linspace(0.0, 3.0, 37)
    Y, stats = k.dopri5(lambda t, y: np.array([3 * t * t]), t_out, np.array([0.0]),
                        1e-6, 1e-9, 0.7, np.inf, 1e-12)
    assert stats[5] == _pykernels.STATUS_OK and stats[0] == len(t_out)
    np.testing.assert_allclose(Y[:, 0], t_out ** 3, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS)
def test_dopri5_against_closed_form(backend):
    k = _backend.get_kernels(backend)
    t_out = np.linspace(0.0, 20.0, 201)
    Y, stats = k.dopri5(oscillator, t_out, np.array([1.0, 0.0]), 1e-10, 1e-12, 0.01, np.inf, 1e-12)
    assert stats[5] == 0 and stats[1] > 0
    np.testing.assert_allclose(Y[:, 0], np.cos(t_out), atol=1e-8)
    np.testing.assert_allclose(Y[:, 1], -np.sin(t_out), atol=1e-8)


@pytest.mark.parametrize("backend", BACKENDS)
def test_rk4_fourth_order(backend):
    k = _backend.get_kernels(backend)
    t_out = np.array([0.0, 5.0])
    errs = []
    for h in (0.1, 0.05):
        Y, stats = k.rk4(oscillator, t_out, np.array([1.0, 0.0]), h)
        assert stats[5] == 0
        errs.append(abs(Y[-1, 0] - np.cos(5.0)))
    assert errs[0] / errs[1] >= 8.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_status_nonfinite(backend):
    k = _backend.get_kernels(backend)
    t_out = np.linspace(0.0, 2.0, 21)

    def blows_up(t, y):
        return np.array([np.nan if t > 1.0 else 1.0])

    Y, stats = k.dopri5(blows_up, t_out, np.array([0.0]), 1e-8, 1e-10, 0.1, np.inf, 1e-9)
    n_filled, status, t_reached = stats[0], stats[5], stats[6]
    assert status == _pykernels.STATUS_NONFINITE
    assert t_reached <= 1.0 + 1e-9 and n_filled <= 11
    np.testing.assert_allclose(Y[:n_filled, 0], t_out[:n_filled], atol=1e-12)
    _, stats = k.rk4(blows_up, t_out, np.array([0.0]), 0.1)
    assert stats[5] == _pykernels.STATUS_NONFINITE


@pytest.mark.parametrize("backend", BACKENDS)
def test_status_underflow_and_max_steps(backend):
    k = _backend.get_kernels(backend)

    def stiff(t, y):
        return -1e8 * y

    t_out = np.array([0.0, 1.0])
    _, stats = k.dopri5(stiff, t_out, np.array([1.0]), 1e-10, 1e-12, 0.1, np.inf, 1e-3)
    assert stats[5] == _pykernels.STATUS_STEP_UNDERFLOW
    _, stats = k.dopri5(oscillator, np.array([0.0, 100.0]), np.array([1.0, 0.0]),
                        1e-10, 1e-12, 0.01, 0.01, 1e-12, 50)
    assert stats[5] == _pykernels.STATUS_MAX_STEPS and stats[1] + stats[2] == 50
    _, stats = k.rk4(oscillator, np.array([0.0, 100.0]), np.array([1.0, 0.0]), 0.01, 50)
    assert stats[5] == _pykernels.STATUS_MAX_STEPS


@needs_compiled
@pytest.mark.parametrize("name", ["affine-quadratic-2d", "halfspace-2d", "affine-quadratic-10d"])
@pytest.mark.parametrize("fused", [True, False])
def test_backend_parity(name, fused):
    p = get_problem(name).instance
    runs = [integrate(p, IntegratorConfig(T_end=30.0, sample_count=301, backend=b, fused=fused))
            for b in ("cython", "python")]
    np.testing.assert_allclose(runs[0].x, runs[1].x, rtol=1e-12, atol=1e-13)
    assert runs[0].stats.steps == runs[1].stats.steps


@pytest.mark.parametrize("name", ["affine-quadratic-2d", "halfspace-2d", "huber-halfspace-2d"])
def test_against_scipy_dop853(name):
    p = get_problem(name).instance
    traj = integrate(p, IntegratorConfig(T_end=30.0, sample_count=301))
    n = p.dim

    def f(t, y):
        x, v = y[:n], y[n:]
        return np.concatenate((v, -p.gamma * v - p.phi.gradient(x)
                               - float(p.schedule.beta(t)) * p.psi.gradient(x)))

    ref = solve_ivp(f, (0.0, 30.0), np.concatenate((p.u0, p.v0)), method="DOP853",
                    t_eval=traj.t, rtol=1e-12, atol=1e-14)
    assert ref.success
    np.testing.assert_allclose(traj.x, ref.y[:n].T, atol=1e-7)
    np.testing.assert_allclose(traj.v, ref.y[n:].T, atol=1e-7)


def test_affine_field_matches_callback():
    k = _pykernels
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    c = np.array([1.0, -1.0])
    P = np.diag([0.0, 1.0])
    f2 = k.affine_field(H, c, P, np.zeros(2), 3.0, 2, 1, 2.0, 0.0)
    y = np.array([0.3, -0.2, 1.0, 0.5])
    x, v = y[:2], y[2:]
    expect = np.concatenate((v, -3.0 * v - (H @ x - c) - 4.0 * (P @ x)))
    np.testing.assert_allclose(f2(1.0, y), expect)
    f1 = k.affine_field(H, c, P, np.zeros(2), 3.0, 1, 2, 2.0, 0.5)
    np.testing.assert_allclose(f1(2.0, x), -(H @ x - c) - 2.0 * np.e * (P @ x))
    with pytest.raises(ValueError):
        k.affine_field(H, c, P, np.zeros(2), 3.0, 3, 1, 2.0, 0.0)
    with pytest.raises(ValueError):
        k.affine_field(H, c, P, np.zeros(2), 3.0, 2, 7, 2.0, 0.0)


def test_backend_selection(monkeypatch):
    assert _backend.get_kernels("python") is _pykernels
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")
    assert _backend.DEFAULT_BACKEND in BACKENDS
    monkeypatch.setenv("PENALTYFLOW_BACKEND", "python")
    assert _backend._default() == "python"
    monkeypatch.setenv("PENALTYFLOW_BACKEND", "gpu")
    with pytest.raises(ValueError):
        _backend._default()
