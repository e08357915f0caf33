"""Acceptance criteria 1-10, one PASS/FAIL line per criterion.

Each test prints its line outside pytest's capture (visible in ``pytest -v``
and ``pytest -s`` alike) and then asserts the same verdict.
"""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import flagship_instance, library_functions
from penaltyflow import (ExpSchedule, IntegratorConfig, PowerSchedule, ShiftedSquaredNorm,
                         condition_h_check, convergence_report, dissipation_residual,
                         fd_gradient_check, get_problem, heavy_ball, integrate,
                         lyapunov_inequality_check, verify_growth)
from penaltyflow.cli import main
from penaltyflow.convex import INF
from penaltyflow.diagnostics import condition_h_integrand

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
Z_STAR = np.array([2.0, 0.0])


@pytest.fixture
def verdict(capsys):
    def emit(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{what} [{'ok' if passed else 'FAILED'}]" for what, passed in checks)
        with capsys.disabled():
            print(f"\nCRITERION {number:2d} {'PASS' if ok else 'FAIL'}: {title}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def reference_run():
    """Flagship at the tight reference tolerance, timed."""
    p = flagship_instance()
    cfg = IntegratorConfig(T_end=100.0, sample_count=10001, rel_tol=1e-12, abs_tol=1e-14)
    integrate(p, IntegratorConfig(T_end=1.0, sample_count=11))  # warm import paths
    t0 = time.perf_counter()
    traj = integrate(p, cfg)
    return p, traj, time.perf_counter() - t0


def test_criterion_01_flagship_convergence(reference_run, verdict):
    p, traj, elapsed = reference_run
    x, v = traj.x[-1], traj.v[-1]
    dist = float(np.linalg.norm(x - Z_STAR))
    gap = float(traj.phi[-1] - 0.5)
    bpsi = float(traj.beta[-1] * traj.psi[-1])
    speed = float(np.linalg.norm(v))
    verdict(1, "flagship convergence at T=100", [
        (f"|x(T)-z|={dist:.3e} <= 5e-2", dist <= 5e-2),
        (f"phi(x(T))-0.5={gap:.3e} <= 1e-2", gap <= 1e-2),
        (f"beta psi={bpsi:.3e} <= 1e-2", bpsi <= 1e-2),
        (f"|x'(T)|={speed:.3e} <= 1e-2", speed <= 1e-2),
        (f"runtime {elapsed:.3f}s < 5s", elapsed < 5.0),
    ])


def test_criterion_02_strong_convergence(reference_run, verdict):
    p, traj, _ = reference_run
    rep = convergence_report(traj, p, z=Z_STAR)
    d = np.linalg.norm(traj.x - Z_STAR, axis=1)[traj.t >= 10.0]
    strictly = bool(np.all(np.diff(d) < 0))
    verdict(2, "strong convergence", [
        (f"Cauchy ratio of int |x-z|^2 = {rep.cauchy_dist_sq:.2e} <= 5%",
         rep.cauchy_dist_sq <= 0.05),
        ("|x-z| decreasing on [10, 100]", strictly and rep.distance_monotone_last_decade),
    ])


def test_criterion_03_condition_h(verdict):
    p = np.array([0.0, 1.0])
    psi = flagship_instance().psi
    checks = []
    for alpha in (1.5, 2.0, 3.0):
        rep = condition_h_check(psi, PowerSchedule(alpha), p, T_max=1e4, mode="quadrature")
        target = 1.0 / (2.0 * (alpha - 1.0))
        rel = abs(rep.value - target) / target
        checks.append((f"alpha={alpha}: {rep.value:.7f} vs {target:.4f} (rel {rel:.7f})",
                       rel <= 0.01))
    rep = condition_h_check(psi, PowerSchedule(1.0), p, T_max=1e4)
    checks.append((f"alpha=1 verdict {rep.verdict}", rep.verdict == "divergent"))
    verdict(3, "condition (H) quadrature vs closed form", checks)


def test_criterion_04_energy_dissipation(verdict):
    p = flagship_instance()
    res = []
    for n in (10001, 20001):  # output step 0.01 and 0.005
        traj = integrate(p, IntegratorConfig(T_end=100.0, sample_count=n))
        res.append(dissipation_residual(traj, p).max)
    ratio = res[0] / res[1]
    verdict(4, "energy dissipation identity", [
        (f"max residual at h=0.01: {res[0]:.3e} <= 1e-3", res[0] <= 1e-3),
        (f"halving h reduces it {ratio:.2f}x >= 3x", ratio >= 3.0),
    ])


def test_criterion_05_lyapunov_suite(reference_run, verdict):
    p, traj, _ = reference_run
    rep = lyapunov_inequality_check(traj, p, Z_STAR)
    a, b = rep["value_gap_form"], rep["energy_bound"]
    neg = lyapunov_inequality_check(traj, p, [2.0, 1.0], certify=False)["value_gap_form"]
    neg0 = lyapunov_inequality_check(traj, p, [0.0, 0.0], certify=False)
    caught0 = not neg0.passed
    verdict(5, "Lyapunov inequalities", [
        (f"value-gap form max {a.max_violation:.2e} <= tol {a.tolerance:.2e}", a.passed),
        (f"energy inequality max {b.max_violation:.2e} <= tol {b.tolerance:.2e}", b.passed),
        (f"non-optimal z=(2,1) violation {neg.max_violation:.2e} detected", not neg.passed),
        ("non-optimal z=(0,0) detected by the chain", caught0),
    ])


def test_criterion_06_integrability(reference_run, verdict):
    p, traj, _ = reference_run
    rep = convergence_report(traj, p, z=Z_STAR)
    verdict(6, "partial integrals are Cauchy", [
        (f"int beta psi last-half share {rep.cauchy_beta_psi:.2e} <= 5%",
         rep.cauchy_beta_psi <= 0.05),
        (f"int |x'|^2 last-half share {rep.cauchy_speed_sq:.2e} <= 5%",
         rep.cauchy_speed_sq <= 0.05),
    ])


def test_criterion_07_heavy_ball(verdict):
    p = heavy_ball(ShiftedSquaredNorm([0.0, 0.0]), 1.0, [1.0, 0.0], [0.0, 0.0])
    traj = integrate(p, IntegratorConfig(T_end=20.0, sample_count=2001))
    norm = float(np.linalg.norm(traj.x[-1]))
    rise = float(np.max(np.diff(traj.E)))
    verdict(7, "heavy-ball regression", [
        (f"|x(20)|={norm:.3e} <= 1e-3", norm <= 1e-3),
        (f"largest energy increase {rise:.2e} <= 1e-8", rise <= 1e-8),
    ])


def test_criterion_08_first_second_order(tmp_path, verdict):
    out = tmp_path / "compare"
    cfg = json.loads((CONFIGS / "compare_flagship.json").read_text())
    cfg["integrator"]["sample_count"] = 10001
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code = main(["compare", "--config", str(path), "--out", str(out)])
    rep = json.loads((out / "report.json").read_text())
    d2 = rep["second_order"]["distance_terminal"]
    d1 = rep["first_order"]["distance_terminal"]
    verdict(8, "first/second-order agreement", [
        (f"exit code {code}", code == 0),
        (f"terminal gap {rep['terminal_gap']:.2e} <= 1e-2", rep["terminal_gap"] <= 1e-2),
        (f"second-order distance {d2:.2e} <= 1e-2", d2 <= 1e-2),
        (f"first-order distance {d1:.2e} <= 1e-2", d1 <= 1e-2),
    ])


def test_criterion_09_growth_verifier(verdict):
    r1 = verify_growth(PowerSchedule(2.0), 3.0)
    r2 = verify_growth(PowerSchedule(4.0), 3.0)
    r3 = verify_growth(ExpSchedule(1.0, 0.5), 1.0)
    r4 = verify_growth(PowerSchedule(4.0), 3.0, t0=1.0)
    verdict(9, "growth verifier", [
        (f"(1+t)^2, gamma=3: feasible, k_min={r1.k_min:g}", r1.feasible and r1.k_min == 2.0),
        ("(1+t)^4, gamma=3: infeasible", not r2.feasible),
        (f"exp(0.5t), gamma=1: feasible, k_min={r3.k_min:g}", r3.feasible and r3.k_min == 0.5),
        (f"(1+t)^4, gamma=3, t0=1: feasible, k_min={r4.k_min:g}",
         r4.feasible and r4.k_min == 2.0),
    ])


def test_criterion_10_property_suites(verdict):
    rng = np.random.default_rng(2024)
    funcs = library_functions()
    checks = []

    worst = max(fd_gradient_check(f, x) for f in funcs.values()
                for x in rng.uniform(-10, 10, size=(100, f.dim)))
    checks.append((f"finite-difference gradient error {worst:.1e} <= 1e-5 ({len(funcs)} kinds)",
                   worst <= 1e-5))

    fy_min, fy_eq = INF, 0.0
    for name, f in funcs.items():
        if not f.has_conjugate:
            continue
        X = rng.uniform(-10, 10, size=(200, f.dim))
        for x in X:
            g = f.gradient(x)
            fy_eq = max(fy_eq, abs(f.value(x) + f.conjugate(g) - g @ x) / (1 + abs(f.value(x))))
            # a point of the conjugate domain: a gradient, shrunk toward 0 for penalties
            q = f.gradient(rng.uniform(-10, 10, f.dim))
            if name.startswith(("dist2", "huber", "zero")):
                q = q * rng.uniform()
            c = f.conjugate(q)
            if c < INF:
                fy_min = min(fy_min, f.value(x) + c - q @ x)
    checks.append((f"Fenchel-Young min gap {fy_min:.2e} >= -1e-9", fy_min >= -1e-9))
    checks.append((f"Fenchel-Young equality at gradient {fy_eq:.1e} <= 1e-7", fy_eq <= 1e-7))

    psi = flagship_instance().psi
    t = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 200)])
    neg = min(float(np.min(condition_h_integrand(psi, PowerSchedule(a), [0.0, s])(t)))
              for a in (1.0, 2.0) for s in (0.1, 1.0, 10.0))
    checks.append((f"(H) integrand min {neg:.2e} >= 0", neg >= 0.0))
    invariant = True
    for alpha in (0.5, 1.0, 1.5, 2.0, 3.0):
        verdicts = {condition_h_check(psi, PowerSchedule(alpha), [0.0, s]).verdict
                    for s in (0.01, 1.0, 100.0)}
        invariant &= len(verdicts) == 1
    checks.append(("(H) verdict invariant under scaling of p", invariant))

    drift = 0.0
    for name in ("heavy-ball-2d", "halfspace-inactive-2d"):
        bp = get_problem(name)
        inst = bp.with_instance(u0=bp.z_star, v0=np.zeros(2)).instance
        cfg = IntegratorConfig(T_end=50.0, sample_count=501)
        traj = integrate(inst, cfg)
        drift = max(drift, float(np.max(np.abs(traj.x - bp.z_star))))
    checks.append((f"equilibrium start drift {drift:.1e} <= abs_tol {cfg.abs_tol:g}",
                   drift <= cfg.abs_tol))
    verdict(10, "property suites", checks)
