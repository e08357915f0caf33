"""Command-line front end: ``run``, ``check-h``, ``compare`` and ``sweep``.

Exit codes: 0 when every enabled verdict passes, 2 on a failed verdict
(``check-h``: 2 divergent, 3 inconclusive), 1 on execution or configuration
errors.  Reports are written with sorted keys and no wall-clock data, so an
identical config reproduces an identical ``report.json``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .convex import DescriptorError, penalty_from_dict
from .dynamics import IntegrationError, IntegratorConfig, integrate
from .problems import certify, get_problem, problem_from_dict
from .schedules import PowerSchedule, schedule_from_dict, verify_growth

log = logging.getLogger("penaltyflow")

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_TOP_KEYS = ("problem", "schedule", "gamma", "u0", "v0", "system", "integrator",
             "diagnostics", "tolerances", "plot", "sweep", "compare", "output")
_INTEGRATOR_KEYS = ("method", "rel_tol", "abs_tol", "max_step", "initial_step", "T_end",
                    "sample_count", "step", "fused", "backend", "max_steps")
_DIAG_KEYS = ("convergence", "condition_h", "lyapunov", "dissipation", "override_growth")
_CONDH_KEYS = ("p", "T_max", "mode", "use_beta_tilde")
_TOL_KEYS = ("terminal", "distance", "cauchy", "dissipation", "agreement")
_SWEEP_KEYS = ("gamma", "alpha")

DEFAULT_DIAGNOSTICS = {"convergence": True, "condition_h": True, "lyapunov": False,
                       "dissipation": False, "override_growth": False}
DEFAULT_TOLERANCES = {"terminal": dg.TERMINAL_EPS, "distance": dg.DISTANCE_EPS,
                      "cauchy": dg.CAUCHY_RATIO, "dissipation": 1e-3, "agreement": 1e-2}


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {unknown}")


def load_config(path):
    """Read and validate a JSON run config; unknown keys anywhere are rejected."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    _check_keys(cfg, _TOP_KEYS, "config")
    if "problem" not in cfg:
        raise ConfigError("config.problem: missing")
    _check_keys(cfg.get("integrator", {}), _INTEGRATOR_KEYS, "config.integrator")
    diag = cfg.get("diagnostics", {})
    _check_keys(diag, _DIAG_KEYS, "config.diagnostics")
    if isinstance(diag.get("condition_h"), dict):
        _check_keys(diag["condition_h"], _CONDH_KEYS, "config.diagnostics.condition_h")
    tol = cfg.get("tolerances", {})
    _check_keys(tol, _TOL_KEYS, "config.tolerances")
    for k, v in tol.items():
        if not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"config.tolerances.{k}: must be a positive number")
    if "sweep" in cfg:
        _check_keys(cfg["sweep"], _SWEEP_KEYS, "config.sweep")
    if "compare" in cfg:
        _check_keys(cfg["compare"], (), "config.compare")
    if cfg.get("system", "second_order") not in ("second_order", "first_order"):
        raise ConfigError("config.system: must be 'second_order' or 'first_order'")


def resolve_problem(cfg):
    ref = cfg["problem"]
    try:
        if isinstance(ref, str):
            bp = get_problem(ref)
        elif isinstance(ref, dict):
            bp = problem_from_dict(ref)
        else:
            raise ConfigError("config.problem: expected a registry name or an object")
    except KeyError as exc:
        raise ConfigError(f"config.problem: {exc.args[0]}") from exc
    except DescriptorError as exc:
        raise ConfigError(f"config.problem: {exc}") from exc
    changes = {}
    try:
        if "schedule" in cfg:
            changes["schedule"] = schedule_from_dict(cfg["schedule"])
        if "gamma" in cfg:
            changes["gamma"] = float(cfg["gamma"])
        for key in ("u0", "v0"):
            if key in cfg:
                changes[key] = cfg[key]
        return bp.with_instance(**changes) if changes else bp
    except (DescriptorError, TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc


def integrator_config(cfg, tmax=None, tol=None):
    opts = dict(cfg.get("integrator", {}))
    if tmax is not None:
        opts["T_end"] = tmax
    if tol is not None:
        opts["rel_tol"] = tol
        opts["abs_tol"] = tol * 1e-2
    try:
        return IntegratorConfig(**opts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config.integrator: {exc}") from exc


def _settings(cfg):
    diag = {**DEFAULT_DIAGNOSTICS, **cfg.get("diagnostics", {})}
    tol = {**DEFAULT_TOLERANCES, **cfg.get("tolerances", {})}
    return diag, tol


# ---------------------------------------------------------------------------
# running a single problem
# ---------------------------------------------------------------------------

def _condition_h_reports(bp, setting, k):
    """Condition-(H) reports for ``p = -grad phi(z)`` (default) or the listed ``p``."""
    p = bp.instance
    opts = setting if isinstance(setting, dict) else {}
    T_max = float(opts.get("T_max", 1e4))
    mode = opts.get("mode", "auto")
    use_tilde = opts.get("use_beta_tilde", True)
    if "p" in opts:
        ps = [np.asarray(v, dtype=float) for v in opts["p"]]
    elif bp.z_star is not None:
        ps = [-p.phi.gradient(bp.z_star)]
    else:
        ps = [-p.phi.gradient(bp.solution_set.witness())]
    scale = (1.0 - k / p.gamma) if use_tilde and k < p.gamma else 1.0
    return [dg.condition_h_check(p.psi, p.schedule, q, T_max, mode=mode, scale=scale)
            for q in ps]


def execute_run(bp, cfg, icfg, system="second_order"):
    """Integrate and evaluate every enabled diagnostic.

    Returns ``(report, trajectory)``; ``trajectory`` is None when the growth
    condition stops the run.  Integration failures propagate.
    """
    diag, tol = _settings(cfg)
    p = bp.instance
    report = {"problem": bp.to_dict(), "tags": bp.tags(), "system": system,
              "integrator": {k: getattr(icfg, k) for k in _INTEGRATOR_KEYS},
              "diagnostics": diag, "tolerances": tol}
    verdicts, warnings = {}, []
    growth = verify_growth(p.schedule, p.gamma)
    report["growth"] = growth.to_dict()
    if system == "second_order":
        verdicts["growth"] = growth.feasible or bool(diag["override_growth"])
        if not growth.feasible:
            warnings.append(growth.reason)
            if not diag["override_growth"]:
                report.update(verdicts=verdicts, passed=False, warnings=warnings)
                return report, None
    k = growth.k_min if growth.feasible else 0.0
    if bp.z_star is not None:
        report["certificate"] = certify(bp).to_dict()

    traj = integrate(p, icfg, system=system, override_growth=bool(diag["override_growth"]))
    report["integration"] = traj.stats.to_dict()

    if diag["convergence"] and (bp.z_star is not None or bp.solution_set is not None):
        conv = dg.convergence_report(traj, p, bp.z_star, bp.solution_set, bp.optimal_value,
                                     eps=tol["terminal"], distance_eps=tol["distance"],
                                     cauchy=tol["cauchy"], k=k, certify=False)
        report["convergence"] = conv.to_dict()
        report["beta_psi_terminal"] = conv.beta_psi_terminal
        report["distance_terminal"] = conv.distance_terminal
        verdicts.update({f"convergence.{n}": ok for n, ok in conv.checks().items()})
        warnings.extend(conv.warnings)
    if diag["condition_h"]:
        try:
            reps = _condition_h_reports(bp, diag["condition_h"], k)
        except (LookupError, dg.NotInNormalConeRange) as exc:
            raise ConfigError(f"condition_h: {exc}") from exc
        report["condition_h"] = [r.to_dict() for r in reps]
        verdicts["condition_h"] = all(r.verdict == "finite" for r in reps)
    if diag["lyapunov"] and system == "second_order" and bp.z_star is not None:
        lyap = dg.lyapunov_inequality_check(traj, p, bp.z_star, k)
        report["lyapunov"] = lyap.to_dict()
        verdicts["lyapunov"] = lyap.passed
    if diag["dissipation"] and system == "second_order":
        res = dg.dissipation_residual(traj, p)
        report["dissipation"] = {"max_residual": res.max, "step": res.step,
                                 "tolerance": tol["dissipation"]}
        verdicts["dissipation"] = res.max <= tol["dissipation"]
    report.update(verdicts=verdicts, passed=all(verdicts.values()), warnings=warnings)
    return report, traj


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(dg.json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def plot_trajectory(traj, path, optimal_value=None, title=""):
    """Static SVG: coordinates against t and the main diagnostics on a log scale."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "penaltyflow"

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for i in range(min(traj.dim, 10)):
        ax1.plot(traj.t, traj.x[:, i], lw=1, label=f"x_{i}")
    ax1.set_ylabel("position")
    ax1.legend(loc="best", fontsize=7)
    ax1.set_title(title)
    tiny = 1e-300
    ax2.semilogy(traj.t, np.maximum(traj.beta * traj.psi, tiny), lw=1, label="beta psi")
    ax2.semilogy(traj.t, np.maximum(np.linalg.norm(traj.v, axis=1), tiny), lw=1, label="|v|")
    if optimal_value is not None and np.isfinite(optimal_value):
        ax2.semilogy(traj.t, np.maximum(np.abs(traj.E - optimal_value), tiny), lw=1,
                     label="|E - phi*|")
    ax2.set_xlabel("t")
    ax2.legend(loc="best", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _out_dir(args, cfg, default):
    out = Path(args.out or cfg.get("output") or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args):
    cfg = load_config(args.config)
    bp = resolve_problem(cfg)
    icfg = integrator_config(cfg, args.tmax, args.tol)
    out = _out_dir(args, cfg, "run_output")
    system = cfg.get("system", "second_order")
    try:
        report, traj = execute_run(bp, cfg, icfg, system)
    except IntegrationError as exc:
        if exc.partial is not None:
            exc.partial.to_csv(out / "trajectory.csv")
        write_json({"problem": bp.to_dict(), "error": str(exc),
                    "integration": exc.stats.to_dict() if exc.stats else None},
                   out / "report.json")
        raise
    write_json(report, out / "report.json")
    if traj is not None:
        traj.to_csv(out / "trajectory.csv")
        dg.write_energy_csv(dg.energy_series(traj, bp.instance), out / "energy.csv")
        if args.plot or cfg.get("plot", False):
            plot_trajectory(traj, out / "trajectory.svg", bp.optimal_value, bp.name)
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    failed = [k for k, ok in report["verdicts"].items() if not ok]
    if failed:
        print(f"FAIL: {', '.join(failed)}")
        if "growth" in failed:
            print(report["growth"]["reason"])
        return EXIT_FAIL
    print(f"PASS: {bp.name} ({len(report['verdicts'])} verdicts)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check-h
# ---------------------------------------------------------------------------

def _json_arg(text, what):
    """Inline JSON or ``@path`` to a JSON file."""
    try:
        if text.startswith("@"):
            with open(text[1:]) as fh:
                return json.load(fh)
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{what}: cannot parse ({exc})") from exc


def cmd_check_h(args):
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        _check_keys(cfg, ("psi", "schedule", "p", "T_max", "mode", "scale"), "config")
    else:
        cfg = {}
    psi_d = _json_arg(args.psi, "--psi") if args.psi else cfg.get("psi")
    sched_d = _json_arg(args.schedule, "--schedule") if args.schedule else cfg.get("schedule")
    if psi_d is None or sched_d is None:
        raise ConfigError("check-h needs --psi and --schedule (or a config)")
    if args.p:
        ps = [_json_arg(t, "--p") for t in args.p]
    else:
        ps = cfg.get("p")
    if not ps:
        raise ConfigError("check-h needs at least one --p")
    T_max = args.tmax if args.tmax is not None else float(cfg.get("T_max", 1e4))
    mode = args.mode or cfg.get("mode", "auto")
    scale = args.scale if args.scale is not None else float(cfg.get("scale", 1.0))
    try:
        psi = penalty_from_dict(psi_d)
        sched = schedule_from_dict(sched_d)
    except DescriptorError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    reports = []
    for i, p in enumerate(ps):
        dump = out / f"integrand_{i}.csv" if out else None
        rep = dg.condition_h_check(psi, sched, p, T_max, mode=mode, scale=scale, dump_csv=dump)
        reports.append(rep)
        print(json.dumps(rep.to_dict(), sort_keys=True))
    if out:
        write_json({"reports": [r.to_dict() for r in reports]}, out / "check_h.json")
    verdicts = {r.verdict for r in reports}
    if "divergent" in verdicts:
        return EXIT_FAIL
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _system_summary(bp, traj):
    x_T = traj.x[-1]
    return {"x_terminal": x_T, "distance_terminal": float(bp.distance_to_solution(x_T)),
            "phi_terminal": float(traj.phi[-1]), "psi_terminal": float(traj.psi[-1]),
            "speed_terminal": float(np.linalg.norm(traj.v[-1])),
            "integration": traj.stats.to_dict()}


def cmd_compare(args):
    cfg = load_config(args.config)
    bp = resolve_problem(cfg)
    icfg = integrator_config(cfg, args.tmax, args.tol)
    _, tol = _settings(cfg)
    out = _out_dir(args, cfg, "compare_output")
    report = {"problem": bp.to_dict(), "T_end": icfg.T_end, "tolerance": tol["agreement"]}
    growth = verify_growth(bp.instance.schedule, bp.instance.gamma)
    report["growth"] = growth.to_dict()
    if not growth.feasible:
        report.update(passed=False, reason=growth.reason)
        write_json(report, out / "report.json")
        print(f"FAIL: {growth.reason}")
        return EXIT_FAIL
    second = integrate(bp.instance, icfg, "second_order")
    first = integrate(bp.instance, icfg, "first_order")
    s2, s1 = _system_summary(bp, second), _system_summary(bp, first)
    gap = float(np.linalg.norm(second.x[-1] - first.x[-1]))
    ok = gap <= tol["agreement"] and max(s1["distance_terminal"],
                                         s2["distance_terminal"]) <= tol["agreement"]
    report.update(second_order=s2, first_order=s1, terminal_gap=gap, passed=ok)
    write_json(report, out / "report.json")
    if args.plot or cfg.get("plot", False):
        plot_trajectory(second, out / "second_order.svg", bp.optimal_value, "second order")
        plot_trajectory(first, out / "first_order.svg", bp.optimal_value, "first order")
    print(f"{'PASS' if ok else 'FAIL'}: gap={gap:.3e} "
          f"d2={s2['distance_terminal']:.3e} d1={s1['distance_terminal']:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_cell(cfg, gamma, alpha, tmax, tol):
    """One (gamma, alpha) cell; module level so worker processes can import it."""
    cell = dict(cfg, gamma=gamma, schedule={"family": "power", "alpha": alpha})
    bp = resolve_problem(cell)
    icfg = integrator_config(cell, tmax, tol)
    growth = verify_growth(PowerSchedule(alpha), gamma)
    row = {"gamma": gamma, "alpha": alpha, "k_min": growth.k_min,
           "feasible": growth.feasible, "distance_terminal": float("nan"), "status": "ok"}
    try:
        # infeasible cells are still integrated to map the frontier empirically
        traj = integrate(bp.instance, icfg, override_growth=True)
        row["distance_terminal"] = float(bp.distance_to_solution(traj.x[-1]))
    except IntegrationError as exc:
        row["status"] = "aborted: " + str(exc)
    return row


def cmd_sweep(args):
    cfg = load_config(args.config)
    grid = cfg.get("sweep")
    if not grid or not grid.get("gamma") or not grid.get("alpha"):
        raise ConfigError("config.sweep: needs nonempty 'gamma' and 'alpha' lists")
    gammas = [float(g) for g in grid["gamma"]]
    alphas = [float(a) for a in grid["alpha"]]
    base = {k: v for k, v in cfg.items() if k not in ("sweep", "output")}
    resolve_problem(base)  # fail fast on a bad problem
    _, tol = _settings(cfg)
    out = _out_dir(args, cfg, "sweep_output")
    cells = [(g, a) for g in gammas for a in alphas]
    workers = args.workers or os.cpu_count() or 1
    if workers == 1 or len(cells) == 1:
        rows = [_sweep_cell(base, g, a, args.tmax, args.tol) for g, a in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_cell, base, g, a, args.tmax, args.tol)
                       for g, a in cells]
            rows = [f.result() for f in futures]

    fields = ["gamma", "alpha", "k_min", "feasible", "distance_terminal", "status"]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in fields})
    by_cell = {(r["gamma"], r["alpha"]): r for r in rows}
    for name, key in (("sweep_distance.csv", "distance_terminal"),
                      ("sweep_feasible.csv", "feasible")):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma\\alpha"] + [repr(a) for a in alphas])
            for g in gammas:
                vals = [by_cell[(g, a)][key] for a in alphas]
                w.writerow([repr(g)] + [repr(v) if isinstance(v, float) else int(v) for v in vals])
    write_json({"cells": rows, "tolerance": tol["distance"]}, out / "sweep.json")
    bad = [r for r in rows if r["feasible"]
           and not (r["status"] == "ok" and r["distance_terminal"] <= tol["distance"])]
    for r in rows:
        flag = "feasible" if r["feasible"] else "INFEASIBLE"
        print(f"gamma={r['gamma']:g} alpha={r['alpha']:g} {flag} "
              f"distance={r['distance_terminal']:.3e} {r['status']}")
    return EXIT_FAIL if bad else EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="penaltyflow",
                                 description="Second-order penalty dynamics experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tmax", type=float, help="time horizon (overrides the config)")
        p.add_argument("--tol", type=float,
                       help="relative tolerance; the absolute tolerance becomes tol/100")
        p.add_argument("--plot", action="store_true", help="write SVG plots")

    p_run = sub.add_parser("run", help="integrate one problem and check its verdicts")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_h = sub.add_parser("check-h", help="check the conjugate integrability condition")
    p_h.add_argument("--config", help="JSON with psi, schedule, p and optional T_max/mode")
    p_h.add_argument("--out", help="directory for check_h.json and integrand CSVs")
    p_h.add_argument("--psi", help="penalty descriptor (JSON or @file)")
    p_h.add_argument("--schedule", help="schedule descriptor (JSON or @file)")
    p_h.add_argument("--p", action="append", help="vector p as a JSON list (repeatable)")
    p_h.add_argument("--tmax", type=float, help="quadrature horizon T_max (default 1e4)")
    p_h.add_argument("--mode", choices=("auto", "closed_form", "quadrature"))
    p_h.add_argument("--scale", type=float, help="replace beta by scale*beta")
    p_h.set_defaults(func=cmd_check_h)

    p_cmp = sub.add_parser("compare", help="run first- and second-order systems side by side")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_sw = sub.add_parser("sweep", help="grid over (gamma, alpha) for power schedules")
    common(p_sw)
    p_sw.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    p_sw.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, LookupError, RuntimeError, OSError) as exc:
        # configuration, descriptor, certification and integration failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
