"""Lyapunov diagnostics along sampled trajectories.

Everything here is a pure function of a :class:`~penaltyflow.dynamics.Trajectory`
(or of a penalty and a schedule).  Time derivatives of scalar diagnostics are
central differences on the output grid, endpoints excluded; integrals are
trapezoidal on the same grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate as _integrate

from .convex import INF, MEMBERSHIP_TOL, _single
from .schedules import verify_growth

#: dead band around the harmonic exponent -1 for tail classification
TAIL_DEAD_BAND = 0.05
#: default terminal tolerance and Cauchy-tail ratio
TERMINAL_EPS = 1e-2
DISTANCE_EPS = 5e-2
CAUCHY_RATIO = 0.05
#: first-order optimality slack of the variational inequality
VI_TOL = 1e-8
#: inequality tolerance is this multiple of the discretization estimate
TOL_FACTOR = 10.0


class CertificationError(ValueError):
    """A claimed solution point fails one of its certificates."""


# ---------------------------------------------------------------------------
# finite differences and quadrature on the output grid
# ---------------------------------------------------------------------------

def central_derivative(y, t, stride=1):
    """First derivative at interior samples ``stride..n-1-stride``."""
    y, t = np.asarray(y, dtype=float), np.asarray(t, dtype=float)
    s = stride
    return (y[2 * s:] - y[:-2 * s]) / (t[2 * s:] - t[:-2 * s])


def central_second_derivative(y, t, stride=1):
    """Second derivative at interior samples (three-point formula, non-uniform safe)."""
    y, t = np.asarray(y, dtype=float), np.asarray(t, dtype=float)
    s = stride
    hl = t[s:-s] - t[:-2 * s]
    hr = t[2 * s:] - t[s:-s]
    return 2.0 * (hl * y[2 * s:] - (hl + hr) * y[s:-s] + hr * y[:-2 * s]) / (hl * hr * (hl + hr))


def cumulative_trapezoid(y, t):
    """Running trapezoidal integral, starting at 0."""
    y, t = np.asarray(y, dtype=float), np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _half_index(t):
    return int(np.searchsorted(t, 0.5 * t[-1]))


def cauchy_ratio(integrand, t):
    """``|I(T) - I(T/2)| / int_0^T |integrand|``; 0 when the integrand vanishes."""
    I = cumulative_trapezoid(integrand, t)
    total = cumulative_trapezoid(np.abs(integrand), t)[-1]
    if total == 0.0:
        return 0.0
    return float(abs(I[-1] - I[_half_index(t)]) / total)


def json_safe(obj):
    """Recursively convert to JSON-ready values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


# ---------------------------------------------------------------------------
# energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergySample:
    t: float
    E: float
    phi_val: float
    psi_val: float
    beta_val: float
    kinetic: float


def energy_series(traj, p=None):
    """Per-sample energy ``1/2|v|^2 + phi + beta psi`` with its parts.

    ``p`` is accepted for symmetry with the other diagnostics; every value is
    taken from the trajectory's cached columns.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    kinetic = 0.5 * np.sum(traj.v * traj.v, axis=1)
    E = kinetic + traj.phi + traj.beta * traj.psi
    return [EnergySample(float(t), float(e), float(f), float(s), float(b), float(k))
            for t, e, f, s, b, k in zip(traj.t, E, traj.phi, traj.psi, traj.beta, kinetic)]


def write_energy_csv(samples, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "E", "phi", "psi", "beta", "kinetic"])
        for s in samples:
            w.writerow([repr(s.t), repr(s.E), repr(s.phi_val), repr(s.psi_val),
                        repr(s.beta_val), repr(s.kinetic)])


@dataclass(frozen=True)
class DissipationResidual:
    t: np.ndarray
    residual: np.ndarray
    step: float

    @property
    def max(self):
        return float(np.max(self.residual)) if self.residual.size else 0.0


def dissipation_residual(traj, p):
    """``|dE/dt - (-gamma |v|^2 + beta_dot psi)|`` at interior samples.

    ``dE/dt`` is the central difference of the trajectory's stored ``E`` column,
    so a corrupted column shows up here.  ``step`` is the largest sample spacing.
    """
    if len(traj) < 3:
        raise ValueError("need at least 3 samples")
    dE = central_derivative(traj.E, traj.t)
    v = traj.v[1:-1]
    rate = -p.gamma * np.sum(v * v, axis=1) + traj.beta_dot[1:-1] * traj.psi[1:-1]
    return DissipationResidual(traj.t[1:-1].copy(), np.abs(dE - rate), float(np.max(np.diff(traj.t))))


# ---------------------------------------------------------------------------
# certification of solution points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    membership: float          # ||z - P_C(z)||
    vi_violation: float        # max over probes of -<grad phi(z), y - z>
    normal_cone_gap: float     # sigma_C(-grad phi(z)) - <-grad phi(z), z>
    n_probes: int
    passed: bool
    failed: tuple = ()

    def to_dict(self):
        return json_safe(asdict(self))


def certify_point(p, z, n_probes=1000, seed=0, vi_tol=VI_TOL):
    """Certificates that ``z`` solves ``min phi`` over the zero set of ``psi``.

    Membership ``dist(z, C) <= 1e-8``; the variational inequality
    ``<grad phi(z), y - z> >= -vi_tol`` over ``n_probes`` sampled ``y`` in ``C``;
    and the exact normal-cone test ``sigma_C(q) = <q, z>`` for ``q = -grad phi(z)``.
    """
    C = p.psi.zero_set
    z = _single(z, p.dim, "z")
    g = p.phi.gradient(z)
    membership = float(C.distance(z))
    Y = C.sample(np.random.default_rng(seed), n_probes)
    vi = float(np.max(-((Y - z) @ g))) if n_probes else -INF
    sig = C.support(-g)
    gap = INF if sig == INF else sig - float(-g @ z)
    scale = 1.0 + float(np.linalg.norm(g)) * (1.0 + float(np.linalg.norm(z)))
    failed = []
    if membership > MEMBERSHIP_TOL:
        failed.append(f"membership: dist(z, zero set) = {membership:g} > {MEMBERSHIP_TOL:g}")
    if vi > vi_tol:
        failed.append(f"variational inequality: violation {vi:g} > {vi_tol:g}")
    if gap > vi_tol * scale:
        failed.append(f"normal cone: sigma(-grad phi(z)) - <-grad phi(z), z> = {gap:g}")
    return Certificate(membership, vi, gap, int(n_probes), not failed, tuple(failed))


def require_certified(p, z, **kw):
    cert = certify_point(p, z, **kw)
    if not cert.passed:
        raise CertificationError("z is not certified optimal: " + "; ".join(cert.failed))
    return cert


# ---------------------------------------------------------------------------
# Lyapunov inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InequalityResult:
    """Largest signed left-hand side (should be <= tolerance) and its location."""

    name: str
    max_violation: float
    t_at_max: float
    tolerance: float
    passed: bool
    values: np.ndarray = field(repr=False, compare=False, default=None)

    def to_dict(self):
        return json_safe({"name": self.name, "max_violation": self.max_violation,
                          "t_at_max": self.t_at_max, "tolerance": self.tolerance,
                          "passed": self.passed})


@dataclass(frozen=True)
class LyapunovReport:
    z: np.ndarray
    k: float
    step: float
    results: tuple
    certificate: Certificate | None = None

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def __getitem__(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self):
        return json_safe({"z": self.z, "k": self.k, "step": self.step, "passed": self.passed,
                          "results": [r.to_dict() for r in self.results],
                          "certificate": None if self.certificate is None
                          else self.certificate.to_dict()})


def _lyapunov_terms(traj, p, z, k, stride):
    """Left-hand sides at interior samples for a given difference stride."""
    s = stride
    t = traj.t
    d = traj.x - z
    h = 0.5 * np.sum(d * d, axis=1)
    dh = central_derivative(h, t, s)
    ddh = central_second_derivative(h, t, s)
    dE = central_derivative(traj.E, t, s)
    sl = slice(s, len(t) - s)
    gamma = p.gamma
    bt = (1.0 - k / gamma) * traj.beta[sl]
    psi, phi = traj.psi[sl], traj.phi[sl]
    v = traj.v[sl]
    g = p.phi.gradient(z)
    phi_z = float(p.phi.value(z))
    base = ddh + gamma * dh + dE / gamma
    # conjugate term beta~ (psi*(q) - sigma(q)) with q = -grad phi(z) / beta~
    gap = np.array([b * p.psi.conjugate_gap(-g / b) for b in bt])
    return {
        "conjugate_form": base - gap,
        "linearized_form": base + bt * psi + d[sl] @ g,
        "value_gap_form": base + phi - phi_z + bt * psi,
        "energy_bound": dE + gamma * np.sum(v * v, axis=1) - k * traj.beta[sl] * psi,
    }


def _roundoff_floor(traj, z, step):
    """Size of derivative noise from the sample accuracy (relative 1e-10 of the data)."""
    d = traj.x - z
    hmax = float(np.max(0.5 * np.sum(d * d, axis=1)))
    emax = float(np.max(np.abs(traj.E)))
    noise = 1e-10 * (1.0 + hmax + emax)
    return noise * (4.0 / step ** 2 + 2.0 / step)


def lyapunov_inequality_check(traj, p, z, k=None, certify=True, tol_factor=TOL_FACTOR):
    """Check the Lyapunov chain and the energy inequality along ``traj``.

    With ``h = 1/2 |x - z|^2``, ``beta~ = (1 - k/gamma) beta`` and
    ``q = -grad phi(z) / beta~`` the chain

        h'' + gamma h' + E'/gamma - beta~ (psi*(q) - sigma(q))
            <= h'' + gamma h' + E'/gamma + beta~ psi + <grad phi(z), x - z>
            <= h'' + gamma h' + E'/gamma + phi(x) - phi(z) + beta~ psi <= 0

    is checked link by link (``conjugate_form``, ``linearized_form``,
    ``value_gap_form``), together with ``E' + gamma |x'|^2 <= k beta psi``
    (``energy_bound``).  Each left-hand side passes when it stays below
    ``tol_factor`` times a discretization estimate: the Richardson difference
    between strides 1 and 2 plus a floor for the sample accuracy.

    ``k`` defaults to the smallest feasible growth constant of the schedule.
    With ``certify`` the point ``z`` must pass :func:`certify_point`
    (:class:`CertificationError` otherwise); negative controls pass
    ``certify=False``.
    """
    z = _single(z, p.dim, "z")
    if len(traj) < 5:
        raise ValueError("need at least 5 samples")
    if k is None:
        k = verify_growth(p.schedule, p.gamma).k_min
    if not 0 <= k < p.gamma:
        raise ValueError(f"need 0 <= k < gamma, got k={k}")
    cert = require_certified(p, z) if certify else None
    fine = _lyapunov_terms(traj, p, z, k, 1)
    coarse = _lyapunov_terms(traj, p, z, k, 2)
    step = float(np.max(np.diff(traj.t)))
    floor = _roundoff_floor(traj, z, step)
    t_in = traj.t[1:-1]
    results = []
    for name, vals in fine.items():
        # central differences are O(h^2): error of the fine values ~ |fine - coarse| / 3
        rich = np.abs(vals[1:-1] - coarse[name]) / 3.0
        finite = np.isfinite(rich)
        est = float(np.max(rich[finite])) if np.any(finite) else 0.0
        tol = tol_factor * (est + floor)
        if np.all(np.isnan(vals)):
            mx, t_at = -INF, math.nan
        else:
            i = int(np.nanargmax(vals))
            mx, t_at = float(vals[i]), float(t_in[i])
        results.append(InequalityResult(name, mx, t_at, tol, bool(mx <= tol), vals))
    return LyapunovReport(z, float(k), step, tuple(results), cert)


# ---------------------------------------------------------------------------
# condition (H)
# ---------------------------------------------------------------------------

class NotInNormalConeRange(ValueError):
    """``p`` has no witness ``x`` in the zero set with ``sigma(p) = <p, x>``."""


@dataclass(frozen=True)
class ConditionHReport:
    p: np.ndarray
    mode: str                      # "closed_form" or "quadrature"
    value: float                   # integral over [0, T_max]
    tail_exponent: float
    verdict: str                   # "finite", "divergent" or "inconclusive"
    T_max: float
    reason: str = ""
    witness: np.ndarray | None = None
    infinite_at: float | None = None
    scale: float = 1.0
    closed_form_value: float | None = None
    min_integrand: float = 0.0

    def to_dict(self):
        d = {"p": self.p, "mode": self.mode, "value_on_0_T": self.value,
             "tail_exponent_estimate": self.tail_exponent, "verdict": self.verdict,
             "T_max": self.T_max, "reason": self.reason, "witness": self.witness,
             "infinite_at": self.infinite_at, "scale": self.scale,
             "closed_form_value": self.closed_form_value, "min_integrand": self.min_integrand}
        return json_safe(d)


def condition_h_integrand(psi, s, p, scale=1.0):
    """Vectorized ``t -> b(t) [psi*(p/b(t)) - sigma(p/b(t))]`` with ``b = scale * beta``."""
    p = np.asarray(p, dtype=float)

    def f(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        with np.errstate(over="ignore"):
            b = scale * np.asarray(s.beta(t), dtype=float) * np.ones_like(t)
        out = np.empty_like(t)
        for i, bi in enumerate(b):
            if bi == INF:
                # beta overflowed: the integrand has decayed to its limit 0
                out[i] = 0.0
                continue
            q = p / bi
            c = psi.conjugate(q)
            out[i] = INF if c == INF else bi * (c - psi.zero_set.support(q))
        return out
    return f


def _quadrature(f, T_max):
    """Integral of ``f`` on ``[0, T_max]`` over geometric panels."""
    edges = [0.0]
    e = 1.0
    while e < T_max:
        edges.append(e)
        e *= 4.0
    edges.append(float(T_max))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = _integrate.quad(lambda u: float(f(u)[0]), a, b, epsabs=1e-14, epsrel=1e-12,
                                 limit=200)
        total += val
    return total


def _tail_exponent(f, T_max, n=64):
    """Slope of ``log f`` against ``log t`` on ``[T_max/10, T_max]``."""
    tt = np.geomspace(T_max / 10.0, T_max, n)
    y = f(tt)
    if np.all(y == 0.0):
        return -INF
    if np.any(y <= 0.0):
        return math.nan
    slope, _ = np.polyfit(np.log(tt), np.log(y), 1)
    return float(slope)


def _closed_form_value(weight, s, scale, T_max):
    """``weight * int_0^T dt / (scale beta)`` for the registered schedule families."""
    fam = getattr(s, "family", None)
    if fam == "power":
        a = s.alpha
        if a == 1.0:
            integ = math.log1p(T_max)
        else:
            integ = (1.0 - (1.0 + T_max) ** (1.0 - a)) / (a - 1.0)
    elif fam == "exp":
        integ = T_max if s.k == 0 else (1.0 - math.exp(-s.k * T_max)) / s.k
        integ /= s.beta0
    elif fam == "const":
        integ = T_max / s.beta0
    else:
        return None
    return weight * integ / scale


def condition_h_check(psi, s, p, T_max=1e4, mode="auto", scale=1.0, dump_csv=None,
                      dead_band=TAIL_DEAD_BAND):
    """Check integrability of ``beta [psi*(p/beta) - sigma(p/beta)]`` on ``[0, inf)``.

    ``p`` must lie in the range of the normal cone of the zero set: a witness
    ``x`` with ``sigma(p) = <p, x>`` is required.  The integral on ``[0, T_max]``
    is always computed by adaptive quadrature and the tail exponent is fitted
    on ``[T_max/10, T_max]``.

    ``mode="quadrature"`` classifies by the fitted exponent with a dead band
    ``dead_band`` around -1 (``"inconclusive"`` inside it).  ``mode="closed_form"``
    uses the penalty's closed-form integrand together with the schedule's known
    integrability of ``1/beta``; ``"auto"`` takes the closed form when it exists
    and falls back to quadrature.  An integrand equal to ``+inf`` anywhere makes
    the verdict divergent regardless of mode.

    ``scale`` replaces ``beta`` by ``scale * beta`` (e.g. ``1 - k/gamma``).
    """
    if mode not in ("auto", "closed_form", "quadrature"):
        raise ValueError("mode must be auto, closed_form or quadrature")
    if not scale > 0:
        raise ValueError("scale must be positive")
    p = _single(p, psi.dim)
    if not getattr(psi, "has_conjugate", False):
        from .convex import ConjugateUnavailable
        raise ConjugateUnavailable(f"no closed-form conjugate for {psi.kind!r}")
    C = psi.zero_set
    witness = C.support_point(p)
    if C.support(p) == INF or witness is None:
        raise NotInNormalConeRange(f"p={p.tolist()} is not in the range of the normal cone "
                                   "of the zero set (support function is infinite)")

    f = condition_h_integrand(psi, s, p, scale)
    probe = np.concatenate([[0.0], np.geomspace(1e-3, T_max, 400)])
    vals = f(probe)
    min_val = float(np.min(vals[np.isfinite(vals)])) if np.any(np.isfinite(vals)) else 0.0
    if dump_csv is not None:
        with open(dump_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "integrand"])
            for t, v in zip(probe, vals):
                w.writerow([repr(float(t)), repr(float(v))])

    common = dict(p=p, T_max=float(T_max), witness=witness, scale=float(scale),
                  min_integrand=min_val)
    if np.any(np.isinf(vals)):
        where = float(probe[np.argmax(np.isinf(vals))])
        return ConditionHReport(mode=mode if mode != "auto" else "closed_form", value=INF,
                                tail_exponent=math.nan, verdict="divergent",
                                reason=f"integrand is +inf at t={where:g}",
                                infinite_at=where, **common)

    value = _quadrature(f, T_max)
    expo = _tail_exponent(f, T_max)
    weight = psi.h_integrand_weight(p)
    # the closed form needs the 1/beta shape for every t >= 0 and known integrability
    closed_ok = weight is not None and (weight == 0.0 or s.inverse_integrable() is not None)
    closed_value = _closed_form_value(weight, s, scale, T_max) if closed_ok else None

    if mode == "closed_form" and not closed_ok:
        raise ValueError("no closed-form classification for this penalty/schedule pair")
    if mode in ("closed_form", "auto") and closed_ok:
        if weight == 0.0:
            verdict, reason = "finite", "integrand vanishes identically"
        elif s.inverse_integrable():
            verdict, reason = "finite", "integrand is c/beta and 1/beta is integrable"
        else:
            verdict, reason = "divergent", "integrand is c/beta and 1/beta is not integrable"
        return ConditionHReport(mode="closed_form", value=value, tail_exponent=expo,
                                verdict=verdict, reason=reason,
                                closed_form_value=closed_value, **common)

    if expo == -INF:
        verdict, reason = "finite", "integrand vanishes on the tail window"
    elif math.isnan(expo):
        verdict, reason = "inconclusive", "integrand not positive on the tail window"
    elif expo < -1.0 - dead_band:
        verdict, reason = "finite", f"tail exponent {expo:.4f} < {-1 - dead_band:g}"
    elif expo > -1.0 + dead_band:
        verdict, reason = "divergent", f"tail exponent {expo:.4f} > {-1 + dead_band:g}"
    else:
        verdict, reason = "inconclusive", (f"tail exponent {expo:.4f} inside the dead band "
                                           f"[{-1 - dead_band:g}, {-1 + dead_band:g}]")
    return ConditionHReport(mode="quadrature", value=value, tail_exponent=expo,
                            verdict=verdict, reason=reason, closed_form_value=closed_value,
                            **common)


# ---------------------------------------------------------------------------
# quasi-Fejer limit monitor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FejerVerdict:
    verdict: str                  # "limit_plausible", "violated" or "inconclusive"
    max_violation: float
    tolerance: float
    cauchy_ratio: float
    tail_oscillation: float
    limit_estimate: float
    reason: str = ""

    def to_dict(self):
        return json_safe(asdict(self))


def quasi_fejer_monitor(t, F, G, order="first", gamma=None, eps=TERMINAL_EPS,
                        cauchy=CAUCHY_RATIO, tol=None):
    """Numerical limit-existence test for ``F' <= G`` or ``F'' + gamma F' <= G``.

    Verdict ``violated`` when the differential inequality fails beyond ``tol``
    (default: ten times a Richardson estimate of the difference error plus a
    floor of ``1e-8``); ``limit_plausible`` when in addition the partial
    integrals of ``G`` are Cauchy (last-half increment at most ``cauchy`` of
    the total) and the oscillation of ``F`` over the last 10% of the span is
    at most ``eps``; ``inconclusive`` otherwise.
    """
    t = np.asarray(t, dtype=float)
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    if not (t.shape == F.shape == G.shape) or t.ndim != 1:
        raise ValueError("t, F and G must be 1-D arrays on a common grid")
    if len(t) < 5:
        raise ValueError("need at least 5 samples")
    if not np.all(np.isfinite(F)):
        raise ValueError("F must be finite (bounded below) on the grid")
    if order not in ("first", "second"):
        raise ValueError("order must be 'first' or 'second'")
    if order == "second" and (gamma is None or gamma <= 0):
        raise ValueError("second order needs gamma > 0")

    def lhs(stride):
        dF = central_derivative(F, t, stride)
        if order == "first":
            return dF - G[stride:len(t) - stride]
        return central_second_derivative(F, t, stride) + gamma * dF - G[stride:len(t) - stride]

    fine, coarse = lhs(1), lhs(2)
    if tol is None:
        tol = TOL_FACTOR * (float(np.max(np.abs(fine[1:-1] - coarse))) / 3.0 + 1e-8)
    max_violation = float(np.max(fine))
    ratio = cauchy_ratio(G, t)
    tail = t >= t[-1] - 0.1 * (t[-1] - t[0])
    osc = float(np.max(F[tail]) - np.min(F[tail]))
    limit = float(F[-1])
    if max_violation > tol:
        return FejerVerdict("violated", max_violation, tol, ratio, osc, limit,
                            f"differential inequality fails by {max_violation:g} "
                            f"at t={t[1 + int(np.argmax(fine))]:g}")
    if ratio <= cauchy and osc <= eps:
        return FejerVerdict("limit_plausible", max_violation, tol, ratio, osc, limit)
    why = []
    if ratio > cauchy:
        why.append(f"integral of G not Cauchy (ratio {ratio:.3g})")
    if osc > eps:
        why.append(f"tail oscillation {osc:.3g} > {eps:g}")
    return FejerVerdict("inconclusive", max_violation, tol, ratio, osc, limit, "; ".join(why))


# ---------------------------------------------------------------------------
# convergence report
# ---------------------------------------------------------------------------

def _nonincreasing(y, rel=1e-9, atol=1e-10):
    """Nonincreasing up to ``rel * max|y| + atol`` (``atol`` ~ sample accuracy)."""
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        return True
    slack = rel * float(np.max(np.abs(y))) + atol
    return bool(np.all(np.diff(y) <= slack))


def _decreasing_trend(y, chunks=10):
    """Maxima over ``chunks`` consecutive blocks are nonincreasing."""
    blocks = [b for b in np.array_split(np.asarray(y, dtype=float), chunks) if b.size]
    return _nonincreasing([float(np.max(b)) for b in blocks])


@dataclass(frozen=True)
class ConvergenceReport:
    T: float
    reference_point: np.ndarray
    optimal_value: float
    phi_gap_terminal: float
    beta_psi_terminal: float
    psi_terminal: float
    speed_terminal: float
    distance_terminal: float
    int_beta_psi: float
    int_speed_sq: float
    int_dist_sq: float
    cauchy_beta_psi: float
    cauchy_speed_sq: float
    cauchy_dist_sq: float
    int_linear_term: float
    cauchy_linear_term: float
    int_value_gap: float
    cauchy_value_gap: float
    distance_monotone_last_decade: bool
    energy_gap_terminal: float
    energy_trend_last_decade: bool
    distance_limit: str
    energy_limit: str
    partial_integrals_monotone: bool
    eps: float = TERMINAL_EPS
    distance_eps: float = DISTANCE_EPS
    cauchy: float = CAUCHY_RATIO
    warnings: tuple = ()

    def checks(self):
        """Named pass/fail flags of the tail criteria."""
        e, c = self.eps, self.cauchy
        return {
            "phi_gap_terminal": abs(self.phi_gap_terminal) <= e,
            "beta_psi_terminal": self.beta_psi_terminal <= e,
            "speed_terminal": self.speed_terminal <= e,
            "cauchy_beta_psi": self.cauchy_beta_psi <= c,
            "cauchy_speed_sq": self.cauchy_speed_sq <= c,
            "distance_limit": self.distance_limit == "plausible",
            "energy_limit": self.energy_limit == "plausible",
        }

    @property
    def passed(self):
        return all(self.checks().values())

    def to_dict(self):
        d = asdict(self)
        d["checks"] = self.checks()
        d["passed"] = self.passed
        return json_safe(d)


def convergence_report(traj, p, z=None, solution_set=None, optimal_value=None,
                       eps=TERMINAL_EPS, distance_eps=DISTANCE_EPS, cauchy=CAUCHY_RATIO,
                       k=None, certify=True):
    """Terminal metrics, partial integrals and tail verdicts for ``traj``.

    The reference point is ``z`` (certified when ``certify``), or, for problems
    whose solution set is not a single point, the projection of the terminal
    state onto ``solution_set``; distances are then distances to that set.
    Limit verdicts are ``"plausible"`` when the terminal value is at most
    ``distance_eps`` (distance) or ``eps`` (energy gap ``|E - phi(z)|``) and
    the quantity decreases over the last decade ``[T/10, T]``,
    ``"not_established"`` otherwise.  A decrease means nonincreasing maxima over
    ten consecutive blocks of the decade, which tolerates oscillating
    (underdamped) tails and an energy gap that still rises while slow
    coordinates settle.  Strict sample-wise monotonicity of the distance is
    reported separately in ``distance_monotone_last_decade``.
    """
    t, x, v = traj.t, traj.x, traj.v
    T = float(t[-1])
    if z is None:
        if solution_set is None:
            raise ValueError("need z or solution_set")
        z = solution_set.project(x[-1])
        dist = solution_set.distance(x)
    else:
        z = _single(z, p.dim, "z")
        if certify:
            require_certified(p, z)
        dist = np.linalg.norm(x - z, axis=1)
    phi_z = float(p.phi.value(z)) if optimal_value is None else float(optimal_value)
    if k is None:
        rep = verify_growth(p.schedule, p.gamma)
        k = rep.k_min if rep.k_min < p.gamma else 0.0
    bt = (1.0 - k / p.gamma) * traj.beta

    beta_psi = traj.beta * traj.psi
    speed_sq = np.sum(v * v, axis=1)
    dist_sq = np.sum((x - z) ** 2, axis=1)
    linear = (x - z) @ p.phi.gradient(z)
    value_gap = traj.phi - phi_z + bt * traj.psi
    I_bp = cumulative_trapezoid(beta_psi, t)
    I_sp = cumulative_trapezoid(speed_sq, t)
    I_ds = cumulative_trapezoid(dist_sq, t)

    def ratio(I):
        return 0.0 if I[-1] == 0.0 else float((I[-1] - I[_half_index(t)]) / I[-1])

    decade = t >= T / 10.0
    dist_mono = _nonincreasing(dist[decade])
    dist_trend = _decreasing_trend(dist[decade])
    E_gap = np.abs(traj.E - phi_z)
    E_mono = _decreasing_trend(E_gap[decade])
    warnings = []
    if not getattr(p.schedule, "divergent", False):
        warnings.append("schedule does not diverge: limit conclusions need beta -> inf")
    return ConvergenceReport(
        T=T, reference_point=z, optimal_value=phi_z,
        phi_gap_terminal=float(traj.phi[-1] - phi_z),
        beta_psi_terminal=float(beta_psi[-1]),
        psi_terminal=float(traj.psi[-1]),
        speed_terminal=float(math.sqrt(speed_sq[-1])),
        distance_terminal=float(dist[-1]),
        int_beta_psi=float(I_bp[-1]), int_speed_sq=float(I_sp[-1]), int_dist_sq=float(I_ds[-1]),
        cauchy_beta_psi=ratio(I_bp), cauchy_speed_sq=ratio(I_sp), cauchy_dist_sq=ratio(I_ds),
        int_linear_term=float(cumulative_trapezoid(linear, t)[-1]),
        cauchy_linear_term=cauchy_ratio(linear, t),
        int_value_gap=float(cumulative_trapezoid(value_gap, t)[-1]),
        cauchy_value_gap=cauchy_ratio(value_gap, t),
        distance_monotone_last_decade=dist_mono,
        energy_gap_terminal=float(E_gap[-1]),
        energy_trend_last_decade=E_mono,
        distance_limit="plausible" if dist[-1] <= distance_eps and dist_trend else "not_established",
        energy_limit="plausible" if E_gap[-1] <= eps and E_mono else "not_established",
        partial_integrals_monotone=bool(all(np.all(np.diff(I) >= 0) for I in (I_bp, I_sp, I_ds))),
        eps=float(eps), distance_eps=float(distance_eps), cauchy=float(cauchy), warnings=tuple(warnings))
