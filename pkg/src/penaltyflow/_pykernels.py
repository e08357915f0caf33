"""Pure-Python integration kernels.

Reference implementation of the hot loops; ``_kernels.pyx`` mirrors it
line by line.  Both expose the same three callables:

``affine_field(Hphi, cphi, Hpsi, cpsi, gamma, order, code, p0, p1)``
    vector field of ``x'' + gamma x' + (Hphi x - cphi) + beta(t) (Hpsi x - cpsi) = 0``
    (``order=2``, state ``[x, v]``) or of its first-order companion (``order=1``);
    ``code`` selects ``beta``: 0 constant ``p0``, 1 ``(1+t)**p0``, 2 ``p0*exp(p1 t)``.
``dopri5(field, t_out, y0, rtol, atol, h0, max_step, min_step, max_steps)``
``rk4(field, t_out, y0, h, max_steps)``

``field`` may also be any Python callable ``f(t, y) -> dy``.  Both steppers
return ``(Y, stats)`` where ``Y[j]`` is the state at ``t_out[j]`` (cubic
Hermite interpolation between accepted steps) and ``stats`` is
``(n_filled, n_steps, n_rejected, n_evals, max_err, status, t_reached)``.
"""
import math

import numpy as np

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAX_STEPS = 3

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 5.0


def affine_field(Hphi, cphi, Hpsi, cpsi, gamma, order, code, p0, p1):
    Hphi = np.ascontiguousarray(Hphi, dtype=float)
    Hpsi = np.ascontiguousarray(Hpsi, dtype=float)
    cphi = np.ascontiguousarray(cphi, dtype=float)
    cpsi = np.ascontiguousarray(cpsi, dtype=float)
    n = cphi.shape[0]

    if code == 0:
        def beta(t):
            return p0
    elif code == 1:
        def beta(t):
            return (1.0 + t) ** p0
    elif code == 2:
        def beta(t):
            return p0 * math.exp(p1 * t)
    else:
        raise ValueError(f"unknown schedule code {code}")

    if order == 2:
        def field(t, y):
            x, v = y[:n], y[n:]
            acc = -gamma * v - (Hphi @ x - cphi) - beta(t) * (Hpsi @ x - cpsi)
            return np.concatenate((v, acc))
    elif order == 1:
        def field(t, y):
            return -(Hphi @ y - cphi) - beta(t) * (Hpsi @ y - cpsi)
    else:
        raise ValueError("order must be 1 or 2")
    return field


def _hermite(Y, j, t_out, t, h, y0, f0, y1, f1):
    """Fill every output slot in ``(t, t + h]`` from index ``j``; return next index."""
    m = len(t_out)
    t_next = t + h
    while j < m and t_out[j] <= t_next:
        th = (t_out[j] - t) / h
        th2 = th * th
        th3 = th2 * th
        Y[j] = ((2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * h * f0
                + (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * h * f1)
        j += 1
    return j


def _call(field, t, y):
    return np.asarray(field(t, y), dtype=float)


def dopri5(field, t_out, y0, rtol, atol, h0, max_step, min_step, max_steps=10_000_000):
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=float)
    m, d = len(t_out), len(y)
    Y = np.full((m, d), np.nan)
    t, t_end = t_out[0], t_out[-1]
    Y[0] = y
    j = 1
    n_steps = n_rejected = 0
    max_err = 0.0

    k1 = _call(field, t, y)
    n_evals = 1
    if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(y))):
        return Y, (j, 0, 0, n_evals, max_err, STATUS_NONFINITE, t)

    h = min(h0, max_step, t_end - t)
    last_rejected = False
    last_nonfinite = False
    status = STATUS_OK
    while t < t_end:
        if n_steps + n_rejected >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < min_step:
            status = STATUS_NONFINITE if last_nonfinite else STATUS_STEP_UNDERFLOW
            break
        final = t + h * (1 + 1e-10) >= t_end
        if final:
            h = t_end - t

        k2 = _call(field, t + C2 * h, y + h * (A21 * k1))
        k3 = _call(field, t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = _call(field, t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = _call(field, t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = _call(field, t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = _call(field, t + h, y_new)
        n_evals += 6

        e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((e / sc) ** 2)))

        if not math.isfinite(err):
            n_rejected += 1
            last_rejected = last_nonfinite = True
            h *= 0.1
            continue
        last_nonfinite = False

        if err <= 1.0:
            t_new = t_end if final else t + h
            j = _hermite(Y, j, t_out, t, t_new - t, y, k1, y_new, k7)
            t, y, k1 = t_new, y_new, k7
            n_steps += 1
            max_err = max(max_err, err)
            fac = FAC_MAX if err == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
            if last_rejected:
                fac = min(fac, 1.0)
            h = min(h * fac, max_step)
            last_rejected = False
        else:
            n_rejected += 1
            h *= max(FAC_MIN, SAFETY * err ** -0.2)
            last_rejected = True

    return Y, (j, n_steps, n_rejected, n_evals, max_err, status, float(t))


def rk4(field, t_out, y0, h, max_steps=10_000_000):
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=float)
    m, d = len(t_out), len(y)
    Y = np.full((m, d), np.nan)
    t0, t_end = t_out[0], t_out[-1]
    Y[0] = y
    j = 1
    n = max(1, int(math.ceil((t_end - t0) / h - 1e-9)))
    if n > max_steps:
        return Y, (j, 0, 0, 0, 0.0, STATUS_MAX_STEPS, float(t0))
    h = (t_end - t0) / n
    k1 = _call(field, t0, y)
    n_evals = 1
    t = t0
    for i in range(n):
        k2 = _call(field, t + 0.5 * h, y + 0.5 * h * k1)
        k3 = _call(field, t + 0.5 * h, y + 0.5 * h * k2)
        k4 = _call(field, t + h, y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t_new = t_end if i == n - 1 else t0 + (i + 1) * h
        f_new = _call(field, t_new, y_new)
        n_evals += 4
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
            return Y, (j, i, 0, n_evals, 0.0, STATUS_NONFINITE, float(t))
        j = _hermite(Y, j, t_out, t, t_new - t, y, k1, y_new, f_new)
        t, y, k1 = t_new, y_new, f_new
    return Y, (j, n, 0, n_evals, 0.0, STATUS_OK, float(t))
