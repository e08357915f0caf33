# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernels; same API and arithmetic as ``_pykernels``."""
import numpy as np

from libc.math cimport sqrt, fabs, pow, exp, isfinite, ceil

cdef enum:
    STATUS_OK = 0
    STATUS_STEP_UNDERFLOW = 1
    STATUS_NONFINITE = 2
    STATUS_MAX_STEPS = 3

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 5.0


cdef class Field:
    cdef Py_ssize_t dim

    cdef int eval(self, double t, double[::1] y, double[::1] out) except -1:
        raise NotImplementedError


cdef class PyField(Field):
    """Wraps a Python callable ``f(t, y) -> dy``."""
    cdef object f

    def __init__(self, f, Py_ssize_t dim):
        self.f = f
        self.dim = dim

    cdef int eval(self, double t, double[::1] y, double[::1] out) except -1:
        cdef double[::1] r = np.ascontiguousarray(self.f(t, np.array(y)), dtype=np.float64).reshape(-1)
        cdef Py_ssize_t i
        if r.shape[0] != self.dim:
            raise ValueError(f"vector field returned {r.shape[0]} components, expected {self.dim}")
        for i in range(self.dim):
            out[i] = r[i]
        return 0


cdef class AffineField(Field):
    """Affine-gradient second-order system or its first-order companion."""
    cdef double[:, ::1] Hphi, Hpsi
    cdef double[::1] cphi, cpsi
    cdef double gamma, p0, p1
    cdef int order, code
    cdef Py_ssize_t n

    def __init__(self, Hphi, cphi, Hpsi, cpsi, double gamma, int order, int code, double p0, double p1):
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if code not in (0, 1, 2):
            raise ValueError(f"unknown schedule code {code}")
        self.Hphi = np.ascontiguousarray(Hphi, dtype=np.float64)
        self.Hpsi = np.ascontiguousarray(Hpsi, dtype=np.float64)
        self.cphi = np.ascontiguousarray(cphi, dtype=np.float64)
        self.cpsi = np.ascontiguousarray(cpsi, dtype=np.float64)
        self.n = self.cphi.shape[0]
        self.gamma, self.order, self.code, self.p0, self.p1 = gamma, order, code, p0, p1
        self.dim = order * self.n

    cdef inline double beta(self, double t) nogil:
        if self.code == 0:
            return self.p0
        elif self.code == 1:
            return pow(1.0 + t, self.p0)
        return self.p0 * exp(self.p1 * t)

    cdef int eval(self, double t, double[::1] y, double[::1] out) except -1:
        cdef Py_ssize_t i, j, n = self.n
        cdef double gp, gs, b = self.beta(t)
        with nogil:
            for i in range(n):
                gp = -self.cphi[i]
                gs = -self.cpsi[i]
                for j in range(n):
                    gp = gp + self.Hphi[i, j] * y[j]
                    gs = gs + self.Hpsi[i, j] * y[j]
                if self.order == 2:
                    out[i] = y[n + i]
                    out[n + i] = -self.gamma * y[n + i] - gp - b * gs
                else:
                    out[i] = -gp - b * gs
        return 0

    def __call__(self, double t, y):
        cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty(self.dim)
        self.eval(t, yy, out)
        return out


def affine_field(Hphi, cphi, Hpsi, cpsi, gamma, order, code, p0, p1):
    return AffineField(Hphi, cphi, Hpsi, cpsi, gamma, order, code, p0, p1)


cdef Field _as_field(field, Py_ssize_t d):
    if isinstance(field, Field):
        if (<Field>field).dim != d:
            raise ValueError("field dimension does not match the state")
        return <Field>field
    return PyField(field, d)


cdef Py_ssize_t _hermite(double[:, ::1] Y, Py_ssize_t j, double[::1] t_out, double t, double h,
                         double[::1] y0, double[::1] f0, double[::1] y1, double[::1] f1) nogil:
    cdef Py_ssize_t m = t_out.shape[0], d = y0.shape[0], i
    cdef double t_next = t + h, th, th2, th3, a0, a1, a2, a3
    while j < m and t_out[j] <= t_next:
        th = (t_out[j] - t) / h
        th2 = th * th
        th3 = th2 * th
        a0 = 2 * th3 - 3 * th2 + 1
        a1 = (th3 - 2 * th2 + th) * h
        a2 = -2 * th3 + 3 * th2
        a3 = (th3 - th2) * h
        for i in range(d):
            Y[j, i] = a0 * y0[i] + a1 * f0[i] + a2 * y1[i] + a3 * f1[i]
        j += 1
    return j


cdef bint _all_finite(double[::1] a) nogil:
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        if not isfinite(a[i]):
            return False
    return True


def dopri5(field, t_out_, y0_, double rtol, double atol, double h0, double max_step,
           double min_step, long max_steps=10_000_000):
    cdef double[::1] t_out = np.ascontiguousarray(t_out_, dtype=np.float64)
    cdef double[::1] y = np.array(y0_, dtype=np.float64)
    cdef Py_ssize_t m = t_out.shape[0], d = y.shape[0], i, j = 1
    cdef Field F = _as_field(field, d)
    Y_arr = np.full((m, d), np.nan)
    cdef double[:, ::1] Y = Y_arr
    cdef double[::1] k1 = np.empty(d), k2 = np.empty(d), k3 = np.empty(d), k4 = np.empty(d)
    cdef double[::1] k5 = np.empty(d), k6 = np.empty(d), k7 = np.empty(d)
    cdef double[::1] ys = np.empty(d), y_new = np.empty(d), tmp
    cdef double t = t_out[0], t_end = t_out[m - 1], t_new, h, err, e, sc, fac, max_err = 0.0
    cdef long n_steps = 0, n_rejected = 0, n_evals = 0
    cdef int status = STATUS_OK
    cdef bint last_rejected = False, last_nonfinite = False, final

    for i in range(d):
        Y[0, i] = y[i]
    F.eval(t, y, k1)
    n_evals = 1
    if not (_all_finite(k1) and _all_finite(y)):
        return Y_arr, (j, 0, 0, n_evals, max_err, STATUS_NONFINITE, t)

    h = min(h0, max_step, t_end - t)
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

        for i in range(d):
            ys[i] = y[i] + h * (A21 * k1[i])
        F.eval(t + C2 * h, ys, k2)
        for i in range(d):
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        F.eval(t + C3 * h, ys, k3)
        for i in range(d):
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        F.eval(t + C4 * h, ys, k4)
        for i in range(d):
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        F.eval(t + C5 * h, ys, k5)
        for i in range(d):
            ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        F.eval(t + h, ys, k6)
        for i in range(d):
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        F.eval(t + h, y_new, k7)
        n_evals += 6

        err = 0.0
        for i in range(d):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(fabs(y[i]), fabs(y_new[i]))
            err += (e / sc) * (e / sc)
        err = sqrt(err / d)

        if not isfinite(err):
            n_rejected += 1
            last_rejected = True
            last_nonfinite = True
            h *= 0.1
            continue
        last_nonfinite = False

        if err <= 1.0:
            t_new = t_end if final else t + h
            j = _hermite(Y, j, t_out, t, t_new - t, y, k1, y_new, k7)
            t = t_new
            tmp = y
            y = y_new
            y_new = tmp
            tmp = k1
            k1 = k7
            k7 = tmp
            n_steps += 1
            if err > max_err:
                max_err = err
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * pow(err, -0.2)))
            if last_rejected:
                fac = min(fac, 1.0)
            h = min(h * fac, max_step)
            last_rejected = False
        else:
            n_rejected += 1
            h *= max(FAC_MIN, SAFETY * pow(err, -0.2))
            last_rejected = True

    return Y_arr, (j, n_steps, n_rejected, n_evals, max_err, status, t)


def rk4(field, t_out_, y0_, double h, long max_steps=10_000_000):
    cdef double[::1] t_out = np.ascontiguousarray(t_out_, dtype=np.float64)
    cdef double[::1] y = np.array(y0_, dtype=np.float64)
    cdef Py_ssize_t m = t_out.shape[0], d = y.shape[0], i, j = 1
    cdef Field F = _as_field(field, d)
    Y_arr = np.full((m, d), np.nan)
    cdef double[:, ::1] Y = Y_arr
    cdef double[::1] k1 = np.empty(d), k2 = np.empty(d), k3 = np.empty(d), k4 = np.empty(d)
    cdef double[::1] ys = np.empty(d), y_new = np.empty(d), f_new = np.empty(d), tmp
    cdef double t0 = t_out[0], t_end = t_out[m - 1], t, t_new
    cdef long n, step, n_evals = 0

    for i in range(d):
        Y[0, i] = y[i]
    n = max(1, <long>ceil((t_end - t0) / h - 1e-9))
    if n > max_steps:
        return Y_arr, (j, 0, 0, 0, 0.0, STATUS_MAX_STEPS, t0)
    h = (t_end - t0) / n
    F.eval(t0, y, k1)
    n_evals = 1
    t = t0
    for step in range(n):
        for i in range(d):
            ys[i] = y[i] + 0.5 * h * k1[i]
        F.eval(t + 0.5 * h, ys, k2)
        for i in range(d):
            ys[i] = y[i] + 0.5 * h * k2[i]
        F.eval(t + 0.5 * h, ys, k3)
        for i in range(d):
            ys[i] = y[i] + h * k3[i]
        F.eval(t + h, ys, k4)
        for i in range(d):
            y_new[i] = y[i] + (h / 6.0) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
        t_new = t_end if step == n - 1 else t0 + (step + 1) * h
        F.eval(t_new, y_new, f_new)
        n_evals += 4
        if not (_all_finite(y_new) and _all_finite(f_new)):
            return Y_arr, (j, step, 0, n_evals, 0.0, STATUS_NONFINITE, t)
        j = _hermite(Y, j, t_out, t, t_new - t, y, k1, y_new, f_new)
        t = t_new
        tmp = y
        y = y_new
        y_new = tmp
        tmp = k1
        k1 = f_new
        f_new = tmp
    return Y_arr, (j, n, 0, n_evals, 0.0, STATUS_OK, t)
