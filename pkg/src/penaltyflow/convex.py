"""Smooth convex functions, closed convex sets and the conjugate calculus
needed by the penalty dynamics.

All functions and projections broadcast over leading axes, so a batch of
points of shape ``(m, n)`` can be passed wherever a single point of shape
``(n,)`` is accepted.  Support functions and conjugates take single vectors
and return a Python float, with ``math.inf`` standing for ``+inf``.

Objects are immutable after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax, xlogy

INF = math.inf

#: default membership tolerance on ``||x - project(x)||``
MEMBERSHIP_TOL = 1e-8

# relative tolerance deciding whether a direction lies in a cone/subspace
_DIRECTION_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when a point does not match the dimension of a function or set."""


class ConjugateUnavailable(LookupError):
    """Raised when a function has no closed-form Fenchel conjugate."""


class DescriptorError(ValueError):
    """Raised for malformed JSON descriptors; the message names the field."""


def _point(x, dim, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != dim:
        raise DimensionError(
            f"{name} has trailing dimension {x.shape[-1] if x.ndim else 0}, expected {dim}")
    return x


def _single(p, dim, name="p"):
    p = _point(p, dim, name)
    if p.ndim != 1:
        raise DimensionError(f"{name} must be a single vector, got shape {p.shape}")
    return p


def _dot(x, y):
    return np.sum(x * y, axis=-1)


def _tiny_direction(residual, p):
    return np.linalg.norm(residual) <= _DIRECTION_TOL * max(1.0, float(np.linalg.norm(p)))


# ---------------------------------------------------------------------------
# closed convex sets
# ---------------------------------------------------------------------------

class ClosedConvexSet:
    """Nonempty closed convex subset of R^n given by its projection and
    support function."""

    kind = "set"

    def __init__(self, dim):
        if int(dim) < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)

    def project(self, x):
        raise NotImplementedError

    def support(self, p) -> float:
        raise NotImplementedError

    def support_point(self, p):
        """A maximizer of ``<p, x>`` over the set, or None if the sup is infinite."""
        raise NotImplementedError

    def witness(self):
        """Some point of the set."""
        raise NotImplementedError

    def sample(self, rng, n, scale=10.0):
        """``n`` feasible points spread over a region of size ``scale``."""
        raise NotImplementedError

    def distance(self, x):
        x = _point(x, self.dim)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x, tol=MEMBERSHIP_TOL) -> bool:
        x = _single(x, self.dim, "x")
        return bool(self.distance(x) <= tol)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class AffineSubspace(ClosedConvexSet):
    """``{x : A x = b}`` with ``A`` of full row rank."""

    kind = "affine"

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError("A and b have inconsistent row counts")
        super().__init__(A.shape[1])
        if np.linalg.matrix_rank(A) != A.shape[0]:
            raise ValueError("A must have full row rank")
        self.A = A
        self.b = b
        self._gram_inv = np.linalg.inv(A @ A.T)
        self._origin = A.T @ (self._gram_inv @ b)
        # orthonormal basis of the null space of A
        _, _, vt = np.linalg.svd(A)
        self._null = vt[A.shape[0]:].T
        for arr in (self.A, self.b, self._gram_inv, self._origin, self._null):
            arr.setflags(write=False)

    @classmethod
    def hyperplane(cls, normal, offset):
        return cls(np.atleast_2d(normal), [offset])

    def project(self, x):
        x = _point(x, self.dim)
        r = x @ self.A.T - self.b
        return x - (r @ self._gram_inv) @ self.A

    def support(self, p):
        p = _single(p, self.dim)
        if self._null.shape[1] and not _tiny_direction(self._null.T @ p, p):
            return INF
        return float(p @ self._origin)

    def support_point(self, p):
        return None if self.support(p) == INF else self._origin.copy()

    def witness(self):
        return self._origin.copy()

    def sample(self, rng, n, scale=10.0):
        k = self._null.shape[1]
        coef = rng.uniform(-scale, scale, size=(n, k))
        return self._origin + coef @ self._null.T

    def gradient_map(self):
        """``(H, c)`` with ``x - project(x) = H x - c``."""
        H = self.A.T @ self._gram_inv @ self.A
        return H, self._origin.copy()

    def to_dict(self):
        return {"kind": "affine", "A": self.A.tolist(), "b": self.b.tolist()}


class Halfspace(ClosedConvexSet):
    """``{x : <normal, x> <= offset}``."""

    kind = "halfspace"

    def __init__(self, normal, offset):
        u = np.asarray(normal, dtype=float).ravel()
        super().__init__(u.size)
        nrm2 = float(u @ u)
        if nrm2 == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        self.normal = u
        self.offset = float(offset)
        self._nrm2 = nrm2
        self.normal.setflags(write=False)

    def project(self, x):
        x = _point(x, self.dim)
        excess = np.maximum(x @ self.normal - self.offset, 0.0)
        return x - (excess / self._nrm2)[..., None] * self.normal

    def _ray_coefficient(self, p):
        """``lam`` with ``p = lam * normal`` and ``lam >= 0``, else None."""
        lam = float(p @ self.normal) / self._nrm2
        if not _tiny_direction(p - lam * self.normal, p):
            return None
        if lam < 0.0:
            return None if lam < -_DIRECTION_TOL * max(1.0, float(np.linalg.norm(p))) else 0.0
        return lam

    def support(self, p):
        p = _single(p, self.dim)
        lam = self._ray_coefficient(p)
        return INF if lam is None else lam * self.offset

    def support_point(self, p):
        p = _single(p, self.dim)
        return None if self._ray_coefficient(p) is None else self.witness()

    def witness(self):
        return self.offset / self._nrm2 * self.normal

    def sample(self, rng, n, scale=10.0):
        y = self.witness() + rng.uniform(-scale, scale, size=(n, self.dim))
        return self.project(y)

    def to_dict(self):
        return {"kind": "halfspace", "normal": self.normal.tolist(), "offset": self.offset}


class Ball(ClosedConvexSet):
    """Closed Euclidean ball."""

    kind = "ball"

    def __init__(self, center, radius=1.0):
        c = np.asarray(center, dtype=float).ravel()
        super().__init__(c.size)
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = c
        self.radius = float(radius)
        self.center.setflags(write=False)

    def project(self, x):
        x = _point(x, self.dim)
        d = x - self.center
        nrm = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.minimum(1.0, self.radius / np.maximum(nrm, np.finfo(float).tiny))
        return self.center + d * scale

    def support(self, p):
        p = _single(p, self.dim)
        return float(p @ self.center + self.radius * np.linalg.norm(p))

    def support_point(self, p):
        p = _single(p, self.dim)
        nrm = np.linalg.norm(p)
        if nrm == 0.0:
            return self.center.copy()
        return self.center + self.radius * p / nrm

    def witness(self):
        return self.center.copy()

    def sample(self, rng, n, scale=10.0):
        d = rng.standard_normal((n, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / self.dim)
        r[::2] = self.radius  # half of the probes on the sphere
        return self.center + r * d

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


class Box(ClosedConvexSet):
    """``{x : lower <= x <= upper}`` with finite bounds."""

    kind = "box"

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float).ravel()
        hi = np.asarray(upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lower and upper differ in shape")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("empty box")
        super().__init__(lo.size)
        self.lower, self.upper = lo, hi
        lo.setflags(write=False)
        hi.setflags(write=False)

    def project(self, x):
        return np.clip(_point(x, self.dim), self.lower, self.upper)

    def support(self, p):
        p = _single(p, self.dim)
        return float(np.sum(np.maximum(p * self.lower, p * self.upper)))

    def support_point(self, p):
        p = _single(p, self.dim)
        return np.where(p > 0, self.upper, np.where(p < 0, self.lower, 0.5 * (self.lower + self.upper)))

    def witness(self):
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng, n, scale=10.0):
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class WholeSpace(ClosedConvexSet):
    """All of R^n (the zero set of the trivial penalty)."""

    kind = "whole"

    def project(self, x):
        return np.array(_point(x, self.dim), dtype=float)

    def support(self, p):
        p = _single(p, self.dim)
        return 0.0 if not np.any(p) else INF

    def support_point(self, p):
        return self.witness() if self.support(p) == 0.0 else None

    def witness(self):
        return np.zeros(self.dim)

    def sample(self, rng, n, scale=10.0):
        return rng.uniform(-scale, scale, size=(n, self.dim))

    def to_dict(self):
        return {"kind": "whole", "dim": self.dim}


# ---------------------------------------------------------------------------
# smooth convex functions
# ---------------------------------------------------------------------------

class SmoothConvexFunction:
    """Convex function on R^n with Lipschitz gradient.

    Parameters
    ----------
    dim : int
    lipschitz : float
        Upper bound on the Lipschitz constant of the gradient.
    strong_convexity : float
        Modulus ``mu``; 0 for a merely convex function.
    lower_bound : float or None
        Infimum of the function when known.
    """

    kind = "function"
    has_conjugate = False

    def __init__(self, dim, lipschitz, strong_convexity=0.0, lower_bound=None):
        if int(dim) < 1:
            raise ValueError("dimension must be positive")
        if lipschitz < 0 or strong_convexity < 0 or strong_convexity > lipschitz + 1e-12:
            raise ValueError("need 0 <= strong_convexity <= lipschitz")
        self.dim = int(dim)
        self.lipschitz = float(lipschitz)
        self.strong_convexity = float(strong_convexity)
        self.lower_bound = None if lower_bound is None else float(lower_bound)

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def conjugate(self, p) -> float:
        raise ConjugateUnavailable(f"no closed-form conjugate for {self.kind!r}")

    def affine_gradient(self):
        """``(H, c)`` if the gradient is the affine map ``x -> H x - c``, else None."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class PenaltyFunction(SmoothConvexFunction):
    """Nonnegative smooth convex function vanishing exactly on ``zero_set``."""

    kind = "penalty"

    def __init__(self, zero_set, lipschitz):
        super().__init__(zero_set.dim, lipschitz, 0.0, lower_bound=0.0)
        self.zero_set = zero_set

    def conjugate_gap(self, p) -> float:
        """``psi*(p) - sigma(p)``, nonnegative; ``math.inf`` when ``psi*(p)`` is."""
        p = _single(p, self.dim)
        c = self.conjugate(p)
        return INF if c == INF else max(c - self.zero_set.support(p), 0.0)

    def h_integrand_weight(self, p):
        """Constant ``c`` with ``beta*[psi*(p/beta) - sigma(p/beta)] = c/beta`` for
        every large enough ``beta``, or None when no such closed form is known."""
        return None


class Quadratic(SmoothConvexFunction):
    """``1/2 <A x, x> - <b, x> + c`` with ``A`` symmetric positive semidefinite."""

    kind = "quadratic"
    has_conjugate = True

    def __init__(self, A, b=None, c=0.0):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n) or not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("A must be a symmetric square matrix")
        eig = np.linalg.eigvalsh(A)
        if eig[0] < -1e-10 * max(1.0, eig[-1]):
            raise ValueError("A must be positive semidefinite")
        b = np.zeros(n) if b is None else np.asarray(b, dtype=float).ravel()
        lip = max(float(eig[-1]), 0.0)
        mu = float(eig[0]) if eig[0] > 1e-12 * max(1.0, lip) else 0.0
        self.A, self.b, self.c = A, b, float(c)
        self._pinv = np.linalg.pinv(A, hermitian=True)
        xmin = self._pinv @ b
        lower = None
        if np.allclose(A @ xmin, b, atol=1e-9 * max(1.0, np.linalg.norm(b))):
            lower = float(-0.5 * b @ xmin + self.c)
        super().__init__(n, lip, mu, lower)
        for arr in (self.A, self.b, self._pinv):
            arr.setflags(write=False)

    def value(self, x):
        x = _point(x, self.dim)
        return 0.5 * _dot(x @ self.A, x) - x @ self.b + self.c

    def gradient(self, x):
        return _point(x, self.dim) @ self.A - self.b

    def conjugate(self, p):
        w = _single(p, self.dim) + self.b
        u = self._pinv @ w
        if not np.allclose(self.A @ u, w, atol=1e-9 * max(1.0, float(np.linalg.norm(w)))):
            return INF
        return float(0.5 * w @ u - self.c)

    def affine_gradient(self):
        return self.A.copy(), self.b.copy()

    def to_dict(self):
        return {"kind": "quadratic", "A": self.A.tolist(), "b": self.b.tolist(), "c": self.c}


class ShiftedSquaredNorm(SmoothConvexFunction):
    """``1/2 ||x - center||^2``."""

    kind = "sqnorm"
    has_conjugate = True

    def __init__(self, center):
        a = np.asarray(center, dtype=float).ravel()
        super().__init__(a.size, 1.0, 1.0, 0.0)
        self.center = a
        a.setflags(write=False)

    def value(self, x):
        d = _point(x, self.dim) - self.center
        return 0.5 * _dot(d, d)

    def gradient(self, x):
        return _point(x, self.dim) - self.center

    def conjugate(self, p):
        p = _single(p, self.dim)
        return float(0.5 * p @ p + p @ self.center)

    def affine_gradient(self):
        return np.eye(self.dim), self.center.copy()

    def to_dict(self):
        return {"kind": "sqnorm", "center": self.center.tolist()}


class LogSumExp(SmoothConvexFunction):
    """``log sum_i exp(x_i)``; its conjugate is the negative entropy on the simplex."""

    kind = "logsumexp"
    has_conjugate = True

    def __init__(self, dim):
        super().__init__(dim, 1.0, 0.0, None)

    def value(self, x):
        return logsumexp(_point(x, self.dim), axis=-1)

    def gradient(self, x):
        return softmax(_point(x, self.dim), axis=-1)

    def conjugate(self, p):
        p = _single(p, self.dim)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            return INF
        return float(np.sum(xlogy(p, p)))

    def to_dict(self):
        return {"kind": "logsumexp", "dim": self.dim}


class SquaredDistance(PenaltyFunction):
    """``1/2 dist(x, C)^2``; gradient ``x - P_C(x)``, conjugate ``sigma_C + 1/2||.||^2``."""

    kind = "dist2"
    has_conjugate = True

    def __init__(self, zero_set):
        super().__init__(zero_set, 1.0)

    def value(self, x):
        x = _point(x, self.dim)
        d = x - self.zero_set.project(x)
        return 0.5 * _dot(d, d)

    def gradient(self, x):
        x = _point(x, self.dim)
        return x - self.zero_set.project(x)

    def conjugate(self, p):
        p = _single(p, self.dim)
        s = self.zero_set.support(p)
        return INF if s == INF else s + 0.5 * float(p @ p)

    def affine_gradient(self):
        if isinstance(self.zero_set, AffineSubspace):
            return self.zero_set.gradient_map()
        if isinstance(self.zero_set, WholeSpace):
            return np.zeros((self.dim, self.dim)), np.zeros(self.dim)
        return None

    def conjugate_gap(self, p):
        # sigma_C cancels from sigma_C + 1/2||p||^2; the same value is returned
        # off the domain of sigma_C, where both terms are infinite
        p = _single(p, self.dim)
        return 0.5 * float(p @ p)

    def h_integrand_weight(self, p):
        p = _single(p, self.dim)
        if self.zero_set.support(p) == INF:
            return None
        return 0.5 * float(p @ p)

    def to_dict(self):
        return {"kind": "dist2", "set": self.zero_set.to_dict()}


class HuberHinge(PenaltyFunction):
    """Huber-smoothed hinge ``g(<normal, x> - offset)`` with

    ``g(r) = 0`` for ``r <= 0``, ``r^2/(2 delta)`` on ``[0, delta]`` and
    ``r - delta/2`` beyond; vanishes on the halfspace ``<normal, x> <= offset``.
    """

    kind = "huber_hinge"
    has_conjugate = True

    def __init__(self, normal, offset, delta=1.0):
        if delta <= 0:
            raise ValueError("delta must be positive")
        hs = Halfspace(normal, offset)
        super().__init__(hs, float(hs.normal @ hs.normal) / delta)
        self.delta = float(delta)

    def _residual(self, x):
        return _point(x, self.dim) @ self.zero_set.normal - self.zero_set.offset

    def value(self, x):
        r = np.maximum(self._residual(x), 0.0)
        return np.where(r <= self.delta, r * r / (2 * self.delta), r - 0.5 * self.delta)

    def gradient(self, x):
        slope = np.clip(self._residual(x) / self.delta, 0.0, 1.0)
        return slope[..., None] * self.zero_set.normal

    def conjugate(self, p):
        p = _single(p, self.dim)
        hs = self.zero_set
        lam = float(p @ hs.normal) / hs._nrm2
        if not _tiny_direction(p - lam * hs.normal, p) or lam < 0.0 or lam > 1.0:
            return INF
        return lam * hs.offset + 0.5 * self.delta * lam * lam

    def h_integrand_weight(self, p):
        p = _single(p, self.dim)
        lam = self.zero_set._ray_coefficient(p)
        return None if lam is None else 0.5 * self.delta * lam * lam

    def to_dict(self):
        return {"kind": "huber_hinge", "normal": self.zero_set.normal.tolist(),
                "offset": self.zero_set.offset, "delta": self.delta}


class ZeroFunction(PenaltyFunction):
    """The trivial penalty ``psi = 0``; its conjugate is the indicator of ``{0}``."""

    kind = "zero"
    has_conjugate = True

    def __init__(self, dim):
        super().__init__(WholeSpace(dim), 0.0)

    def value(self, x):
        return np.zeros(_point(x, self.dim).shape[:-1])

    def gradient(self, x):
        return np.zeros_like(_point(x, self.dim))

    def conjugate(self, p):
        p = _single(p, self.dim)
        return 0.0 if not np.any(p) else INF

    def affine_gradient(self):
        return np.zeros((self.dim, self.dim)), np.zeros(self.dim)

    def h_integrand_weight(self, p):
        p = _single(p, self.dim)
        return 0.0 if not np.any(p) else None

    def to_dict(self):
        return {"kind": "zero", "dim": self.dim}


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def evaluate(f, x) -> float:
    x = _single(x, f.dim, "x")
    val = float(f.value(x))
    if not math.isfinite(val):
        raise FloatingPointError(f"{f.kind} evaluated to {val} at {x}")
    return val


def grad(f, x):
    return f.gradient(_single(x, f.dim, "x"))


def conjugate_eval(f, p) -> float:
    """Closed-form ``f*(p)``; ``math.inf`` outside the conjugate's domain."""
    return f.conjugate(_single(p, f.dim))


def support(C, p) -> float:
    return C.support(_single(p, C.dim))


def project(C, x):
    return C.project(_single(x, C.dim, "x"))


def fd_gradient_check(f, x, h=1e-6) -> float:
    """Largest coordinatewise relative error between ``f.gradient(x)`` and a
    central difference with step ``h``.

    The relative error of coordinate ``i`` is ``|g_i - d_i| / max(1, |g_i|, |d_i|)``,
    so coordinates with tiny gradient entries are compared absolutely.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = _single(x, f.dim, "x")
    eye = np.eye(f.dim) * h
    xp, xm = x + eye, x - eye
    # actual steps after rounding, so the step itself adds no error
    steps = np.diag(xp) - np.diag(xm)
    d = (f.value(xp) - f.value(xm)) / steps
    g = f.gradient(x)
    scale = np.maximum(1.0, np.maximum(np.abs(g), np.abs(d)))
    return float(np.max(np.abs(g - d) / scale))


@dataclass(frozen=True)
class ConjugateLowerBound:
    """Sampled supremum ``max_i <p, x_i> - f(x_i)``; only ever a LOWER bound on f*(p)."""

    value: float
    n_samples: int
    is_lower_bound: bool = True


def conjugate_lower_bound(f, p, points) -> ConjugateLowerBound:
    p = _single(p, f.dim)
    pts = _point(points, f.dim, "points")
    vals = pts @ p - f.value(pts)
    return ConjugateLowerBound(float(np.max(vals)), len(pts))


@dataclass(frozen=True)
class SelfCheck:
    """Largest sampled violations of the function invariants (all should be <= 0)."""

    convexity: float
    lipschitz: float
    strong_convexity: float
    lower_bound: float
    gradient_fd: float

    def ok(self, slack=1e-9, fd_tol=1e-5):
        return (self.convexity <= slack and self.lipschitz <= slack
                and self.strong_convexity <= slack and self.lower_bound <= slack
                and self.gradient_fd <= fd_tol)


def self_check(f, rng, n=100, box=10.0) -> SelfCheck:
    """Check convexity, gradient Lipschitz bound, strong convexity, lower bound
    and gradient consistency on ``n`` random pairs in ``[-box, box]^n``."""
    X = rng.uniform(-box, box, size=(n, f.dim))
    Y = rng.uniform(-box, box, size=(n, f.dim))
    fx, fy = f.value(X), f.value(Y)
    gx, gy = f.gradient(X), f.gradient(Y)
    d = Y - X
    lin = fx + _dot(gx, d)
    scale = 1.0 + np.abs(fx) + np.abs(fy)
    convexity = np.max((lin - fy) / scale)
    dist = np.linalg.norm(d, axis=1)
    lipschitz = np.max(np.linalg.norm(gx - gy, axis=1) - f.lipschitz * dist * (1 + 1e-12) - 1e-12)
    strong = np.max((lin + 0.5 * f.strong_convexity * dist ** 2 - fy) / scale)
    lower = -INF if f.lower_bound is None else np.max(f.lower_bound - fx)
    fd = max(fd_gradient_check(f, x) for x in X)
    return SelfCheck(float(convexity), float(lipschitz), float(strong), float(lower), fd)


# ---------------------------------------------------------------------------
# JSON descriptors
# ---------------------------------------------------------------------------

def _take(d, required, optional=(), where="descriptor", tag="kind"):
    if not isinstance(d, dict):
        raise DescriptorError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = set(d) - set(required) - set(optional) - {tag}
    if unknown:
        raise DescriptorError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise DescriptorError(f"{where}: missing field(s) {missing}")
    return d


def set_from_dict(d) -> ClosedConvexSet:
    kind = d.get("kind") if isinstance(d, dict) else None
    where = f"set[{kind}]"
    try:
        if kind == "affine":
            _take(d, ("A", "b"), where=where)
            return AffineSubspace(d["A"], d["b"])
        if kind == "hyperplane":
            _take(d, ("normal", "offset"), where=where)
            return AffineSubspace.hyperplane(d["normal"], d["offset"])
        if kind == "halfspace":
            _take(d, ("normal", "offset"), where=where)
            return Halfspace(d["normal"], d["offset"])
        if kind == "ball":
            _take(d, ("center",), ("radius",), where=where)
            return Ball(d["center"], d.get("radius", 1.0))
        if kind == "box":
            _take(d, ("lower", "upper"), where=where)
            return Box(d["lower"], d["upper"])
        if kind == "whole":
            _take(d, ("dim",), where=where)
            return WholeSpace(d["dim"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError(f"{where}: {exc}") from exc
    raise DescriptorError(f"set.kind: unknown set kind {kind!r}")


def function_from_dict(d) -> SmoothConvexFunction:
    kind = d.get("kind") if isinstance(d, dict) else None
    where = f"function[{kind}]"
    try:
        if kind == "quadratic":
            _take(d, ("A",), ("b", "c"), where=where)
            return Quadratic(d["A"], d.get("b"), d.get("c", 0.0))
        if kind == "sqnorm":
            _take(d, ("center",), where=where)
            return ShiftedSquaredNorm(d["center"])
        if kind == "logsumexp":
            _take(d, ("dim",), where=where)
            return LogSumExp(d["dim"])
        if kind == "dist2":
            _take(d, ("set",), where=where)
            return SquaredDistance(set_from_dict(d["set"]))
        if kind == "huber_hinge":
            _take(d, ("normal", "offset"), ("delta",), where=where)
            return HuberHinge(d["normal"], d["offset"], d.get("delta", 1.0))
        if kind == "zero":
            _take(d, ("dim",), where=where)
            return ZeroFunction(d["dim"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError(f"{where}: {exc}") from exc
    raise DescriptorError(f"function.kind: unknown function kind {kind!r}")


def penalty_from_dict(d) -> PenaltyFunction:
    f = function_from_dict(d)
    if not isinstance(f, PenaltyFunction):
        raise DescriptorError(f"psi: {f.kind!r} is not a penalty (needs a zero set)")
    return f
