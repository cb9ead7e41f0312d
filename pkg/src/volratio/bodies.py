"""Centrally symmetric convex bodies described symbolically.

Each body exposes its gauge (Minkowski functional), support function,
polar body, chord intersection with lines, and Euclidean radii.  All
point-valued functions accept a single point of shape ``(n,)`` or a stack of
points of shape ``(k, n)``.

Conventions
-----------
* A :class:`VPolytope` stores generators; the body is their absolute convex
  hull.  Its gauge is the linear program ``min sum|a_i|`` s.t. ``V^T a = x``.
* Matrix bodies (:class:`SchattenBall`, :class:`SymmetricGaugeBall`) live in
  ``R^(d*d)``; a vector is reshaped to a ``d x d`` matrix in row-major order.
* Membership: ``x`` is in ``B`` iff ``gauge(B, x) <= 1 + MEMBERSHIP_TOL``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, NotInterior, RankDeficient, Unsupported
from .linalg import LinearMap, RngStream, sample_sphere
from .simplex import linprog_eq

MEMBERSHIP_TOL = 1e-9
# facet lists from qhull are only built up to this ambient dimension
FACET_MAX_DIM = 9
FACET_MAX_COUNT = 200_000


def dual_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _lp_norm(x: np.ndarray, p: float) -> np.ndarray:
    ax = np.abs(x)
    if math.isinf(p):
        return ax.max(axis=-1)
    if p == 1:
        return ax.sum(axis=-1)
    if p == 2:
        return np.sqrt(np.einsum("...i,...i->...", x, x))
    m = ax.max(axis=-1, keepdims=True)
    m_safe = np.where(m == 0, 1.0, m)
    return m[..., 0] * ((ax / m_safe) ** p).sum(axis=-1) ** (1.0 / p)


def _lp_norm_grad(x: np.ndarray, p: float) -> np.ndarray:
    """A (sub)gradient of the l_p norm, row-wise."""
    ax = np.abs(x)
    if math.isinf(p):
        g = np.zeros_like(x)
        idx = ax.argmax(axis=-1)
        rows = np.arange(x.shape[0])
        g[rows, idx] = np.sign(x[rows, idx])
        return g
    if p == 1:
        return np.sign(x)
    nrm = _lp_norm(x, p)[:, None]
    nrm = np.where(nrm == 0, 1.0, nrm)
    return np.sign(x) * (ax / nrm) ** (p - 1)


def _as_points(x, n: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != n:
        raise DimensionMismatch(f"expected points of dimension {n}, got shape {x.shape}")
    return x2, single


def _out(v: np.ndarray, single: bool):
    return float(v[0]) if single else v


def _unique_rows(a: np.ndarray, decimals: int = 9) -> np.ndarray:
    _, idx = np.unique(np.round(a, decimals), axis=0, return_index=True)
    return a[np.sort(idx)]


class Body:
    """Common interface and generic fallbacks for every body variant."""

    variant = "body"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    # -- functions of points -------------------------------------------------
    def _gauge(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _support(self, y: np.ndarray) -> np.ndarray:
        raise Unsupported(f"support function not available for {self.variant}")

    def gauge(self, x):
        x2, single = _as_points(x, self.dim)
        return _out(self._gauge(x2), single)

    def support(self, y):
        y2, single = _as_points(y, self.dim)
        return _out(self._support(y2), single)

    def contains(self, x, tol: float = MEMBERSHIP_TOL):
        g = self.gauge(x)
        return g <= 1.0 + tol

    def polar(self) -> "Body":
        raise Unsupported(f"polar not available for {self.variant}")

    # -- chords --------------------------------------------------------------
    def _chord(self, x: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _bisect_chord(self, x, d)

    def chord_interval(self, x, d):
        """Parameters ``(t_lo, t_hi)`` where ``x + t d`` crosses the boundary.

        Vectorised over row-stacked ``x`` and ``d``.
        """
        x2, single = _as_points(x, self.dim)
        d2, _ = _as_points(d, self.dim)
        gx = self._gauge(x2)
        if np.any(gx >= 1.0 - 1e-12):
            raise NotInterior(f"gauge of start point is {gx.max():.6g}")
        if np.any(np.all(d2 == 0, axis=1)):
            raise ValueError("direction must be non-zero")
        lo, hi = self._chord(x2, d2)
        if single:
            return float(lo[0]), float(hi[0])
        return lo, hi

    # -- radii ---------------------------------------------------------------
    def _inner_radius(self) -> tuple[float, bool]:
        return _approx_inner_radius(self), False

    def _outer_radius(self) -> tuple[float, bool]:
        raise Unsupported(f"outer radius not available for {self.variant}")

    def inner_radius(self) -> float:
        """Largest r with r*B_2 inside the body."""
        return self._inner_radius()[0]

    def outer_radius(self) -> float:
        """Smallest R with the body inside R*B_2 (an upper bound when not exact)."""
        return self._outer_radius()[0]

    def radii_exact(self) -> tuple[bool, bool]:
        return self._inner_radius()[1], self._outer_radius()[1]

    # -- solver support ------------------------------------------------------
    def pieces(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gauge written as a max of smooth pieces.

        Returns ``(values, grads)`` of shapes ``(k, P)`` and ``(k, P, n)`` with
        ``gauge(x) == values.max(axis=1)``.
        """
        x2, _ = _as_points(x, self.dim)
        return self._gauge(x2)[:, None], self._gauge_grad(x2)[:, None, :]

    def _gauge_grad(self, x: np.ndarray) -> np.ndarray:
        # central differences; variants override with analytic gradients
        h = 1e-7
        n = self.dim
        g = np.empty_like(x)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            g[:, i] = (self._gauge(x + e) - self._gauge(x - e)) / (2 * h)
        return g

    def scaled(self, c: float) -> "LinearImage":
        return LinearImage(self, c * np.eye(self.dim))

    def to_dict(self) -> dict:
        raise NotImplementedError


def _bisect_chord(body: Body, x: np.ndarray, d: np.ndarray, rel_tol: float = 1e-12,
                  resid_tol: float = 1e-11):
    """Chord endpoints by bracketed root finding on the convex map t -> gauge(x + t d).

    The bracket ``[0, (1 + gauge(x)) / gauge(d)]`` is exact: by the triangle
    inequality the gauge at the right end is at least 1.  Steps are Illinois
    (modified regula falsi) with a bisection safeguard; the returned endpoint
    is always on the inside (gauge <= 1).
    """
    k = x.shape[0]
    xx = np.vstack([x, x])
    dd = np.vstack([d, -d])
    gx = body._gauge(xx)
    gd = body._gauge(dd)
    lo = np.zeros(2 * k)
    hi = (1.0 + gx) / gd
    f_lo = gx - 1.0
    f_hi = body._gauge(xx + hi[:, None] * dd) - 1.0
    resid = f_lo.copy()  # true gauge - 1 at lo (f_lo may be Illinois-weighted)
    width0 = hi.copy()
    last = np.zeros(2 * k, dtype=int)
    for it in range(200):
        active = ((hi - lo) > rel_tol * width0) & (resid < -resid_tol)
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        a, b, fa, fb = lo[idx], hi[idx], f_lo[idx], f_hi[idx]
        t = a - fa * (b - a) / (fb - fa)
        # bisection every fourth round and on degenerate steps
        bad = ~np.isfinite(t) | (t <= a) | (t >= b) | (it % 4 == 3)
        t = np.where(bad, 0.5 * (a + b), t)
        ft = body._gauge(xx[idx] + t[:, None] * dd[idx]) - 1.0
        inside = ft <= 0.0
        li = last[idx]
        # Illinois: halve the retained endpoint's value after two same-side moves
        new_fb = np.where(inside & (li == -1), fb * 0.5, fb)
        new_fa = np.where(~inside & (li == 1), fa * 0.5, fa)
        lo[idx] = np.where(inside, t, a)
        f_lo[idx] = np.where(inside, ft, new_fa)
        resid[idx] = np.where(inside, ft, resid[idx])
        hi[idx] = np.where(inside, b, t)
        f_hi[idx] = np.where(inside, new_fb, ft)
        last[idx] = np.where(inside, -1, 1)
    return -lo[k:], lo[:k]


def _facet_chord(a: np.ndarray, x: np.ndarray, d: np.ndarray):
    """Exact chord for {y : a_f . y <= 1 for all facets f}."""
    ax = x @ a.T
    ad = d @ a.T
    slack = 1.0 - ax
    with np.errstate(divide="ignore", invalid="ignore"):
        t = slack / ad
    hi = np.where(ad > 0, t, np.inf).min(axis=1)
    lo = np.where(ad < 0, t, -np.inf).max(axis=1)
    return lo, hi


def _slab_chord(a: np.ndarray, x: np.ndarray, d: np.ndarray):
    """Exact chord for the symmetric slabs {y : |a_f . y| <= 1 for all f}."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / (d @ a.T)
        r = (x @ a.T) * inv
        ai = np.abs(inv)
        # a direction parallel to a slab gives inv = inf and r = +-inf or nan; both unconstraining
        hi = np.fmin.reduce(ai - r, axis=1)
        lo = np.fmax.reduce(-ai - r, axis=1)
    return lo, hi


def _half_slabs(a: np.ndarray) -> np.ndarray:
    """One representative of each +-pair of facet normals."""
    lead = a[np.arange(a.shape[0]), (np.abs(a) > 1e-12).argmax(axis=1)]
    return a[lead > 0]


def _approx_inner_radius(body: Body, seed: int = 12345) -> float:
    """min over the sphere of 1/gauge: random directions plus local polish."""
    n = body.dim
    rng = RngStream(seed)
    dirs = sample_sphere(n, rng, 64 * n)
    vals = body._gauge(dirs)
    best = dirs[np.argsort(vals)[-4:]]
    for start in best:
        x = start.copy()
        gx = float(body._gauge(x[None])[0])
        step = 0.25
        while step > 1e-7:
            cand = x[None, :] + step * sample_sphere(n, rng, 8 * n)
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            gc = body._gauge(cand)
            j = int(gc.argmax())
            if gc[j] > gx:
                x, gx = cand[j], float(gc[j])
            else:
                step *= 0.5
        vals = np.append(vals, gx)
    return float(1.0 / vals.max())


# ---------------------------------------------------------------------------
# l_p balls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpBall(Body):
    """Unit ball of the l_p norm on R^n."""

    p: float
    n: int
    variant = "lp_ball"

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError("p must lie in [1, inf]")
        if self.n < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "p", float(self.p))

    @property
    def dim(self) -> int:
        return self.n

    def _gauge(self, x):
        return _lp_norm(x, self.p)

    def _gauge_grad(self, x):
        return _lp_norm_grad(x, self.p)

    def _support(self, y):
        return _lp_norm(y, dual_exponent(self.p))

    def polar(self):
        return LpBall(dual_exponent(self.p), self.n)

    def _chord(self, x, d):
        if self.p == 2:
            a = np.einsum("ij,ij->i", d, d)
            b = np.einsum("ij,ij->i", x, d)
            c = np.einsum("ij,ij->i", x, x) - 1.0
            disc = np.sqrt(b * b - a * c)
            return (-b - disc) / a, (-b + disc) / a
        if math.isinf(self.p):
            a = np.vstack([np.eye(self.n), -np.eye(self.n)])
            return _facet_chord(a, x, d)
        return _bisect_chord(self, x, d)

    def _inner_radius(self):
        return float(self.n ** -max(0.0, 1.0 / self.p - 0.5)), True

    def _outer_radius(self):
        return float(self.n ** max(0.0, 0.5 - 1.0 / self.p)), True

    def pieces(self, x):
        x2, _ = _as_points(x, self.dim)
        if math.isinf(self.p):
            a = np.vstack([np.eye(self.n), -np.eye(self.n)])
            return x2 @ a.T, np.broadcast_to(a, (x2.shape[0],) + a.shape)
        if self.p == 1 and self.n <= 10:
            a = _sign_vectors(self.n)
            return x2 @ a.T, np.broadcast_to(a, (x2.shape[0],) + a.shape)
        return super().pieces(x2)

    def log_volume(self) -> float:
        n, p = self.n, self.p
        if math.isinf(p):
            return n * math.log(2.0)
        return n * (math.log(2.0) + gammaln(1.0 + 1.0 / p)) - gammaln(1.0 + n / p)

    def to_dict(self):
        return {"variant": self.variant, "p": _encode_p(self.p), "n": self.n}


@functools.lru_cache(maxsize=None)
def _sign_vectors(n: int) -> np.ndarray:
    a = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    a.setflags(write=False)
    return a


def _encode_p(p: float):
    return "inf" if math.isinf(p) else p


def _decode_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "oo"):
            return math.inf
        return float(p)
    return float(p)


# ---------------------------------------------------------------------------
# spectral (unitarily invariant) balls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetricGauge:
    """1-symmetric norm on R^d normalised by tau(e_1) = 1.

    ``kind`` is ``"lp"`` (param p), ``"ky_fan"`` (param k: sum of the k largest
    moduli) or ``"ky_fan_dual"`` (param k: ``max(|s|_inf, |s|_1 / k)``, the
    dual of ``ky_fan(k)``).
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("lp", "ky_fan", "ky_fan_dual"):
            raise ValueError(f"unknown symmetric gauge kind {self.kind!r}")
        if self.kind == "lp" and not self.param >= 1:
            raise ValueError("lp gauge needs p >= 1")
        if self.kind != "lp" and (self.param < 1 or int(self.param) != self.param):
            raise ValueError("Ky Fan index must be a positive integer")
        object.__setattr__(self, "param", float(self.param))

    @classmethod
    def lp(cls, p: float) -> "SymmetricGauge":
        return cls("lp", p)

    @classmethod
    def ky_fan(cls, k: int) -> "SymmetricGauge":
        return cls("ky_fan", k)

    def value(self, s: np.ndarray) -> np.ndarray:
        """tau of each row of ``s`` (rows need not be sorted or nonnegative)."""
        a = np.abs(np.asarray(s, dtype=float))
        if self.kind == "lp":
            return _lp_norm(a, self.param)
        k = int(self.param)
        top = -np.sort(-a, axis=-1)
        if self.kind == "ky_fan":
            return top[..., :k].sum(axis=-1)
        return np.maximum(top[..., 0], a.sum(axis=-1) / k)

    def grad(self, s: np.ndarray) -> np.ndarray:
        """A subgradient in s (rows assumed nonnegative, descending)."""
        if self.kind == "lp":
            return _lp_norm_grad(s, self.param)
        k = int(self.param)
        g = np.zeros_like(s)
        if self.kind == "ky_fan":
            g[:, :k] = 1.0
            return g
        first = s[:, 0] >= s.sum(axis=1) / k
        g[first, 0] = 1.0
        g[~first] = 1.0 / k
        return g

    def dual(self) -> "SymmetricGauge":
        if self.kind == "lp":
            return SymmetricGauge("lp", dual_exponent(self.param))
        if self.kind == "ky_fan":
            return SymmetricGauge("ky_fan_dual", self.param)
        return SymmetricGauge("ky_fan", self.param)

    def u_value(self, d: int) -> float:
        """tau(1, ..., 1) in R^d."""
        return float(self.value(np.ones((1, d)))[0])

    def max_on_sphere(self, d: int) -> float:
        """max of tau over unit Euclidean vectors in R^d."""
        if self.kind == "lp":
            return float(d ** max(0.0, 1.0 / self.param - 0.5))
        k = min(int(self.param), d)
        if self.kind == "ky_fan":
            return math.sqrt(k)
        # ky_fan_dual: convex, maximised at a vertex of the l_2-normalised set
        return max(1.0, math.sqrt(d) / int(self.param))

    def to_dict(self) -> dict:
        p = _encode_p(self.param) if self.kind == "lp" else int(self.param)
        return {"kind": self.kind, "param": p}

    @classmethod
    def from_dict(cls, obj: dict) -> "SymmetricGauge":
        kind = obj["kind"]
        param = _decode_p(obj["param"]) if kind == "lp" else int(obj["param"])
        return cls(kind, param)


class _SpectralBody(Body):
    """Unit ball of tau(singular values) on d x d matrices (row-major)."""

    d: int

    @property
    def tau(self) -> SymmetricGauge:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return self.d * self.d

    def _mats(self, x):
        return x.reshape(-1, self.d, self.d)

    def _gauge(self, x):
        s = np.linalg.svd(self._mats(x), compute_uv=False)
        return self.tau.value(s)

    def _support(self, y):
        s = np.linalg.svd(self._mats(y), compute_uv=False)
        return self.tau.dual().value(s)

    def _gauge_grad(self, x):
        u, s, vh = np.linalg.svd(self._mats(x))
        g = self.tau.grad(s)
        grad = u @ (g[:, :, None] * vh)
        return grad.reshape(x.shape[0], -1)

    def _chord(self, x, d):
        if not (self.tau.kind == "lp" and math.isinf(self.tau.param)):
            return _bisect_chord(self, x, d)
        # operator-norm ball: |X + tD| <= 1  iff  [[I, X+tD], [(X+tD)^T, I]] >= 0,
        # a linear pencil A0 + t A1; its range of t comes from one eigenproblem
        k, dd = x.shape[0], self.d
        eye = np.broadcast_to(np.eye(dd), (k, dd, dd))
        xm, dm = self._mats(x), self._mats(d)
        zero = np.zeros((k, dd, dd))
        a0 = np.block([[eye, xm], [np.swapaxes(xm, 1, 2), eye]])
        a1 = np.block([[zero, dm], [np.swapaxes(dm, 1, 2), zero]])
        chol = np.linalg.cholesky(a0)
        left = np.linalg.solve(chol, a1)
        m = np.linalg.solve(chol, np.swapaxes(left, 1, 2))
        w = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, 1, 2)))
        lo = np.where(w[:, -1] > 0, -1.0 / np.where(w[:, -1] > 0, w[:, -1], 1.0), -np.inf)
        hi = np.where(w[:, 0] < 0, -1.0 / np.where(w[:, 0] < 0, w[:, 0], -1.0), np.inf)
        return lo, hi

    def _inner_radius(self):
        return 1.0 / self.tau.max_on_sphere(self.d), True

    def _outer_radius(self):
        return self.tau.dual().max_on_sphere(self.d), True


@dataclass(frozen=True)
class SchattenBall(_SpectralBody):
    """Unit ball of the Schatten p-norm on d x d real matrices."""

    p: float
    d: int
    variant = "schatten"

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError("p must lie in [1, inf]")
        object.__setattr__(self, "p", float(self.p))

    @property
    def tau(self):
        return SymmetricGauge.lp(self.p)

    def polar(self):
        return SchattenBall(dual_exponent(self.p), self.d)

    def to_dict(self):
        return {"variant": self.variant, "p": _encode_p(self.p), "d": self.d}


@dataclass(frozen=True)
class SymmetricGaugeBall(_SpectralBody):
    """Unit ball of the unitarily invariant norm tau(s_1(T), ..., s_d(T))."""

    tau_spec: SymmetricGauge
    d: int
    variant = "sym_gauge"

    @property
    def tau(self):
        return self.tau_spec

    def polar(self):
        return SymmetricGaugeBall(self.tau_spec.dual(), self.d)

    def to_dict(self):
        return {"variant": self.variant, "tau": self.tau_spec.to_dict(), "d": self.d}


# ---------------------------------------------------------------------------
# polytopes
# ---------------------------------------------------------------------------


def _hull_facets(points: np.ndarray) -> np.ndarray | None:
    """Facet normals ``a`` with ``{a . x <= 1}`` describing absconv(points).

    Returns None if the dimension is too large or qhull fails.
    """
    n = points.shape[1]
    if n == 1:
        return np.array([[1.0 / np.abs(points).max()], [-1.0 / np.abs(points).max()]])
    if n > FACET_MAX_DIM:
        return None
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(np.vstack([points, -points]))
    except (QhullError, ValueError):
        return None
    eq = hull.equations
    if len(eq) > FACET_MAX_COUNT:
        return None
    a = eq[:, :-1] / (-eq[:, -1:])
    return _unique_rows(a)


@dataclass(frozen=True, eq=False)
class VPolytope(Body):
    """Absolute convex hull of the rows of ``vertices``."""

    vertices: np.ndarray
    variant = "vpolytope"

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("vertices must be a non-empty (m, n) array")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if np.linalg.matrix_rank(v) < v.shape[1]:
            raise RankDeficient("generators do not span R^n")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @functools.cached_property
    def facets(self) -> np.ndarray | None:
        return _hull_facets(self.vertices)

    @functools.cached_property
    def _slabs(self) -> np.ndarray | None:
        a = self.facets
        return None if a is None else _half_slabs(a)

    def gauge_lp(self, x) -> np.ndarray:
        """Gauge through the exact linear program (reference route)."""
        x2, single = _as_points(x, self.dim)
        vals = np.array([self._lp(row)[0] for row in x2])
        return _out(vals, single)

    def _lp(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        v = self.vertices
        a_eq = np.hstack([v.T, -v.T])
        c = np.ones(2 * v.shape[0])
        res = linprog_eq(c, a_eq, x)
        return res.value, res.duals

    def _gauge(self, x):
        a = self._slabs
        if a is not None:
            return np.abs(x @ a.T).max(axis=1)
        return np.array([self._lp(row)[0] for row in x])

    def _gauge_grad(self, x):
        a = self.facets
        if a is not None:
            return a[(x @ a.T).argmax(axis=1)]
        return np.array([self._lp(row)[1] for row in x])

    def _support(self, y):
        return np.abs(y @ self.vertices.T).max(axis=1)

    def polar(self):
        return PolarPolytope(self.vertices)

    def _chord(self, x, d):
        a = self._slabs
        if a is not None:
            return _slab_chord(a, x, d)
        lo = np.empty(x.shape[0])
        hi = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            hi[i] = self._lp_ray(x[i], d[i])
            lo[i] = -self._lp_ray(x[i], -d[i])
        return lo, hi

    def _lp_ray(self, x, d) -> float:
        # max t  s.t.  V^T (a+ - a-) - t d = x,  sum(a+ + a-) + s = 1
        v = self.vertices
        m, n = v.shape
        a_eq = np.zeros((n + 1, 2 * m + 2))
        a_eq[:n, :m] = v.T
        a_eq[:n, m:2 * m] = -v.T
        a_eq[:n, 2 * m] = -d
        a_eq[n, :2 * m] = 1.0
        a_eq[n, 2 * m + 1] = 1.0
        b = np.append(x, 1.0)
        c = np.zeros(2 * m + 2)
        c[2 * m] = -1.0
        return -linprog_eq(c, a_eq, b).value

    def _inner_radius(self):
        a = self.facets
        if a is not None:
            return float(1.0 / np.linalg.norm(a, axis=1).max()), True
        return super()._inner_radius()

    def _outer_radius(self):
        return float(np.linalg.norm(self.vertices, axis=1).max()), True

    def pieces(self, x):
        x2, _ = _as_points(x, self.dim)
        a = self.facets
        if a is not None:
            return x2 @ a.T, np.broadcast_to(a, (x2.shape[0],) + a.shape)
        return super().pieces(x2)

    def to_dict(self):
        return {"variant": self.variant, "vertices": self.vertices.tolist()}


@dataclass(frozen=True, eq=False)
class PolarPolytope(Body):
    """Polar of ``absconv(vertices)``: ``{x : |<v_i, x>| <= 1 for all i}``.

    Represented through the generators of the primal polytope, never by
    vertex enumeration.
    """

    vertices: np.ndarray
    variant = "polar_vpolytope"

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or np.linalg.matrix_rank(v) < v.shape[1]:
            raise RankDeficient("generators do not span R^n")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @functools.cached_property
    def _primal(self) -> VPolytope:
        return VPolytope(self.vertices)

    def _gauge(self, x):
        return np.abs(x @ self.vertices.T).max(axis=1)

    def _gauge_grad(self, x):
        s = x @ self.vertices.T
        j = np.abs(s).argmax(axis=1)
        return np.sign(s[np.arange(x.shape[0]), j])[:, None] * self.vertices[j]

    def _support(self, y):
        return self._primal._gauge(y)

    def polar(self):
        return self._primal

    def _chord(self, x, d):
        return _slab_chord(self.vertices, x, d)

    def _inner_radius(self):
        return float(1.0 / np.linalg.norm(self.vertices, axis=1).max()), True

    def _outer_radius(self):
        r, exact = self._primal._inner_radius()
        if exact:
            return 1.0 / r, True
        # gauge >= |x|_2 / max|v| is too weak; fall back to the primal estimate
        return 1.0 / r, False

    def pieces(self, x):
        x2, _ = _as_points(x, self.dim)
        a = np.vstack([self.vertices, -self.vertices])
        return x2 @ a.T, np.broadcast_to(a, (x2.shape[0],) + a.shape)

    def to_dict(self):
        return {"variant": self.variant, "vertices": self.vertices.tolist()}


# ---------------------------------------------------------------------------
# derived bodies
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearImage(Body):
    """``matrix(base)`` for an invertible matrix."""

    base: Body
    matrix: np.ndarray
    variant = "linear_image"

    def __post_init__(self):
        m = self.matrix.matrix if isinstance(self.matrix, LinearMap) else self.matrix
        m = np.array(m, dtype=float)
        n = self.base.dim
        if m.shape != (n, n):
            raise DimensionMismatch(f"map shape {m.shape} does not match body dimension {n}")
        lm = LinearMap(m)
        if lm.det_sign == 0:
            raise ValueError("linear image requires an invertible map")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_map", lm)
        inv = np.linalg.inv(m)
        inv.setflags(write=False)
        object.__setattr__(self, "_inv", inv)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def linear_map(self) -> LinearMap:
        return self._map

    def _pull(self, x):
        return x @ self._inv.T

    def _gauge(self, x):
        return self.base._gauge(self._pull(x))

    def _gauge_grad(self, x):
        return self.base._gauge_grad(self._pull(x)) @ self._inv

    def _support(self, y):
        return self.base._support(y @ self.matrix)

    def polar(self):
        return LinearImage(self.base.polar(), self._inv.T)

    def _chord(self, x, d):
        return self.base._chord(self._pull(x), self._pull(d))

    def _inner_radius(self):
        r, exact = self.base._inner_radius()
        smin = np.linalg.svd(self.matrix, compute_uv=False)[-1]
        if isinstance(self.base, PolarPolytope):
            return float(1.0 / np.linalg.norm(self.base.vertices @ self._inv, axis=1).max()), True
        exact = exact and isinstance(self.base, LpBall) and self.base.p == 2
        return float(r * smin), exact

    def _outer_radius(self):
        if isinstance(self.base, VPolytope):
            return float(np.linalg.norm(self.base.vertices @ self.matrix.T, axis=1).max()), True
        r, exact = self.base._outer_radius()
        smax = np.linalg.svd(self.matrix, compute_uv=False)[0]
        exact = exact and isinstance(self.base, LpBall) and self.base.p == 2
        return float(r * smax), exact

    def pieces(self, x):
        x2, _ = _as_points(x, self.dim)
        vals, grads = self.base.pieces(self._pull(x2))
        return vals, grads @ self._inv

    def to_dict(self):
        return {"variant": self.variant, "base": self.base.to_dict(), "matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class BallIntersection(Body):
    """``base`` intersected with ``radius * B_2^n``."""

    base: Body
    radius: float
    variant = "ball_intersection"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.base.dim

    def _gauge(self, x):
        return np.maximum(self.base._gauge(x), np.linalg.norm(x, axis=1) / self.radius)

    def _chord(self, x, d):
        lo_b, hi_b = self.base._chord(x, d)
        a = np.einsum("ij,ij->i", d, d)
        b = np.einsum("ij,ij->i", x, d)
        c = np.einsum("ij,ij->i", x, x) - self.radius ** 2
        disc = np.sqrt(np.maximum(b * b - a * c, 0.0))
        return np.maximum(lo_b, (-b - disc) / a), np.minimum(hi_b, (-b + disc) / a)

    def _inner_radius(self):
        r, exact = self.base._inner_radius()
        return min(r, self.radius), exact or self.radius <= r

    def _outer_radius(self):
        try:
            r, exact = self.base._outer_radius()
        except Unsupported:
            return self.radius, False
        return min(r, self.radius), exact or self.radius <= r

    def pieces(self, x):
        x2, _ = _as_points(x, self.dim)
        vals, grads = self.base.pieces(x2)
        nrm = np.linalg.norm(x2, axis=1)
        safe = np.where(nrm == 0, 1.0, nrm)
        vals = np.hstack([vals, (nrm / self.radius)[:, None]])
        grads = np.concatenate([grads, (x2 / (safe[:, None] * self.radius))[:, None, :]], axis=1)
        return vals, grads

    def to_dict(self):
        return {"variant": self.variant, "base": self.base.to_dict(), "radius": self.radius}


# ---------------------------------------------------------------------------
# functional API
# ---------------------------------------------------------------------------


def gauge(body: Body, x):
    return body.gauge(x)


def support(body: Body, y):
    return body.support(y)


def polar(body: Body) -> Body:
    return body.polar()


def chord_interval(body: Body, x, d):
    return body.chord_interval(x, d)


def inner_radius(body: Body) -> float:
    return body.inner_radius()


def outer_radius(body: Body) -> float:
    return body.outer_radius()


def cross_polytope(n: int) -> VPolytope:
    return VPolytope(np.eye(n))


def cube_corners(n: int) -> VPolytope:
    """B_inf^n as a V-polytope (one generator per antipodal corner pair)."""
    signs = _sign_vectors(n)
    return VPolytope(signs[signs[:, 0] > 0] if n > 1 else signs[:1])
