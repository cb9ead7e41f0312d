"""Operator norms between body-normed spaces, SL normalisation, l-norm and mean width."""

from __future__ import annotations

import math

import numpy as np

from .bodies import Body, LinearImage, LpBall, VPolytope, _sign_vectors
from .errors import DimensionMismatch, Singular
from .linalg import LinearMap, RngStream, sample_gaussian_vector, sample_sphere

EXACT_CORNER_MAX_DIM = 12

__all__ = [
    "LinearMap",
    "exact_generators",
    "operator_norm",
    "sl_normalize",
    "ell_norm",
    "mean_width",
    "id_l2_to",
]


def exact_generators(body: Body) -> np.ndarray | None:
    """Points whose absolute convex hull is exactly ``body``, or None.

    Available for V-polytopes, l_1 balls, l_inf balls up to dimension 12
    (corner enumeration) and linear images of those.
    """
    if isinstance(body, VPolytope):
        return body.vertices
    if isinstance(body, LpBall):
        if body.p == 1:
            return np.eye(body.n)
        if math.isinf(body.p) and body.n <= EXACT_CORNER_MAX_DIM:
            s = _sign_vectors(body.n)
            return s[s[:, 0] > 0] if body.n > 1 else s[:1]
        return None
    if isinstance(body, LinearImage):
        g = exact_generators(body.base)
        return None if g is None else g @ body.matrix.T
    return None


def _as_map(t) -> LinearMap:
    return t if isinstance(t, LinearMap) else LinearMap(t)


def operator_norm(t, source: Body, target: Body, n_starts: int = 32,
                  rng: RngStream | None = None) -> tuple[float, bool]:
    """``||T : X_source -> X_target|| = max over x in source of gauge_target(T x)``.

    Returns ``(value, exact)``.  The maximum is attained at generators when
    ``source`` is a polytope-like body (exact).  Otherwise the ratio
    ``gauge_target(T x) / gauge_source(x)`` is maximised by random restarts and
    coordinate polishing, which gives a lower estimate flagged ``exact=False``.
    """
    tm = _as_map(t)
    if tm.n != source.dim or tm.n != target.dim:
        raise DimensionMismatch(f"map is {tm.n}x{tm.n}, bodies have dims {source.dim}, {target.dim}")
    gens = exact_generators(source)
    if gens is not None:
        return float(target._gauge(tm(gens)).max()), True

    rng = rng if rng is not None else RngStream(0x5EED)
    n = tm.n

    def ratio(x):
        return target._gauge(tm(x)) / source._gauge(x)

    starts = sample_sphere(n, rng, max(n_starts, 1))
    vals = ratio(starts)
    best_val = float(vals.max())
    for x in starts[np.argsort(vals)[-4:]]:
        fx = float(ratio(x[None])[0])
        step = 0.5
        while step > 1e-9:
            improved = False
            for i in range(n):
                for sgn in (1.0, -1.0):
                    y = x.copy()
                    y[i] += sgn * step
                    y /= np.linalg.norm(y)
                    fy = float(ratio(y[None])[0])
                    # strict relative gain: the ratio is scale-free, so ties must not loop
                    if fy > fx * (1.0 + 1e-12):
                        x, fx, improved = y, fy, True
            if not improved:
                step *= 0.5
        best_val = max(best_val, fx)
    return best_val, False


def sl_normalize(t) -> LinearMap:
    """``T / |det T|^(1/n)``, a determinant +-1 map."""
    tm = _as_map(t)
    if tm.det_sign == 0:
        raise Singular("cannot SL-normalise a singular map")
    return LinearMap(tm.matrix * math.exp(-tm.log_abs_det / tm.n))


def ell_norm(body: Body, n_samples: int, rng: RngStream) -> tuple[float, float]:
    """Gaussian mean of the gauge, ``E ||g||_K``, with its standard error."""
    g = sample_gaussian_vector(body.dim, rng, n_samples)
    vals = body._gauge(g)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def mean_width(body: Body, n_samples: int, rng: RngStream) -> tuple[float, float]:
    """``2 E h_K(theta)`` over uniform directions, with its standard error."""
    th = sample_sphere(body.dim, rng, n_samples)
    vals = 2.0 * body._support(th)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def id_l2_to(body: Body) -> float:
    """``||id : l_2^n -> X_K|| = max of the gauge on the unit sphere``."""
    return 1.0 / body.inner_radius()
