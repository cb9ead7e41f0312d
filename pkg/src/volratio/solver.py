"""Numerical volume ratios via maximum-determinant inclusion.

For symmetric bodies ``vr(K, L) = min (|K| / |T L|)^(1/n)`` over linear maps
with ``T(L) subset K``.  When ``L`` is the absolute convex hull of generators
``w_j`` the inclusion is the finite family ``gauge_K(T w_j) <= 1``, so the
problem is: maximise ``log|det T|`` over that (convex) feasible set.

The objective is not concave on GL(n), so the solver is a multi-start local
method and always returns an *upper* bound on vr witnessed by a certified
feasible map.  :func:`vr_grid_oracle` provides a coarse global search in
dimensions up to 3 to guard against poor local optima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bodies import MEMBERSHIP_TOL, Body, VPolytope
from .errors import DimensionMismatch, DimensionTooLarge, Unsupported
from .linalg import LinearMap, RngStream, random_rotation, sample_sphere
from .operators import exact_generators
from .sampling import VolumeEstimate, best_log_volume


@dataclass
class VrSolveResult:
    T_best: LinearMap
    vr_upper: float
    log_det: float
    iterations: int
    restarts: int
    converged: bool
    max_gauge: float  # inclusion certificate: max_j gauge_K(T w_j)
    restart_values: list[float] = field(default_factory=list)


def _generators(body: Body) -> np.ndarray:
    g = exact_generators(body)
    if g is None:
        raise Unsupported(f"{body.variant} has no exact generator list; convert it first")
    return g


def _max_gauge(k: Body, t: np.ndarray, w: np.ndarray) -> float:
    return float(k._gauge(w @ t.T).max())


def _local_maxdet(k: Body, w: np.ndarray, t0: np.ndarray, max_iter: int, tol: float):
    """SLSQP on ``-log|det T|`` with the piecewise-smooth inclusion constraints."""
    n = t0.shape[0]
    n_gen = w.shape[0]

    def objective(x):
        t = x.reshape(n, n)
        sign, ld = np.linalg.slogdet(t)
        if sign == 0:
            return 1e6, np.zeros_like(x)
        return -ld, -np.linalg.inv(t).T.ravel()

    def cons(x):
        vals, _ = k.pieces(w @ x.reshape(n, n).T)
        return 1.0 - vals.ravel()

    def cons_jac(x):
        _, grads = k.pieces(w @ x.reshape(n, n).T)
        jac = np.einsum("jpi,jl->jpil", grads, w)
        return -jac.reshape(-1, n * n)

    res = minimize(
        objective,
        t0.ravel(),
        jac=True,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
        options={"maxiter": max_iter, "ftol": tol * 1e-3},
    )
    t = res.x.reshape(n, n)
    if not np.all(np.isfinite(t)) or np.linalg.slogdet(t)[0] == 0:
        t = t0
    return t, int(res.nit), bool(res.success), n_gen


def _rescale_feasible(k: Body, t: np.ndarray, w: np.ndarray) -> np.ndarray:
    s = _max_gauge(k, t, w)
    t = t / s
    # rounding can leave the max a hair above 1; shave it
    s2 = _max_gauge(k, t, w)
    if s2 > 1.0:
        t = t / s2
    return t


def maxdet_inclusion(k: Body, l: Body, restarts: int = 5, max_iter: int = 2000, tol: float = 1e-6,
                     rng: RngStream | None = None, vol_k: VolumeEstimate | None = None,
                     vol_l: VolumeEstimate | None = None, starts: list[np.ndarray] | None = None,
                     volume_samples: int = 4000) -> VrSolveResult:
    """Maximise ``|det T|`` subject to ``T(L) subset K``.

    ``L`` must be given by exact generators (a V-polytope, an l_1 or small
    l_inf ball, or a linear image of one).  The first start is
    ``id / ||id : X_L -> X_K||``; further starts compose it with Haar random
    rotations.  Every local solution is rescaled by its largest generator
    gauge, so the returned map satisfies the inclusion to rounding.
    """
    if k.dim != l.dim:
        raise DimensionMismatch(f"dimensions {k.dim} and {l.dim} differ")
    rng = rng if rng is not None else RngStream(0)
    w = _generators(l)
    n = l.dim
    if vol_k is None:
        vol_k = best_log_volume(k, rng.substream(101), volume_samples)
    if vol_l is None:
        vol_l = best_log_volume(l, rng.substream(102), volume_samples)

    if starts is None:
        starts = [np.eye(n)]
        for r in range(1, max(restarts, 1)):
            starts.append(random_rotation(n, rng.substream(r)))
    best_t, best_ld = None, -math.inf
    total_iter = 0
    converged = False
    values = []
    for s in starts:
        t0 = _rescale_feasible(k, np.asarray(s, float), w)
        if n == 1:
            t, nit, ok = t0, 0, True
        else:
            t, nit, ok, _ = _local_maxdet(k, w, t0, max_iter, tol)
        t = _rescale_feasible(k, t, w)
        ld = np.linalg.slogdet(t)[1]
        ld0 = np.linalg.slogdet(t0)[1]
        if ld < ld0:
            t, ld = t0, ld0
        total_iter += nit
        values.append(math.exp((vol_k.log_volume - ld - vol_l.log_volume) / n))
        if ld > best_ld:
            best_t, best_ld, converged = t, ld, ok
    vr = math.exp((vol_k.log_volume - best_ld - vol_l.log_volume) / n)
    return VrSolveResult(
        T_best=LinearMap(best_t),
        vr_upper=vr,
        log_det=float(best_ld),
        iterations=total_iter,
        restarts=len(starts),
        converged=converged,
        max_gauge=_max_gauge(k, best_t, w),
        restart_values=values,
    )


# ---------------------------------------------------------------------------
# small-dimension global oracle
# ---------------------------------------------------------------------------


def _rot2(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def _rotations3(count: int) -> np.ndarray:
    """Deterministic, roughly uniform rotations from a Halton sequence of unit quaternions."""
    def halton(i, base):
        f, r = 1.0, 0.0
        while i > 0:
            f /= base
            r += f * (i % base)
            i //= base
        return r

    out = []
    for i in range(1, count + 1):
        u1, u2, u3 = halton(i, 2), halton(i, 3), halton(i, 5)
        # Shoemake's uniform quaternion map
        a, b = math.sqrt(1 - u1), math.sqrt(u1)
        q = (a * math.sin(2 * math.pi * u2), a * math.cos(2 * math.pi * u2),
             b * math.sin(2 * math.pi * u3), b * math.cos(2 * math.pi * u3))
        x, y, z, w_ = q
        out.append([
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w_), 2 * (x * z + y * w_)],
            [2 * (x * y + z * w_), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w_)],
            [2 * (x * z - y * w_), 2 * (y * z + x * w_), 1 - 2 * (x * x + y * y)],
        ])
    return np.array(out)


def _grid_candidates(n: int, n_angles: int, n_ratios: int, n_rot3: int, n_ratio3: int) -> np.ndarray:
    """Determinant-one maps ``R1 D R2 F`` on a grid (F optional reflection)."""
    if n == 2:
        rots = _rot2(np.linspace(0.0, math.pi, n_angles, endpoint=False))
        logs = np.linspace(0.0, math.log(16.0), n_ratios) / 2.0
        diags = np.stack([np.diag([math.exp(s), math.exp(-s)]) for s in logs])
    else:
        rots = _rotations3(n_rot3)
        logs = np.linspace(-math.log(4.0), math.log(4.0), n_ratio3)
        diags = np.stack([np.diag([math.exp(a), math.exp(b), math.exp(-a - b)])
                          for a in logs for b in logs])
    flips = np.stack([np.eye(n), np.diag([1.0] * (n - 1) + [-1.0])])
    right = np.einsum("rij,fjk->rfik", rots, flips).reshape(-1, n, n)
    dr = np.einsum("dij,rjk->drik", diags, right).reshape(-1, n, n)
    return np.einsum("aij,bjk->abik", rots, dr).reshape(-1, n, n)


def vr_grid_oracle(k: Body, l: Body, rng: RngStream | None = None, vol_k: VolumeEstimate | None = None,
                   vol_l: VolumeEstimate | None = None, n_angles: int = 24, n_ratios: int = 16,
                   n_rot3: int = 48, n_ratio3: int = 6, n_polish: int = 10,
                   volume_samples: int = 4000) -> float:
    """Coarse global search for vr(K, L) in dimension <= 3.

    Scans determinant-one maps ``R1 D R2`` (optionally with a reflection),
    rescales each to feasibility, and polishes the best ``n_polish`` with the
    local solver.  In dimension 2 the grid is 24 angles per rotation and 16
    log-spaced axis ratios; in dimension 3, 48 quasi-uniform rotations per
    factor and a 6 x 6 grid of log axis ratios.
    """
    n = l.dim
    if n > 3:
        raise DimensionTooLarge(f"grid oracle supports n <= 3, got {n}")
    if k.dim != n:
        raise DimensionMismatch(f"dimensions {k.dim} and {n} differ")
    rng = rng if rng is not None else RngStream(0)
    if vol_k is None:
        vol_k = best_log_volume(k, rng.substream(101), volume_samples)
    if vol_l is None:
        vol_l = best_log_volume(l, rng.substream(102), volume_samples)
    base = math.exp((vol_k.log_volume - vol_l.log_volume) / n)
    if n == 1:
        return 1.0
    w = _generators(l)
    cands = _grid_candidates(n, n_angles, n_ratios, n_rot3, n_ratio3)
    scores = np.empty(cands.shape[0])
    chunk = max(1, 400_000 // w.shape[0])
    for i in range(0, cands.shape[0], chunk):
        c = cands[i:i + chunk]
        pts = np.einsum("cij,mj->cmi", c, w).reshape(-1, n)
        scores[i:i + chunk] = k._gauge(pts).reshape(c.shape[0], -1).max(axis=1)
    # det T = +-1, so after rescaling ratio = base * max gauge
    order = np.argsort(scores)
    best = base * scores[order[0]]
    picked = [cands[j] for j in order[:n_polish]]
    res = maxdet_inclusion(k, l, rng=rng, vol_k=vol_k, vol_l=vol_l, starts=picked)
    return float(min(best, res.vr_upper))


# ---------------------------------------------------------------------------
# vr for arbitrary bodies
# ---------------------------------------------------------------------------


@dataclass
class VrEstimate:
    value: float
    std_error: float
    exact_source: bool  # False when L was replaced by a sampled polytope
    result: VrSolveResult
    notes: list[str] = field(default_factory=list)


def polytope_approximation(l: Body, rng: RngStream, n_dirs: int | None = None) -> VPolytope:
    """Inscribed V-polytope with ``n_dirs`` antipodal boundary generator pairs.

    Default ``8 n`` pairs.  In the plane the directions are equally spaced;
    otherwise they are uniform on the sphere.  Generators are ``theta /
    gauge_L(theta)``.
    """
    n = l.dim
    n_dirs = 8 * n if n_dirs is None else n_dirs
    if n == 2:
        ang = np.arange(n_dirs) * math.pi / n_dirs
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        dirs = sample_sphere(n, rng, n_dirs)
    return VPolytope(dirs / l._gauge(dirs)[:, None])


def as_vpolytope(l: Body, rng: RngStream) -> tuple[Body, bool]:
    """``(generator body, exact)``; approximates when no exact generators exist."""
    if exact_generators(l) is not None:
        return l, True
    return polytope_approximation(l, rng), False


def vr_estimate(k: Body, l: Body, rng: RngStream | None = None, restarts: int = 5, max_iter: int = 2000,
                tol: float = 1e-6, vol_k: VolumeEstimate | None = None,
                vol_l: VolumeEstimate | None = None, volume_samples: int = 4000) -> VrEstimate:
    """Estimated vr(K, L) as the best certified max-det inclusion.

    When ``L`` has no exact generator list it is replaced by an inscribed
    polytope (flagged); the ratio then uses that polytope's own volume.
    """
    if k.dim != l.dim:
        raise DimensionMismatch(f"dimensions {k.dim} and {l.dim} differ")
    rng = rng if rng is not None else RngStream(0)
    src, exact = as_vpolytope(l, rng.substream(7))
    notes = []
    if not exact:
        notes.append(f"source body approximated by {exact_generators(src).shape[0]} generator pairs")
        vol_l = None
    if vol_k is None:
        vol_k = best_log_volume(k, rng.substream(101), volume_samples)
    if vol_l is None:
        vol_l = best_log_volume(src, rng.substream(102), volume_samples)
    res = maxdet_inclusion(k, src, restarts=restarts, max_iter=max_iter, tol=tol, rng=rng,
                           vol_k=vol_k, vol_l=vol_l)
    se = res.vr_upper * math.hypot(vol_k.std_error, vol_l.std_error) / k.dim
    return VrEstimate(res.vr_upper, se, exact, res, notes)
