"""Random and deterministic constructions of bodies and positions.

* Gluskin polytopes: absolute convex hulls of random sphere points plus the
  standard basis.
* Random Dvoretzky-Rogers parallelepipeds ``P = T^-1(B_inf)`` whose defining
  functionals are uniform samples from the isotropic polar body.
* Inclusion positions ``T(L) / ||T : X_L -> X_K||`` and the unitary-invariant
  ball sandwich between Schatten balls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bodies import (
    MEMBERSHIP_TOL,
    Body,
    LinearImage,
    LpBall,
    SchattenBall,
    SymmetricGauge,
    SymmetricGaugeBall,
    VPolytope,
    _sign_vectors,
)
from .errors import SingularT, Unsupported
from .linalg import LinearMap, RngStream, log_abs_det, sample_sphere
from .operators import exact_generators, operator_norm
from .sampling import (
    IsotropicReport,
    VolumeEstimate,
    best_log_volume,
    isotropic_normalize,
    uniform_samples,
)

# constants of the unconditional isotropic sandwich  c_in B_inf  in  K  in  c_out n B_1
BOBKOV_INNER = 1.0 / (2.0 * math.sqrt(math.pi * math.e))
BOBKOV_OUTER = math.sqrt(6.0) / 2.0


def gluskin_polytope(n: int, m: int, rng: RngStream) -> VPolytope:
    """``absconv{X_1..X_m, e_1..e_n}`` with ``X_i`` uniform on the sphere."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return VPolytope(np.vstack([sample_sphere(n, rng, m), np.eye(n)]))


# ---------------------------------------------------------------------------
# Dvoretzky-Rogers parallelepiped
# ---------------------------------------------------------------------------


@dataclass
class DrResult:
    T: LinearMap
    P: LinearImage
    ratio: float  # (|P| / |L_iso|)^(1/n)
    ratio_stderr: float
    max_gauge: float  # max over tested points of ||T y||_inf (<= 1 means L in P)
    n_checked: int
    attempts: int
    isotropic: IsotropicReport
    body: Body  # L in the position whose polar is isotropic

    @property
    def L_polar(self) -> float:
        return self.isotropic.L_constant

    @property
    def included(self) -> bool:
        return self.max_gauge <= 1.0 + MEMBERSHIP_TOL


def _boundary_points(body: Body, count: int, rng: RngStream) -> np.ndarray:
    pts = uniform_samples(body, count, rng).points
    return pts / body._gauge(pts)[:, None]


def dr_parallelepiped(l: Body, rng: RngStream, iso: IsotropicReport | None = None,
                      vol_l: VolumeEstimate | None = None, n_iso_samples: int | None = None,
                      n_boundary: int = 1000, max_attempts: int = 3,
                      volume_samples: int = 4000) -> DrResult:
    """Random parallelepiped containing ``L`` built from its isotropic polar.

    ``iso`` is the isotropic normalisation of ``polar(L)``; it is computed
    when omitted.  ``L`` is moved to the position ``M^-T L`` whose polar is
    the isotropic image ``M L°``.  The rows of ``T`` are ``n`` uniform points
    of that polar, so ``|<X_j, y>| <= 1`` on ``L`` and ``L subset T^-1(B_inf)``.
    The inclusion is verified on generators when ``L`` has them, otherwise on
    ``n_boundary`` sampled boundary points.

    Raises
    ------
    SingularT
        If ``max_attempts`` draws of ``T`` are all numerically singular.
    """
    n = l.dim
    if iso is None:
        iso = isotropic_normalize(l.polar(), n_iso_samples, rng.substream(0))
    m = iso.map
    l_iso = LinearImage(l, np.linalg.inv(m.matrix).T)
    polar_iso = iso.image

    t = None
    attempts = 0
    for attempts in range(1, max_attempts + 1):
        # one independent chain per row
        rows = uniform_samples(polar_iso, n, rng.substream(10 + attempts), n_chains=n).points
        if log_abs_det(rows)[1] != 0:
            t = LinearMap(rows)
            break
    if t is None:
        raise SingularT(f"T singular in {max_attempts} attempts")

    gens = exact_generators(l_iso)
    if gens is None:
        gens = _boundary_points(l_iso, n_boundary, rng.substream(20))
    max_gauge = float(np.abs(t(gens)).max())

    if vol_l is None:
        vol_l = best_log_volume(l, rng.substream(1), volume_samples)
    log_l_iso = vol_l.log_volume - m.log_abs_det
    log_p = n * math.log(2.0) - t.log_abs_det
    ratio = math.exp((log_p - log_l_iso) / n)
    return DrResult(
        T=t,
        P=LinearImage(LpBall(math.inf, n), t.inverse().matrix),
        ratio=ratio,
        ratio_stderr=ratio * vol_l.std_error / n,
        max_gauge=max_gauge,
        n_checked=gens.shape[0],
        attempts=attempts,
        isotropic=iso,
        body=l_iso,
    )


# ---------------------------------------------------------------------------
# inclusion positions
# ---------------------------------------------------------------------------


def include_via_operator(t, l: Body, k: Body) -> LinearImage:
    """``T(L) / ||T : X_L -> X_K||``, a position of ``L`` inside ``K``.

    Only exact operator-norm routes are accepted, so the inclusion is a
    certificate rather than an estimate.
    """
    tm = t if isinstance(t, LinearMap) else LinearMap(t)
    norm, exact = operator_norm(tm, l, k)
    if not exact:
        raise Unsupported(f"no exact operator norm from {l.variant}; inclusion would be uncertified")
    img = LinearImage(l, tm.matrix / norm)
    gens = exact_generators(img)
    worst = float(k._gauge(gens).max())
    if worst > 1.0 + MEMBERSHIP_TOL:
        raise AssertionError(f"generator gauge {worst!r} after rescaling")
    return img


def unitary_invariant_ball(tau: SymmetricGauge, d: int) -> Body:
    """Unit ball of ``tau(singular values)`` on ``d x d`` matrices (flattened)."""
    if tau.kind == "lp":
        return SchattenBall(tau.param, d)
    return SymmetricGaugeBall(tau, d)


def tau_u(tau: SymmetricGauge, d: int) -> float:
    """``tau(1, ..., 1)`` in dimension ``d``."""
    return tau.u_value(d)


# ---------------------------------------------------------------------------
# pointwise inclusion checks
# ---------------------------------------------------------------------------


@dataclass
class InclusionReport:
    """Pointwise check of one or more inclusions ``A subset B``.

    ``A subset B`` iff ``gauge_B(x) <= gauge_A(x)`` for every ``x``; each entry
    of ``max_violation`` is the largest ``gauge_B - gauge_A`` over the tested
    points (negative means slack).
    """

    n_points: int
    max_violation: dict[str, float]
    violations: dict[str, int]
    tolerance: float
    notes: list[str] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    @property
    def ok(self) -> bool:
        return self.total_violations == 0


def _compare(lhs: np.ndarray, rhs: np.ndarray, tol: float) -> tuple[float, int]:
    diff = lhs - rhs
    bad = diff > tol * np.maximum(1.0, np.abs(rhs))
    return float(diff.max()), int(bad.sum())


def schatten_sandwich_check(tau: SymmetricGauge, d: int, n_points: int, rng: RngStream,
                            tol: float = 1e-9) -> InclusionReport:
    """Check ``S_inf / tau(u)  subset  B_N  subset  (d / tau(u)) S_1`` pointwise.

    Besides ``n_points`` random directions the identity and a rank-one matrix
    are tested; they are the equality cases of the two inclusions.
    """
    ball = unitary_invariant_ball(tau, d)
    u = tau_u(tau, d)
    s_inf = SchattenBall(math.inf, d)
    s_one = SchattenBall(1.0, d)
    x = sample_sphere(d * d, rng, n_points)
    special = np.vstack([np.eye(d).ravel(), np.outer(np.eye(d)[0], np.eye(d)[0]).ravel()])
    x = np.vstack([x, special])
    g = ball._gauge(x)
    left = _compare(g, u * s_inf._gauge(x), tol)
    right = _compare(u / d * s_one._gauge(x), g, tol)
    return InclusionReport(
        n_points=x.shape[0],
        max_violation={"inner": left[0], "outer": right[0]},
        violations={"inner": left[1], "outer": right[1]},
        tolerance=tol,
    )


def isotropic_unconditional(body: Body) -> LinearImage:
    """Exact isotropic position of an l_p ball or a diagonal image of one.

    ``B_p^n`` is invariant under coordinate permutations and sign changes, so
    its covariance is a multiple of the identity and the volume-one dilate is
    isotropic.  A diagonal image ``D B_p^n`` has the same isotropic position.
    """
    base = body
    if isinstance(body, LinearImage):
        mat = body.matrix
        if not np.allclose(mat, np.diag(np.diag(mat))):
            raise Unsupported("only diagonal images of l_p balls are unconditional here")
        base = body.base
    if not isinstance(base, LpBall):
        raise Unsupported(f"{body.variant} is not a supported unconditional body")
    scale = math.exp(-base.log_volume() / base.n)
    return LinearImage(base, scale * np.eye(base.n))


def bobkov_check(k_iso: Body, n_points: int, rng: RngStream, allowance: float = 1.1,
                 tol: float = 1e-9) -> InclusionReport:
    """Check ``c_in B_inf subset K subset c_out n B_1`` for isotropic unconditional ``K``.

    The constants are ``c_in = 1/(2 sqrt(pi e))`` and ``c_out = sqrt(6)/2``.
    ``allowance`` loosens both (``c_in / allowance``, ``c_out * allowance``) to
    absorb covariance estimation error when ``K`` was normalised empirically.
    Test points are ``n_points`` sphere directions, the coordinate axes and,
    up to dimension 12, all sign vectors (where the cube touches).
    """
    n = k_iso.dim
    x = sample_sphere(n, rng, n_points)
    extra = [np.eye(n)]
    if n <= 12:
        extra.append(_sign_vectors(n))
    x = np.vstack([x] + extra)
    g = k_iso._gauge(x)
    c_in = BOBKOV_INNER / allowance
    c_out = BOBKOV_OUTER * allowance
    inner = _compare(g, np.abs(x).max(axis=1) / c_in, tol)
    outer = _compare(np.abs(x).sum(axis=1) / (c_out * n), g, tol)
    return InclusionReport(
        n_points=x.shape[0],
        max_violation={"inner": inner[0], "outer": outer[0]},
        violations={"inner": inner[1], "outer": outer[1]},
        tolerance=tol,
        notes=[f"constants loosened by factor {allowance}"] if allowance != 1.0 else [],
    )
