"""Uniform sampling in convex bodies, isotropic normalisation and volumes.

Volumes are carried in log-space (:class:`VolumeEstimate`) and only ever
combined as n-th root ratios.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .bodies import (
    BallIntersection,
    Body,
    LinearImage,
    LpBall,
    VPolytope,
)
from .errors import DegenerateAcceptance, DimensionMismatch, Unsupported
from .linalg import LinearMap, RngStream, inv_sqrt_psd, log_abs_det, sample_sphere

POINTS_PER_CHAIN = 50
MAX_CHAINS = 256
HULL_VOLUME_MAX_DIM = 9


def log_unit_ball_volume(n: int) -> float:
    return 0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0)


@dataclass
class SampleBatch:
    points: np.ndarray
    body: Body
    burn_in: int
    thinning: int
    n_chains: int
    seed: int
    stream_id: int
    method: str = "hit_and_run"

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_csv(self, path) -> None:
        """One point per row, columns x0..x{n-1}."""
        n = self.points.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(n)])
            for row in self.points:
                w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class VolumeEstimate:
    log_volume: float
    std_error: float
    method: str
    n_samples: int = 0

    def __post_init__(self):
        if (self.std_error == 0) != (self.method == "analytic"):
            raise ValueError("std_error must be zero exactly for analytic estimates")

    @property
    def volume(self) -> float:
        return math.exp(self.log_volume)

    def shifted(self, delta: float) -> "VolumeEstimate":
        """Volume of a linear image with ``log|det| = delta``."""
        return VolumeEstimate(self.log_volume + delta, self.std_error, self.method, self.n_samples)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def _chain_layout(n_points: int, n_chains: int | None) -> tuple[int, int]:
    if n_chains is None:
        n_chains = max(1, min(MAX_CHAINS, n_points // POINTS_PER_CHAIN))
    n_chains = max(1, min(n_chains, n_points))
    per_chain = -(-n_points // n_chains)
    return n_chains, per_chain


def hit_and_run(body: Body, n_points: int, rng: RngStream, start=None,
                burn_in: int | None = None, thinning: int | None = None,
                n_chains: int | None = None) -> np.ndarray:
    """Run independent hit-and-run chains in lock-step and return their draws.

    Each chain starts at ``start`` (origin by default), discards ``burn_in``
    steps and keeps one point every ``thinning`` steps.  Returned rows are
    ordered step-major.
    """
    n = body.dim
    burn_in = 10 * n * n if burn_in is None else burn_in
    thinning = n if thinning is None else thinning
    n_chains, per_chain = _chain_layout(n_points, n_chains)
    x = np.zeros((n_chains, n)) if start is None else np.tile(np.asarray(start, float), (n_chains, 1))
    out = np.empty((per_chain * n_chains, n))
    total = burn_in + per_chain * thinning
    kept = 0
    for step in range(1, total + 1):
        d = sample_sphere(n, rng, n_chains)
        lo, hi = body._chord(x, d)
        t = lo + (hi - lo) * rng.uniform(size=n_chains)
        x = x + t[:, None] * d
        if step > burn_in and (step - burn_in) % thinning == 0:
            out[kept * n_chains:(kept + 1) * n_chains] = x
            kept += 1
    return out[:n_points]


def uniform_samples(body: Body, n_points: int, rng: RngStream, burn_in: int | None = None,
                    thinning: int | None = None, n_chains: int | None = None) -> SampleBatch:
    """Approximately uniform points in ``body`` by hit-and-run from the origin.

    Defaults follow the usual mixing heuristics: burn-in ``10 n^2`` steps and
    thinning ``n`` steps per kept point.
    """
    n = body.dim
    burn_in = 10 * n * n if burn_in is None else burn_in
    thinning = n if thinning is None else thinning
    chains, _ = _chain_layout(n_points, n_chains)
    pts = hit_and_run(body, n_points, rng, burn_in=burn_in, thinning=thinning, n_chains=chains)
    return SampleBatch(pts, body, burn_in, thinning, chains, rng.seed, rng.stream_id)


def _uniform_in_ball(n: int, radius: float, count: int, rng: RngStream) -> np.ndarray:
    dirs = sample_sphere(n, rng, count)
    r = radius * rng.uniform(size=count) ** (1.0 / n)
    return dirs * r[:, None]


def rejection_samples(body: Body, n_points: int, rng: RngStream, batch: int = 20_000,
                      max_proposals: int = 50_000_000) -> SampleBatch:
    """Exactly uniform points by rejection from the circumscribed ball."""
    n = body.dim
    radius = body.outer_radius()
    got = []
    have = 0
    proposed = 0
    while have < n_points:
        if proposed >= max_proposals:
            raise DegenerateAcceptance(f"only {have} of {n_points} points after {proposed} proposals")
        cand = _uniform_in_ball(n, radius, batch, rng)
        proposed += batch
        keep = cand[body._gauge(cand) <= 1.0]
        got.append(keep)
        have += keep.shape[0]
    pts = np.vstack(got)[:n_points]
    return SampleBatch(pts, body, 0, 1, 1, rng.seed, rng.stream_id, method="rejection")


# ---------------------------------------------------------------------------
# volumes
# ---------------------------------------------------------------------------


def _parallelotope_generators(v: np.ndarray) -> bool:
    return v.shape[0] == v.shape[1]


def _log_hull_volume(v: np.ndarray) -> float | None:
    from scipy.spatial import ConvexHull, QhullError

    try:
        return math.log(ConvexHull(np.vstack([v, -v])).volume)
    except (QhullError, ValueError):
        return None


def log_volume_analytic(body: Body) -> VolumeEstimate:
    """Exact log-volume where one is available.

    Supported: l_p balls, V-polytopes with exactly n generators (linear images
    of the cross-polytope), V-polytopes up to dimension ``HULL_VOLUME_MAX_DIM``
    (exact convex-hull volume), and linear images of supported bodies.
    """
    if isinstance(body, LpBall):
        return VolumeEstimate(body.log_volume(), 0.0, "analytic")
    if isinstance(body, VPolytope) and _parallelotope_generators(body.vertices):
        n = body.dim
        ld, _ = log_abs_det(body.vertices)
        return VolumeEstimate(n * math.log(2.0) + ld - gammaln(n + 1.0), 0.0, "analytic")
    if isinstance(body, VPolytope) and body.dim <= HULL_VOLUME_MAX_DIM:
        lv = _log_hull_volume(body.vertices)
        if lv is not None:
            return VolumeEstimate(lv, 0.0, "analytic")
    if isinstance(body, LinearImage):
        base = log_volume_analytic(body.base)
        return base.shifted(body.linear_map.log_abs_det)
    raise Unsupported(f"no closed-form volume for {body.variant}")


def log_volume_rejection(body: Body, n_samples: int, rng: RngStream, batch: int = 200_000,
                         min_hits: int = 50) -> VolumeEstimate:
    """|B| from the hit fraction of uniform proposals in ``outer_radius * B_2``."""
    n = body.dim
    radius = body.outer_radius()
    hits = 0
    done = 0
    while done < n_samples:
        k = min(batch, n_samples - done)
        cand = _uniform_in_ball(n, radius, k, rng)
        hits += int(np.count_nonzero(body._gauge(cand) <= 1.0))
        done += k
    if hits < min_hits:
        raise DegenerateAcceptance(f"{hits} hits in {n_samples} proposals")
    frac = hits / n_samples
    log_vol = log_unit_ball_volume(n) + n * math.log(radius) + math.log(frac)
    # delta method on log p-hat; the half-hit adjustment keeps se > 0 when every proposal hits
    adj = (hits + 0.5) / (n_samples + 1.0)
    se = math.sqrt((1.0 - adj) / (n_samples * adj))
    return VolumeEstimate(float(log_vol), se, "rejection", n_samples)


def _chain_fraction(inside: np.ndarray, n_chains: int) -> tuple[float, float]:
    """Fraction and its standard error from per-chain batch means."""
    frac = float(inside.mean())
    if n_chains >= 8 and inside.size % n_chains == 0:
        per_chain = inside.reshape(-1, n_chains).mean(axis=0)
        se = float(per_chain.std(ddof=1) / math.sqrt(n_chains))
    else:
        se = math.sqrt(frac * (1.0 - frac) / inside.size)
    # never report less than the independent-sample binomial error
    se = max(se, math.sqrt(frac * (1.0 - frac) / inside.size))
    return frac, se


def log_volume_annealed(body: Body, n_per_phase: int, rng: RngStream,
                        n_chains: int | None = None) -> VolumeEstimate:
    """Multiphase Monte Carlo volume.

    Telescopes over ``B_k = B cap r_k B_2`` with ``r_k = r_0 2^(k/2)``, from
    the inner radius up to the outer radius.  Each ratio ``|B_{k-1}|/|B_k|``
    is the fraction of hit-and-run samples of ``B_k`` lying in ``r_{k-1} B_2``.
    Phase 0 checks ``r_0 B_2 subset B`` by rejection when the inner radius is
    only an estimate.
    """
    n = body.dim
    r_in, in_exact = body._inner_radius()
    r_out = body.outer_radius()
    log_vol = log_unit_ball_volume(n) + n * math.log(r_in)
    var = 0.0
    total = 0
    if not in_exact:
        pts = _uniform_in_ball(n, r_in, n_per_phase, rng)
        frac = float(np.mean(body._gauge(pts) <= 1.0))
        if frac <= 0:
            raise DegenerateAcceptance("inner ball misses the body entirely")
        log_vol += math.log(frac)
        var += (1.0 - frac) / (n_per_phase * frac)
        total += n_per_phase
    radii = [r_in]
    while radii[-1] < r_out * (1.0 - 1e-12):
        radii.append(min(radii[-1] * math.sqrt(2.0), r_out))
    chains, _ = _chain_layout(n_per_phase, n_chains)
    for k in range(1, len(radii)):
        phase_body = body if radii[k] >= r_out else BallIntersection(body, radii[k])
        pts = hit_and_run(phase_body, n_per_phase, rng.substream(k), n_chains=chains)
        inside = np.linalg.norm(pts, axis=1) <= radii[k - 1]
        frac, se = _chain_fraction(inside, chains)
        if frac <= 0:
            raise DegenerateAcceptance(f"phase {k}: no samples inside the previous ball")
        log_vol -= math.log(frac)
        var += (se / frac) ** 2
        total += n_per_phase
    if total == 0:
        # inner and outer radius coincide: the body is a ball, volume is exact
        return VolumeEstimate(float(log_vol), 0.0, "analytic")
    return VolumeEstimate(float(log_vol), math.sqrt(var), "annealed", total)


def best_log_volume(body: Body, rng: RngStream, n_samples: int = 4000) -> VolumeEstimate:
    """Analytic volume when available, otherwise the annealed estimator."""
    try:
        return log_volume_analytic(body)
    except Unsupported:
        pass
    if isinstance(body, LinearImage):
        return best_log_volume(body.base, rng, n_samples).shifted(body.linear_map.log_abs_det)
    return log_volume_annealed(body, n_samples, rng)


def vr_nthroot_ratio(a: Body, b: Body, vol_a: VolumeEstimate, vol_b: VolumeEstimate) -> tuple[float, float]:
    """``(|A|/|B|)^(1/n)`` with its propagated standard error."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions {a.dim} and {b.dim} differ")
    n = a.dim
    value = math.exp((vol_a.log_volume - vol_b.log_volume) / n)
    se = value * math.hypot(vol_a.std_error, vol_b.std_error) / n
    return value, se


def santalo_product(body: Body, rng: RngStream, n_samples: int = 4000) -> tuple[float, float]:
    """``n (|B| |B°|)^(1/n)`` with standard error."""
    n = body.dim
    va = best_log_volume(body, rng.substream(1), n_samples)
    vb = best_log_volume(body.polar(), rng.substream(2), n_samples)
    value = n * math.exp((va.log_volume + vb.log_volume) / n)
    se = value * math.hypot(va.std_error, vb.std_error) / n
    return value, se


# ---------------------------------------------------------------------------
# isotropic position
# ---------------------------------------------------------------------------


@dataclass
class IsotropicReport:
    """Result of putting a symmetric body in (empirical) isotropic position.

    ``map`` already includes ``scale``: ``image = map(body)`` has volume one
    and covariance close to ``L_constant**2 * I``.
    """

    map: LinearMap
    scale: float
    L_constant: float
    L_stderr: float
    image: LinearImage
    covariance: np.ndarray
    volume: VolumeEstimate
    covariance_deviation: float = math.nan
    notes: list[str] = field(default_factory=list)


def empirical_covariance(points: np.ndarray) -> np.ndarray:
    # symmetric bodies are centred at the origin; no mean subtraction
    return points.T @ points / points.shape[0]


def isotropic_normalize(body: Body, n_samples: int | None, rng: RngStream,
                        volume: VolumeEstimate | None = None, volume_samples: int = 4000,
                        recheck: bool = True) -> IsotropicReport:
    """Empirical isotropic position of a centrally symmetric body.

    Covariance from ``n_samples`` hit-and-run points (default ``max(50 n^2, 5000)``),
    whitening by ``C^(-1/2)`` and rescaling to unit volume.  The isotropic
    constant is returned in the affine-invariant form
    ``det(C)^(1/(2n)) / |B|^(1/n)``.
    """
    n = body.dim
    n_samples = max(50 * n * n, 5000) if n_samples is None else n_samples
    pts = uniform_samples(body, n_samples, rng.substream(0)).points
    cov = empirical_covariance(pts)
    whiten = inv_sqrt_psd(cov)
    if volume is None:
        volume = best_log_volume(body, rng.substream(1), volume_samples)
    ld_cov, _ = log_abs_det(cov)
    log_vol_white = volume.log_volume - 0.5 * ld_cov
    scale = math.exp(-log_vol_white / n)
    lin = LinearMap(scale * whiten)
    l_const = math.exp(0.5 * ld_cov / n - volume.log_volume / n)
    # log det of a sample covariance fluctuates with variance about 2n/N
    se_log = math.hypot(math.sqrt(2.0 * n / n_samples) / (2.0 * n), volume.std_error / n)
    report = IsotropicReport(
        map=lin,
        scale=scale,
        L_constant=l_const,
        L_stderr=l_const * se_log,
        image=LinearImage(body, lin.matrix),
        covariance=cov,
        volume=volume,
    )
    if recheck:
        check = uniform_samples(report.image, n_samples, rng.substream(2)).points
        c2 = empirical_covariance(check)
        target = np.trace(c2) / n * np.eye(n)
        report.covariance_deviation = float(np.linalg.norm(c2 - target, 2) / np.linalg.norm(target, 2))
    return report


def isotropic_constant(body: Body, n_samples: int | None, rng: RngStream,
                       volume: VolumeEstimate | None = None) -> tuple[float, float]:
    rep = isotropic_normalize(body, n_samples, rng, volume=volume, recheck=False)
    return rep.L_constant, rep.L_stderr
