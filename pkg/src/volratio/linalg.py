"""Dense linear algebra helpers and reproducible random streams.

Every random draw in the package goes through :class:`RngStream`, a thin
wrapper over numpy's counter-based Philox generator keyed by
``(seed, stream_id)``.  Two streams with the same key produce the same
sequence; parallel work uses distinct stream ids so results do not depend on
scheduling.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NotPositiveDefinite

_MASK64 = (1 << 64) - 1


def _mix64(a: int, b: int) -> int:
    # splitmix64 finaliser over the pair; used to derive child stream ids
    z = (a * 0x9E3779B97F4A7C15 + b + 0x632BE59BD9B4E019) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class RngStream:
    """Reproducible random stream keyed by a 64-bit seed and a 64-bit stream id.

    Parameters
    ----------
    seed : int
        Experiment seed.
    stream_id : int
        Substream counter.  Distinct ids give statistically independent
        streams (Philox keys differ).
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = self.seed | (self.stream_id << 64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def substream(self, k: int) -> "RngStream":
        """Child stream ``k``; independent of the parent and of siblings."""
        return RngStream(self.seed, _mix64(self.stream_id, int(k) + 1))

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def as_rng(rng: RngStream | int | None) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    return RngStream(0 if rng is None else int(rng))


def log_abs_det(m) -> tuple[float, int]:
    """Return ``(log|det M|, sign)`` through a pivoted LU factorisation.

    ``sign`` is 0 when the matrix is singular to machine tolerance, in which
    case the log value is ``-inf``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"square matrix required, got shape {m.shape}")
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0 or not np.isfinite(logdet):
        return -math.inf, 0
    # numerical rank test: smallest singular value against n * eps * largest
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= m.shape[0] * np.finfo(float).eps * sv[0]:
        return -math.inf, 0
    return float(logdet), int(sign)


def singular_values(m, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Singular values by one-sided (Hestenes) Jacobi rotations, descending.

    Accurate to high relative precision; intended for the small matrices used
    throughout (d up to ~150).
    """
    a = np.array(m, dtype=float, copy=True)
    if a.ndim != 2:
        raise ValueError("matrix required")
    n_cols = a.shape[1]
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n_cols - 1):
            for j in range(i + 1, n_cols):
                ai, aj = a[:, i], a[:, j]
                alpha = ai @ ai
                beta = aj @ aj
                gamma = ai @ aj
                if gamma == 0.0:
                    continue
                rel = abs(gamma) / math.sqrt(alpha * beta)
                off = max(off, rel)
                if rel <= tol:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                new_i = c * ai - s * aj
                new_j = s * ai + c * aj
                a[:, i] = new_i
                a[:, j] = new_j
        if off <= tol:
            break
    sv = np.sqrt(np.einsum("ij,ij->j", a, a))
    return np.sort(sv)[::-1]


def inv_sqrt_psd(c, rel_tol: float = 1e-12) -> np.ndarray:
    """Symmetric inverse square root ``S`` with ``S C S = I``.

    Raises
    ------
    NotPositiveDefinite
        If an eigenvalue is below ``rel_tol`` times the largest one.
    """
    c = np.asarray(c, dtype=float)
    c = 0.5 * (c + c.T)
    w, v = np.linalg.eigh(c)
    if w[-1] <= 0 or w[0] <= rel_tol * w[-1]:
        raise NotPositiveDefinite(f"eigenvalues {w[0]:.3e} .. {w[-1]:.3e}")
    return (v / np.sqrt(w)) @ v.T


def random_rotation(n: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed orthogonal matrix with determinant +1."""
    g = rng.normal((n, n))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def sample_gaussian_matrix(n: int, rng: RngStream, n_cols: int | None = None) -> np.ndarray:
    return rng.normal((n, n if n_cols is None else n_cols))


def sample_gaussian_vector(n: int, rng: RngStream, size: int | None = None) -> np.ndarray:
    return rng.normal(n if size is None else (size, n))


def sample_sphere(n: int, rng: RngStream, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the unit sphere (normalised Gaussians)."""
    g = sample_gaussian_vector(n, rng, size)
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    # a zero Gaussian vector has probability zero; guard anyway
    norms[norms == 0] = 1.0
    return g / norms


class LinearMap:
    """Square real matrix with cached ``log|det|`` and determinant sign.

    Instances are treated as immutable; the wrapped array is made read-only.
    """

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"square matrix required, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        m.setflags(write=False)
        self.matrix = m
        self.log_abs_det, self.det_sign = log_abs_det(m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x):
        """Apply to a point (n,) or to row-stacked points (k, n)."""
        x = np.asarray(x, dtype=float)
        return x @ self.matrix.T

    def inverse(self) -> "LinearMap":
        return LinearMap(np.linalg.inv(self.matrix))

    def transpose(self) -> "LinearMap":
        return LinearMap(self.matrix.T)

    def compose(self, other: "LinearMap") -> "LinearMap":
        """``self o other``."""
        return LinearMap(self.matrix @ other.matrix)

    def scaled(self, c: float) -> "LinearMap":
        return LinearMap(c * self.matrix)

    def __repr__(self) -> str:
        return f"LinearMap(n={self.n}, log|det|={self.log_abs_det:.6g}, sign={self.det_sign})"
