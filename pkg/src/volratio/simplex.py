"""Small dense two-phase simplex with Bland's anti-cycling rule.

Used for V-polytope gauges and chords.  Problems here have at most a few
hundred columns, so a plain tableau is fast enough and fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible

_EPS = 1e-11


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    duals: np.ndarray  # multipliers of the equality rows
    pivots: int


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, tab[row])


def _run(tab: np.ndarray, basis: np.ndarray, n_cols: int, max_pivots: int) -> int:
    """Minimise with objective in the last row of ``tab``; Bland's rule."""
    pivots = 0
    m = tab.shape[0] - 1
    while pivots < max_pivots:
        red = tab[-1, :n_cols]
        candidates = np.nonzero(red < -_EPS)[0]
        if candidates.size == 0:
            return pivots
        col = int(candidates[0])
        column = tab[:m, col]
        pos = column > _EPS
        if not pos.any():
            raise Infeasible("unbounded linear program")
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + _EPS * max(1.0, abs(best)))[0]
        # Bland: among tied rows leave the lowest basic index
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tab, row, col)
        basis[row] = col
        pivots += 1
    raise RuntimeError("simplex pivot limit reached")


def linprog_eq(c, a_eq, b_eq, max_pivots: int = 10_000) -> LPResult:
    """Minimise ``c @ x`` subject to ``A x = b`` and ``x >= 0``.

    Returns the optimum together with the equality-row dual multipliers
    ``y`` (so that ``c - A.T @ y >= 0`` at the optimum).
    """
    c = np.asarray(c, dtype=float)
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, n = a.shape
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1

    # phase 1: artificial basis
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n] = -a.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    pivots = _run(tab, basis, n + m, max_pivots)
    if tab[-1, -1] < -1e-9 * max(1.0, np.abs(b).max()):
        raise Infeasible("linear program is infeasible")

    # drive remaining artificials out of the basis where possible
    for row in range(m):
        if basis[row] >= n:
            nz = np.nonzero(np.abs(tab[row, :n]) > 1e-9)[0]
            if nz.size:
                _pivot(tab, row, int(nz[0]))
                basis[row] = int(nz[0])
                pivots += 1
    keep = basis < n
    tab = np.vstack([tab[:m][keep], tab[-1:]])
    basis = basis[keep]
    rows_kept = np.nonzero(keep)[0]
    tab = np.hstack([tab[:, :n], tab[:, -1:]])

    # phase 2
    tab[-1] = 0.0
    tab[-1, :n] = c
    for r, j in enumerate(basis):
        tab[-1] -= c[j] * tab[r]
    pivots += _run(tab, basis, n, max_pivots)

    x = np.zeros(n)
    x[basis] = tab[:-1, -1]
    value = float(c @ x)
    # duals from the final basis: y^T B = c_B (on the kept, sign-adjusted rows)
    y_kept = np.linalg.lstsq(a[rows_kept][:, basis].T, c[basis], rcond=None)[0]
    duals = np.zeros(m)
    duals[rows_kept] = y_kept
    duals[flip] *= -1
    return LPResult(x=x, value=value, duals=duals, pivots=pivots)
