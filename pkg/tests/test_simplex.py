from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from volratio.errors import Infeasible
from volratio.simplex import linprog_eq


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_matches_scipy_on_bounded_feasible_programs(m, extra, seed):
    rng = np.random.default_rng(seed)
    k = m + extra
    a = rng.normal(size=(m, k))
    x0 = rng.uniform(0.1, 1.0, size=k)
    b = a @ x0
    c = rng.uniform(0.1, 2.0, size=k)  # positive costs keep the program bounded
    ours = linprog_eq(c, a, b)
    ref = linprog(c, A_eq=a, b_eq=b, bounds=[(0, None)] * k, method="highs")
    assert ref.status == 0
    assert ours.value == pytest.approx(ref.fun, rel=1e-8, abs=1e-9)
    assert np.all(ours.x >= -1e-10)
    np.testing.assert_allclose(a @ ours.x, b, atol=1e-8)
    # strong duality through the returned multipliers
    assert float(b @ ours.duals) == pytest.approx(ours.value, rel=1e-7, abs=1e-8)


def test_negative_rhs_rows_and_duals():
    a = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([-1.0, 2.0])
    res = linprog_eq(np.array([1.0, 1.0, 1.0]), a, b)
    ref = linprog([1, 1, 1], A_eq=a, b_eq=b, bounds=[(0, None)] * 3, method="highs")
    assert res.value == pytest.approx(ref.fun)
    assert float(b @ res.duals) == pytest.approx(res.value)


def test_infeasible():
    with pytest.raises(Infeasible):
        linprog_eq(np.ones(2), np.array([[1.0, 1.0]]), np.array([-1.0]))
