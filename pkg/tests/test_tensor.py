from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from powermpo.errors import NumericalError, ValidationError
from powermpo.tensor import EXACT, TruncationPolicy, as_tensor, contract, truncated_svd


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestContract:
    def test_identity_on_vector(self):
        out = contract(np.eye(2), np.array([1.0, 2.0]), [(1, 0)])
        np.testing.assert_array_equal(out, [1.0, 2.0])

    def test_diagonal_square(self):
        d = np.diag([0.0, 2.0])
        np.testing.assert_array_equal(contract(d, d, [(1, 0)]), np.diag([0.0, 4.0]))

    def test_matches_naive_loops(self, rng):
        a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 5))
        np.testing.assert_allclose(contract(a, b, [(1, 0)]), naive_matmul(a, b), atol=1e-12)

    def test_result_axis_order(self, rng):
        a, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(5, 3))
        assert contract(a, b, [(1, 1)]).shape == (2, 4, 5)

    def test_extent_mismatch(self):
        with pytest.raises(ValidationError):
            contract(np.ones((2, 3)), np.ones((2, 3)), [(1, 0)])

    def test_duplicate_axis(self):
        with pytest.raises(ValidationError):
            contract(np.ones((2, 2)), np.ones((2, 2)), [(0, 0), (0, 1)])

    @settings(max_examples=30, deadline=None)
    @given(
        a=arrays(np.float64, (3, 4), elements=st.floats(-10, 10)),
        b=arrays(np.float64, (4, 2), elements=st.floats(-10, 10)),
        alpha=st.floats(-5, 5),
    )
    def test_bilinear(self, a, b, alpha):
        np.testing.assert_allclose(
            contract(alpha * a, b, [(1, 0)]), alpha * contract(a, b, [(1, 0)]), atol=1e-9
        )


class TestAsTensor:
    def test_reshape(self):
        assert as_tensor(range(6), (2, 3)).shape == (2, 3)

    def test_bad_shape(self):
        with pytest.raises(ValidationError):
            as_tensor(range(6), (4, 2))
        with pytest.raises(ValidationError):
            as_tensor([], (0,))


class TestPolicy:
    @pytest.mark.parametrize("kwargs", [{"max_rank": 0}, {"rel_cutoff": -1e-3}, {"rel_cutoff": 1.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            TruncationPolicy(**kwargs)


class TestTruncatedSvd:
    def test_rank_one_cap(self):
        res = truncated_svd(np.diag([3.0, 1.0]), TruncationPolicy(1, 1e-15))
        np.testing.assert_allclose(res.s, [3.0])
        assert res.discarded_weight == pytest.approx(0.1, abs=1e-15)

    def test_relative_cutoff(self):
        res = truncated_svd(np.diag([1.0, 1e-16]), TruncationPolicy(None, 1e-15))
        assert res.rank == 1
        np.testing.assert_allclose(res.s, [1.0])

    def test_low_rank_detected(self, rng):
        m = np.outer(rng.normal(size=8), rng.normal(size=8)) + np.outer(rng.normal(size=8), rng.normal(size=8))
        assert truncated_svd(m, TruncationPolicy(8, 1e-12)).rank == 2

    def test_zero_matrix(self):
        res = truncated_svd(np.zeros((3, 2)))
        assert res.rank == 1 and res.s[0] == 0.0
        np.testing.assert_array_equal(res.u[:, 0], [1, 0, 0])
        np.testing.assert_array_equal(res.vt[0], [1, 0])

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            truncated_svd(np.array([[1.0, np.nan]]))

    def test_axis_split(self, rng):
        t = rng.normal(size=(2, 3, 4))
        res = truncated_svd(t, EXACT, row_axes=2)
        assert res.u.shape[0] == 6 and res.vt.shape[1] == 4

    def test_needs_axis_split_for_tensor(self):
        with pytest.raises(ValidationError):
            truncated_svd(np.ones((2, 2, 2)))

    @settings(max_examples=40, deadline=None)
    @given(
        m=arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(-100, 100)),
        chi=st.integers(1, 6),
    )
    def test_contract_properties(self, m, chi):
        res = truncated_svd(m, TruncationPolicy(chi, 1e-12))
        assert res.rank <= min(chi, *m.shape)
        assert np.all(np.diff(res.s) <= 0) and np.all(res.s >= 0)
        if res.s[0] > 0:
            assert np.all(res.s >= 1e-12 * res.s[0])
            np.testing.assert_allclose(res.u.T @ res.u, np.eye(res.rank), atol=1e-10)
            np.testing.assert_allclose(res.vt @ res.vt.T, np.eye(res.rank), atol=1e-10)
            err2 = np.sum((m - res.u @ np.diag(res.s) @ res.vt) ** 2)
            norm2 = np.sum(m**2)
            assert err2 == pytest.approx(res.discarded_weight * norm2, abs=1e-10 * max(1.0, norm2))

    def test_full_rank_reconstruction(self, rng):
        m = rng.normal(size=(5, 7))
        res = truncated_svd(m, TruncationPolicy(None, 0.0))
        assert np.linalg.norm(m - res.u @ np.diag(res.s) @ res.vt) < 1e-10

    def test_transpose_spectrum(self, rng):
        m = rng.normal(size=(4, 6))
        np.testing.assert_allclose(truncated_svd(m).s, truncated_svd(m.T).s, atol=1e-10)
