"""Eigensolver kernels: implicit-shift QL, Householder reduction, and the
pure/compiled twin agreement."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncgopt import _kernels_py, kernels
from conftest import random_symmetric


class TestTridiagQL:
    def test_matches_numpy_on_random_tridiagonals(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 3, 8, 40):
            d = rng.standard_normal(n)
            e = rng.standard_normal(max(n - 1, 0))
            w, v = kernels.tridiag_eigh(d, e)
            t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
            wn = np.linalg.eigvalsh(t)
            np.testing.assert_allclose(w, wn, atol=1e-12, rtol=1e-12)
            np.testing.assert_allclose(v @ np.diag(w) @ v.T, t, atol=1e-11)
            np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)

    def test_eigenvalue_only_path_agrees(self):
        rng = np.random.default_rng(1)
        d = rng.standard_normal(12)
        e = rng.standard_normal(11)
        w_only, none = kernels.tridiag_eigh(d, e, want_vectors=False)
        w_full, _ = kernels.tridiag_eigh(d, e)
        assert none is None
        np.testing.assert_allclose(w_only, w_full, atol=1e-13)

    def test_accumulates_supplied_basis(self):
        a, _ = random_symmetric(9, 5)
        d, e, q = kernels.householder_tridiag(a)
        w, v = kernels.tridiag_eigh(d, e, z=q)
        np.testing.assert_allclose(a @ v, v * w, atol=1e-10)

    def test_zero_matrix(self):
        w, v = kernels.tridiag_eigh(np.zeros(4), np.zeros(3))
        np.testing.assert_allclose(w, 0.0)
        np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-14)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kernels.tridiag_eigh(np.zeros(0), np.zeros(0))

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=7),
        st.data(),
    )
    def test_eigenvalues_sorted_and_within_gershgorin(self, diag, data):
        n = len(diag)
        off = data.draw(st.lists(st.floats(-10, 10), min_size=n - 1, max_size=n - 1))
        d = np.array(diag)
        e = np.array(off)
        w, v = kernels.tridiag_eigh(d, e)
        assert np.all(np.diff(w) >= -1e-12)
        radius = np.zeros(n)
        radius[:-1] += np.abs(e)
        radius[1:] += np.abs(e)
        assert np.all(w >= np.min(d - radius) - 1e-9)
        assert np.all(w <= np.max(d + radius) + 1e-9)


class TestHouseholder:
    def test_reduction_and_orthogonality(self):
        a, _ = random_symmetric(15, 3)
        d, e, q = kernels.householder_tridiag(a)
        t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        np.testing.assert_allclose(q.T @ q, np.eye(15), atol=1e-12)
        np.testing.assert_allclose(q @ t @ q.T, a, atol=1e-11)

    def test_already_tridiagonal_input(self):
        t = np.diag([3.0, 1.0, -2.0]) + np.diag([0.5, 0.0], 1) + np.diag([0.5, 0.0], -1)
        d, e, q = kernels.householder_tridiag(t)
        np.testing.assert_allclose(q @ (np.diag(d) + np.diag(e, 1) + np.diag(e, -1)) @ q.T, t, atol=1e-13)


class TestFullPipeline:
    def test_symmetric_eigh_matches_numpy(self):
        for seed, n in ((0, 5), (1, 20), (2, 60)):
            a, _ = random_symmetric(n, seed)
            w, v = kernels.symmetric_eigh(a)
            np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-10)
            np.testing.assert_allclose(a @ v, v * w, atol=1e-9)

    def test_spectral_norm(self):
        a, lam = random_symmetric(12, 9)
        assert kernels.spectral_norm(a) == pytest.approx(max(abs(lam[0]), abs(lam[-1])), abs=1e-11)


@pytest.mark.skipif(not kernels.COMPILED, reason="compiled kernels unavailable")
class TestCompiledTwin:
    def test_pure_and_compiled_agree(self):
        rng = np.random.default_rng(11)
        for n in (2, 9, 33):
            d = rng.standard_normal(n)
            e = rng.standard_normal(n - 1)
            w_c, v_c = kernels.tridiag_eigh(d, e)
            w_p, v_p = _kernels_py.tridiag_eigh(d, e)
            np.testing.assert_allclose(w_c, w_p, atol=1e-13, rtol=1e-13)
            # eigenvectors may differ by sign; compare column-wise up to sign
            for j in range(n):
                assert min(
                    np.max(np.abs(v_c[:, j] - v_p[:, j])),
                    np.max(np.abs(v_c[:, j] + v_p[:, j])),
                ) < 1e-10
