"""Circular-banded storage, the banded solver, eigendecomposition, operators."""

import numpy as np
import pytest

from conftest import random_banded, unitary_dft
from fastfade.linalg import (CircularBandedMatrix, NotHermitianError,
                             OpCounter, OutOfStripeError, SingularMatrixError,
                             UnitaryOperator, band_adjoint_apply, band_apply,
                             band_from_dense, band_gram, band_solve,
                             complexity_estimate, dense_solve_ops,
                             eig_hermitian)


class TestCircularBandedStorage:
    def test_identity_single_diagonal(self):
        mat = band_from_dense(np.eye(5), 0, 0)
        assert mat.stripe_width == 1
        assert np.allclose(mat.diagonal(0), 1.0)
        assert np.allclose(mat.densify(), np.eye(5))

    def test_wrapping_superdiagonal(self):
        a = np.zeros((4, 4), dtype=complex)
        rows = np.arange(4)
        a[rows, (rows + 1) % 4] = [1, 2, 3, 4]  # includes the (3, 0) corner
        mat = band_from_dense(a, 0, 1)
        assert mat.k_upper == 1 and mat.k_lower == 0
        assert np.allclose(mat.densify(), a)

    def test_densify_roundtrip_exact(self, rng):
        mat = random_banded(rng, 12, 2, 3)
        back = band_from_dense(mat.densify(), 2, 3)
        assert np.array_equal(back.diags, mat.diags)

    def test_out_of_stripe_rejected(self, rng):
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        with pytest.raises(OutOfStripeError):
            band_from_dense(a, 1, 1)

    def test_drop_tolerance_allows_small_leakage(self, rng):
        mat = random_banded(rng, 8, 1, 1)
        a = mat.densify()
        a[0, 4] = 1e-9  # far outside the stripe
        with pytest.raises(OutOfStripeError):
            band_from_dense(a, 1, 1)
        assert np.allclose(band_from_dense(a, 1, 1, drop_tol=1e-6).densify(),
                           mat.densify())

    def test_stripe_wider_than_order_rejected(self):
        with pytest.raises(ValueError):
            CircularBandedMatrix(4, 2, 2)


class TestBandedProducts:
    def test_identity_apply(self, rng):
        mat = CircularBandedMatrix.identity(6, 1, 1)
        x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        assert np.allclose(band_apply(mat, x), x)
        assert np.allclose(band_adjoint_apply(mat, x), x)

    def test_superdiagonal_is_circular_shift(self, rng):
        mat = CircularBandedMatrix(5, 0, 1)
        mat.diags[0] = 1.0  # offset -1 diagonal, wraps at (4, 0)
        x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        assert np.allclose(mat.apply(x), np.roll(x, -1))

    def test_apply_matches_dense(self, rng):
        for _ in range(10):
            size = int(rng.integers(4, 24))
            kl = int(rng.integers(0, min(3, (size - 1) // 2) + 1))
            ku = int(rng.integers(0, min(3, size - 1 - kl) + 1))
            mat = random_banded(rng, size, kl, ku)
            dense = mat.densify()
            x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            assert np.allclose(mat.apply(x), dense @ x, atol=1e-12)
            assert np.allclose(mat.adjoint_apply(x), dense.conj().T @ x,
                               atol=1e-12)
            assert np.allclose(mat.adjoint().densify(), dense.conj().T)

    def test_dimension_mismatch(self, rng):
        mat = CircularBandedMatrix.identity(6)
        with pytest.raises(ValueError):
            mat.apply(np.ones(5))


class TestBandGram:
    def test_identity(self):
        mat = CircularBandedMatrix.identity(5)
        gram = band_gram(mat, 1.0)
        assert np.allclose(gram.densify(), 2.0 * np.eye(5))

    def test_diagonal_channel(self, rng):
        h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        mat = CircularBandedMatrix(6, 0, 0, h[None, :])
        gamma = 4.0
        gram = band_gram(mat, gamma)
        assert np.allclose(gram.densify(),
                           np.diag(np.abs(h) ** 2 + 1.0 / gamma), atol=1e-14)

    def test_matches_dense_oracle(self, rng):
        for _ in range(8):
            size = int(rng.integers(6, 32))
            k = int(rng.integers(0, min(3, (size - 1) // 4) + 1))
            mat = random_banded(rng, size, k, k)
            dense = mat.densify()
            gamma = float(rng.uniform(0.5, 20.0))
            gram = band_gram(mat, gamma)
            oracle = dense @ dense.conj().T + np.eye(size) / gamma
            assert gram.k_lower == gram.k_upper == 2 * k
            assert np.allclose(gram.densify(), oracle, atol=1e-12)

    def test_hermitian(self, rng):
        mat = random_banded(rng, 16, 2, 1)
        g = band_gram(mat, 3.0).densify()
        assert np.max(np.abs(g - g.conj().T)) < 1e-12

    def test_requires_positive_gamma(self, rng):
        with pytest.raises(ValueError):
            band_gram(random_banded(rng, 8, 1, 1), 0.0)


class TestBandSolve:
    def test_identity(self, rng):
        b = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        x = band_solve(CircularBandedMatrix.identity(7), b)
        assert np.allclose(x, b)

    def test_random_8x8_vs_dense_lu(self, rng):
        mat = random_banded(rng, 8, 2, 2)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        x = band_solve(mat, b)
        ref = np.linalg.solve(mat.densify(), b)
        assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)

    def test_residual_and_oracle_sweep(self, rng):
        for _ in range(40):
            size = int(rng.integers(5, 64))
            k = int(rng.integers(0, min(4, (size - 1) // 2) + 1))
            mat = random_banded(rng, size, k, k)
            b = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            x = band_solve(mat, b)
            dense = mat.densify()
            assert np.linalg.norm(dense @ x - b) <= 1e-9 * np.linalg.norm(b)
            ref = np.linalg.solve(dense, b)
            assert np.linalg.norm(x - ref) <= 1e-9 * np.linalg.norm(ref)

    def test_asymmetric_bandwidths(self, rng):
        mat = random_banded(rng, 20, 3, 1)
        b = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        x = band_solve(mat, b)
        assert np.allclose(x, np.linalg.solve(mat.densify(), b), atol=1e-9)

    def test_multiple_rhs(self, rng):
        mat = random_banded(rng, 16, 2, 2)
        b = rng.standard_normal((16, 3)) + 1j * rng.standard_normal((16, 3))
        x = band_solve(mat, b)
        assert x.shape == (16, 3)
        assert np.allclose(mat.densify() @ x, b, atol=1e-9)

    def test_wide_stripe_dense_fallback(self, rng):
        # 2 * max(kl, ku) exceeds the order: handled by dense elimination
        mat = random_banded(rng, 5, 4, 0, diag_boost=12.0)
        b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        counter = OpCounter()
        x = band_solve(mat, b, counter)
        assert np.allclose(x, np.linalg.solve(mat.densify(), b), atol=1e-9)
        assert counter.get("solve") > 0

    def test_singular_raises(self):
        mat = CircularBandedMatrix(6, 1, 1)
        mat.diags[1] = 0.0  # zero main diagonal
        mat.diags[0] = 1.0
        with pytest.raises(SingularMatrixError):
            band_solve(mat, np.ones(6))

    def test_op_count_matches_formula(self, rng):
        # full-stripe random systems: the elimination count equals the
        # closed-form model to well within 10%
        k = 6
        for size in (128, 256, 512):
            mat = random_banded(rng, size, k, k)
            b = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            counter = OpCounter()
            band_solve(mat, b, counter)
            expected = complexity_estimate(size, k).total_ops
            assert abs(counter.get("solve") / expected - 1.0) < 0.10

    def test_op_count_linear_slope_on_mmse_gram(self, rng):
        # slope of count vs n at fixed stripe should track (1 + 2k)^2
        k_h = 3
        counts = {}
        for size in (128, 256, 512):
            h = random_banded(rng, size, k_h, k_h, diag_boost=0.0)
            gram = band_gram(h, 5.0)
            counter = OpCounter()
            band_solve(gram, rng.standard_normal(size) + 0j, counter)
            counts[size] = counter.get("solve")
        slope = (counts[512] - counts[128]) / (512 - 128)
        k = 2 * k_h
        assert abs(slope / (1 + 2 * k) ** 2 - 1.0) < 0.10


class TestEigHermitian:
    def test_identity(self):
        lam, q = eig_hermitian(np.eye(4))
        assert np.allclose(lam, 1.0)
        assert np.allclose(q @ q.conj().T, np.eye(4), atol=1e-12)

    def test_diagonal_descending(self):
        lam, q = eig_hermitian(np.diag([1.0, 4.0]))
        assert np.allclose(lam, [4.0, 1.0])
        assert np.allclose(np.abs(q), [[0, 1], [1, 0]])

    def test_reconstruction(self, rng):
        h = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        g = h.conj().T @ h
        lam, q = eig_hermitian(g)
        recon = q @ np.diag(lam) @ q.conj().T
        assert np.linalg.norm(recon - g) <= 1e-8 * np.linalg.norm(g)
        assert lam.min() >= -1e-10
        assert np.all(np.diff(lam) <= 1e-12)

    def test_matches_characteristic_polynomial_roots(self, rng):
        # Faddeev-LeVerrier coefficients + companion-matrix roots as the
        # independent small-scale oracle
        for size in (2, 3, 4):
            h = rng.standard_normal((size, size)) \
                + 1j * rng.standard_normal((size, size))
            g = h.conj().T @ h
            coeffs = [1.0]
            mat = np.zeros_like(g)
            for k in range(1, size + 1):
                mat = g @ (mat + coeffs[-1] * np.eye(size)) if k > 1 else g.copy()
                coeffs.append(-np.trace(mat).real / k)
            roots = np.sort(np.roots(coeffs).real)[::-1]
            lam, _ = eig_hermitian(g)
            assert np.allclose(lam, roots, rtol=1e-8, atol=1e-8)

    def test_not_hermitian_raises(self, rng):
        g = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        with pytest.raises(NotHermitianError):
            eig_hermitian(g)


class TestComplexity:
    def test_diagonal_case(self):
        assert complexity_estimate(100, 0).total_ops == 100

    def test_headline_banded_count(self):
        est = complexity_estimate(8192, 6)
        assert est.total_ops == 1481296
        assert abs(est.total_ops / 1.4e6 - 1.0) < 0.1
        assert est.asymptotic == "O((1+2k)^2 MN)"

    def test_headline_dense_count(self):
        assert dense_solve_ops(8192) == 8192 ** 3
        assert abs(dense_solve_ops(8192) / 5.5e11 - 1.0) < 0.01

    def test_preconditions(self):
        with pytest.raises(ValueError):
            complexity_estimate(4, 2)
        with pytest.raises(ValueError):
            complexity_estimate(10, -1)


class TestUnitaryOperators:
    def _operators(self, m=4, n=3):
        size = m * n
        return [UnitaryOperator.identity(size), UnitaryOperator.dft(size),
                UnitaryOperator.idft(size),
                UnitaryOperator.kron_idft_eye(m, n),
                UnitaryOperator.block_idft(m, n)]

    def test_round_trip_unitarity(self, rng):
        for op in self._operators():
            x = rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size)
            back = op.adjoint().apply(op.apply(x))
            assert np.linalg.norm(back - x) <= 1e-12 * np.linalg.norm(x)

    def test_densified_unitarity(self, rng):
        for op in self._operators(2, 3):
            u = op.densify()
            assert np.allclose(u @ u.conj().T, np.eye(op.size), atol=1e-12)

    def test_dft_matches_explicit_matrix(self, rng):
        op = UnitaryOperator.dft(6)
        x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        assert np.allclose(op.apply(x), unitary_dft(6) @ x, atol=1e-12)

    def test_kron_matches_kronecker_product(self):
        m, n = 2, 2
        op = UnitaryOperator.kron_idft_eye(m, n)
        idft_n = unitary_dft(n).conj().T
        explicit = np.kron(idft_n, np.eye(m))
        assert np.allclose(op.densify(), explicit, atol=1e-12)

    def test_block_matches_kronecker_product(self):
        m, n = 3, 2
        op = UnitaryOperator.block_idft(m, n)
        explicit = np.kron(np.eye(n), unitary_dft(m).conj().T)
        assert np.allclose(op.densify(), explicit, atol=1e-12)

    def test_matmat_and_rmatmat(self, rng):
        for op in self._operators(2, 2):
            a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            u = op.densify()
            assert np.allclose(op.matmat(a), u @ a, atol=1e-12)
            assert np.allclose(op.rmatmat(a), a @ u, atol=1e-12)
