"""QAM mapping, modulation/demodulation, frame structure."""

import numpy as np
import pytest

from conftest import make_grid, unitary_dft
from fastfade.modem import (DataGrid, Scheme, constellation, demodulate,
                            frame_count, frame_length, long_frame_operator,
                            modulate, modulation_operator, qam_demap, qam_map,
                            split_burst)


class TestQam:
    def test_qpsk_gray_table(self):
        syms = qam_map(np.array([0, 0, 0, 1, 1, 0, 1, 1]), 1)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        assert syms[0] == pytest.approx((1 + 1j) * inv_sqrt2)
        assert syms[1] == pytest.approx((1 - 1j) * inv_sqrt2)
        assert syms[2] == pytest.approx((-1 + 1j) * inv_sqrt2)
        assert syms[3] == pytest.approx((-1 - 1j) * inv_sqrt2)

    def test_all_zero_bits_constant(self):
        syms = qam_map(np.zeros(20, dtype=int), 2)
        assert np.allclose(syms, syms[0])

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_round_trip(self, rng, k):
        bits = rng.integers(0, 2, 600 * k)
        assert np.array_equal(qam_demap(qam_map(bits, k), k), bits)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_unit_average_power(self, k):
        points = constellation(k)
        assert len(points) == 4 ** k
        assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("k", [2, 3])
    def test_gray_adjacency(self, k):
        # adjacent amplitude levels differ in exactly one bit per axis
        levels = 1 << k
        all_bits = np.array([[(i >> b) & 1 for b in range(k - 1, -1, -1)]
                             for i in range(levels)])
        # map each level index through the I axis with Q fixed at zero bits
        amplitude = {}
        for i in range(levels):
            bits = np.concatenate([all_bits[i], np.zeros(k, dtype=int)])
            amplitude[i] = qam_map(bits, k)[0].real
        order = sorted(amplitude, key=lambda i: amplitude[i])
        for a, b in zip(order, order[1:]):
            assert bin(a ^ b).count("1") == 1

    def test_hard_decision_clipping(self):
        # far outside the constellation still demaps to the nearest corner
        bits = qam_demap(np.array([100.0 + 100.0j]), 1)
        assert np.array_equal(bits, [0, 0])

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            qam_map(np.array([0, 1, 0]), 1)
        with pytest.raises(ValueError):
            qam_map(np.array([0, 2]), 1)
        with pytest.raises(ValueError):
            qam_map(np.array([0, 0]), 0)


class TestDataGrid:
    def test_vec_convention(self):
        x = DataGrid(np.arange(6).reshape(2, 3, order="F"))
        assert np.array_equal(x.vec, np.arange(6))
        assert x.X[1, 2] == x.vec[2 * 2 + 1]

    def test_from_vec_round_trip(self, rng):
        vec = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        grid = DataGrid.from_vec(vec, 3, 4)
        assert np.array_equal(grid.vec, vec)


class TestModulate:
    def test_scfde_payload_is_data(self, rng):
        grid = make_grid(4, 3)
        data = DataGrid(rng.standard_normal((4, 3)) + 0j)
        tx = modulate(Scheme.SCFDE, data, grid)
        for n, frame in enumerate(tx.frames):
            assert np.allclose(frame, data.X[:, n])

    def test_ofdm_single_subcarrier_tone(self):
        grid = make_grid(8, 1, l_cp=2, l_max=2)
        x = np.zeros((8, 1), dtype=complex)
        x[3, 0] = 1.0
        tx = modulate(Scheme.OFDM, DataGrid(x), grid)
        kk = np.arange(8)
        tone = np.exp(2j * np.pi * 3 * kk / 8) / np.sqrt(8)
        assert np.allclose(tx.frames[0], tone, atol=1e-12)

    def test_otfs_small_kronecker_oracle(self):
        grid = make_grid(2, 2, l_cp=1, l_max=1)
        operator = np.kron(unitary_dft(2).conj().T, np.eye(2))
        for basis in range(4):
            vec = np.zeros(4, dtype=complex)
            vec[basis] = 1.0
            tx = modulate(Scheme.OTFS, DataGrid.from_vec(vec, 2, 2), grid)
            assert np.allclose(tx.frames[0], operator @ vec, atol=1e-12)

    def test_frame_structure_and_cp(self, rng):
        grid = make_grid(4, 3, l_cp=2, l_max=2)
        data = DataGrid(rng.standard_normal((4, 3)) + 0j)
        otfs = modulate(Scheme.OTFS, data, grid)
        assert otfs.cp_count == 1
        assert len(otfs.burst) == 12 + 2
        assert np.allclose(otfs.burst[:2], otfs.frames[0][-2:])
        ofdm = modulate(Scheme.OFDM, data, grid)
        assert ofdm.cp_count == 3
        assert len(ofdm.burst) == 3 * (4 + 2)
        for n in range(3):
            frame = ofdm.burst[n * 6 + 2:(n + 1) * 6]
            assert np.allclose(ofdm.burst[n * 6:n * 6 + 2], frame[-2:])

    def test_parseval(self, rng):
        grid = make_grid(8, 4)
        data = DataGrid(rng.standard_normal((8, 4))
                        + 1j * rng.standard_normal((8, 4)))
        for scheme in Scheme:
            tx = modulate(scheme, data, grid)
            payload_energy = sum(np.sum(np.abs(f) ** 2) for f in tx.frames)
            assert payload_energy == pytest.approx(
                np.sum(np.abs(data.X) ** 2), rel=1e-12)

    def test_split_burst_inverts_framing(self, rng):
        grid = make_grid(4, 3, l_cp=2, l_max=2)
        data = DataGrid(rng.standard_normal((4, 3)) + 0j)
        for scheme in Scheme:
            tx = modulate(scheme, data, grid)
            frames = split_burst(scheme, tx.burst, grid)
            assert len(frames) == frame_count(scheme, grid)
            for got, sent in zip(frames, tx.frames):
                assert np.allclose(got, sent)


class TestDemodulate:
    def test_round_trip_all_schemes(self, rng):
        grid = make_grid(4, 2, l_cp=1, l_max=1)
        data = DataGrid(rng.standard_normal((4, 2))
                        + 1j * rng.standard_normal((4, 2)))
        for scheme in Scheme:
            tx = modulate(scheme, data, grid)
            back = demodulate(scheme, tx.frames, grid)
            assert np.allclose(back.X, data.X, atol=1e-12)

    def test_ofdm_matches_dft_oracle(self, rng):
        grid = make_grid(8, 2, l_cp=2, l_max=2)
        frames = [rng.standard_normal(8) + 1j * rng.standard_normal(8)
                  for _ in range(2)]
        back = demodulate(Scheme.OFDM, frames, grid)
        f8 = unitary_dft(8)
        for n in range(2):
            assert np.allclose(back.X[:, n], f8 @ frames[n], atol=1e-12)

    def test_frame_count_mismatch(self, rng):
        grid = make_grid(4, 2)
        with pytest.raises(ValueError):
            demodulate(Scheme.OFDM, [np.zeros(4)], grid)


class TestOperators:
    def test_scfde_identity(self, rng):
        grid = make_grid(4, 2)
        op = modulation_operator(Scheme.SCFDE, grid)
        x = rng.standard_normal(4) + 0j
        assert np.allclose(op.apply(x), x)

    def test_ofdm_two_point_idft(self):
        grid = make_grid(2, 2, l_cp=1, l_max=1)
        op = modulation_operator(Scheme.OFDM, grid)
        expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.allclose(op.densify(), expected, atol=1e-12)

    def test_otfs_kronecker_densified(self):
        grid = make_grid(2, 2, l_cp=1, l_max=1)
        op = modulation_operator(Scheme.OTFS, grid)
        oracle = np.kron(unitary_dft(2).conj().T, np.eye(2))
        assert np.allclose(op.densify(), oracle, atol=1e-12)

    def test_unitarity_up_to_64(self, rng):
        for m, n in [(4, 4), (8, 8), (16, 4)]:
            grid = make_grid(m, n)
            for scheme in Scheme:
                for op in (modulation_operator(scheme, grid),
                           long_frame_operator(scheme, grid)):
                    u = op.densify()
                    assert np.allclose(u @ u.conj().T, np.eye(op.size),
                                       atol=1e-12)

    def test_frame_geometry(self):
        grid = make_grid(4, 3)
        assert frame_count(Scheme.OTFS, grid) == 1
        assert frame_count(Scheme.OFDM, grid) == 3
        assert frame_length(Scheme.OTFS, grid) == 12
        assert frame_length(Scheme.SCFDE, grid) == 4

    def test_scheme_parse(self):
        assert Scheme.parse(" OTFS ") is Scheme.OTFS
        with pytest.raises(ValueError):
            Scheme.parse("qam")
