"""Shared helpers for the test suite."""

import numpy as np
import pytest

from fastfade.channel import ChannelPath, FrameGrid, PathSet
from fastfade.linalg import CircularBandedMatrix


def make_grid(m=8, n=4, d_r=1e-6, l_cp=3, k_max=2, l_max=3) -> FrameGrid:
    return FrameGrid(M=m, N=n, d_r=d_r, f_r=1.0 / (m * n * d_r),
                     L_cp=l_cp, K_max=k_max, L_max=l_max)


def random_paths(rng, grid, count=3, on_grid=False) -> PathSet:
    """Random path set bounded by the grid's delay/Doppler budget."""
    gains = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) \
        / np.sqrt(2 * count)
    if on_grid:
        delays = rng.integers(0, max(grid.L_max, 1) + 1, count) * grid.d_r
        dopplers = rng.integers(-grid.K_max, grid.K_max + 1, count) * grid.f_r
    else:
        delays = rng.uniform(0.0, max(grid.L_max, 1), count) * grid.d_r
        dopplers = rng.uniform(-grid.K_max, grid.K_max, count) * grid.f_r
    return PathSet(ChannelPath(g, d, nu)
                   for g, d, nu in zip(gains, delays, dopplers))


def random_banded(rng, size, k_lower, k_upper,
                  diag_boost=None) -> CircularBandedMatrix:
    """Random circular-banded matrix, diagonally boosted for safe pivots."""
    mat = CircularBandedMatrix(size, k_lower, k_upper)
    mat.diags[:] = (rng.standard_normal(mat.diags.shape)
                    + 1j * rng.standard_normal(mat.diags.shape))
    if diag_boost is None:
        diag_boost = 3.0 * (k_lower + k_upper + 1)
    mat.diags[k_upper] += diag_boost
    return mat


def dense_hnu_matrix(paths, grid) -> np.ndarray:
    """Full frequency-Doppler channel matrix, no stripe truncation.

    Entry (m, c) holds the sample at frequency c and Doppler offset
    (m - c) mod n; kept here as the test-side assembly oracle.
    """
    from fastfade.channel import freq_doppler_samples
    samples = freq_doppler_samples(paths, grid).dense()
    nn = grid.size
    m = np.arange(nn)[:, None]
    c = np.arange(nn)[None, :]
    return samples[c, (m - c) % nn]


def unitary_dft(n) -> np.ndarray:
    """Explicit unitary DFT matrix (test-side oracle)."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


@pytest.fixture
def rng():
    return np.random.default_rng(2026)
