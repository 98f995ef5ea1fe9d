"""Closed-form output SNR and theoretical BER after MMSE equalization.

Two independent routes compute the per-symbol output SNR of the equalized
data: a direct route from the diagonals of the equalized input-output
operator and its covariance, and a spectral route through the Hermitian
eigendecomposition of the channel Gram, which exposes how the channel
eigenvalues and the modulation operator share the residual noise.  The two
agree identically; keeping both makes each a check on the other.

The BER model maps per-symbol SNR through the Gaussian tail function for
square QAM and averages over the grid; Monte-Carlo averaging over channel
realizations gives the ergodic figure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import FrameGrid, PathSet, TdlProfile, tdl_realization
from .linalg import UnitaryOperator, eig_hermitian
from .modem import Scheme, modulation_operator, scheme_time_matrices

__all__ = [
    "SnrGrid",
    "SpectralSummary",
    "q_function",
    "output_snr_direct",
    "output_snr_eigen",
    "scheme_spectra",
    "snr_grid_from_spectra",
    "scheme_snr_grid",
    "theoretical_ber",
    "ErgodicBer",
    "ergodic_ber",
]


@dataclass
class SnrGrid:
    """Per-symbol linear output SNR on the M x N data grid."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def shape(self):
        return self.values.shape


@dataclass
class SpectralSummary:
    """Spectral view of one frame's MMSE equalization.

    ``eigenvalues`` of the channel Gram (descending), the projection
    ``U = V^H Q`` mixing eigen-directions into data symbols, and the
    per-symbol normalized noise power ``J`` at the SNR the summary was
    built for.
    """

    eigenvalues: np.ndarray
    projection: np.ndarray
    noise_power: np.ndarray


def q_function(x):
    """Gaussian tail probability Q(x), via the complementary error function."""
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * erfc(x / np.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def _mmse_matrix(h: np.ndarray, gamma_in: float) -> np.ndarray:
    n = h.shape[0]
    gram = h @ h.conj().T
    gram[np.diag_indices(n)] += 1.0 / gamma_in
    return np.linalg.solve(gram, h).conj().T


def output_snr_direct(h: np.ndarray, v: UnitaryOperator,
                      gamma_in: float) -> np.ndarray:
    """Per-symbol output SNR from the equalized operator diagonals.

    Forms ``A = V^H G H V`` and ``B = V^H G`` with the MMSE matrix G, and
    combines the useful-signal power ``|diag A|^2`` with the total output
    power read off ``A A^H`` and ``B B^H``.  Dense; intended for analysis
    scale.
    """
    if not gamma_in > 0:
        raise ValueError("gamma_in must be positive")
    h = np.asarray(h, dtype=np.complex128)
    g = _mmse_matrix(h, gamma_in)
    vh = v.adjoint()
    a_mat = vh.matmat(g @ h)
    a_mat = v.rmatmat(a_mat)
    b_mat = vh.matmat(g)
    a = np.diagonal(a_mat)
    c = np.sum(np.abs(a_mat) ** 2, axis=1)
    d = np.sum(np.abs(b_mat) ** 2, axis=1)
    signal = np.abs(a) ** 2
    denom = c + d / gamma_in - signal
    # denom is the residual interference-plus-noise power; numerically it
    # can graze zero for a near-perfect symbol
    denom = np.maximum(denom, np.finfo(float).tiny)
    return signal / denom


def output_snr_eigen(h: np.ndarray, v: UnitaryOperator,
                     gamma_in: float) -> tuple[np.ndarray, SpectralSummary]:
    """Per-symbol output SNR through the channel-Gram eigendecomposition.

    With ``H^H H = Q diag(lam) Q^H`` and ``U = V^H Q``, the normalized
    per-symbol noise power is ``J_i = sum_l |U[i, l]|^2 / (gamma lam_l + 1)``
    and the output SNR is ``1 / J_i - 1``.
    """
    if not gamma_in > 0:
        raise ValueError("gamma_in must be positive")
    h = np.asarray(h, dtype=np.complex128)
    lam, q = eig_hermitian(h.conj().T @ h)
    u = v.adjoint().matmat(q)
    weights = 1.0 / (gamma_in * np.maximum(lam, 0.0) + 1.0)
    j = (np.abs(u) ** 2) @ weights
    gamma_out = 1.0 / j - 1.0
    return gamma_out, SpectralSummary(eigenvalues=lam, projection=u,
                                      noise_power=j)


# ---------------------------------------------------------------------------
# per-scheme assembly
# ---------------------------------------------------------------------------

def scheme_spectra(paths: PathSet, grid: FrameGrid, scheme: Scheme,
                   time_matrices: list[np.ndarray] | None = None
                   ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Eigenvalues and |U|^2 per frame, reusable across SNR points.

    The expensive eigendecomposition depends only on the channel, so a
    sweep computes it once per realization and rescales the noise weights
    per SNR point.
    """
    if time_matrices is None:
        time_matrices = scheme_time_matrices(paths, grid, scheme)
    v = modulation_operator(scheme, grid)
    out = []
    for ht in time_matrices:
        lam, q = eig_hermitian(ht.conj().T @ ht)
        u = v.adjoint().matmat(q)
        out.append((np.maximum(lam, 0.0), np.abs(u) ** 2))
    return out


def snr_grid_from_spectra(spectra, grid: FrameGrid, scheme: Scheme,
                          gamma_in: float) -> SnrGrid:
    """Assemble the M x N output-SNR grid from precomputed spectra."""
    cols = []
    for lam, u_sq in spectra:
        j = u_sq @ (1.0 / (gamma_in * lam + 1.0))
        cols.append(1.0 / j - 1.0)
    if scheme is Scheme.OTFS:
        values = cols[0].reshape(grid.M, grid.N, order="F")
    else:
        values = np.stack(cols, axis=1)
    return SnrGrid(values)


def scheme_snr_grid(paths: PathSet, grid: FrameGrid, scheme: Scheme,
                    gamma_in: float) -> SnrGrid:
    """Output-SNR grid of one channel realization for one scheme."""
    spectra = scheme_spectra(paths, grid, scheme)
    return snr_grid_from_spectra(spectra, grid, scheme, gamma_in)


# ---------------------------------------------------------------------------
# BER
# ---------------------------------------------------------------------------

def theoretical_ber(snr, k: int = 1) -> float:
    """Average BER of square 2^(2k)-QAM over a grid of per-symbol SNRs.

    Per symbol: ``(2 (1 - 2^-k) / k) Q(sqrt(3 gamma / (4^k - 1)))``,
    averaged over all grid positions.  For k=1 this is ``Q(sqrt(gamma))``.
    """
    if k < 1:
        raise ValueError("QAM level k must be >= 1")
    values = snr.values if isinstance(snr, SnrGrid) else np.asarray(snr)
    coeff = 2.0 * (1.0 - 2.0 ** (-k)) / k
    arg = np.sqrt(3.0 * np.maximum(values, 0.0) / (4.0 ** k - 1.0))
    return float(np.mean(coeff * q_function(arg)))


@dataclass
class ErgodicBer:
    """Monte-Carlo estimate of the channel-averaged theoretical BER."""

    mean: float
    std_error: float
    n_realizations: int


def ergodic_ber(profile: TdlProfile, grid: FrameGrid, scheme: Scheme,
                gamma_in: float, n_realizations: int,
                rng: np.random.Generator, f_max: float | None = None,
                doppler_mode: str = "continuous", qam_k: int = 1) -> ErgodicBer:
    """Average the theoretical BER over random channel realizations."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    if f_max is None:
        f_max = grid.K_max * grid.f_r
    values = np.empty(n_realizations)
    for i in range(n_realizations):
        paths = tdl_realization(profile, grid, f_max, rng,
                                doppler_mode=doppler_mode)
        values[i] = theoretical_ber(
            scheme_snr_grid(paths, grid, scheme, gamma_in), qam_k)
    std_error = float(values.std(ddof=1) / np.sqrt(n_realizations)) \
        if n_realizations > 1 else 0.0
    return ErgodicBer(mean=float(values.mean()), std_error=std_error,
                      n_realizations=n_realizations)
