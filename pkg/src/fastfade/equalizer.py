"""MMSE equalization in the time and frequency domains.

The frequency-domain path is the fast one: the regularised Gram of the
circular-banded frequency-Doppler matrix is solved by banded elimination
and the result multiplied by the matrix adjoint, so the full equalization
matrix is never materialised.  The dense time-domain path is retained as a
reference (both produce the same estimates up to a DFT) and as a fallback
for channels whose Doppler leakage defeats the stripe truncation.  A
per-bin scalar equalizer is included as the conventional baseline; it
ignores inter-carrier Doppler coupling entirely.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .channel import FrameGrid, PathSet, build_Hnu, build_Ht, \
    build_short_frame, delay_time_samples, freq_doppler_samples, \
    short_frame_hnu_dense, short_frame_ht
from .linalg import CircularBandedMatrix, OpCounter, OutOfStripeError, \
    band_adjoint_apply, band_gram, band_solve
from .modem import DataGrid, Scheme, demodulate, frame_count, frame_length

__all__ = [
    "EqualizerConfig",
    "EqualizationResult",
    "ChannelOperators",
    "mmse_time",
    "mmse_freq",
    "mmse_freq_dense",
    "one_tap_fde",
    "equalize_frame",
    "build_channel_operators",
]


@dataclass
class EqualizerConfig:
    """Equalizer settings for one run.

    ``gamma_in`` is the linear input SNR (unit-power constellations make
    it the inverse noise variance).  ``domain`` selects the time-domain
    reference path or the frequency-domain fast path; ``banded`` allows
    the circular-banded solver when the channel matrices support it.
    """

    gamma_in: float
    domain: str = "frequency"
    banded: bool = True
    stripe_k: int | None = None
    one_tap: bool = False
    one_tap_tracking: bool = False
    compute_mse: bool = False
    mse_size_limit: int = 4096

    def __post_init__(self):
        if not self.gamma_in > 0:
            raise ValueError("gamma_in must be positive")
        if self.domain not in ("frequency", "time"):
            raise ValueError("domain must be 'frequency' or 'time'")


@dataclass
class EqualizationResult:
    """Equalized estimates plus bookkeeping."""

    y: DataGrid
    s_hat: list[np.ndarray]
    mse_per_symbol: np.ndarray | None
    wall_time_s: float
    op_count: int
    counter: OpCounter = field(repr=False, default_factory=OpCounter)


def mmse_time(ht: np.ndarray, r: np.ndarray, gamma_in: float) -> np.ndarray:
    """Dense time-domain MMSE estimate ``H^H (H H^H + I/gamma)^{-1} r``.

    Reference path, O(n^3); the frequency-domain solver reproduces it
    through the DFT at a fraction of the cost.
    """
    if not gamma_in > 0:
        raise ValueError("gamma_in must be positive")
    ht = np.asarray(ht, dtype=np.complex128)
    n = ht.shape[0]
    if ht.shape != (n, n) or np.asarray(r).shape != (n,):
        raise ValueError("matrix/vector shapes do not match")
    gram = ht @ ht.conj().T
    gram[np.diag_indices(n)] += 1.0 / gamma_in
    z = np.linalg.solve(gram, np.asarray(r, dtype=np.complex128))
    return ht.conj().T @ z


def mmse_freq(hnu: CircularBandedMatrix, big_r: np.ndarray, gamma_in: float,
              counter: OpCounter | None = None) -> np.ndarray:
    """Banded frequency-domain MMSE estimate.

    Realised as Gram-solve-then-adjoint-apply so the equalization matrix
    is never formed; the multiply/divide count stays O((1+2(kl+ku))^2 n).
    """
    gram = band_gram(hnu, gamma_in, counter)
    z = band_solve(gram, big_r, counter)
    return band_adjoint_apply(hnu, z, counter)


def mmse_freq_dense(hnu: np.ndarray, big_r: np.ndarray,
                    gamma_in: float) -> np.ndarray:
    """Dense frequency-domain MMSE (fallback for unresolved stripes)."""
    return mmse_time(hnu, big_r, gamma_in)


def one_tap_fde(h_diag: np.ndarray, big_r: np.ndarray,
                gamma_in: float) -> np.ndarray:
    """Per-bin scalar MMSE: ``conj(h) R / (|h|^2 + 1/gamma)``.

    The conventional baseline; exact only for time-invariant channels
    where the frequency-domain matrix is diagonal.  The caller supplies
    whichever per-bin response its acquisition model produces (see
    :class:`EqualizerConfig.one_tap_tracking`).
    """
    if not gamma_in > 0:
        raise ValueError("gamma_in must be positive")
    h_diag = np.asarray(h_diag, dtype=np.complex128)
    big_r = np.asarray(big_r, dtype=np.complex128)
    return np.conj(h_diag) * big_r / (np.abs(h_diag) ** 2 + 1.0 / gamma_in)


# ---------------------------------------------------------------------------
# per-scheme channel operators
# ---------------------------------------------------------------------------

@dataclass
class ChannelOperators:
    """Channel matrices at one scheme's frame granularity.

    ``freq`` holds one entry per frame: a :class:`CircularBandedMatrix`
    when the stripe resolved the channel, otherwise a dense ndarray.
    ``time`` holds the dense delay-time matrices when built.
    """

    scheme: Scheme
    grid: FrameGrid
    freq: list | None = None
    time: list | None = None
    discarded_energy: float = 0.0

    def frame_matrix(self, index: int, domain: str):
        source = self.freq if domain == "frequency" else self.time
        if source is None:
            raise ValueError(f"no {domain}-domain matrices were built")
        return source[index]

    def freq_diagonal(self, index: int) -> np.ndarray:
        """Main diagonal of the frequency-domain matrix (one-tap baseline)."""
        h = self.freq[index]
        if isinstance(h, CircularBandedMatrix):
            return h.diagonal(0).copy()
        return np.diag(h).copy()


def _dense_hnu_full(paths: PathSet, grid: FrameGrid) -> tuple[np.ndarray, np.ndarray]:
    """Dense full-frame frequency-Doppler matrix and the delay-time matrix."""
    ht = build_Ht(delay_time_samples(paths, grid))
    hnu = np.fft.fft(np.fft.ifft(ht, axis=1, norm="ortho"),
                     axis=0, norm="ortho")
    return hnu, ht


def build_channel_operators(paths: PathSet, grid: FrameGrid, scheme: Scheme,
                            domain: str = "frequency", banded: bool = True,
                            stripe_k: int | None = None,
                            energy_tol: float = 1e-3,
                            with_time: bool = False) -> ChannelOperators:
    """Build the channel matrices one realization needs for equalization.

    Frequency-domain matrices try the circular-banded form first and fall
    back to dense when the stripe check fails (off-grid Doppler leakage)
    or when ``banded`` is off.  Time-domain matrices are built on request
    or when the time domain is selected.
    """
    ops = ChannelOperators(scheme=scheme, grid=grid)
    if domain == "frequency":
        freq = []
        worst = 0.0
        if scheme is Scheme.OTFS:
            hnu = None
            if banded:
                stripe = stripe_k if stripe_k is not None else grid.K_max + 1
                try:
                    result = build_Hnu(freq_doppler_samples(paths, grid),
                                       stripe, energy_tol)
                    hnu = result.matrix
                    worst = result.discarded_energy_fraction
                except OutOfStripeError:
                    hnu = None
            if hnu is None:
                hnu, ht = _dense_hnu_full(paths, grid)
                ops.time = [ht]
            freq.append(hnu)
        else:
            for n in range(grid.N):
                hnu = None
                if banded:
                    try:
                        mats = build_short_frame(paths, grid, n, stripe_k,
                                                 energy_tol)
                        hnu = mats.hnu
                        worst = max(worst, mats.discarded_energy_fraction)
                    except OutOfStripeError:
                        hnu = None
                if hnu is None:
                    hnu = short_frame_hnu_dense(paths, grid, n)
                freq.append(hnu)
        ops.freq = freq
        ops.discarded_energy = worst
    if (with_time or domain == "time") and ops.time is None:
        if scheme is Scheme.OTFS:
            ops.time = [build_Ht(delay_time_samples(paths, grid))]
        else:
            ops.time = [short_frame_ht(paths, grid, n) for n in range(grid.N)]
    return ops


def equalize_frame(scheme: Scheme, operators: ChannelOperators,
                   received: list[np.ndarray],
                   config: EqualizerConfig) -> EqualizationResult:
    """Equalize received payload frames and demodulate to a data grid.

    Frequency-domain path per frame: DFT the frame, MMSE in the frequency
    domain (banded when available), inverse DFT, then apply V^H via
    :func:`fastfade.modem.demodulate`.  The one-tap option replaces the
    MMSE step with the per-bin scalar baseline.
    """
    expected = frame_count(scheme, operators.grid)
    if len(received) != expected:
        raise ValueError(f"{scheme.value} expects {expected} frame(s), "
                         f"got {len(received)}")
    flen = frame_length(scheme, operators.grid)
    counter = OpCounter()
    t0 = time.perf_counter()
    s_hat = []
    for idx, r in enumerate(received):
        r = np.asarray(r, dtype=np.complex128)
        if r.shape != (flen,):
            raise ValueError(f"frame {idx} has length {r.shape}, expected {flen}")
        if config.domain == "time":
            s_hat.append(mmse_time(operators.frame_matrix(idx, "time"), r,
                                   config.gamma_in))
            continue
        big_r = np.fft.fft(r, norm="ortho")
        if config.one_tap:
            # the conventional receiver acquires the per-bin response once
            # per long frame and holds it; one_tap_tracking grants a fresh
            # per-short-frame estimate instead
            diag_index = idx if config.one_tap_tracking else 0
            s_freq = one_tap_fde(operators.freq_diagonal(diag_index), big_r,
                                 config.gamma_in)
        else:
            h = operators.frame_matrix(idx, "frequency")
            if isinstance(h, CircularBandedMatrix):
                s_freq = mmse_freq(h, big_r, config.gamma_in, counter)
            else:
                s_freq = mmse_freq_dense(h, big_r, config.gamma_in)
        s_hat.append(np.fft.ifft(s_freq, norm="ortho"))
    y = demodulate(scheme, s_hat, operators.grid)
    mse = _analytic_mse(scheme, operators, config) if config.compute_mse else None
    wall = time.perf_counter() - t0
    return EqualizationResult(y=y, s_hat=s_hat, mse_per_symbol=mse,
                              wall_time_s=wall, op_count=counter.total,
                              counter=counter)


def _analytic_mse(scheme: Scheme, operators: ChannelOperators,
                  config: EqualizerConfig) -> np.ndarray | None:
    """Exact per-symbol MMSE noise power J on the (M, N) grid.

    Dense eigendecomposition, so only computed when the time-domain
    matrices are available and the frame is below the size gate.
    """
    from .analysis import output_snr_eigen
    from .modem import modulation_operator

    grid = operators.grid
    if grid.size > config.mse_size_limit or operators.time is None:
        return None
    v = modulation_operator(scheme, grid)
    cols = [1.0 / (1.0 + output_snr_eigen(ht, v, config.gamma_in)[0])
            for ht in operators.time]
    if scheme is Scheme.OTFS:
        return cols[0].reshape(grid.M, grid.N, order="F")
    return np.stack(cols, axis=1)
