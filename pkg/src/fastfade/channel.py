"""Sparse delay-Doppler channel model and its discrete representations.

A fast fading channel is a sparse set of paths, each with a complex gain,
a delay and a Doppler shift.  Discretisation on an (M, N) frame grid uses
the band-limited sampling of the closed-form time-frequency transfer
function, so the delay-time and frequency-Doppler sample sets are exact
DFT partners of each other: the frequency-Doppler channel matrix equals
the DFT similarity transform of the delay-time channel matrix to machine
precision for arbitrary (also off-grid) delays and Dopplers.  On-grid
paths reduce to single delay taps and single Doppler lines; off-grid paths
spread through a periodic Dirichlet kernel, whose out-of-stripe energy is
measured rather than silently dropped.

Tapped-delay-line profiles (delay/power tables with an optional Rician
first tap) ship as JSON data files and drive the random realizations used
by the Monte-Carlo harness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .linalg import CircularBandedMatrix, OutOfStripeError

__all__ = [
    "ChannelPath",
    "PathSet",
    "FrameGrid",
    "DelayTimeChannel",
    "FreqDopplerChannel",
    "TdlProfile",
    "CpTooShortError",
    "OffGridDelayError",
    "load_profile",
    "list_profiles",
    "tf_transfer",
    "delay_time_samples",
    "freq_doppler_samples",
    "build_Ht",
    "build_Hnu",
    "BandedHnu",
    "apply_delay_time",
    "short_frame_delay_time",
    "build_short_frame",
    "ShortFrameMatrices",
    "short_frame_hnu_window",
    "propagate_waveform",
    "tdl_realization",
    "perturb_channel",
]

class CpTooShortError(ValueError):
    """Cyclic prefix shorter than the channel delay spread."""


class OffGridDelayError(ValueError):
    """Sample-domain propagation needs delays on the sampling grid."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelPath:
    """One propagation path: complex gain, delay in seconds, Doppler in Hz."""

    gain: complex
    delay: float
    doppler: float

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("path delay must be nonnegative")


class PathSet:
    """Ordered collection of channel paths with array views of the fields."""

    def __init__(self, paths):
        paths = tuple(paths)
        if not paths:
            raise ValueError("a channel needs at least one path")
        self.paths = paths
        self.gains = np.array([p.gain for p in paths], dtype=np.complex128)
        self.delays = np.array([p.delay for p in paths], dtype=np.float64)
        self.dopplers = np.array([p.doppler for p in paths], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.gains) ** 2))

    def max_delay(self) -> float:
        return float(np.max(self.delays))

    def __repr__(self) -> str:  # pragma: no cover
        return f"PathSet(P={len(self)})"


@dataclass(frozen=True)
class FrameGrid:
    """Discretisation of one long frame: M x N symbols on a sampling grid.

    Attributes
    ----------
    M : int
        Samples (subcarriers) per short frame.
    N : int
        Short frames per long frame.
    d_r : float
        Sampling period / delay resolution in seconds.
    f_r : float
        Doppler resolution in Hz; satisfies ``f_r * M * N * d_r == 1``.
    L_cp : int
        Cyclic prefix length in samples.
    K_max : int
        Resolvable Doppler bins per side, ``ceil(f_max / f_r)``.
    L_max : int
        Resolvable delay taps, ``ceil(d_max / d_r)``.
    """

    M: int
    N: int
    d_r: float
    f_r: float
    L_cp: int
    K_max: int
    L_max: int

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive")
        if self.d_r <= 0 or self.f_r <= 0:
            raise ValueError("resolutions must be positive")
        if abs(self.f_r * self.M * self.N * self.d_r - 1.0) > 1e-12:
            raise ValueError("f_r * M * N * d_r must equal 1")
        if self.K_max < 0:
            raise ValueError("K_max must be nonnegative")
        if self.L_cp < self.L_max:
            raise ValueError(f"L_cp={self.L_cp} shorter than L_max={self.L_max}")

    @classmethod
    def create(cls, M: int, N: int, d_r: float, L_cp: int | None = None,
               f_max: float = 0.0, d_max: float = 0.0) -> "FrameGrid":
        """Build a grid from physical maxima, deriving f_r, K_max and L_max."""
        f_r = 1.0 / (M * N * d_r)
        k_max = int(math.ceil(f_max / f_r - 1e-12)) if f_max > 0 else 0
        l_max = int(math.ceil(d_max / d_r - 1e-12)) if d_max > 0 else 0
        if L_cp is None:
            L_cp = l_max
        return cls(M=M, N=N, d_r=d_r, f_r=f_r, L_cp=L_cp,
                   K_max=k_max, L_max=l_max)

    @property
    def size(self) -> int:
        """Long-frame sample count M * N."""
        return self.M * self.N


@dataclass
class DelayTimeChannel:
    """Dense delay-time samples h[i, j] (delay index i, time index j).

    ``time_offset`` is the absolute sample index of time index ``j = 0``;
    short frames of a longer sequence use nonzero offsets.
    """

    samples: np.ndarray
    d_r: float
    time_offset: int = 0

    @property
    def size(self) -> int:
        return self.samples.shape[0]


class FreqDopplerChannel:
    """Frequency-Doppler samples H[i, j], evaluated lazily per Doppler line.

    Frequency index ``i`` runs over 0..size-1; the Doppler index ``j`` is
    signed and mapped circularly (negative j <-> size - |j|).  For on-grid
    Doppler shifts every line beyond ``K_max`` is identically zero; for
    off-grid shifts the Dirichlet leakage makes the far lines small but
    nonzero, and :meth:`total_energy` supports measuring how much a stripe
    truncation discards.
    """

    def __init__(self, paths: PathSet, size: int, d_r: float):
        self.paths = paths
        self.size = size
        self.d_r = d_r
        self.f_r = 1.0 / (size * d_r)

    def line(self, j: int) -> np.ndarray:
        """Samples H[:, j] for one signed Doppler index."""
        n = self.size
        ii = np.arange(n)
        qi = _signed_alias(ii, n)
        out = np.zeros(n, dtype=np.complex128)
        for gain, delay, doppler in zip(self.paths.gains, self.paths.delays,
                                        self.paths.dopplers):
            freq = np.exp(-2j * np.pi * qi * self.f_r * delay)
            out += gain * _dirichlet_onesided(doppler / self.f_r - j, n) * freq
        return out

    def dense(self) -> np.ndarray:
        """Full (size, size) sample array; column j holds Doppler index j."""
        n = self.size
        ii = np.arange(n)
        jj = np.arange(n)
        qi = _signed_alias(ii, n)
        out = np.zeros((n, n), dtype=np.complex128)
        for gain, delay, doppler in zip(self.paths.gains, self.paths.delays,
                                        self.paths.dopplers):
            freq = np.exp(-2j * np.pi * qi * self.f_r * delay)
            dopp = _dirichlet_onesided(doppler / self.f_r - jj, n)
            out += gain * np.outer(freq, dopp)
        return out

    def total_energy(self) -> float:
        """Sum of |H[i, j]|^2 over all lines, via the closed path-pair form."""
        n = self.size
        total = 0.0 + 0.0j
        g = self.paths.gains
        tau = self.paths.delays / self.d_r
        nu = self.paths.dopplers / self.f_r
        for p in range(len(g)):
            for q in range(len(g)):
                total += (g[p] * np.conj(g[q]) * n
                          * _dirichlet_onesided(nu[p] - nu[q], n)
                          * _dirichlet_centered(tau[q] - tau[p], n))
        return float(np.real(total))


@dataclass(frozen=True)
class TdlProfile:
    """Tapped-delay-line power-delay profile.

    ``delays`` are absolute tap delays in seconds (the file's normalized
    delays scaled so the last tap sits at ``d_max_s``); ``powers`` are
    linear tap powers normalized to unit total.  For line-of-sight
    profiles the first tap is Rician with the given K-factor.
    """

    name: str
    los: bool
    rician_k_db: float | None
    delays: np.ndarray
    powers: np.ndarray
    d_max: float

    @property
    def tap_count(self) -> int:
        return len(self.delays)


def _profile_dirs(profile_dir: str | Path | None):
    dirs = []
    if profile_dir is not None:
        dirs.append(Path(profile_dir))
    dirs.append(resources.files("fastfade").joinpath("profiles"))
    return dirs


def list_profiles(profile_dir: str | Path | None = None) -> list[str]:
    names = set()
    for d in _profile_dirs(profile_dir):
        try:
            entries = list(d.iterdir())
        except (FileNotFoundError, OSError):
            continue
        for f in entries:
            if f.name.endswith(".json"):
                names.add(f.name[:-5])
    return sorted(names)


def load_profile(name: str, profile_dir: str | Path | None = None) -> TdlProfile:
    """Load a TDL profile by name from a directory or the packaged data."""
    for d in _profile_dirs(profile_dir):
        candidate = d.joinpath(f"{name}.json")
        try:
            raw = candidate.read_text()
        except (FileNotFoundError, OSError):
            continue
        return _parse_profile(json.loads(raw))
    raise FileNotFoundError(f"no TDL profile named {name!r}")


def _parse_profile(data: dict) -> TdlProfile:
    required = {"name", "los", "taps", "d_max_s"}
    missing = required - data.keys()
    if missing:
        raise ValueError(f"profile missing fields: {sorted(missing)}")
    taps = sorted(data["taps"], key=lambda t: t["delay_norm"])
    delay_norm = np.array([t["delay_norm"] for t in taps], dtype=float)
    power_db = np.array([t["power_db"] for t in taps], dtype=float)
    if delay_norm[0] < 0:
        raise ValueError("tap delays must be nonnegative")
    d_max = float(data["d_max_s"])
    scale = d_max / delay_norm[-1] if delay_norm[-1] > 0 else 0.0
    powers = 10.0 ** (power_db / 10.0)
    powers /= powers.sum()
    return TdlProfile(
        name=data["name"],
        los=bool(data["los"]),
        rician_k_db=data.get("rician_k_db"),
        delays=delay_norm * scale,
        powers=powers,
        d_max=d_max,
    )


# ---------------------------------------------------------------------------
# periodic Dirichlet kernels
# ---------------------------------------------------------------------------

def _signed_alias(i, n: int):
    """Map index 0..n-1 to the signed range [-(n//2) .. n - n//2 - 1]."""
    i = np.asarray(i)
    return np.where(i >= n - n // 2, i - n, i)


def _multiple_of_period(x, n: int):
    """True where x is a multiple of n to 1e-12 (absolute, in index units)."""
    frac = np.mod(np.asarray(x, dtype=np.float64), n)
    return (frac < 1e-12) | (n - frac < 1e-12)


def _dirichlet_centered(x, n: int):
    """(1/n) sum over the signed frequency range of exp(j 2 pi q x / n).

    Integer x collapses to a Kronecker delta (mod n); fractional x gives
    the periodic interpolation kernel of band-limited sampling.
    """
    x = np.asarray(x, dtype=np.float64)
    q0 = -(n // 2)
    on_grid = _multiple_of_period(x, n)
    safe = np.where(on_grid, 1.0, x)
    z = np.exp(2j * np.pi * safe / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (np.exp(2j * np.pi * q0 * safe / n)
               * (np.exp(2j * np.pi * safe) - 1.0) / (z - 1.0) / n)
    return np.where(on_grid, 1.0 + 0.0j, val)


def _dirichlet_onesided(x, n: int):
    """(1/n) sum_{m=0}^{n-1} exp(j 2 pi m x / n)."""
    x = np.asarray(x, dtype=np.float64)
    on_grid = _multiple_of_period(x, n)
    safe = np.where(on_grid, 1.0, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = ((np.exp(2j * np.pi * safe) - 1.0)
               / (np.exp(2j * np.pi * safe / n) - 1.0) / n)
    return np.where(on_grid, 1.0 + 0.0j, val)


# ---------------------------------------------------------------------------
# continuous transfer function and discrete sampling
# ---------------------------------------------------------------------------

def tf_transfer(paths: PathSet, f, t):
    """Time-frequency transfer function H(f, t) of the sparse path channel.

    Closed form: ``sum_p h_p exp(-j 2 pi f tau_p) exp(j 2 pi nu_p t)``.
    ``f`` and ``t`` broadcast.
    """
    f = np.asarray(f, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros(np.broadcast(f, t).shape, dtype=np.complex128)
    for gain, delay, doppler in zip(paths.gains, paths.delays, paths.dopplers):
        out += gain * np.exp(-2j * np.pi * f * delay) * np.exp(
            2j * np.pi * doppler * t)
    return out if out.shape else complex(out)


def delay_time_samples(paths: PathSet, grid: FrameGrid) -> DelayTimeChannel:
    """Discrete delay-time samples h[i, j] over the full MN frame.

    Band-limited discretisation of the transfer function: for a path with
    on-grid delay ``l * d_r`` the delay axis is a Kronecker delta at l,
    while off-grid delays spread through the periodic Dirichlet kernel.
    The time axis carries the exact per-sample Doppler phase.
    """
    n = grid.size
    return DelayTimeChannel(
        samples=_delay_time_block(paths, n, grid.d_r, n, 0),
        d_r=grid.d_r, time_offset=0)


def _delay_time_block(paths: PathSet, size: int, d_r: float,
                      n_time: int, time_offset: int) -> np.ndarray:
    ii = np.arange(size)
    jj = np.arange(n_time) + time_offset
    out = np.zeros((size, n_time), dtype=np.complex128)
    for gain, delay, doppler in zip(paths.gains, paths.delays, paths.dopplers):
        delay_kernel = _dirichlet_centered(ii - delay / d_r, size)
        time_phase = np.exp(2j * np.pi * doppler * jj * d_r)
        out += gain * np.outer(delay_kernel, time_phase)
    return out


def freq_doppler_samples(paths: PathSet, grid: FrameGrid) -> FreqDopplerChannel:
    """Frequency-Doppler samples of the full frame (lazy per-line view).

    Defined as the DFT of the delay-time samples along the time axis, so
    the frequency-Doppler channel matrix built from these samples equals
    the DFT similarity transform of the delay-time channel matrix exactly.
    """
    return FreqDopplerChannel(paths, grid.size, grid.d_r)


# ---------------------------------------------------------------------------
# channel matrices
# ---------------------------------------------------------------------------

def build_Ht(ch: DelayTimeChannel) -> np.ndarray:
    """Delay-time channel matrix: entry (m, k) = h[(m - k) mod n, m].

    Row m of ``Ht @ s`` evaluates the circular time-varying convolution of
    the transmit samples; for a time-invariant channel the matrix is
    circulant in the impulse response.
    """
    n = ch.size
    m = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    return ch.samples[(m - k) % n, m]


@dataclass
class BandedHnu:
    """Stripe-truncated frequency-Doppler matrix plus the truncation report."""

    matrix: CircularBandedMatrix
    discarded_energy_fraction: float


def build_Hnu(ch: FreqDopplerChannel, stripe_k: int,
              energy_tol: float = 1e-3) -> BandedHnu:
    """Frequency-Doppler channel matrix restricted to a circular stripe.

    Doppler line ``j`` (signed) becomes the circular diagonal with
    row-minus-column offset ``j``; the stripe keeps ``|j| <= stripe_k``
    (width ``2 stripe_k + 1``).  The energy of all discarded lines is
    measured exactly; an out-of-stripe fraction above ``energy_tol``
    raises :class:`OutOfStripeError` (the stripe does not resolve the
    channel's Doppler content).
    """
    n = ch.size
    if stripe_k < 0 or 2 * stripe_k + 1 > n:
        raise ValueError(f"stripe_k={stripe_k} invalid for order {n}")
    mat = CircularBandedMatrix(n, stripe_k, stripe_k)
    kept = 0.0
    for j in range(-stripe_k, stripe_k + 1):
        line = ch.line(j)
        kept += float(np.sum(np.abs(line) ** 2))
        # entry (m, c) = H[c, (m - c) mod n]: diagonal j, row-indexed
        mat.diags[j + stripe_k] = np.roll(line, j)
    total = ch.total_energy()
    discarded = max(0.0, 1.0 - kept / total) if total > 0 else 0.0
    if discarded > energy_tol:
        raise OutOfStripeError(
            f"stripe_k={stripe_k} discards {discarded:.3e} of the channel "
            f"energy (tolerance {energy_tol:.1e}); Doppler content is not "
            f"resolved by the declared stripe")
    return BandedHnu(matrix=mat, discarded_energy_fraction=discarded)


def apply_delay_time(paths: PathSet, grid: FrameGrid, s: np.ndarray,
                     size: int | None = None,
                     time_offset: int = 0) -> np.ndarray:
    """Matrix-free product of the delay-time channel matrix with a frame.

    Equivalent to ``build_Ht(...) @ s`` but O(P n log n): each path is a
    circular fractional delay (FFT phase ramp over the signed frequency
    grid) followed by the per-sample Doppler phase.
    """
    s = np.asarray(s, dtype=np.complex128)
    n = size if size is not None else grid.size
    if s.shape != (n,):
        raise ValueError(f"expected frame of length {n}")
    spec = np.fft.fft(s)
    q = _signed_alias(np.arange(n), n)
    jj = np.arange(n) + time_offset
    out = np.zeros(n, dtype=np.complex128)
    for gain, delay, doppler in zip(paths.gains, paths.delays, paths.dopplers):
        ramp = np.exp(-2j * np.pi * q * (delay / grid.d_r) / n)
        delayed = np.fft.ifft(spec * ramp)
        out += gain * np.exp(2j * np.pi * doppler * jj * grid.d_r) * delayed
    return out


# ---------------------------------------------------------------------------
# short frames
# ---------------------------------------------------------------------------

def _short_frame_offset(grid: FrameGrid, frame_index: int) -> int:
    return frame_index * (grid.M + grid.L_cp)


def short_frame_delay_time(paths: PathSet, grid: FrameGrid,
                           frame_index: int) -> DelayTimeChannel:
    """Delay-time samples of one M-sample short frame.

    The time axis is shifted by ``frame_index * (M + L_cp)`` samples (the
    short frames are consecutive, each preceded by its own cyclic prefix,
    with the first frame's payload at time zero).
    """
    if not 0 <= frame_index < grid.N:
        raise ValueError(f"frame index {frame_index} outside 0..{grid.N - 1}")
    off = _short_frame_offset(grid, frame_index)
    return DelayTimeChannel(
        samples=_delay_time_block(paths, grid.M, grid.d_r, grid.M, off),
        d_r=grid.d_r, time_offset=off)


@dataclass
class ShortFrameMatrices:
    """Channel matrices of one short frame."""

    ht: np.ndarray
    hnu: CircularBandedMatrix
    discarded_energy_fraction: float


def default_short_stripe(grid: FrameGrid) -> int:
    """Default Doppler stripe for short frames: mainlobe plus one guard bin.

    A Doppler of at most K_max long-frame bins is K_max / N short-frame
    bins; the window spread adds about one bin either side.
    """
    return min(int(math.ceil(grid.K_max / grid.N)) + 1, (grid.M - 1) // 2)


def build_short_frame(paths: PathSet, grid: FrameGrid, frame_index: int,
                      stripe_k: int | None = None,
                      energy_tol: float = 1e-3) -> ShortFrameMatrices:
    """Delay-time and banded frequency-Doppler matrices of a short frame.

    The frequency-Doppler matrix is the DFT similarity transform of the
    delay-time matrix, stripe-truncated like :func:`build_Hnu`.  Note that
    a short frame windows the channel in time, so even on-grid long-frame
    Doppler spreads over short-frame Doppler bins; tight stripes often
    fail the energy check and the caller is expected to fall back to the
    dense matrix.
    """
    ht = build_Ht(short_frame_delay_time(paths, grid, frame_index))
    hnu_dense = np.fft.fft(np.fft.ifft(ht, axis=1, norm="ortho"),
                           axis=0, norm="ortho")
    if stripe_k is None:
        stripe_k = default_short_stripe(grid)
    total = float(np.sum(np.abs(hnu_dense) ** 2))
    mat = CircularBandedMatrix(grid.M, stripe_k, stripe_k)
    rows = np.arange(grid.M)
    kept = 0.0
    for off in mat.offsets:
        diag = hnu_dense[rows, (rows - off) % grid.M]
        kept += float(np.sum(np.abs(diag) ** 2))
        mat.diags[off + stripe_k] = diag
    discarded = max(0.0, 1.0 - kept / total) if total > 0 else 0.0
    if discarded > energy_tol:
        raise OutOfStripeError(
            f"short-frame stripe_k={stripe_k} discards {discarded:.3e} "
            f"of the channel energy (tolerance {energy_tol:.1e})")
    return ShortFrameMatrices(ht=ht, hnu=mat,
                              discarded_energy_fraction=discarded)


def short_frame_ht(paths: PathSet, grid: FrameGrid, frame_index: int) -> np.ndarray:
    """Dense delay-time matrix of one short frame."""
    return build_Ht(short_frame_delay_time(paths, grid, frame_index))


def short_frame_hnu_dense(paths: PathSet, grid: FrameGrid,
                          frame_index: int) -> np.ndarray:
    """Dense frequency-Doppler matrix of one short frame (no truncation)."""
    ht = short_frame_ht(paths, grid, frame_index)
    return np.fft.fft(np.fft.ifft(ht, axis=1, norm="ortho"),
                      axis=0, norm="ortho")


def _rect_window_spectrum(omega, m: int):
    """DFT of a length-m rectangular window, evaluated at angular offset omega."""
    omega = np.asarray(omega, dtype=np.float64)
    on_grid = _multiple_of_period(omega / (2 * np.pi), 1)
    safe = np.where(on_grid, 1.0, omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.sin(safe * m / 2.0) / (m * np.sin(safe / 2.0))
    mag = np.where(on_grid, 1.0, mag)
    return mag * np.exp(-1j * omega * (m - 1) / 2.0)


def short_frame_hnu_window(paths: PathSet, grid: FrameGrid, frame_index: int,
                           k_sum: int | None = None) -> np.ndarray:
    """Short-frame frequency-Doppler samples via windowed-spectrum convolution.

    Independent construction path: starts from the long-frame samples on
    the resolvable Doppler bins, applies the short-frame position phase,
    convolves with the rectangular-window spectrum and downsamples the
    frequency axis N-fold.  Exact for on-grid Doppler; for off-grid
    Doppler the bin sum truncates the leakage tails, so this path is a
    cross-check rather than the constructor.  Returns the dense sample
    array H[i, j] (i frequency, j Doppler, both 0..M-1 circular).
    """
    if k_sum is None:
        k_sum = grid.K_max
    n = grid.size
    m = grid.M
    full = freq_doppler_samples(paths, grid)
    out = np.zeros((m, m), dtype=np.complex128)
    jj = np.arange(m)
    off = _short_frame_offset(grid, frame_index)
    for jp in range(-k_sum, k_sum + 1):
        phase = np.exp(2j * np.pi * off * jp / n)
        line = full.line(jp)[(np.arange(m) * grid.N) % n]
        window = _rect_window_spectrum(2 * np.pi / n * (jj * grid.N - jp), m)
        out += phase * np.outer(line, window)
    return out


# ---------------------------------------------------------------------------
# waveform propagation
# ---------------------------------------------------------------------------

def propagate_waveform(paths: PathSet, grid: FrameGrid, s_with_cp: np.ndarray,
                       rng: np.random.Generator, noise_var: float,
                       time_origin: int | None = None) -> np.ndarray:
    """Linear (non-circular) time-varying convolution of a CP-framed burst.

    Each path delays the burst by an integer number of samples and applies
    its per-sample Doppler phase; complex Gaussian noise of the given
    variance is added.  After stripping the cyclic prefixes the result
    equals the circular-model product of the channel matrix with the
    payload, which is what the prefix is for.

    ``time_origin`` is the burst index whose absolute time is zero
    (default ``L_cp``: one prefix before the first payload sample).

    Raises
    ------
    OffGridDelayError
        If any path delay is not an integer multiple of the sampling
        period.  The sample-domain convolution has no exact finite-length
        realization of a fractional delay; use the circular matrix model
        for off-grid delays.
    CpTooShortError
        If the prefix cannot absorb the channel delay spread.
    """
    s_with_cp = np.asarray(s_with_cp, dtype=np.complex128)
    if time_origin is None:
        time_origin = grid.L_cp
    taps = paths.delays / grid.d_r
    taps_int = np.rint(taps).astype(int)
    if np.max(np.abs(taps - taps_int)) > 1e-6:
        raise OffGridDelayError(
            "waveform propagation requires delays on the sampling grid")
    if np.max(taps_int) > grid.L_cp:
        raise CpTooShortError(
            f"max delay {np.max(taps_int)} taps exceeds L_cp={grid.L_cp}")
    total = len(s_with_cp)
    tt = (np.arange(total) - time_origin) * grid.d_r
    out = np.zeros(total, dtype=np.complex128)
    for gain, tap, doppler in zip(paths.gains, taps_int, paths.dopplers):
        delayed = np.zeros(total, dtype=np.complex128)
        if tap == 0:
            delayed[:] = s_with_cp
        else:
            delayed[tap:] = s_with_cp[:-tap]
        out += gain * np.exp(2j * np.pi * doppler * tt) * delayed
    if noise_var > 0:
        noise = rng.standard_normal(total) + 1j * rng.standard_normal(total)
        out += np.sqrt(noise_var / 2.0) * noise
    return out


# ---------------------------------------------------------------------------
# random realizations and CSI perturbation
# ---------------------------------------------------------------------------

def tdl_realization(profile: TdlProfile, grid: FrameGrid, f_max: float,
                    rng: np.random.Generator,
                    doppler_mode: str = "continuous",
                    on_grid_delays: bool = False) -> PathSet:
    """Draw one random channel realization from a TDL profile.

    Tap gains are complex Gaussian scaled by the profile powers; for LOS
    profiles the first tap adds a fixed specular component sized by the
    Rician K-factor.  Every tap gets an independent Doppler shift, drawn
    uniformly over [-f_max, f_max] Hz (``doppler_mode="continuous"``) or
    uniformly over the integer Doppler bins {-K..K} * f_r with
    ``K = ceil(f_max / f_r)`` (``doppler_mode="on_grid"``).

    ``on_grid_delays`` rounds tap delays to the sampling grid, which the
    sample-domain waveform propagation requires.
    """
    p = profile.powers
    count = profile.tap_count
    diffuse = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) \
        / np.sqrt(2.0)
    gains = np.sqrt(p) * diffuse
    if profile.los:
        if profile.rician_k_db is None:
            raise ValueError(f"LOS profile {profile.name!r} lacks a K-factor")
        k_lin = 10.0 ** (profile.rician_k_db / 10.0)
        spec = np.sqrt(p[0] * k_lin / (k_lin + 1.0))
        gains[0] = spec + np.sqrt(p[0] / (k_lin + 1.0)) * diffuse[0]
    if doppler_mode == "continuous":
        dopplers = rng.uniform(-f_max, f_max, size=count)
    elif doppler_mode == "on_grid":
        k_max = int(math.ceil(f_max / grid.f_r - 1e-12)) if f_max > 0 else 0
        dopplers = rng.integers(-k_max, k_max + 1, size=count) * grid.f_r
    else:
        raise ValueError(f"unknown doppler_mode {doppler_mode!r}")
    delays = profile.delays.copy()
    if on_grid_delays:
        delays = np.rint(delays / grid.d_r) * grid.d_r
    return PathSet(ChannelPath(g, d, nu)
                   for g, d, nu in zip(gains, delays, dopplers))


def perturb_channel(h, gamma_in: float, c: float,
                    rng: np.random.Generator):
    """Additive Gaussian CSI error with per-entry variance ``c / gamma_in``.

    For banded matrices only the stored stripe is perturbed (the known
    sparsity is respected); dense matrices are perturbed entrywise.
    ``c = 0`` returns an unchanged copy.
    """
    if c < 0:
        raise ValueError("error scale c must be nonnegative")
    if not gamma_in > 0:
        raise ValueError("gamma_in must be positive")
    sigma = np.sqrt(c / gamma_in / 2.0)
    if isinstance(h, CircularBandedMatrix):
        out = h.copy()
        if c > 0:
            noise = (rng.standard_normal(out.diags.shape)
                     + 1j * rng.standard_normal(out.diags.shape))
            out.diags += sigma * noise
        return out
    h = np.asarray(h, dtype=np.complex128)
    if c == 0:
        return h.copy()
    noise = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    return h + sigma * noise
