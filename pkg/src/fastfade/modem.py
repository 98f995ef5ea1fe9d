"""QAM mapping and OTFS / OFDM / SC-FDE modulation under one operator form.

All three schemes reduce to ``s = V x`` with a unitary modulation operator
V: the Doppler-spreading Kronecker operator for OTFS (one long frame), the
per-symbol IDFT for OFDM and the identity for SC-FDE (N short frames).
Cyclic prefixes are cyclic copies of each frame tail: one prefix per long
OTFS frame, one per short OFDM / SC-FDE frame.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import FrameGrid, PathSet, build_Ht, delay_time_samples, \
    short_frame_ht
from .linalg import UnitaryOperator

__all__ = [
    "Scheme",
    "DataGrid",
    "ConstellationSpec",
    "ModulatedSignal",
    "qam_map",
    "qam_demap",
    "constellation",
    "gray_encode",
    "gray_decode",
    "modulate",
    "demodulate",
    "modulation_operator",
    "long_frame_operator",
    "frame_count",
    "frame_length",
    "scheme_time_matrices",
]


class Scheme(enum.Enum):
    """Modulation scheme tag."""

    OTFS = "otfs"
    OFDM = "ofdm"
    SCFDE = "scfde"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}; expected one of "
                             f"{[s.value for s in cls]}") from None


@dataclass
class DataGrid:
    """M x N data symbols; the vector form is column-major (delay fastest).

    ``vec[n * M + m] == X[m, n]``.
    """

    X: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.complex128)
        if self.X.ndim != 2:
            raise ValueError("DataGrid expects a 2-D symbol array")

    @property
    def vec(self) -> np.ndarray:
        return self.X.reshape(-1, order="F")

    @classmethod
    def from_vec(cls, x: np.ndarray, m: int, n: int) -> "DataGrid":
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (m * n,):
            raise ValueError(f"expected vector of length {m * n}")
        return cls(x.reshape(m, n, order="F"))


# ---------------------------------------------------------------------------
# square QAM with per-axis Gray labelling
# ---------------------------------------------------------------------------
#
# A 2^(2k)-point square constellation: each axis carries k Gray-coded bits.
# Bit block per symbol = [I bits, Q bits], MSB first per axis.  Bit b maps
# through gray decoding to the level index and then to the amplitude
# (2^k - 1) - 2 * index, so the all-zeros block lands on the most positive
# level of both axes: for k=1 the bits 00 map to (1 + 1j) / sqrt(2).
# Levels are scaled for unit average constellation energy.

def gray_encode(index: np.ndarray) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64)
    return index ^ (index >> 1)


def gray_decode(code: np.ndarray) -> np.ndarray:
    code = np.asarray(code, dtype=np.int64)
    result = code.copy()
    mask = result >> 1
    while mask.any():
        result ^= mask
        mask >>= 1
    return result


def _axis_scale(k: int) -> float:
    return float(np.sqrt(3.0 / (2.0 * (4 ** k - 1))))


@dataclass(frozen=True)
class ConstellationSpec:
    """Square 2^(2k)-QAM with per-axis Gray labelling, unit average power."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("QAM level k must be >= 1")

    @property
    def bits_per_symbol(self) -> int:
        return 2 * self.k

    @property
    def points(self) -> np.ndarray:
        return constellation(self.k)

    def map(self, bits: np.ndarray) -> np.ndarray:
        return qam_map(bits, self.k)

    def demap(self, symbols: np.ndarray) -> np.ndarray:
        return qam_demap(symbols, self.k)


def constellation(k: int) -> np.ndarray:
    """All 2^(2k) constellation points indexed by the symbol bit block."""
    if k < 1:
        raise ValueError("QAM level k must be >= 1")
    npts = 1 << (2 * k)
    bits = ((np.arange(npts)[:, None] >> np.arange(2 * k - 1, -1, -1)) & 1)
    return qam_map(bits.reshape(-1), k)


def _bits_to_index(bits: np.ndarray, k: int) -> np.ndarray:
    weights = 1 << np.arange(k - 1, -1, -1)
    return bits @ weights


def _index_to_bits(index: np.ndarray, k: int) -> np.ndarray:
    return (index[:, None] >> np.arange(k - 1, -1, -1)) & 1


def qam_map(bits: np.ndarray, k: int = 1) -> np.ndarray:
    """Map bits to unit-average-power Gray-labelled square QAM symbols."""
    if k < 1:
        raise ValueError("QAM level k must be >= 1")
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    if bits.size % (2 * k):
        raise ValueError(f"bit count must be a multiple of {2 * k}")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0/1")
    blocks = bits.reshape(-1, 2 * k)
    scale = _axis_scale(k)
    top = (1 << k) - 1
    i_level = top - 2 * gray_decode(_bits_to_index(blocks[:, :k], k))
    q_level = top - 2 * gray_decode(_bits_to_index(blocks[:, k:], k))
    return scale * (i_level + 1j * q_level)


def qam_demap(symbols: np.ndarray, k: int = 1) -> np.ndarray:
    """Hard-decision demapping back to bits (inverse of :func:`qam_map`)."""
    if k < 1:
        raise ValueError("QAM level k must be >= 1")
    symbols = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    scale = _axis_scale(k)
    top = (1 << k) - 1

    def axis_bits(values):
        idx = np.rint((top - values / scale) / 2.0).astype(np.int64)
        idx = np.clip(idx, 0, top)
        return _index_to_bits(gray_encode(idx), k)

    out = np.empty((symbols.size, 2 * k), dtype=np.int64)
    out[:, :k] = axis_bits(symbols.real)
    out[:, k:] = axis_bits(symbols.imag)
    return out.reshape(-1)


# ---------------------------------------------------------------------------
# framing
# ---------------------------------------------------------------------------

def frame_count(scheme: Scheme, grid: FrameGrid) -> int:
    return 1 if scheme is Scheme.OTFS else grid.N


def frame_length(scheme: Scheme, grid: FrameGrid) -> int:
    return grid.size if scheme is Scheme.OTFS else grid.M


def modulation_operator(scheme: Scheme, grid: FrameGrid) -> UnitaryOperator:
    """Per-frame modulation operator V (``s = V x`` on one frame)."""
    if scheme is Scheme.OTFS:
        return UnitaryOperator.kron_idft_eye(grid.M, grid.N)
    if scheme is Scheme.OFDM:
        return UnitaryOperator.idft(grid.M)
    return UnitaryOperator.identity(grid.M)


def long_frame_operator(scheme: Scheme, grid: FrameGrid) -> UnitaryOperator:
    """Modulation operator stacked over the whole MN-symbol frame."""
    if scheme is Scheme.OTFS:
        return UnitaryOperator.kron_idft_eye(grid.M, grid.N)
    if scheme is Scheme.OFDM:
        return UnitaryOperator.block_idft(grid.M, grid.N)
    return UnitaryOperator.identity(grid.size)


@dataclass
class ModulatedSignal:
    """Payload frames plus the CP-framed burst of one transmission."""

    scheme: Scheme
    frames: list[np.ndarray]
    burst: np.ndarray
    cp_length: int

    @property
    def cp_count(self) -> int:
        return len(self.frames)


def modulate(scheme: Scheme, data: DataGrid, grid: FrameGrid) -> ModulatedSignal:
    """Modulate an M x N symbol grid into time-domain frames with prefixes.

    OTFS emits a single MN-sample frame with one cyclic prefix; OFDM and
    SC-FDE emit N independent M-sample frames, each with its own prefix.
    The modulation is unitary, so payload power equals data power.
    """
    if data.X.shape != (grid.M, grid.N):
        raise ValueError(f"data grid must be {(grid.M, grid.N)}")
    op = modulation_operator(scheme, grid)
    if scheme is Scheme.OTFS:
        frames = [op.apply(data.vec)]
    else:
        frames = [op.apply(data.X[:, n]) for n in range(grid.N)]
    pieces = []
    for frame in frames:
        pieces.append(frame[-grid.L_cp:] if grid.L_cp else frame[:0])
        pieces.append(frame)
    return ModulatedSignal(scheme=scheme, frames=frames,
                           burst=np.concatenate(pieces), cp_length=grid.L_cp)


def demodulate(scheme: Scheme, frames: list[np.ndarray],
               grid: FrameGrid) -> DataGrid:
    """Apply V^H to equalized payload frames, recovering the data grid."""
    expected = frame_count(scheme, grid)
    if len(frames) != expected:
        raise ValueError(f"{scheme.value} expects {expected} frame(s)")
    op = modulation_operator(scheme, grid).adjoint()
    if scheme is Scheme.OTFS:
        return DataGrid.from_vec(op.apply(np.asarray(frames[0])),
                                 grid.M, grid.N)
    cols = [op.apply(np.asarray(f)) for f in frames]
    return DataGrid(np.stack(cols, axis=1))


def split_burst(scheme: Scheme, burst: np.ndarray, grid: FrameGrid) -> list[np.ndarray]:
    """Strip cyclic prefixes from a received burst into payload frames."""
    flen = frame_length(scheme, grid)
    count = frame_count(scheme, grid)
    step = flen + grid.L_cp
    if len(burst) != count * step:
        raise ValueError(f"burst length {len(burst)} != {count * step}")
    return [burst[i * step + grid.L_cp:(i + 1) * step] for i in range(count)]


def scheme_time_matrices(paths: PathSet, grid: FrameGrid,
                         scheme: Scheme) -> list[np.ndarray]:
    """Dense delay-time channel matrices at the scheme's frame granularity."""
    if scheme is Scheme.OTFS:
        return [build_Ht(delay_time_samples(paths, grid))]
    return [short_frame_ht(paths, grid, n) for n in range(grid.N)]
