"""Complex dense and circular-banded linear algebra.

Circular-banded ("circular stripe diagonal") matrices arise as the
frequency-Doppler representation of a fast fading channel: the nonzero
entries sit on a narrow band of diagonals that wraps around the matrix
corners, mirroring circular convolution.  This module provides the storage
type, a Gaussian-elimination solver specialised to that structure, the
regularised Gram construction used by MMSE equalization, Hermitian
eigendecomposition, and the unitary DFT/Kronecker operators shared by the
modulation and analysis layers.

An :class:`OpCounter` can be attached to the hot paths to audit the
multiply/divide complexity of the banded solver against its closed-form
operation count (:func:`complexity_estimate`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "OutOfStripeError",
    "SingularMatrixError",
    "NotHermitianError",
    "OpCounter",
    "CircularBandedMatrix",
    "band_from_dense",
    "band_solve",
    "band_gram",
    "band_apply",
    "band_adjoint_apply",
    "eig_hermitian",
    "complexity_estimate",
    "dense_solve_ops",
    "SolveComplexity",
    "UnitaryOperator",
]


class OutOfStripeError(ValueError):
    """Matrix content falls outside the declared circular stripe."""


class SingularMatrixError(np.linalg.LinAlgError):
    """A pivot fell below the singularity threshold during elimination."""


class NotHermitianError(ValueError):
    """Input matrix is not Hermitian within tolerance."""


@dataclass
class OpCounter:
    """Accumulator for complex multiply/divide counts, split by bucket.

    Buckets used by this module:

    ``solve``
        Operations of the banded elimination itself: forward elimination
        and corner cleanup on the matrix entries, plus the per-entry back
        substitution work for one right-hand-side column.  This is the
        quantity comparable to :func:`complexity_estimate`, which prices
        the reusable inversion work.
    ``solve_rhs``
        Additional per-column right-hand-side updates (forward-elimination
        scaling/cancellation of the RHS and back substitution for columns
        beyond the first).
    ``gram``
        Products accumulated while forming ``H H^H + (1/gamma) I``.
    ``apply``
        Banded matrix-vector products.
    """

    counts: dict[str, int] = field(default_factory=dict)

    def add(self, bucket: str, n: int) -> None:
        self.counts[bucket] = self.counts.get(bucket, 0) + int(n)

    def get(self, bucket: str) -> int:
        return self.counts.get(bucket, 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


class CircularBandedMatrix:
    """Square complex matrix whose band of diagonals wraps at the corners.

    Entry ``(i, j)`` may be nonzero only when ``(i - j) mod n`` lies in
    ``[0 .. k_lower]`` (main and lower diagonals, wrapping into the
    top-right corner) or in ``[n - k_upper .. n - 1]`` (upper diagonals,
    wrapping into the bottom-left corner).

    Storage is diagonal-major: ``diags[off + k_upper]`` holds the circular
    diagonal with row-minus-column offset ``off`` in ``[-k_upper ..
    k_lower]``, indexed by row, i.e. ``diags[off + k_upper][i] ==
    A[i, (i - off) mod n]``.  The corner blocks live inside the same
    diagonals via the circular index, not as separate dense blocks.
    """

    __slots__ = ("n", "k_lower", "k_upper", "diags")

    def __init__(self, n: int, k_lower: int, k_upper: int,
                 diags: np.ndarray | None = None):
        if n < 1 or k_lower < 0 or k_upper < 0:
            raise ValueError("need n >= 1 and nonnegative bandwidths")
        if 1 + k_lower + k_upper > n:
            raise ValueError(
                f"stripe width {1 + k_lower + k_upper} exceeds order {n}")
        width = 1 + k_lower + k_upper
        if diags is None:
            diags = np.zeros((width, n), dtype=np.complex128)
        else:
            diags = np.asarray(diags, dtype=np.complex128)
            if diags.shape != (width, n):
                raise ValueError(f"diags must have shape {(width, n)}")
        self.n = n
        self.k_lower = k_lower
        self.k_upper = k_upper
        self.diags = diags

    # -- construction ------------------------------------------------------

    @classmethod
    def identity(cls, n: int, k_lower: int = 0, k_upper: int = 0):
        out = cls(n, k_lower, k_upper)
        out.diags[k_upper] = 1.0
        return out

    @property
    def stripe_width(self) -> int:
        return 1 + self.k_lower + self.k_upper

    @property
    def offsets(self) -> range:
        """Row-minus-column offsets stored, from ``-k_upper`` to ``k_lower``."""
        return range(-self.k_upper, self.k_lower + 1)

    def diagonal(self, offset: int = 0) -> np.ndarray:
        """Row-indexed circular diagonal at row-minus-column ``offset``."""
        if not -self.k_upper <= offset <= self.k_lower:
            raise ValueError(f"offset {offset} outside stored stripe")
        return self.diags[offset + self.k_upper]

    def copy(self) -> "CircularBandedMatrix":
        return CircularBandedMatrix(self.n, self.k_lower, self.k_upper,
                                    self.diags.copy())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.diags))) if self.diags.size else 0.0

    # -- conversions -------------------------------------------------------

    def densify(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.complex128)
        rows = np.arange(self.n)
        for off in self.offsets:
            a[rows, (rows - off) % self.n] = self.diags[off + self.k_upper]
        return a

    # -- products ----------------------------------------------------------

    def apply(self, x: np.ndarray, counter: OpCounter | None = None) -> np.ndarray:
        """Return ``A @ x`` in O(stripe_width * n) operations."""
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.n,):
            raise ValueError(f"vector length {x.shape} does not match order {self.n}")
        y = np.zeros(self.n, dtype=np.complex128)
        for off in self.offsets:
            y += self.diags[off + self.k_upper] * np.roll(x, off)
        if counter is not None:
            counter.add("apply", self.stripe_width * self.n)
        return y

    def adjoint_apply(self, x: np.ndarray, counter: OpCounter | None = None) -> np.ndarray:
        """Return ``A^H @ x`` in O(stripe_width * n) operations."""
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.n,):
            raise ValueError(f"vector length {x.shape} does not match order {self.n}")
        y = np.zeros(self.n, dtype=np.complex128)
        for off in self.offsets:
            y += np.roll(np.conj(self.diags[off + self.k_upper]) * x, -off)
        if counter is not None:
            counter.add("apply", self.stripe_width * self.n)
        return y

    def adjoint(self) -> "CircularBandedMatrix":
        out = CircularBandedMatrix(self.n, self.k_upper, self.k_lower)
        for off in self.offsets:
            out.diags[-off + out.k_upper] = np.roll(
                np.conj(self.diags[off + self.k_upper]), -off)
        return out

    def gram(self, gamma_in: float, counter: OpCounter | None = None) -> "CircularBandedMatrix":
        """Return ``A A^H + (1/gamma_in) I`` as a circular-banded matrix.

        The result is Hermitian with lower and upper bandwidth
        ``k_lower + k_upper`` (stripe width ``1 + 2 (k_lower + k_upper)``).
        Only the nonnegative offsets are accumulated; the mirror diagonals
        come from Hermitian symmetry at no multiply cost.
        """
        if not gamma_in > 0:
            raise ValueError("gamma_in must be positive")
        n = self.n
        kg = self.k_lower + self.k_upper
        if 2 * kg + 1 > n:
            # the Gram stripe wraps onto itself: the product is full, so
            # compute it densely and store with a width-n circular layout
            dense = self.densify()
            g = dense @ dense.conj().T
            g[np.diag_indices(n)] += 1.0 / gamma_in
            ku = (n - 1) // 2
            out = band_from_dense(g, n - 1 - ku, ku)
            if counter is not None:
                counter.add("gram", n ** 3 + 1)
            return out
        out = CircularBandedMatrix(n, kg, kg)
        muls = 0
        for delta in range(kg + 1):
            acc = np.zeros(n, dtype=np.complex128)
            for off in self.offsets:
                off2 = off - delta
                if -self.k_upper <= off2 <= self.k_lower:
                    acc += self.diags[off + self.k_upper] * np.roll(
                        np.conj(self.diags[off2 + self.k_upper]), delta)
                    muls += n
            out.diags[delta + kg] = acc
            if delta > 0:
                out.diags[-delta + kg] = np.roll(np.conj(acc), -delta)
        out.diags[kg] += 1.0 / gamma_in
        if counter is not None:
            counter.add("gram", muls)
            counter.add("gram", 1)  # the 1/gamma division
        return out

    def __repr__(self) -> str:  # pragma: no cover
        return (f"CircularBandedMatrix(n={self.n}, k_lower={self.k_lower}, "
                f"k_upper={self.k_upper})")


def band_from_dense(a: np.ndarray, k_lower: int, k_upper: int,
                    drop_tol: float | None = None) -> CircularBandedMatrix:
    """Sparsify a dense matrix into circular-banded storage.

    Entries outside the declared stripe must be negligible: anything with
    magnitude above ``drop_tol`` (default ``1e-12 * max|a|``) raises
    :class:`OutOfStripeError`, which signals an under-declared bandwidth
    (e.g. Doppler leakage past the assumed stripe).
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    n = a.shape[0]
    out = CircularBandedMatrix(n, k_lower, k_upper)
    rows = np.arange(n)
    residual = a.copy()
    for off in out.offsets:
        cols = (rows - off) % n
        out.diags[off + k_upper] = a[rows, cols]
        residual[rows, cols] = 0.0
    worst = float(np.max(np.abs(residual))) if n else 0.0
    if drop_tol is None:
        drop_tol = 1e-12 * float(np.max(np.abs(a))) if a.size else 0.0
    if worst > drop_tol:
        raise OutOfStripeError(
            f"entry of magnitude {worst:.3e} outside stripe "
            f"(k_lower={k_lower}, k_upper={k_upper}, tol={drop_tol:.3e})")
    return out


def band_apply(h: CircularBandedMatrix, x: np.ndarray,
               counter: OpCounter | None = None) -> np.ndarray:
    return h.apply(x, counter)


def band_adjoint_apply(h: CircularBandedMatrix, x: np.ndarray,
                       counter: OpCounter | None = None) -> np.ndarray:
    return h.adjoint_apply(x, counter)


def band_gram(h: CircularBandedMatrix, gamma_in: float,
              counter: OpCounter | None = None) -> CircularBandedMatrix:
    return h.gram(gamma_in, counter)


# ---------------------------------------------------------------------------
# banded Gaussian elimination
# ---------------------------------------------------------------------------
#
# The solver reduces the circular-banded system in five stages:
#   1. forward elimination over rows 0 .. n-2k-1; at each pivot the k band
#      rows below and the k bottom corner rows carry a nonzero in the pivot
#      column, and the pivot row has (1 + 2k) active entries (band plus the
#      right-border fill carried over from the top corner),
#   2. dense cleanup of the trailing 2k x 2k block,
#   3-5. back substitution over the right-border columns, the interior band
#      columns and the leading columns.
# No row exchanges are performed (the stripe would not survive them); a
# pivot below 1e-14 * max|A| raises SingularMatrixError instead.  For the
# Hermitian positive-definite Gram matrices produced by `band_gram` the
# pivots are always safe.

@njit(cache=True, nogil=True)
def _eliminate(w, rb, t, b, n, k):  # pragma: no cover - exercised via band_solve
    n_reg = n - 2 * k
    m = b.shape[1]
    elim = 0
    rhs = 0

    amax = 0.0
    for r in range(n_reg):
        for j in range(2 * k + 1):
            v = abs(w[r, j])
            if v > amax:
                amax = v
        for j in range(k):
            v = abs(rb[r, j])
            if v > amax:
                amax = v
    for i in range(2 * k):
        for j in range(n):
            v = abs(t[i, j])
            if v > amax:
                amax = v
    tol = 1e-14 * amax

    # stage 1: forward elimination over the regular rows
    for r in range(n_reg):
        piv = w[r, k]
        if abs(piv) <= tol:
            return 1, r, elim, rhs
        inv_piv = 1.0 / piv
        for j in range(k, 2 * k + 1):
            w[r, j] *= inv_piv
        for j in range(k):
            rb[r, j] *= inv_piv
        elim += 1 + 2 * k
        for c in range(m):
            b[r, c] *= inv_piv
        rhs += m

        for i in range(1, k + 1):
            rho = r + i
            if rho < n_reg:
                mult = w[rho, k - i]
                if mult != 0:
                    for j in range(k + 1):
                        w[rho, k - i + j] -= mult * w[r, k + j]
                    for j in range(k):
                        rb[rho, j] -= mult * rb[r, j]
                    elim += 1 + 2 * k
                    for c in range(m):
                        b[rho, c] -= mult * b[r, c]
                    rhs += m
            else:
                ti = rho - n_reg
                mult = t[ti, r]
                if mult != 0:
                    for j in range(k + 1):
                        t[ti, r + j] -= mult * w[r, k + j]
                    for j in range(k):
                        t[ti, n - k + j] -= mult * rb[r, j]
                    elim += 1 + 2 * k
                    for c in range(m):
                        b[rho, c] -= mult * b[r, c]
                    rhs += m
        for ti in range(k, 2 * k):
            mult = t[ti, r]
            if mult != 0:
                for j in range(k + 1):
                    t[ti, r + j] -= mult * w[r, k + j]
                for j in range(k):
                    t[ti, n - k + j] -= mult * rb[r, j]
                elim += 1 + 2 * k
                for c in range(m):
                    b[n_reg + ti, c] -= mult * b[r, c]
                rhs += m

    # stage 2: dense cleanup of the trailing 2k x 2k corner block
    nb = 2 * k
    for cc in range(nb):
        piv = t[cc, n_reg + cc]
        if abs(piv) <= tol:
            return 1, n_reg + cc, elim, rhs
        inv_piv = 1.0 / piv
        for j in range(cc, nb):
            t[cc, n_reg + j] *= inv_piv
        elim += nb - cc
        for c in range(m):
            b[n_reg + cc, c] *= inv_piv
        rhs += m
        for i in range(cc + 1, nb):
            mult = t[i, n_reg + cc]
            if mult != 0:
                for j in range(cc, nb):
                    t[i, n_reg + j] -= mult * t[cc, n_reg + j]
                elim += nb - cc
                for c in range(m):
                    b[n_reg + i, c] -= mult * b[n_reg + cc, c]
                rhs += m

    # stages 3-5: back substitution (corner block, then band + right border)
    for i in range(nb - 2, -1, -1):
        gi = n_reg + i
        for j in range(i + 1, nb):
            u = t[i, n_reg + j]
            if u != 0:
                elim += 1
                rhs += m - 1
                for c in range(m):
                    b[gi, c] -= u * b[n_reg + j, c]
    for r in range(n_reg - 1, -1, -1):
        for j in range(1, k + 1):
            u = w[r, k + j]
            if u != 0:
                elim += 1
                rhs += m - 1
                for c in range(m):
                    b[r, c] -= u * b[r + j, c]
        for j in range(k):
            u = rb[r, j]
            if u != 0:
                elim += 1
                rhs += m - 1
                for c in range(m):
                    b[r, c] -= u * b[n - k + j, c]
    return 0, -1, elim, rhs


def _working_arrays(a: CircularBandedMatrix, k: int):
    """Unpack diagonal storage into the solver's working layout.

    Returns ``(w, rb, t)``: per-row band windows of the first ``n - 2k``
    rows, their right-border columns ``n-k .. n-1``, and the trailing
    ``2k`` rows densified.
    """
    n = a.n
    n_reg = n - 2 * k
    kl, ku = a.k_lower, a.k_upper
    w = np.zeros((max(n_reg, 0), 2 * k + 1), dtype=np.complex128)
    rb = np.zeros((max(n_reg, 0), k), dtype=np.complex128)
    for j in range(2 * k + 1):
        off = k - j
        if -ku <= off <= kl:
            start = max(0, off)  # rows r < off wrap into the right border
            w[start:n_reg, j] = a.diags[off + ku][start:n_reg]
    for dcol in range(k):
        # top-corner rows whose wrapped lower diagonals land in column n-k+dcol
        for r in range(max(0, dcol - k + 1), min(n_reg, kl + dcol - k + 1)):
            off = r + k - dcol
            if 1 <= off <= kl:
                rb[r, dcol] = a.diags[off + ku][r]
    t = np.zeros((2 * k, n), dtype=np.complex128)
    for i in range(2 * k):
        gr = n_reg + i
        if gr < 0:
            continue
        for off in a.offsets:
            t[i, (gr - off) % n] = a.diags[off + ku][gr]
    return w, rb, t


def _dense_gauss_jordan(a: np.ndarray, b: np.ndarray, counter: OpCounter | None):
    """Fallback dense elimination for stripes too wide for the banded layout."""
    a = a.copy()
    n = a.shape[0]
    tol = 1e-14 * float(np.max(np.abs(a)))
    elim = 0
    rhs = 0
    m = b.shape[1]
    for r in range(n):
        piv = a[r, r]
        if abs(piv) <= tol:
            raise SingularMatrixError(f"pivot {abs(piv):.3e} at row {r}")
        a[r, r:] /= piv
        elim += n - r
        b[r] /= piv
        rhs += m
        for i in range(r + 1, n):
            mult = a[i, r]
            if mult != 0:
                a[i, r:] -= mult * a[r, r:]
                elim += n - r
                b[i] -= mult * b[r]
                rhs += m
    for r in range(n - 2, -1, -1):
        for j in range(r + 1, n):
            u = a[r, j]
            if u != 0:
                elim += 1
                rhs += m - 1
                b[r] -= u * b[j]
    if counter is not None:
        counter.add("solve", elim)
        counter.add("solve_rhs", rhs)
    return b


def band_solve(a: CircularBandedMatrix, b: np.ndarray,
               counter: OpCounter | None = None) -> np.ndarray:
    """Solve ``A X = B`` for a circular-banded ``A`` by banded elimination.

    ``B`` may be a vector or a matrix of right-hand-side columns.  The
    matrix must be nonsingular along the no-pivoting elimination order;
    the MMSE-regularised Gram ``H H^H + (1/gamma) I`` always is for
    ``gamma > 0``.

    Raises
    ------
    SingularMatrixError
        When a pivot magnitude falls below ``1e-14 * max|A|``.
    """
    bb = np.asarray(b, dtype=np.complex128)
    squeeze = bb.ndim == 1
    if squeeze:
        bb = bb[:, None]
    if bb.shape[0] != a.n:
        raise ValueError(f"rhs has {bb.shape[0]} rows, matrix order is {a.n}")
    bb = np.ascontiguousarray(bb.copy())

    k = max(a.k_lower, a.k_upper)
    if 2 * k > a.n:
        x = _dense_gauss_jordan(a.densify(), bb, counter)
    else:
        w, rb, t = _working_arrays(a, k)
        status, row, elim, rhs = _eliminate(w, rb, t, bb, a.n, k)
        if counter is not None:
            counter.add("solve", elim)
            counter.add("solve_rhs", rhs)
        if status != 0:
            raise SingularMatrixError(
                f"pivot below 1e-14 * max|A| at row {row}")
        x = bb
    return x[:, 0] if squeeze else x


# ---------------------------------------------------------------------------
# dense Hermitian eigendecomposition
# ---------------------------------------------------------------------------

def eig_hermitian(g: np.ndarray, check: bool = True):
    """Eigendecompose a Hermitian matrix; eigenvalues sorted descending.

    Returns ``(lam, q)`` with ``g = q @ diag(lam) @ q^H`` and ``q`` unitary.
    Dense O(n^3); intended for offline analysis, not online equalization.
    """
    g = np.asarray(g, dtype=np.complex128)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square matrix")
    if check and g.size:
        scale = float(np.max(np.abs(g))) or 1.0
        dev = float(np.max(np.abs(g - g.conj().T)))
        if dev > 1e-10 * scale:
            raise NotHermitianError(
                f"relative Hermitian deviation {dev / scale:.3e} exceeds 1e-10")
    lam, q = np.linalg.eigh(g)
    return lam[::-1].copy(), q[:, ::-1].copy()


# ---------------------------------------------------------------------------
# operation-count model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveComplexity:
    """Closed-form multiply/divide count of the banded elimination."""

    total_ops: int
    asymptotic: str


def complexity_estimate(mn: int, k: int) -> SolveComplexity:
    """Operation count of inverting an order-``mn`` matrix with stripe ``1+2k``.

    Counts complex multiplications and divisions of the five-stage banded
    elimination.  ``k = 0`` degenerates to pure diagonal scaling (``mn``
    divisions).
    """
    if k < 0 or mn <= 2 * k:
        raise ValueError("need mn > 2k >= 0")
    total = ((1 + 2 * k) ** 2 * (mn - 2 * k)
             + 2 * k * (2 * k + 1) * (4 * k + 1) // 6
             + 2 * k * mn - 2 * k * k - k)
    return SolveComplexity(total_ops=int(total), asymptotic="O((1+2k)^2 MN)")


def dense_solve_ops(mn: int) -> int:
    """Operation count of an unstructured dense inversion, ``(MN)^3``."""
    return int(mn) ** 3


# ---------------------------------------------------------------------------
# unitary operators
# ---------------------------------------------------------------------------

class UnitaryOperator:
    """Structured unitary operator with vector and matrix application.

    Supported kinds:

    - ``identity``: I_n
    - ``dft`` / ``idft``: unitary n-point DFT and its inverse
    - ``kron_idft_eye`` / ``kron_dft_eye``: IDFT_N (x) I_M and its adjoint,
      acting on length M*N vectors in column-major (delay-fastest) layout
    - ``block_idft`` / ``block_dft``: I_N (x) IDFT_M and its adjoint
      (independent M-point transforms per block)

    Applying the operator followed by its adjoint returns the input to
    machine precision (all kinds are exactly unitary).
    """

    _ADJOINT = {
        "identity": "identity",
        "dft": "idft",
        "idft": "dft",
        "kron_idft_eye": "kron_dft_eye",
        "kron_dft_eye": "kron_idft_eye",
        "block_idft": "block_dft",
        "block_dft": "block_idft",
    }

    def __init__(self, kind: str, size: int, m: int | None = None,
                 n_blocks: int | None = None):
        if kind not in self._ADJOINT:
            raise ValueError(f"unknown operator kind {kind!r}")
        self.kind = kind
        self.size = size
        self.m = m
        self.n_blocks = n_blocks
        if kind.startswith(("kron", "block")):
            if m is None or n_blocks is None or m * n_blocks != size:
                raise ValueError("kron/block operators need m * n_blocks == size")

    # -- constructors --------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "UnitaryOperator":
        return cls("identity", n)

    @classmethod
    def dft(cls, n: int) -> "UnitaryOperator":
        return cls("dft", n)

    @classmethod
    def idft(cls, n: int) -> "UnitaryOperator":
        return cls("idft", n)

    @classmethod
    def kron_idft_eye(cls, m: int, n_blocks: int) -> "UnitaryOperator":
        """IDFT_N (x) I_M on vec(X) with X of shape (m, n_blocks)."""
        return cls("kron_idft_eye", m * n_blocks, m, n_blocks)

    @classmethod
    def block_idft(cls, m: int, n_blocks: int) -> "UnitaryOperator":
        """I_N (x) IDFT_M: an independent M-point IDFT per length-m block."""
        return cls("block_idft", m * n_blocks, m, n_blocks)

    # -- application -----------------------------------------------------

    def adjoint(self) -> "UnitaryOperator":
        return UnitaryOperator(self._ADJOINT[self.kind], self.size,
                               self.m, self.n_blocks)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.size,):
            raise ValueError(f"expected vector of length {self.size}")
        kind = self.kind
        if kind == "identity":
            return x.copy()
        if kind == "dft":
            return np.fft.fft(x, norm="ortho")
        if kind == "idft":
            return np.fft.ifft(x, norm="ortho")
        grid = x.reshape(self.m, self.n_blocks, order="F")
        if kind == "kron_idft_eye":
            out = np.fft.ifft(grid, axis=1, norm="ortho")
        elif kind == "kron_dft_eye":
            out = np.fft.fft(grid, axis=1, norm="ortho")
        elif kind == "block_idft":
            out = np.fft.ifft(grid, axis=0, norm="ortho")
        else:  # block_dft
            out = np.fft.fft(grid, axis=0, norm="ortho")
        return out.reshape(self.size, order="F")

    def matmat(self, a: np.ndarray) -> np.ndarray:
        """Return ``U @ a`` applying the operator to each column."""
        a = np.asarray(a, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != self.size:
            raise ValueError(f"expected matrix with {self.size} rows")
        kind = self.kind
        if kind == "identity":
            return a.copy()
        if kind == "dft":
            return np.fft.fft(a, axis=0, norm="ortho")
        if kind == "idft":
            return np.fft.ifft(a, axis=0, norm="ortho")
        cols = a.shape[1]
        grid = a.reshape(self.m, self.n_blocks, cols, order="F")
        if kind == "kron_idft_eye":
            out = np.fft.ifft(grid, axis=1, norm="ortho")
        elif kind == "kron_dft_eye":
            out = np.fft.fft(grid, axis=1, norm="ortho")
        elif kind == "block_idft":
            out = np.fft.ifft(grid, axis=0, norm="ortho")
        else:
            out = np.fft.fft(grid, axis=0, norm="ortho")
        return out.reshape(self.size, cols, order="F")

    def rmatmat(self, a: np.ndarray) -> np.ndarray:
        """Return ``a @ U``."""
        return self.adjoint().matmat(np.conj(a.T)).conj().T

    def densify(self) -> np.ndarray:
        return self.matmat(np.eye(self.size, dtype=np.complex128))

    def __repr__(self) -> str:  # pragma: no cover
        return f"UnitaryOperator({self.kind!r}, size={self.size})"
