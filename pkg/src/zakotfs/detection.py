"""Symbol alphabets, LMMSE equalization under colored noise, pilot
cancellation and minimum-distance decoding."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .filters import NoiseCovariance
from .frames import FrameKind, FrameLayout
from .io_relation import ChannelMatrix, RxFrame

__all__ = [
    "Alphabet",
    "DetectionResult",
    "EqualizationError",
    "lmmse_equalize",
    "cancel_pilot",
    "min_distance_decode",
]


class EqualizationError(np.linalg.LinAlgError):
    """The LMMSE system matrix is numerically singular."""


def _gray(n: int) -> int:
    return n ^ (n >> 1)


@dataclass(frozen=True)
class Alphabet:
    """Unit-energy constellation with a Gray bit labelling.

    ``bits[i]`` is the label of ``points[i]`` (most significant bit first).
    """

    name: str
    points: np.ndarray = field(repr=False)
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=complex)
        b = np.asarray(self.bits, dtype=np.uint8)
        q = p.size
        if q < 2 or q & (q - 1):
            raise ValueError("alphabet size must be a power of two")
        if b.shape != (q, q.bit_length() - 1):
            raise ValueError("bit labels must have shape (size, log2(size))")
        if not np.isclose(np.mean(np.abs(p) ** 2), 1.0, rtol=1e-12):
            raise ValueError("alphabet must have unit average energy")
        p.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "bits", b)

    @classmethod
    def qam(cls, order: int = 4) -> "Alphabet":
        """Square Gray-mapped QAM (``order`` a power of 4), or BPSK for ``order=2``."""
        if order == 2:
            return cls("bpsk", np.array([-1.0, 1.0]), np.array([[0], [1]]))
        m = int(round(np.sqrt(order)))
        if m * m != order or m < 2 or m & (m - 1):
            raise ValueError(f"unsupported QAM order {order}")
        half = m.bit_length() - 1
        levels = 2 * np.arange(m) - (m - 1)
        # level index whose Gray code is g
        inv = np.empty(m, dtype=int)
        for i in range(m):
            inv[_gray(i)] = i
        pts, labels = [], []
        for s in range(order):
            gi, gq = s >> half, s & (m - 1)
            pts.append(levels[inv[gi]] + 1j * levels[inv[gq]])
            labels.append([(s >> (2 * half - 1 - t)) & 1 for t in range(2 * half)])
        pts = np.array(pts)
        pts /= np.sqrt(np.mean(np.abs(pts) ** 2))
        return cls(f"qam{order}", pts, np.array(labels))

    @classmethod
    def from_name(cls, name: str) -> "Alphabet":
        key = name.strip().lower()
        if key == "bpsk":
            return cls.qam(2)
        if key.startswith("qam") and key[3:].isdigit():
            return cls.qam(int(key[3:]))
        raise ValueError(f"unknown alphabet {name!r}")

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return self.bits.shape[1]

    @property
    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[d > 0].min())

    def random_indices(self, n: int, rng) -> np.ndarray:
        return rng.integers(self.size, size=n)

    def demap(self, indices) -> np.ndarray:
        """Bit array of shape ``(n * bits_per_symbol,)``."""
        return self.bits[np.asarray(indices)].reshape(-1)


@dataclass(frozen=True)
class DetectionResult:
    indices: np.ndarray = field(repr=False)
    symbols: np.ndarray = field(repr=False)
    bits: np.ndarray = field(repr=False)
    bit_errors: int | None = None

    @property
    def num_bits(self) -> int:
        return int(self.bits.size)


def min_distance_decode(soft, alphabet: Alphabet, true_indices=None) -> DetectionResult:
    """Nearest constellation point per sample; ties resolve to the lowest index."""
    s = np.asarray(soft, dtype=complex)
    d = np.abs(s.reshape(-1)[:, None] - alphabet.points[None, :])
    idx = np.argmin(d, axis=1).reshape(s.shape)
    bits = alphabet.demap(idx)
    errors = None
    if true_indices is not None:
        ref = alphabet.demap(np.asarray(true_indices).reshape(idx.shape))
        errors = int(np.count_nonzero(ref != bits))
    return DetectionResult(idx, alphabet.points[idx], bits, errors)


def lmmse_equalize(
    y,
    H_hat: ChannelMatrix,
    C: NoiseCovariance | None,
    Es: float,
    active=None,
    *,
    white: bool = False,
) -> np.ndarray:
    """``Es H_a^H (Es H_a H_a^H + C)^{-1} y`` with ``H_a`` the active columns.

    ``y`` may be an :class:`RxFrame`, a vector, or an ``(MN, F)`` array of
    frames that share the channel. ``C=None`` gives the noiseless limit.
    ``white=True`` replaces ``C`` by its white approximation.
    """
    Y = y.y if isinstance(y, RxFrame) else np.asarray(y, dtype=complex)
    H = H_hat.H if active is None else H_hat.H[:, np.asarray(active)]
    MN = H_hat.grid.MN
    if Y.shape[0] != MN:
        raise ValueError(f"y must have {MN} rows")
    A = Es * (H @ H.conj().T)
    if C is not None:
        A += (C.white() if white else C).C
    A = 0.5 * (A + A.conj().T)
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            z = scipy.linalg.solve(A, Y, assume_a="her", check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            cond = np.linalg.cond(A)
            raise EqualizationError(f"LMMSE system is singular (condition number {cond:.3e})") from exc
    return Es * (H.conj().T @ z)


def cancel_pilot(y: RxFrame, H_hat: ChannelMatrix, layout: FrameLayout) -> RxFrame:
    """Subtract the estimated pilot response from an embedded frame."""
    if layout.kind is FrameKind.EXCLUSIVE:
        return y
    return RxFrame(y.grid, y.y - H_hat.H[:, layout.pilot_vec_index] * layout.alpha)
