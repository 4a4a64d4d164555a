"""Pilot frame layouts: exclusive and embedded frames, read-off regions and
the Algorithm-1 detection mask."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .filters import EffChannelGrid
from .grid import DDGridConfig, QPFrame

__all__ = [
    "FrameKind",
    "Region",
    "FrameLayout",
    "path_extent",
    "make_exclusive_frame",
    "make_embedded_frame",
    "make_mask",
]


class FrameKind(str, Enum):
    EXCLUSIVE = "exclusive"
    EMBEDDED = "embedded"


def path_extent(tau_max: float, nu_max: float, grid: DDGridConfig) -> tuple[int, int]:
    """``(k_max, l_max)``: channel spread rounded up to whole DD bins."""
    # guard against 3.0000000001 from float division of exact multiples
    k = math.ceil(tau_max / grid.delay_res - 1e-9)
    l = math.ceil(abs(nu_max) / grid.doppler_res - 1e-9)
    return max(k, 0), max(l, 0)


@dataclass(frozen=True)
class Region:
    """A set of DD indices stored as a boolean mask.

    ``domain="frame"`` regions live on the ``(M, N)`` fundamental grid
    (``R_*``); ``domain="heff"`` regions live on the extended ``h_eff``
    support (``F_*``, ``S_kappa``).
    """

    grid: DDGridConfig
    name: str
    domain: str
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        want = (self.grid.M, self.grid.N) if self.domain == "frame" else EffChannelGrid.shape(self.grid)
        if self.domain not in ("frame", "heff") or m.shape != want:
            raise ValueError(f"bad region {self.name!r}: domain {self.domain!r}, shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    # -- named constructors -------------------------------------------------

    @classmethod
    def _frame_rows(cls, grid, name, lo, hi):
        k = np.arange(grid.M)
        rows = (k >= lo) & (k <= hi)
        return cls(grid, name, "frame", np.repeat(rows[:, None], grid.N, axis=1))

    @classmethod
    def _heff_box(cls, grid, name, a_lo, a_hi, b_lo, b_hi):
        a, b = EffChannelGrid.index_axes(grid)
        m = ((a >= a_lo) & (a <= a_hi))[:, None] & ((b >= b_lo) & (b <= b_hi))[None, :]
        return cls(grid, name, "heff", m)

    @classmethod
    def r_exc(cls, grid: DDGridConfig) -> "Region":
        return cls._frame_rows(grid, "R_exc", 0, grid.M - 1)

    @classmethod
    def f_exc(cls, grid: DDGridConfig) -> "Region":
        M, N = grid.M, grid.N
        return cls._heff_box(grid, "F_exc", -M // 2, M // 2 - 1, -N // 2, N // 2 - 1)

    @classmethod
    def r_emb(cls, grid: DDGridConfig, k_max: int) -> "Region":
        _check_embedded(grid, k_max)
        return cls._frame_rows(grid, "R_emb", grid.M // 2 - 2 * k_max, grid.M // 2 + 2 * k_max)

    @classmethod
    def f_emb(cls, grid: DDGridConfig, k_max: int) -> "Region":
        _check_embedded(grid, k_max)
        N = grid.N
        return cls._heff_box(grid, "F_emb", -2 * k_max, 2 * k_max, -N // 2, N // 2 - 1)

    @classmethod
    def s_kappa(cls, grid: DDGridConfig, kappa: int) -> "Region":
        """``{-kM/2 .. kM/2-1} x {-kN/2 .. kN/2-1}`` clipped to the ``h_eff`` support."""
        if int(kappa) != kappa or kappa < 1:
            raise ValueError(f"kappa must be a positive integer, got {kappa}")
        M, N = grid.M, grid.N
        return cls._heff_box(
            grid, f"S_{kappa}", -kappa * M // 2, kappa * M // 2 - 1, -kappa * N // 2, kappa * N // 2 - 1
        )

    # -- queries --------------------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def indices(self) -> np.ndarray:
        """``(n, 2)`` integer DD indices in row-major order."""
        i, j = np.nonzero(self.mask)
        if self.domain == "heff":
            i = i - (3 * self.grid.M - 1)
            j = j - (3 * self.grid.N - 1)
        return np.stack([i, j], axis=1)

    def __contains__(self, idx) -> bool:
        k, l = idx
        if self.domain == "heff":
            k, l = k + 3 * self.grid.M - 1, l + 3 * self.grid.N - 1
        r, c = self.mask.shape
        return 0 <= k < r and 0 <= l < c and bool(self.mask[k, l])

    def vec_indices(self) -> np.ndarray:
        """Sorted vectorized indices ``l*M + k`` of a frame-domain region."""
        if self.domain != "frame":
            raise ValueError("vec_indices is only defined for frame regions")
        return np.flatnonzero(self.mask.ravel(order="F"))


def _check_embedded(grid: DDGridConfig, k_max: int) -> None:
    if int(k_max) != k_max or k_max < 0:
        raise ValueError(f"k_max must be a non-negative integer, got {k_max}")
    if 4 * k_max > grid.M // 2 - 1:
        raise ValueError(f"guard rows M/2 +- 4*k_max exceed the frame for M={grid.M}, k_max={k_max}")


def make_mask(grid: DDGridConfig, k_max: int, l_max: int, within: Region | None = None) -> np.ndarray:
    """Algorithm-1 mask: ones on ``{M/2..M/2+k_max} x {N/2-l_max..N/2+l_max}``.

    ``within`` optionally intersects the window with a frame region
    (``R_emb`` for embedded frames).
    """
    M, N = grid.M, grid.N
    if not (0 <= k_max < M // 2 and 0 <= l_max < N // 2):
        raise ValueError(f"need 0 <= k_max < M/2 and 0 <= l_max < N/2, got ({k_max}, {l_max})")
    mask = np.zeros((M, N), dtype=bool)
    mask[M // 2 : M // 2 + k_max + 1, N // 2 - l_max : N // 2 + l_max + 1] = True
    if within is not None:
        if within.domain != "frame":
            raise ValueError("mask can only be intersected with a frame region")
        mask &= within.mask
    return mask


@dataclass(frozen=True)
class FrameLayout:
    """Where pilot, guard and data bins sit in a frame.

    For exclusive frames the guard is every bin except the pilot and ``D``
    is empty. For embedded frames the guard is ``G' \\ {pilot}`` with
    ``G'`` the ``8*k_max + 1`` rows centred on the pilot.
    """

    kind: FrameKind
    grid: DDGridConfig
    alpha: complex
    k_max: int
    l_max: int
    guard: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)

    @classmethod
    def exclusive(cls, grid: DDGridConfig, alpha: complex, k_max: int, l_max: int) -> "FrameLayout":
        guard = np.ones((grid.M, grid.N), dtype=bool)
        guard[grid.pilot_pos] = False
        return cls(FrameKind.EXCLUSIVE, grid, complex(alpha), int(k_max), int(l_max), guard,
                   np.zeros_like(guard))

    @classmethod
    def embedded(cls, grid: DDGridConfig, alpha: complex, k_max: int, l_max: int) -> "FrameLayout":
        _check_embedded(grid, k_max)
        M = grid.M
        gprime = np.zeros((grid.M, grid.N), dtype=bool)
        gprime[M // 2 - 4 * k_max : M // 2 + 4 * k_max + 1, :] = True
        guard = gprime.copy()
        guard[grid.pilot_pos] = False
        return cls(FrameKind.EMBEDDED, grid, complex(alpha), int(k_max), int(l_max), guard, ~gprime)

    def __post_init__(self):
        for name in ("guard", "data"):
            a = np.asarray(getattr(self, name), dtype=bool)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def with_alpha(self, alpha: complex) -> "FrameLayout":
        return FrameLayout(self.kind, self.grid, complex(alpha), self.k_max, self.l_max, self.guard, self.data)

    @property
    def pilot_pos(self) -> tuple[int, int]:
        return self.grid.pilot_pos

    @property
    def pilot_vec_index(self) -> int:
        k, l = self.pilot_pos
        return l * self.grid.M + k

    @property
    def data_indices(self) -> np.ndarray:
        """Vectorized indices of ``D`` in ascending order."""
        return np.flatnonzero(self.data.ravel(order="F"))

    @property
    def num_data(self) -> int:
        return int(self.data.sum())

    @property
    def efficiency(self) -> float:
        """Fraction of bins carrying data."""
        return self.num_data / self.grid.MN

    @property
    def readoff_region(self) -> Region:
        if self.kind is FrameKind.EXCLUSIVE:
            return Region.r_exc(self.grid)
        return Region.r_emb(self.grid, self.k_max)

    @property
    def estimation_region(self) -> Region:
        """``F_exc`` or ``F_emb``: where the model-free estimate is kept."""
        if self.kind is FrameKind.EXCLUSIVE:
            return Region.f_exc(self.grid)
        return Region.f_emb(self.grid, self.k_max)

    @property
    def mask(self) -> np.ndarray:
        within = None if self.kind is FrameKind.EXCLUSIVE else self.readoff_region
        return make_mask(self.grid, self.k_max, self.l_max, within)

    def pilot_frame(self) -> QPFrame:
        return make_exclusive_frame(self.grid, self.alpha)

    def frame(self, data_symbols=None) -> QPFrame:
        """Pilot plus data on ``D`` (filled in vectorized order)."""
        x = np.zeros((self.grid.M, self.grid.N), dtype=complex)
        x[self.pilot_pos] = self.alpha
        if self.kind is FrameKind.EMBEDDED:
            d = np.zeros(self.num_data, dtype=complex) if data_symbols is None else np.asarray(data_symbols)
            if d.shape != (self.num_data,):
                raise ValueError(f"expected {self.num_data} data symbols, got shape {d.shape}")
            v = x.ravel(order="F")
            v[self.data_indices] = d
            x = v.reshape((self.grid.M, self.grid.N), order="F")
        elif data_symbols is not None and np.size(data_symbols):
            raise ValueError("exclusive pilot frames carry no data")
        return QPFrame(self.grid, x)


def make_exclusive_frame(grid: DDGridConfig, alpha: complex = 1.0) -> QPFrame:
    """Pilot ``alpha`` at ``(M/2, N/2)``, zeros elsewhere."""
    x = np.zeros((grid.M, grid.N), dtype=complex)
    x[grid.pilot_pos] = alpha
    return QPFrame(grid, x)


def make_embedded_frame(
    grid: DDGridConfig, alpha: complex, data_symbols, k_max: int, l_max: int = 0
) -> tuple[QPFrame, FrameLayout]:
    """Embedded pilot frame and its layout; ``data_symbols`` fill ``D`` in ``l*M + k`` order."""
    layout = FrameLayout.embedded(grid, alpha, k_max, l_max)
    return layout.frame(data_symbols), layout
