"""Delay-Doppler grid geometry, quasi-periodic frames, twisted convolution
and the discrete Zak transform pair.

Conventions
-----------
* Delay index ``k`` runs along axis 0, Doppler index ``l`` along axis 1.
* Frames are vectorized as ``vec[l*M + k] = frame[k, l]`` (column-major on
  the ``(M, N)`` array), which is ``frame.ravel(order="F")``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DDGridConfig",
    "DDIndex",
    "QPFrame",
    "DDArray",
    "qp_extend",
    "twisted_convolve_discrete",
    "zak_forward",
    "zak_inverse",
    "vectorize",
    "unvectorize",
    "unit_phase",
]


def unit_phase(p, q) -> np.ndarray:
    """``exp(j*2*pi*p/q)`` with the integer numerator reduced modulo ``q`` first."""
    p = np.mod(np.asarray(p, dtype=np.int64), q)
    return np.exp(2j * np.pi * p / q)


@dataclass(frozen=True)
class DDGridConfig:
    """Frame geometry: ``M`` delay bins in ``tau_p``, ``N`` Doppler bins in ``nu_p``."""

    M: int
    N: int
    nu_p: float = 15e3

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N:
            raise ValueError("M and N must be integers")
        if self.M < 2 or self.M % 2:
            raise ValueError(f"M must be even and >= 2, got {self.M}")
        if self.N < 2 or self.N % 2:
            raise ValueError(f"N must be even and >= 2, got {self.N}")
        if not self.nu_p > 0:
            raise ValueError("nu_p must be positive")

    @property
    def tau_p(self) -> float:
        return 1.0 / self.nu_p

    @property
    def B(self) -> float:
        return self.M * self.nu_p

    @property
    def T(self) -> float:
        return self.N * self.tau_p

    @property
    def MN(self) -> int:
        return self.M * self.N

    @property
    def delay_res(self) -> float:
        return self.tau_p / self.M

    @property
    def doppler_res(self) -> float:
        return self.nu_p / self.N

    @property
    def pilot_pos(self) -> tuple[int, int]:
        return self.M // 2, self.N // 2


@dataclass(frozen=True)
class DDIndex:
    k: int
    l: int


@dataclass(frozen=True)
class QPFrame:
    """Fundamental-period samples of a quasi-periodic DD signal.

    ``samples[k, l]`` is the value at ``(k*tau_p/M, l*nu_p/N)``. Use
    :func:`qp_extend` for indices outside the fundamental period.
    """

    grid: DDGridConfig
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.M, self.grid.N):
            raise ValueError(
                f"samples must have shape {(self.grid.M, self.grid.N)}, got {s.shape}"
            )
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def vec(self) -> np.ndarray:
        return vectorize(self.samples)

    @classmethod
    def from_vec(cls, grid: DDGridConfig, v) -> "QPFrame":
        return cls(grid, unvectorize(v, grid))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


def vectorize(frame: np.ndarray) -> np.ndarray:
    return np.asarray(frame).ravel(order="F")


def unvectorize(v, grid: DDGridConfig) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (grid.MN,):
        raise ValueError(f"expected a vector of length {grid.MN}, got shape {v.shape}")
    return v.reshape((grid.M, grid.N), order="F")


def qp_extend(frame: QPFrame, idx: DDIndex | tuple[int, int]) -> complex:
    """Value of the quasi-periodic extension at an arbitrary integer DD index.

    ``x[k + n*M, l + m*N] = x[k, l] * exp(j*2*pi*n*l/N)``.
    """
    k, l = (idx.k, idx.l) if isinstance(idx, DDIndex) else idx
    M, N = frame.grid.M, frame.grid.N
    n, k0 = divmod(int(k), M)
    l0 = int(l) % N
    return complex(frame.samples[k0, l0] * unit_phase(n * l0, N))


@dataclass(frozen=True)
class DDArray:
    """Dense samples on a rectangular patch of the integer DD lattice.

    ``values[i, j]`` sits at delay index ``k0 + i`` and Doppler index ``l0 + j``.
    """

    grid: DDGridConfig
    values: np.ndarray = field(repr=False)
    k0: int = 0
    l0: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2:
            raise ValueError("values must be 2-D")
        object.__setattr__(self, "values", v)

    @classmethod
    def impulse(cls, grid: DDGridConfig, k: int, l: int, amp: complex = 1.0) -> "DDArray":
        return cls(grid, np.array([[amp]], dtype=complex), k, l)

    @property
    def k_range(self) -> range:
        return range(self.k0, self.k0 + self.values.shape[0])

    @property
    def l_range(self) -> range:
        return range(self.l0, self.l0 + self.values.shape[1])

    def at(self, k: int, l: int) -> complex:
        i, j = k - self.k0, l - self.l0
        if 0 <= i < self.values.shape[0] and 0 <= j < self.values.shape[1]:
            return complex(self.values[i, j])
        return 0j


def twisted_convolve_discrete(
    a: DDArray, b: DDArray, grid: DDGridConfig | None = None, *, cell_area: bool = False
) -> DDArray:
    """Discrete twisted convolution on the lattice ``(tau_p/M, nu_p/N)``.

    ``c[k, l] = sum a[k', l'] b[k-k', l-l'] exp(j*2*pi*l'*(k-k')/(M*N))``.
    The output covers the Minkowski sum of the input supports. With
    ``cell_area=True`` the sum is scaled by ``(tau_p/M)*(nu_p/N)`` so that it
    approximates the continuous integral.
    """
    grid = grid or a.grid
    if a.grid != grid or b.grid != grid:
        raise ValueError("twisted convolution needs both inputs on the same grid")
    MN = grid.MN
    ma, na = a.values.shape
    mb, nb = b.values.shape
    out = np.zeros((ma + mb - 1, na + nb - 1), dtype=complex)
    # k - k' = kb index of b, so the phase depends only on (l' of a, k of b)
    kb = np.arange(b.k0, b.k0 + mb)
    for i, j in zip(*np.nonzero(a.values)):
        lp = a.l0 + j
        phase = unit_phase(lp * kb, MN)[:, None]
        out[i : i + mb, j : j + nb] += a.values[i, j] * phase * b.values
    if cell_area:
        out *= grid.delay_res * grid.doppler_res
    return DDArray(grid, out, a.k0 + b.k0, a.l0 + b.l0)


def zak_forward(x, grid: DDGridConfig) -> QPFrame:
    """Discrete Zak transform of ``M*N`` time samples taken at rate ``B``.

    ``Z[k, l] = sqrt(tau_p/M) * sum_q x[k + q*M] exp(-j*2*pi*l*q/N)``.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (grid.MN,):
        raise ValueError(f"expected {grid.MN} time samples, got shape {x.shape}")
    # x[k + q*M] -> xq[k, q]
    xq = x.reshape((grid.N, grid.M)).T
    z = np.fft.fft(xq, axis=1) * np.sqrt(grid.tau_p / grid.M)
    return QPFrame(grid, z)


def zak_inverse(frame: QPFrame) -> np.ndarray:
    """Inverse of :func:`zak_forward`."""
    grid = frame.grid
    xq = np.fft.ifft(frame.samples, axis=1) / np.sqrt(grid.tau_p / grid.M)
    return xq.T.reshape(grid.MN)
