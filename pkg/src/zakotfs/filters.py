"""DD pulse-shaping filters, closed-form effective channels and the
matched-filter noise covariance."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .channels import PathSet
from .grid import DDGridConfig, unit_phase

__all__ = [
    "FilterKind",
    "PulseFilter",
    "EffChannelGrid",
    "NoiseCovariance",
    "eval_wtx",
    "eval_wrx",
    "heff_closed_form",
    "heff_closed_form_at",
    "noise_covariance",
    "sidelobe_energy_fraction",
    "GAUSS_Q_RANGE",
]

GAUSS_Q_RANGE = 20
"""Half-range of the q1, q2 sums in the Gaussian noise covariance."""


class FilterKind(str, Enum):
    SINC = "sinc"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class PulseFilter:
    kind: FilterKind = FilterKind.SINC
    alpha_tau: float = 1.584
    alpha_nu: float = 1.584

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        if not (self.alpha_tau > 0 and self.alpha_nu > 0):
            raise ValueError("Gaussian spreading factors must be positive")

    @classmethod
    def sinc(cls) -> "PulseFilter":
        return cls(FilterKind.SINC)

    @classmethod
    def gaussian(cls, alpha_tau: float = 1.584, alpha_nu: float = 1.584) -> "PulseFilter":
        return cls(FilterKind.GAUSSIAN, alpha_tau, alpha_nu)

    def axis_profiles(self, grid: DDGridConfig):
        """Real, even delay and Doppler factors ``a(tau)``, ``b(nu)`` with
        ``w_tx(tau, nu) = a(tau) * b(nu)``."""
        B, T = grid.B, grid.T
        if self.kind is FilterKind.SINC:
            return (lambda t: np.sqrt(B) * np.sinc(B * t)), (lambda v: np.sqrt(T) * np.sinc(T * v))
        at, an = self.alpha_tau, self.alpha_nu
        ca = (2 * at * B**2 / np.pi) ** 0.25
        cb = (2 * an * T**2 / np.pi) ** 0.25
        return (
            lambda t: ca * np.exp(-at * B**2 * np.square(t)),
            lambda v: cb * np.exp(-an * T**2 * np.square(v)),
        )


def eval_wtx(filt: PulseFilter, tau, nu, grid: DDGridConfig):
    """Transmit filter ``w_tx(tau, nu)``."""
    a, b = filt.axis_profiles(grid)
    out = a(np.asarray(tau, dtype=float)) * b(np.asarray(nu, dtype=float))
    return out.astype(complex) if np.ndim(out) else complex(out)


def eval_wrx(filt: PulseFilter, tau, nu, grid: DDGridConfig):
    """Matched receive filter ``conj(w_tx(-tau, -nu)) * exp(j*2*pi*tau*nu)``."""
    tau = np.asarray(tau, dtype=float)
    nu = np.asarray(nu, dtype=float)
    out = np.conj(eval_wtx(filt, -tau, -nu, grid)) * np.exp(2j * np.pi * tau * nu)
    return out if np.ndim(out) else complex(out)


@dataclass(frozen=True)
class EffChannelGrid:
    """``h_eff[k, l]`` on ``k in [-(3M-1), 3M-1]``, ``l in [-(3N-1), 3N-1]``."""

    grid: DDGridConfig
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.shape(self.grid):
            raise ValueError(f"h_eff support must be {self.shape(self.grid)}, got {v.shape}")
        object.__setattr__(self, "values", v)

    @staticmethod
    def shape(grid: DDGridConfig) -> tuple[int, int]:
        return 6 * grid.M - 1, 6 * grid.N - 1

    @property
    def origin(self) -> tuple[int, int]:
        return -(3 * self.grid.M - 1), -(3 * self.grid.N - 1)

    @staticmethod
    def index_axes(grid: DDGridConfig) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.arange(-(3 * grid.M - 1), 3 * grid.M),
            np.arange(-(3 * grid.N - 1), 3 * grid.N),
        )

    @classmethod
    def zeros(cls, grid: DDGridConfig) -> "EffChannelGrid":
        return cls(grid, np.zeros(cls.shape(grid), dtype=complex))

    @classmethod
    def impulse(cls, grid: DDGridConfig, k: int = 0, l: int = 0, amp: complex = 1.0) -> "EffChannelGrid":
        g = cls.zeros(grid)
        g.values[k + 3 * grid.M - 1, l + 3 * grid.N - 1] = amp
        return g

    def at(self, k, l):
        return self.values[np.asarray(k) + 3 * self.grid.M - 1, np.asarray(l) + 3 * self.grid.N - 1]

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def __add__(self, other: "EffChannelGrid") -> "EffChannelGrid":
        return EffChannelGrid(self.grid, self.values + other.values)

    def __sub__(self, other: "EffChannelGrid") -> "EffChannelGrid":
        return EffChannelGrid(self.grid, self.values - other.values)

    def __mul__(self, c) -> "EffChannelGrid":
        return EffChannelGrid(self.grid, self.values * c)

    __rmul__ = __mul__


def heff_closed_form_at(filt: PulseFilter, paths: PathSet, grid: DDGridConfig, k, l) -> np.ndarray:
    """Closed-form ``h_eff`` at (possibly non-integer) DD indices ``k``, ``l``.

    Output has the broadcast shape of ``k`` and ``l``.
    """
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    shape = np.broadcast(k, l).shape
    tau = (k * grid.delay_res)[..., None]
    nu = (l * grid.doppler_res)[..., None]
    h, ti, vi = paths.gains, paths.delays, paths.dopplers
    B, T = grid.B, grid.T
    # exp(j*pi*k*l/(MN)): exact integer reduction when the indices are integral
    if np.all(k == np.round(k)) and np.all(l == np.round(l)):
        grid_phase = unit_phase(np.round(k).astype(np.int64) * np.round(l).astype(np.int64), 2 * grid.MN)
    else:
        grid_phase = np.exp(1j * np.pi * k * l / grid.MN)
    grid_phase = np.broadcast_to(grid_phase, shape)[..., None]
    path_phase = np.exp(-1j * np.pi * ti * vi)
    if filt.kind is FilterKind.SINC:
        abs_tau = np.abs(tau)
        terms = (
            (1.0 - abs_tau / T)
            * (1.0 - np.abs(vi) / B)
            * np.sinc((nu - vi) * (T - abs_tau))
            * (np.abs(vi) < B)
            * np.sinc((tau - ti) * (B - np.abs(vi)))
            * (abs_tau < T)
        )
    else:
        at, an = filt.alpha_tau, filt.alpha_nu
        terms = np.exp(
            -0.5 * (at * B**2 * (ti - tau) ** 2 + an * T**2 * (vi - nu) ** 2)
        ) * np.exp(-0.5 * np.pi**2 * (vi**2 / (at * B**2) + tau**2 / (an * T**2)))
    return np.sum(h * path_phase * grid_phase * terms, axis=-1).reshape(shape)


def heff_closed_form(filt: PulseFilter, paths: PathSet, grid: DDGridConfig) -> EffChannelGrid:
    """Effective channel sampled on the full extended grid."""
    if len(paths) == 0:
        raise ValueError("path set is empty")
    kk, ll = EffChannelGrid.index_axes(grid)
    vals = heff_closed_form_at(filt, paths, grid, kk[:, None], ll[None, :])
    return EffChannelGrid(grid, vals)


@dataclass(frozen=True)
class NoiseCovariance:
    """Covariance of the matched-filtered DD noise, indexed by ``l*M + k``."""

    grid: DDGridConfig
    C: np.ndarray = field(repr=False)
    N0: float = 1.0

    def scaled(self, N0: float) -> "NoiseCovariance":
        return NoiseCovariance(self.grid, self.C * (N0 / self.N0), N0)

    def factor(self) -> np.ndarray:
        """``L`` with ``L @ L^H == C``; roundoff-negative eigenvalues clipped at 0."""
        return _psd_factor(self.C)

    def white(self) -> "NoiseCovariance":
        """White approximation with the same average per-sample variance."""
        s = float(np.real(np.trace(self.C))) / self.grid.MN
        return NoiseCovariance(self.grid, s * np.eye(self.grid.MN, dtype=complex), self.N0)


def _psd_factor(C: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(C)
    tol = 1e-8 * max(float(np.real(np.trace(C))) / C.shape[0], 0.0)
    if w.min() < -tol:
        raise ValueError(f"covariance is not PSD (min eigenvalue {w.min():.3e})")
    return V * np.sqrt(np.clip(w, 0.0, None))


def noise_covariance(filt: PulseFilter, grid: DDGridConfig, N0: float = 1.0) -> NoiseCovariance:
    """Matched-filter noise covariance ``E[n n^H]`` for the sinc or Gaussian filter."""
    if not N0 > 0:
        raise ValueError("N0 must be positive")
    C = _unit_covariance(filt, grid) * N0
    return NoiseCovariance(grid, C, N0)


@lru_cache(maxsize=8)
def _unit_covariance(filt: PulseFilter, grid: DDGridConfig) -> np.ndarray:
    M, N = grid.M, grid.N
    B, T, tp = grid.B, grid.T, grid.tau_p
    k = np.arange(M)
    if filt.kind is FilterKind.SINC:
        q = np.arange(-(N // 2), N // 2 + 1)
        lo = np.ceil(-N / 2 - k / M)
        hi = np.floor(N / 2 - k / M)
        amp = ((q[None, :] >= lo[:, None]) & (q[None, :] <= hi[:, None])).astype(float)
        scale = tp / T

        def kernel(dt):
            return np.sinc(B * dt)
    else:
        q = np.arange(-GAUSS_Q_RANGE, GAUSS_Q_RANGE + 1)
        an, at = filt.alpha_nu, filt.alpha_tau
        amp = np.exp(-(np.pi**2) * tp**2 / (an * T**2) * (q[None, :] + k[:, None] / M) ** 2)
        scale = tp / T * np.sqrt(2 * np.pi / an)

        def kernel(dt):
            return np.exp(-0.5 * at * B**2 * dt**2)

    # A[k, l, q] = amp(k, q) * exp(-j 2 pi q l / N)
    ph = unit_phase(-np.outer(np.arange(N), q), N)
    A = amp[:, None, :] * ph[None, :, :]
    # time offsets (k/M + q) * tau_p, kernel over all (k1,q1,k2,q2)
    t = (k[:, None] / M + q[None, :]) * tp
    K = kernel(t[:, :, None, None] - t[None, None, :, :])
    Tm = np.einsum("alq,aqbr->albr", A, K, optimize=True)
    C4 = np.einsum("albr,bmr->albm", Tm, A.conj(), optimize=True)
    # (k1, l1, k2, l2) -> row l1*M + k1, column l2*M + k2
    C = scale * C4.transpose(1, 0, 3, 2).reshape(grid.MN, grid.MN)
    C = 0.5 * (C + C.conj().T)
    C.setflags(write=False)
    return C


# Quadrature constants for the sidelobe measure: 2048 bins either side of the
# origin, 64 Gauss-Legendre nodes per bin.
_SIDELOBE_HALF_WIDTH = 2048
_SIDELOBE_NODES = 64


def _axis_energy(f, res: float, half_width: int, nodes: int) -> tuple[float, float]:
    """Energy of ``|f|^2`` inside ``[-res, res)`` and over ``[-W*res, W*res]``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    edges = np.arange(-half_width, half_width)
    pts = (edges[:, None] + x[None, :]) * res
    e = np.sum(np.abs(f(pts)) ** 2 * w[None, :], axis=1) * res
    inside = e[(edges >= -1) & (edges < 1)].sum()
    return float(inside), float(e.sum())


def sidelobe_energy_fraction(filt: PulseFilter, grid: DDGridConfig) -> float:
    """Fraction of ``|w_tx|^2`` outside ``[-tau_p/M, tau_p/M) x [-nu_p/N, nu_p/N)``."""
    a, b = filt.axis_profiles(grid)
    ia, ta = _axis_energy(a, grid.delay_res, _SIDELOBE_HALF_WIDTH, _SIDELOBE_NODES)
    ib, tb = _axis_energy(b, grid.doppler_res, _SIDELOBE_HALF_WIDTH, _SIDELOBE_NODES)
    return float(min(max(1.0 - (ia * ib) / (ta * tb), 0.0), 1.0))

