"""DD channel matrix construction, received-frame synthesis and the two
verification oracles (quadrature ``h_eff`` and the direct I/O sum)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import PathSet, make_rng
from .filters import (
    EffChannelGrid,
    FilterKind,
    NoiseCovariance,
    PulseFilter,
    eval_wrx,
    eval_wtx,
)
from .grid import DDGridConfig, DDIndex, QPFrame, unit_phase, unvectorize

__all__ = [
    "ChannelMatrix",
    "RxFrame",
    "QuadratureError",
    "build_H",
    "h_columns",
    "synthesize_rx",
    "heff_oracle",
    "io_oracle_direct",
]

M_MAX = N_MAX = 2


class QuadratureError(RuntimeError):
    """The adaptive quadrature did not reach its tolerance."""


@dataclass(frozen=True)
class ChannelMatrix:
    """``H[l'M + k', lM + k]``."""

    grid: DDGridConfig
    H: np.ndarray = field(repr=False)

    def __matmul__(self, x):
        return self.H @ x

    def nmse(self, estimate: "ChannelMatrix") -> float:
        return float(np.sum(np.abs(self.H - estimate.H) ** 2) / np.sum(np.abs(self.H) ** 2))


@dataclass(frozen=True)
class RxFrame:
    grid: DDGridConfig
    y: np.ndarray = field(repr=False)

    def as_grid(self) -> np.ndarray:
        """``y[k', l']`` as an ``(M, N)`` array."""
        return unvectorize(self.y, self.grid)


def build_H(heff: EffChannelGrid, grid: DDGridConfig | None = None) -> ChannelMatrix:
    """Dense DD channel matrix from ``h_eff`` with ``|m|, |n| <= 2``.

    The phase of each ``(m, n)`` term factors as
    ``e^{j2pi (l'-l) k / MN} * e^{j2pi n l' / N} * e^{-j2pi m k / M}``, so the
    ``m`` sum is formed once per ``n`` on the small ``(k'-k, l'-l, k)`` grid
    before being scattered into ``H``.
    """
    grid = grid or heff.grid
    if heff.grid != grid or heff.values.shape != EffChannelGrid.shape(grid):
        raise ValueError("h_eff support does not match the grid")
    M, N, MN = grid.M, grid.N, grid.MN
    V = heff.values
    ok, ol = 3 * M - 1, 3 * N - 1
    k = np.arange(M)
    l = np.arange(N)
    dk = np.arange(-(M - 1), M)
    dl = np.arange(-(N - 1), N)
    ik = (k[:, None] - k[None, :]) + M - 1  # [k', k] -> dk slot
    il = (l[:, None] - l[None, :]) + N - 1  # [l', l] -> dl slot
    H4 = np.zeros((N, M, N, M), dtype=complex)  # [l', k', l, k]
    for n in range(-N_MAX, N_MAX + 1):
        R = np.zeros((dk.size, dl.size, M), dtype=complex)
        for m in range(-M_MAX, M_MAX + 1):
            R += V[(dk - n * M + ok)[:, None, None], (dl - m * N + ol)[None, :, None]] * unit_phase(-m * k, M)
        H4 += unit_phase(n * l, N)[:, None, None, None] * R[ik[None, :, None, :], il[:, None, :, None], k]
    H4 *= unit_phase((l[:, None] - l[None, :])[:, None, :, None] * k, MN)
    return ChannelMatrix(grid, H4.reshape(MN, MN))


def h_columns(heff_values: np.ndarray, grid: DDGridConfig, k: int, l: int) -> np.ndarray:
    """Column ``l*M + k`` of ``build_H`` for one or a stack of ``h_eff`` grids.

    ``heff_values`` has shape ``(6M-1, 6N-1)`` or ``(P, 6M-1, 6N-1)``; the
    result has shape ``(MN,)`` or ``(P, MN)``.
    """
    V = np.asarray(heff_values)
    single = V.ndim == 2
    if single:
        V = V[None]
    M, N, MN = grid.M, grid.N, grid.MN
    ok, ol = 3 * M - 1, 3 * N - 1
    kp = np.arange(M)[:, None]
    lp = np.arange(N)[None, :]
    out = np.zeros((V.shape[0], M, N), dtype=complex)
    for n in range(-N_MAX, N_MAX + 1):
        for m in range(-M_MAX, M_MAX + 1):
            a = kp - k - n * M
            b = lp - l - m * N
            ph = unit_phase(n * l * M + b * (k + n * M), MN)
            out += V[:, a + ok, b + ol] * ph[None]
    cols = out.transpose(0, 2, 1).reshape(V.shape[0], MN)
    return cols[0] if single else cols


def synthesize_rx(H: ChannelMatrix, x, C: NoiseCovariance | None, snr_scaling: float = 1.0, rng=None,
                  *, noise_factor: np.ndarray | None = None) -> RxFrame:
    """``y = H x + n`` with ``n ~ CN(0, snr_scaling * C)``.

    ``noise_factor`` may carry a precomputed ``L`` with ``L L^H = C``.
    """
    grid = H.grid
    if isinstance(x, QPFrame):
        x = x.vec()
    x = np.asarray(x, dtype=complex)
    if x.shape != (grid.MN,):
        raise ValueError(f"x must have length {grid.MN}")
    y = H.H @ x
    if C is None or snr_scaling == 0:
        return RxFrame(grid, y)
    L = noise_factor if noise_factor is not None else C.factor()
    rng = make_rng(rng)
    w = (rng.standard_normal(grid.MN) + 1j * rng.standard_normal(grid.MN)) / np.sqrt(2.0)
    return RxFrame(grid, y + np.sqrt(snr_scaling) * (L @ w))


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def io_oracle_direct(
    heff: EffChannelGrid | Callable,
    x: QPFrame,
    grid: DDGridConfig | None = None,
    m_max: int = 2,
    n_max: int = 2,
) -> RxFrame:
    """Noiseless ``y[k', l']`` from the quadruple sum over ``m, n, k, l``.

    ``heff`` is either a sampled grid (zero outside its support) or a
    callable ``f(k, l)`` on integer index arrays.
    """
    grid = grid or x.grid
    M, N = grid.M, grid.N
    if isinstance(heff, EffChannelGrid):
        g = heff
        kmax, lmax = 3 * M - 1, 3 * N - 1

        def f(kk, ll):
            inside = (np.abs(kk) <= kmax) & (np.abs(ll) <= lmax)
            out = np.zeros(np.broadcast(kk, ll).shape, dtype=complex)
            kk, ll = np.broadcast_arrays(kk, ll)
            out[inside] = g.at(kk[inside], ll[inside])
            return out
    else:
        f = heff
    kp = np.arange(M)[:, None]
    lp = np.arange(N)[None, :]
    y = np.zeros((M, N), dtype=complex)
    for k, l in zip(*np.nonzero(x.samples)):
        xkl = x.samples[k, l]
        for m in range(-m_max, m_max + 1):
            for n in range(-n_max, n_max + 1):
                h = f(kp - k - n * M, lp - l - m * N)
                y += (
                    h
                    * xkl
                    * np.exp(2j * np.pi * n * l / N)
                    * np.exp(2j * np.pi * (lp - l - m * N) * (k + n * M) / (M * N))
                )
    return RxFrame(grid, y.ravel(order="F"))


def _gl_panels(lo: np.ndarray, hi: np.ndarray, panels: int, nodes: int):
    """Composite Gauss-Legendre nodes/weights on ``[lo, hi]`` (broadcast over leading dims)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    u = (edges[:-1, None] + 0.5 * (x[None, :] + 1.0) / panels).ravel()
    wu = np.tile(0.5 * w / panels, panels)
    span = (hi - lo)[..., None]
    return lo[..., None] + span * u, span * wu


def _oracle_gaussian(filt, paths, grid, tau, nu, rtol, max_level=4):
    """Direct 2-D quadrature of ``w_rx *s (h *s w_tx)`` over ``(tau', nu')``."""
    bins = 6.0
    out = np.zeros(tau.shape, dtype=complex)
    for h, ti, vi in zip(paths.gains, paths.delays, paths.dopplers):
        ct = 0.5 * (tau - ti)
        cv = 0.5 * (nu - vi)
        prev = None
        for level in range(max_level):
            panels, nodes = 4 * (level + 1), 16
            tp, wt = _gl_panels(ct - bins * grid.delay_res, ct + bins * grid.delay_res, panels, nodes)
            vp, wv = _gl_panels(cv - bins * grid.doppler_res, cv + bins * grid.doppler_res, panels, nodes)
            cur = np.empty(tau.shape, dtype=complex)
            for s in range(0, tau.size, 64):
                sl = slice(s, s + 64)
                T1 = tp[sl][:, :, None]
                V1 = vp[sl][:, None, :]
                t0 = tau[sl][:, None, None]
                v0 = nu[sl][:, None, None]
                # h *s w_tx evaluated at (tau - tau', nu - nu')
                td, vd = t0 - T1, v0 - V1
                g = eval_wtx(filt, td - ti, vd - vi, grid) * np.exp(2j * np.pi * vi * (td - ti))
                f = eval_wrx(filt, T1, V1, grid) * g * np.exp(2j * np.pi * V1 * (t0 - T1))
                cur[sl] = np.einsum("pij,pi,pj->p", f, wt[sl], wv[sl])
            if prev is not None:
                scale = max(np.abs(cur).max(), 1e-300)
                if np.abs(cur - prev).max() <= rtol * scale:
                    break
            prev = cur
        else:
            raise QuadratureError("Gaussian h_eff quadrature did not converge")
        out += h * cur
    return out


def _oracle_sinc(filt, paths, grid, tau, nu, rtol, max_level=5):
    """Spectral-domain quadrature for the band/time-limited sinc filter.

    The twisted-convolution integral is separable once the Dirac path is
    reduced; each factor is evaluated as an integral over the compact
    frequency (delay factor) or time (Doppler factor) support of the filter.
    """
    B, T = grid.B, grid.T
    out = np.zeros(tau.shape, dtype=complex)

    def band_integral(lo, hi, height, freq):
        # int_{lo}^{hi} height * exp(j 2 pi s freq) ds, lo/hi broadcast, adaptive in node count
        prev = None
        for level in range(max_level):
            s, w = _gl_panels(lo, hi, 2**level, 16)
            cur = height * np.sum(w * np.exp(2j * np.pi * s * freq[..., None]), axis=-1)
            if prev is not None:
                scale = max(np.abs(cur).max(), 1e-300)
                if np.abs(cur - prev).max() <= rtol * scale:
                    return cur
            prev = cur
        raise QuadratureError("sinc h_eff spectral quadrature did not converge")

    for h, ti, vi in zip(paths.gains, paths.delays, paths.dopplers):
        u = tau - ti
        # delay factor: int ahat(f + nu_i) ahat(f) e^{j2 pi f u} df, ahat = rect(f/B)/sqrt(B)
        lo = np.full(u.shape, max(-B / 2, -B / 2 - vi))
        hi = np.full(u.shape, min(B / 2, B / 2 - vi))
        hi = np.maximum(hi, lo)
        A = band_integral(lo, hi, 1.0 / B, u)
        # Doppler factor: int bhat(t - tau) bhat(t) e^{j2 pi t (nu - nu_i)} dt, bhat = rect(t/T)/sqrt(T)
        lo2 = np.maximum(-T / 2, tau - T / 2)
        hi2 = np.maximum(np.minimum(T / 2, tau + T / 2), lo2)
        Bv = band_integral(lo2, hi2, 1.0 / T, nu - vi)
        out += h * np.exp(2j * np.pi * vi * u) * A * Bv
    return out


def heff_oracle(
    filt: PulseFilter,
    paths: PathSet,
    grid: DDGridConfig,
    points,
    rtol: float = 1e-8,
) -> np.ndarray:
    """``h_eff`` at integer DD points by numerical integration.

    ``points`` is a sequence of :class:`DDIndex` or ``(k, l)`` pairs, or a
    ``(P, 2)`` integer array. Raises :class:`QuadratureError` when the
    refinement sequence does not settle within ``rtol`` (relative to the
    largest value returned).
    """
    pts = np.array([(p.k, p.l) if isinstance(p, DDIndex) else tuple(p) for p in points], dtype=float)
    if pts.size == 0:
        return np.zeros(0, dtype=complex)
    tau = pts[:, 0] * grid.delay_res
    nu = pts[:, 1] * grid.doppler_res
    if len(paths) == 0:
        return np.zeros(len(pts), dtype=complex)
    if filt.kind is FilterKind.GAUSSIAN:
        return _oracle_gaussian(filt, paths, grid, tau, nu, rtol)
    return _oracle_sinc(filt, paths, grid, tau, nu, rtol)
