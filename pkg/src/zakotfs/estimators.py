"""Channel estimators: model-free read-off, the low-complexity model-dependent
estimator (Algorithm 1 plus LS gains) and their hybrid combination."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .channels import PathSet, make_rng
from .filters import EffChannelGrid, PulseFilter, heff_closed_form_at
from .frames import FrameKind, FrameLayout, Region
from .grid import DDGridConfig, QPFrame, unit_phase
from .io_relation import ChannelMatrix, RxFrame, build_H, h_columns

__all__ = [
    "DDEstimate",
    "Provenance",
    "HybridHeff",
    "EstimatorOutputs",
    "model_free_exclusive",
    "model_free_embedded",
    "detect_paths",
    "unit_path_grids",
    "ls_gains",
    "hybrid_combine",
    "build_H_kappa",
    "estimate_hybrid",
    "estimate_all",
]


@dataclass(frozen=True)
class DDEstimate:
    """Estimated path delays (s), Dopplers (Hz) and LS gains.

    ``dropped`` lists positions in the candidate list that were removed as
    duplicates before the LS fit.
    """

    taus: np.ndarray = field(repr=False)
    nus: np.ndarray = field(repr=False)
    gains: np.ndarray = field(repr=False)
    dropped: tuple[int, ...] = ()

    def __len__(self) -> int:
        return int(np.size(self.taus))

    def paths(self) -> PathSet:
        return PathSet(self.gains, self.taus, self.nus)


class Provenance(IntEnum):
    ZERO = 0
    MODEL_FREE = 1
    MODEL_DEPENDENT = 2


@dataclass(frozen=True)
class HybridHeff:
    heff: EffChannelGrid
    provenance: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.heff.values

    @classmethod
    def model_free_only(cls, free: EffChannelGrid, region: Region) -> "HybridHeff":
        tags = np.where(region.mask, Provenance.MODEL_FREE, Provenance.ZERO).astype(np.int8)
        return cls(free, tags)


# ---------------------------------------------------------------------------
# model-free read-off
# ---------------------------------------------------------------------------

def _read_off(y: RxFrame, alpha: complex, region: Region) -> EffChannelGrid:
    if alpha == 0:
        raise ValueError("pilot amplitude must be nonzero")
    grid = y.grid
    M, N = grid.M, grid.N
    Y = y.as_grid()
    out = EffChannelGrid.zeros(grid)
    ab = region.indices()
    a, b = ab[:, 0], ab[:, 1]
    vals = Y[a + M // 2, b + N // 2] * unit_phase(-b, 2 * N) / alpha
    out.values[a + 3 * M - 1, b + 3 * N - 1] = vals
    return out


def model_free_exclusive(y: RxFrame, alpha: complex, grid: DDGridConfig | None = None) -> EffChannelGrid:
    """``h[a, b] = y[a + M/2, b + N/2] exp(-j pi b / N) / alpha`` on ``F_exc``."""
    grid = grid or y.grid
    return _read_off(y, alpha, Region.f_exc(grid))


def model_free_embedded(y: RxFrame, alpha: complex, grid: DDGridConfig | None, k_max: int) -> EffChannelGrid:
    """Same read-off restricted to ``F_emb``."""
    grid = grid or y.grid
    return _read_off(y, alpha, Region.f_emb(grid, k_max))


# ---------------------------------------------------------------------------
# model-dependent estimation
# ---------------------------------------------------------------------------

_NEIGHBOURS = [(dr, ds) for dr in (-1, 0, 1) for ds in (-1, 0, 1) if (dr, ds) != (0, 0)]


def detect_paths(y_masked, grid: DDGridConfig, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Energy-peak path detection with midpoint fractional refinement.

    Each pass takes the strongest remaining bin and its strongest neighbour,
    emits the bin itself and the midpoint of the pair as candidate paths,
    then clears both bins. Ties go to the lowest row-major index. When every
    neighbour is already empty, one is drawn at random from ``rng``.
    Neighbour lookups wrap around the frame.

    Returns delays (s) and Dopplers (Hz) relative to the pilot position.
    """
    Y = np.asarray(y_masked)
    if Y.shape != (grid.M, grid.N):
        raise ValueError(f"masked frame must have shape {(grid.M, grid.N)}")
    M, N = grid.M, grid.N
    E = np.abs(Y) ** 2
    taus: list[float] = []
    nus: list[float] = []
    gen = None
    while E.any():
        p1, q1 = divmod(int(np.argmax(E)), N)
        nb = [(p1 + dr, q1 + ds) for dr, ds in _NEIGHBOURS]
        en = np.array([E[r % M, s % N] for r, s in nb])
        if en.any():
            j = int(np.argmax(en))
        else:
            gen = gen or make_rng(rng)
            j = int(gen.integers(len(nb)))
        p2, q2 = nb[j]
        taus += [(p1 - M / 2) * grid.delay_res, ((p1 + p2) / 2 - M / 2) * grid.delay_res]
        nus += [(q1 - N / 2) * grid.doppler_res, ((q1 + q2) / 2 - N / 2) * grid.doppler_res]
        E[p1, q1] = 0.0
        E[p2 % M, q2 % N] = 0.0
    return np.array(taus), np.array(nus)


def unit_path_grids(filt: PulseFilter, taus, nus, grid: DDGridConfig) -> np.ndarray:
    """Closed-form ``h_eff`` of unit-gain single paths, shape ``(P, 6M-1, 6N-1)``."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    k, l = EffChannelGrid.index_axes(grid)
    K, L = np.meshgrid(k, l, indexing="ij")
    out = np.empty((taus.size,) + K.shape, dtype=complex)
    for i, (t, v) in enumerate(zip(taus, nus)):
        out[i] = heff_closed_form_at(filt, PathSet.single(1.0, t, v), grid, K, L)
    return out


def _dedupe(taus, nus, grid) -> tuple[np.ndarray, tuple[int, ...]]:
    # compare in bin units so the key does not depend on the physical scale
    kb = np.round(taus / grid.delay_res, 9).tolist()
    lb = np.round(nus / grid.doppler_res, 9).tolist()
    seen = set()
    keep, dropped = [], []
    for i, key in enumerate(zip(kb, lb)):
        (dropped if key in seen else keep).append(i)
        seen.add(key)
    return np.array(keep, dtype=int), tuple(dropped)


def ls_gains(
    taus,
    nus,
    pilot_frame: QPFrame,
    y: RxFrame,
    filt: PulseFilter,
    grid: DDGridConfig | None = None,
    *,
    rows: np.ndarray | None = None,
    unit_grids: np.ndarray | None = None,
) -> DDEstimate:
    """Least-squares path gains for fixed candidate delays and Dopplers.

    Column ``i`` of the dictionary is the noiseless response of the pilot
    frame to a unit-gain path at ``(taus[i], nus[i])``. Later duplicates of
    a candidate pair are dropped and reported. ``rows`` restricts the fit to
    a subset of vectorized observation indices.
    """
    grid = grid or y.grid
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    if taus.size == 0:
        raise ValueError("ls_gains needs at least one candidate path")
    keep, dropped = _dedupe(taus, nus, grid)
    G = unit_grids if unit_grids is not None else unit_path_grids(filt, taus, nus, grid)
    G = G[keep]
    Phi = _dictionary(G, pilot_frame, grid)
    obs = y.y
    if rows is not None:
        Phi, obs = Phi[rows], obs[rows]
    gains, *_ = np.linalg.lstsq(Phi, obs, rcond=None)
    return DDEstimate(taus[keep], nus[keep], gains, dropped)


def _dictionary(G: np.ndarray, pilot_frame: QPFrame, grid: DDGridConfig) -> np.ndarray:
    Phi = np.zeros((grid.MN, G.shape[0]), dtype=complex)
    for k, l in zip(*np.nonzero(pilot_frame.samples)):
        Phi += pilot_frame.samples[k, l] * h_columns(G, grid, int(k), int(l)).T
    return Phi


# ---------------------------------------------------------------------------
# combination
# ---------------------------------------------------------------------------

def hybrid_combine(free: EffChannelGrid, dep: EffChannelGrid, region: Region) -> HybridHeff:
    """Model-free values on ``region``, model-dependent values elsewhere."""
    if free.grid != dep.grid or region.grid != free.grid or region.domain != "heff":
        raise ValueError("free, dep and region must share a grid and the h_eff support")
    vals = np.where(region.mask, free.values, dep.values)
    tags = np.where(region.mask, Provenance.MODEL_FREE, Provenance.MODEL_DEPENDENT).astype(np.int8)
    return HybridHeff(EffChannelGrid(free.grid, vals), tags)


def build_H_kappa(
    free: EffChannelGrid, true_heff: EffChannelGrid, kappa: int, grid: DDGridConfig | None = None
) -> ChannelMatrix:
    """``H`` from ``free`` on ``F_exc``, ``true_heff`` on ``S_kappa \\ F_exc``, zero beyond."""
    grid = grid or free.grid
    f = Region.f_exc(grid).mask
    s = Region.s_kappa(grid, kappa).mask
    vals = np.where(f, free.values, np.where(s, true_heff.values, 0.0))
    return build_H(EffChannelGrid(grid, vals), grid)


@dataclass(frozen=True)
class EstimatorOutputs:
    free: EffChannelGrid
    dep: EffChannelGrid
    hybrid: HybridHeff
    params: DDEstimate


def estimate_all(
    y: RxFrame, layout: FrameLayout, filt: PulseFilter, grid: DDGridConfig | None = None, rng=None
) -> EstimatorOutputs:
    """Model-free, model-dependent and hybrid estimates from one received pilot frame.

    Embedded frames restrict the LS fit to the rows of ``R_emb``; data
    interference on those rows is ignored.
    """
    grid = grid or y.grid
    region = layout.estimation_region
    if layout.kind is FrameKind.EXCLUSIVE:
        free = model_free_exclusive(y, layout.alpha, grid)
        rows = None
    else:
        free = model_free_embedded(y, layout.alpha, grid, layout.k_max)
        rows = layout.readoff_region.vec_indices()
    Y = y.as_grid()
    taus, nus = detect_paths(np.where(layout.mask, Y, 0), grid, rng)
    if taus.size == 0:
        params = DDEstimate(taus, nus, np.zeros(0, dtype=complex))
        dep = EffChannelGrid.zeros(grid)
    else:
        G = unit_path_grids(filt, taus, nus, grid)
        params = ls_gains(taus, nus, layout.pilot_frame(), y, filt, grid, rows=rows, unit_grids=G)
        keep = np.setdiff1d(np.arange(taus.size), params.dropped)
        dep = EffChannelGrid(grid, np.tensordot(params.gains, G[keep], axes=1))
    return EstimatorOutputs(free, dep, hybrid_combine(free, dep, region), params)


def estimate_hybrid(
    y: RxFrame, layout: FrameLayout, filt: PulseFilter, grid: DDGridConfig | None = None, rng=None
) -> tuple[HybridHeff, DDEstimate]:
    out = estimate_all(y, layout, filt, grid, rng)
    return out.hybrid, out.params
