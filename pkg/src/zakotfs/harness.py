"""Experiment configuration, seeded Monte-Carlo sweeps, complexity report
and heatmap export.

Energy bookkeeping (``N0 = 1`` throughout):

* exclusive frames: ``E_p = PSNR * MN`` so ``alpha = sqrt(E_p)``; data
  frames carry ``Es = DSNR`` per symbol (``E_d = DSNR * MN``).
* embedded frames: ``E_d = DSNR * MN`` spread over the ``|D|`` data bins and
  ``E_p = PDR * E_d``. When the sweep axis is PSNR the pilot energy is set
  from PSNR instead and ``E_d = E_p / PDR``.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from multiprocessing import get_context
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .channels import ChannelProfile, draw_channel, load_tdl_profile, make_rng, veh_a_profile
from .detection import Alphabet, cancel_pilot, lmmse_equalize, min_distance_decode
from .estimators import build_H_kappa, estimate_all, model_free_exclusive
from .filters import FilterKind, PulseFilter, heff_closed_form, noise_covariance
from .frames import FrameKind, FrameLayout, Region, path_extent
from .grid import DDGridConfig
from .io_relation import RxFrame, build_H, synthesize_rx

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepRow",
    "SweepResult",
    "load_config",
    "run_nmse_sweep",
    "run_ber_sweep",
    "run_kappa_sweep",
    "leakage_statistic",
    "complexity_report",
    "ComplexityRow",
    "export_heatmap",
    "read_heatmap_csv",
]

AXES = ("PSNR", "DSNR", "PDR", "KAPPA")
ESTIMATORS = ("model_free", "model_dependent", "hybrid", "perfect")


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


def _db(x: float) -> float:
    return math.inf if x == math.inf else 10.0 ** (x / 10.0)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. Defaults follow the desk-scale Veh-A setup.

    ``k_max``/``l_max`` of ``None`` are derived from the channel profile.
    ``trials`` is the trial cap; BER sweeps stop early once every
    estimator has ``min_bit_errors`` errors and ``min_bits`` bits.
    """

    M: int = 64
    N: int = 24
    nu_p: float = 15e3
    filter: str = "sinc"
    alpha_tau: float = 1.584
    alpha_nu: float = 1.584
    profile: str = "veh-a"
    delay_scaling: float = 302e-9
    nu_max: float = 815.0
    frame: str = "exclusive"
    k_max: int | None = None
    l_max: int | None = None
    alphabet: str = "qam4"
    equalizer: str = "colored"
    data_frames: int = 1
    axis: str = "PSNR"
    values: tuple[float, ...] = (30.0,)
    psnr_db: float = 30.0
    dsnr_db: float = 15.0
    pdr_db: float = 0.0
    estimators: tuple[str, ...] = ("model_free", "model_dependent", "hybrid")
    trials: int = 100
    min_bit_errors: int = 100
    min_bits: int = 0
    batch: int = 8
    seed: int = 0
    out: str = "results"
    sbl_t_max: int = 1000
    sbl_m_tau: int = 11
    sbl_n_nu: int = 14
    sbl_p_hat: int = 15

    def __post_init__(self):
        try:
            self.grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.filter not in ("sinc", "gaussian"):
            raise ConfigError(f"unknown filter {self.filter!r}")
        if self.frame not in ("exclusive", "embedded"):
            raise ConfigError(f"unknown frame kind {self.frame!r}")
        if self.equalizer not in ("colored", "white"):
            raise ConfigError(f"unknown equalizer {self.equalizer!r}")
        if self.axis not in AXES:
            raise ConfigError(f"sweep axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep value list is empty")
        if self.axis == "KAPPA" and any(v < 1 or int(v) != v for v in self.values):
            raise ConfigError("kappa values must be positive integers")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ConfigError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
        for name in ("trials", "batch", "data_frames"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        try:
            Alphabet.from_name(self.alphabet)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        k, l = self.extent
        if self.frame == "embedded" and 4 * k > self.M // 2 - 1:
            raise ConfigError(f"k_max={k} leaves no room for the embedded guard at M={self.M}")
        if not (k < self.M // 2 and l < self.N // 2):
            raise ConfigError(f"(k_max, l_max)=({k}, {l}) too large for the grid")

    @property
    def grid(self) -> DDGridConfig:
        return DDGridConfig(self.M, self.N, self.nu_p)

    @property
    def pulse(self) -> PulseFilter:
        return PulseFilter(FilterKind(self.filter), self.alpha_tau, self.alpha_nu)

    def channel_profile(self) -> ChannelProfile:
        if self.profile.lower() in ("veh-a", "veha", "vehicular-a"):
            return veh_a_profile(self.nu_max)
        path = Path(self.profile)
        if not path.is_file():
            raise ConfigError(f"channel profile file not found: {path}")
        return load_tdl_profile(path, self.delay_scaling, self.nu_max)

    @property
    def extent(self) -> tuple[int, int]:
        if self.k_max is not None and self.l_max is not None:
            return self.k_max, self.l_max
        prof = self.channel_profile()
        k, l = path_extent(prof.tau_max, prof.nu_max, self.grid)
        return (k if self.k_max is None else self.k_max, l if self.l_max is None else self.l_max)

    def to_ini(self) -> str:
        """Canonical INI text (also the input to :meth:`digest`)."""
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for section, keys in _SCHEMA.items():
            cp[section] = {key: _fmt(getattr(self, attr)) for key, attr in keys.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        """Short hash of every setting except ``seed`` and ``out``."""
        body = replace(self, seed=0, out="").to_ini()
        return hashlib.sha256(body.encode()).hexdigest()[:12]


# section -> {ini key: attribute}
_SCHEMA = {
    "grid": {"M": "M", "N": "N", "nu_p": "nu_p"},
    "filter": {"kind": "filter", "alpha_tau": "alpha_tau", "alpha_nu": "alpha_nu"},
    "channel": {"profile": "profile", "delay_scaling": "delay_scaling", "nu_max": "nu_max"},
    "frame": {"kind": "frame", "k_max": "k_max", "l_max": "l_max"},
    "detection": {"alphabet": "alphabet", "equalizer": "equalizer", "data_frames": "data_frames"},
    "sweep": {"axis": "axis", "values": "values", "psnr_db": "psnr_db", "dsnr_db": "dsnr_db", "pdr_db": "pdr_db"},
    "run": {
        "estimators": "estimators",
        "trials": "trials",
        "min_bit_errors": "min_bit_errors",
        "min_bits": "min_bits",
        "batch": "batch",
        "seed": "seed",
        "out": "out",
    },
    "sbl": {"t_max": "sbl_t_max", "m_tau": "sbl_m_tau", "n_nu": "sbl_n_nu", "p_hat": "sbl_p_hat"},
}


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(attr: str, raw: str):
    ftype = {f.name: f.type for f in fields(ExperimentConfig)}[attr]
    raw = raw.strip()
    if attr in ("k_max", "l_max"):
        return None if raw.lower() == "auto" else int(raw)
    if attr == "values":
        return tuple(float(x) for x in raw.replace(",", " ").split())
    if attr == "estimators":
        return tuple(x for x in raw.replace(",", " ").split())
    if ftype in ("int", int):
        return int(raw)
    if ftype in ("float", float):
        return float(raw)
    if attr == "axis":
        return raw.upper()
    return raw


def load_config(path, **overrides) -> ExperimentConfig:
    """Read an INI config; unknown sections or keys are errors.

    Relative profile paths resolve against the config file's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    kwargs = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in cp[section].items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            attr = _SCHEMA[section][key]
            try:
                kwargs[attr] = _parse(attr, raw)
            except ValueError:
                raise ConfigError(f"{path}: bad value {raw!r} for {section}.{key}") from None
    prof = kwargs.get("profile")
    if prof and prof.lower() not in ("veh-a", "veha", "vehicular-a") and not os.path.isabs(prof):
        kwargs["profile"] = str(path.parent / prof)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    value: float
    estimator: str
    trials: int
    nmse: float | None = None
    bit_errors: int | None = None
    bits: int | None = None
    capped: bool = False

    @property
    def ber(self) -> float | None:
        if self.bits is None:
            return None
        return self.bit_errors / self.bits if self.bits else 0.0


_CSV_HEADER = ["config_hash", "seed", "axis", "value", "estimator", "trials",
               "nmse", "ber", "bit_errors", "bits", "capped", "efficiency"]


@dataclass(frozen=True)
class SweepResult:
    config_hash: str
    seed: int
    axis: str
    efficiency: float
    rows: tuple[SweepRow, ...] = field(default_factory=tuple)

    def get(self, value: float, estimator: str) -> SweepRow:
        for r in self.rows:
            if r.value == value and r.estimator == estimator:
                return r
        raise KeyError((value, estimator))

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_CSV_HEADER)
        for r in self.rows:
            w.writerow([
                self.config_hash, self.seed, self.axis, _fmt(float(r.value)), r.estimator, r.trials,
                "" if r.nmse is None else repr(float(r.nmse)),
                "" if r.ber is None else repr(float(r.ber)),
                "" if r.bit_errors is None else r.bit_errors,
                "" if r.bits is None else r.bits,
                int(r.capped), repr(float(self.efficiency)),
            ])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.csv_text())
        return path


# ---------------------------------------------------------------------------
# per-process trial context
# ---------------------------------------------------------------------------

@dataclass
class _Context:
    cfg: ExperimentConfig
    grid: DDGridConfig
    filt: PulseFilter
    profile: ChannelProfile
    alphabet: Alphabet
    k_max: int
    l_max: int
    C: object = None
    L: np.ndarray | None = None

    def noise(self):
        if self.C is None:
            self.C, self.L = _noise_pair(self.filt, self.grid)
        return self.C, self.L


@lru_cache(maxsize=4)
def _noise_pair(filt: PulseFilter, grid: DDGridConfig):
    # the eigendecomposition dominates start-up at MN = 1536; share it across configs
    C = noise_covariance(filt, grid, 1.0)
    return C, C.factor()


_CTX: _Context | None = None


def _init_context(cfg: ExperimentConfig) -> _Context:
    global _CTX
    if _CTX is None or _CTX.cfg != cfg:
        k, l = cfg.extent
        _CTX = _Context(cfg, cfg.grid, cfg.pulse, cfg.channel_profile(), Alphabet.from_name(cfg.alphabet), k, l)
    return _CTX


def _worker_init(cfg: ExperimentConfig) -> None:
    threadpool_limits(1)
    _init_context(cfg)


def _map_trials(cfg: ExperimentConfig, fn, tasks: list, threads: int) -> list:
    """Run ``fn(task)`` for every task; results come back in task order."""
    if threads <= 1 or len(tasks) <= 1:
        with threadpool_limits(1):
            _init_context(cfg)
            return [fn(t) for t in tasks]
    with ProcessPoolExecutor(
        max_workers=threads, mp_context=get_context("spawn"), initializer=_worker_init, initargs=(cfg,)
    ) as pool:
        return list(pool.map(fn, tasks))


def _energies(cfg: ExperimentConfig, axis_value: float, n_data: int) -> tuple[float, float]:
    """Pilot amplitude and per-symbol data energy for one sweep point."""
    MN = cfg.M * cfg.N
    psnr, dsnr, pdr = cfg.psnr_db, cfg.dsnr_db, cfg.pdr_db
    if cfg.axis == "PSNR":
        psnr = axis_value
    elif cfg.axis == "DSNR":
        dsnr = axis_value
    elif cfg.axis == "PDR":
        pdr = axis_value
    if cfg.frame == "exclusive":
        Ep, Es = _db(psnr) * MN, _db(dsnr)
    elif cfg.axis == "PSNR":
        Ep = _db(psnr) * MN
        Es = Ep / _db(pdr) / n_data
    else:
        Ed = _db(dsnr) * MN
        Ep, Es = _db(pdr) * Ed, Ed / n_data
    return math.sqrt(Ep), Es


def _layout(ctx: _Context, alpha: float) -> FrameLayout:
    if ctx.cfg.frame == "exclusive":
        return FrameLayout.exclusive(ctx.grid, alpha, ctx.k_max, ctx.l_max)
    return FrameLayout.embedded(ctx.grid, alpha, ctx.k_max, ctx.l_max)


def _estimates(ctx, y, layout, H, want, rng) -> dict:
    """``{estimator: ChannelMatrix}`` for the requested estimators."""
    out = {}
    if "perfect" in want:
        out["perfect"] = H
    if any(e != "perfect" for e in want):
        est = estimate_all(y, layout, ctx.filt, ctx.grid, rng)
        grids = {"model_free": est.free, "model_dependent": est.dep, "hybrid": est.hybrid.heff}
        for e in want:
            if e != "perfect":
                out[e] = build_H(grids[e], ctx.grid)
    return out


def _pilot_rx(ctx, H, key, trial, alpha, Es, noisy=True):
    """Received pilot-bearing frame plus the embedded data indices (if any).

    RNG streams are ``(trial, purpose) + key``. Keys do not include the
    sweep point, so every point of a sweep sees the same channel, data and
    unit-variance noise draws (common random numbers) and differences
    between points are not masked by independent sampling noise.
    """
    layout = _layout(ctx, alpha)
    data_idx = None
    if layout.kind is FrameKind.EMBEDDED:
        data_idx = ctx.alphabet.random_indices(layout.num_data, make_rng(ctx.cfg.seed, (trial, 3) + key))
        x = layout.frame(math.sqrt(Es) * ctx.alphabet.points[data_idx])
    else:
        x = layout.pilot_frame()
    if noisy:
        C, L = ctx.noise()
        y = synthesize_rx(H, x, C, 1.0, make_rng(ctx.cfg.seed, (trial, 1) + key), noise_factor=L)
    else:
        y = synthesize_rx(H, x, None)
    return y, layout, data_idx


def _true_heff(ctx, trial):
    paths = draw_channel(ctx.profile, make_rng(ctx.cfg.seed, (trial, 0)))
    return heff_closed_form(ctx.filt, paths, ctx.grid)


def _true_channel(ctx, trial):
    heff = _true_heff(ctx, trial)
    return heff, build_H(heff, ctx.grid)


def _nmse_trial(task):
    _, value, trial = task
    ctx = _CTX
    _, H = _true_channel(ctx, trial)
    layout0 = _layout(ctx, 1.0)
    alpha, Es = _energies(ctx.cfg, value, max(layout0.num_data, 1))
    y, layout, _ = _pilot_rx(ctx, H, (), trial, alpha, Es)
    est = _estimates(ctx, y, layout, H, ctx.cfg.estimators, make_rng(ctx.cfg.seed, (trial, 2)))
    return {e: H.nmse(Hh) for e, Hh in est.items()}


def _kappa_trial(task):
    _, kappas, trial = task
    ctx = _CTX
    heff, H = _true_channel(ctx, trial)
    alpha = math.sqrt(_db(ctx.cfg.psnr_db) * ctx.grid.MN) if ctx.cfg.psnr_db != math.inf else 1.0
    y, _, _ = _pilot_rx(ctx, H, (), trial, alpha, 0.0, noisy=ctx.cfg.psnr_db != math.inf)
    free = model_free_exclusive(y, alpha, ctx.grid)
    return [H.nmse(build_H_kappa(free, heff, int(k), ctx.grid)) for k in kappas]


def _ber_trial(task):
    _, value, trial = task
    ctx = _CTX
    cfg = ctx.cfg
    _, H = _true_channel(ctx, trial)
    C, L = ctx.noise()
    layout0 = _layout(ctx, 1.0)
    alpha, Es = _energies(cfg, value, max(layout0.num_data, 1))
    white = cfg.equalizer == "white"
    alph = ctx.alphabet
    errs = {e: 0 for e in cfg.estimators}
    bits = {e: 0 for e in cfg.estimators}
    for f in range(cfg.data_frames):
        sub = (f,)
        y, layout, data_idx = _pilot_rx(ctx, H, sub, trial, alpha, Es)
        est = _estimates(ctx, y, layout, H, cfg.estimators, make_rng(cfg.seed, (trial, 2) + sub))
        if layout.kind is FrameKind.EXCLUSIVE:
            # separate data frame over the same channel
            data_idx = alph.random_indices(ctx.grid.MN, make_rng(cfg.seed, (trial, 3) + sub))
            xd = math.sqrt(Es) * alph.points[data_idx]
            yd = synthesize_rx(H, xd, C, 1.0, make_rng(cfg.seed, (trial, 4) + sub), noise_factor=L)
            active = None
        else:
            active = layout.data_indices
        for e, Hh in est.items():
            obs = yd if active is None else cancel_pilot(y, Hh, layout)
            soft = lmmse_equalize(obs, Hh, C, Es, active, white=white)
            res = min_distance_decode(soft / math.sqrt(Es), alph, data_idx)
            errs[e] += res.bit_errors
            bits[e] += res.num_bits
    return errs, bits


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _efficiency(cfg: ExperimentConfig) -> float:
    k, l = cfg.extent
    if cfg.frame == "exclusive":
        return 0.0
    return FrameLayout.embedded(cfg.grid, 1.0, k, l).efficiency


def run_nmse_sweep(cfg: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Mean ``||H - H_hat||_F^2 / ||H||_F^2`` per sweep point and estimator."""
    if cfg.axis == "KAPPA":
        return run_kappa_sweep(cfg, threads)
    tasks = [(i, v, t) for i, v in enumerate(cfg.values) for t in range(cfg.trials)]
    results = _map_trials(cfg, _nmse_trial, tasks, threads)
    rows = []
    for i, v in enumerate(cfg.values):
        chunk = results[i * cfg.trials : (i + 1) * cfg.trials]
        for e in cfg.estimators:
            rows.append(SweepRow(v, e, cfg.trials, nmse=float(np.mean([r[e] for r in chunk]))))
    return SweepResult(cfg.digest(), cfg.seed, cfg.axis, _efficiency(cfg), tuple(rows))


def run_kappa_sweep(cfg: ExperimentConfig, threads: int = 1) -> SweepResult:
    """NMSE of ``H`` built from model-free values on ``F_exc`` and true values on ``S_kappa``.

    Exclusive pilot only; ``psnr_db = inf`` gives a noiseless read-off.
    """
    if cfg.axis != "KAPPA":
        raise ConfigError("kappa sweep needs axis = KAPPA")
    kappas = tuple(int(v) for v in cfg.values)
    tasks = [(0, kappas, t) for t in range(cfg.trials)]
    results = np.array(_map_trials(replace(cfg, frame="exclusive"), _kappa_trial, tasks, threads))
    rows = tuple(
        SweepRow(float(k), "kappa", cfg.trials, nmse=float(np.mean(results[:, j]))) for j, k in enumerate(kappas)
    )
    return SweepResult(cfg.digest(), cfg.seed, cfg.axis, 0.0, rows)


def run_ber_sweep(cfg: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Bit error rate per sweep point and estimator.

    Trials run in fixed-size batches; a point stops after the first batch
    where every estimator has reached both error and bit targets, or at
    the trial cap (``capped`` marks points that hit the cap first).
    """
    if cfg.axis == "KAPPA":
        raise ConfigError("BER sweeps over kappa are not supported")
    rows = []
    for i, v in enumerate(cfg.values):
        errs = {e: 0 for e in cfg.estimators}
        bits = {e: 0 for e in cfg.estimators}
        done = 0
        while done < cfg.trials:
            batch = range(done, min(done + cfg.batch, cfg.trials))
            for e_, b_ in _map_trials(cfg, _ber_trial, [(i, v, t) for t in batch], threads):
                for e in cfg.estimators:
                    errs[e] += e_[e]
                    bits[e] += b_[e]
            done = batch.stop
            if all(errs[e] >= cfg.min_bit_errors and bits[e] >= cfg.min_bits for e in cfg.estimators):
                break
        met = all(errs[e] >= cfg.min_bit_errors and bits[e] >= cfg.min_bits for e in cfg.estimators)
        for e in cfg.estimators:
            rows.append(SweepRow(v, e, done, bit_errors=errs[e], bits=bits[e], capped=not met))
    return SweepResult(cfg.digest(), cfg.seed, cfg.axis, _efficiency(cfg), tuple(rows))


def leakage_statistic(cfg: ExperimentConfig, draws: int) -> float:
    """Mean fraction of ``h_eff`` energy outside ``F_exc`` over channel draws."""
    ctx = _init_context(cfg)
    outside = ~Region.f_exc(ctx.grid).mask
    fr = []
    for t in range(draws):
        e = np.abs(_true_heff(ctx, t).values) ** 2
        fr.append(e[outside].sum() / e.sum())
    return float(np.mean(fr))


# ---------------------------------------------------------------------------
# complexity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexityRow:
    scheme: str
    additions: float
    multiplications: float

    @property
    def total(self) -> float:
        return self.additions + self.multiplications


def complexity_report(
    M: int, N: int, k_max: int, l_max: int, t_max: int = 1000, m_tau: int = 11, n_nu: int = 14, p_hat: int = 15
) -> dict[str, ComplexityRow]:
    """Real-operation counts of the estimation schemes, evaluated as printed.

    Also returns the per-operation hybrid add-on costs (``ls_*`` and
    ``heff_dep`` rows) with the cubic inversion term omitted.
    """
    if min(M, N, t_max, m_tau, n_nu, p_hat) <= 0 or min(k_max, l_max) < 0:
        raise ValueError("complexity parameters must be positive")
    MN = M * N
    P = 2 * (k_max + 1) * (2 * l_max + 1)
    ext = (6 * M + 1) * (6 * N + 1)
    beta = (6 * M - 1) * (6 * N - 1) - MN
    kl = (k_max + 1) * (2 * l_max + 1)
    VV = m_tau * n_nu
    rows = {
        "model_free": ComplexityRow("model_free", 98 * MN**2 + 4 * MN, 100 * MN**2 + 8 * MN),
        "model_dependent": ComplexityRow(
            "model_dependent",
            98 * MN**2 + ext * 3 * P + 2 * (P - 1) + 4 * P**2 * MN + 8 * P**3 + 4 * P * MN - 6 * P * MN,
            100 * MN**2 + ext * 9 * P + 4 * P**2 * MN + 8 * P**3 - 8 * P**2 + 4 * P * (MN - 2) + kl,
        ),
        "hybrid": ComplexityRow(
            "hybrid",
            98 * MN**2 + (ext - MN) * 3 * P + 2 * (P - 1)
            + 4 * P**2 * MN + 8 * P**3 + 4 * P * MN - 6 * P * MN + 4 * MN + kl,
            100 * MN**2 + (ext - MN) * 9 * P + 4 * P**2 * MN - 8 * P**3 + 4 * P * (MN - 2) + 8 * MN,
        ),
        "sbl": ComplexityRow(
            "sbl",
            t_max * MN**3 + 98 * MN**2 + t_max * 2 * VV * MN * (3 + 4 * VV + 4 * MN)
            + ext * 3 * p_hat + 2 * (p_hat - 1) + VV,
            t_max * MN**3 + 100 * MN**2 + t_max * VV * MN * (1 + VV + MN) + ext * 9 * p_hat + 2 * VV,
        ),
        "ls_gram": ComplexityRow("ls_gram", 2 * P**2 * (2 * MN - 1), 4 * P**2 * MN),
        "ls_projection": ComplexityRow("ls_projection", 2 * P * (2 * MN - 1), 4 * P * MN),
        "ls_solve": ComplexityRow("ls_solve", 4 * P**2 - 2 * P, 4 * P**2),
        "heff_dep": ComplexityRow("heff_dep", 2 * (5 * P - 1) * beta, 20 * P * beta),
    }
    return {k: ComplexityRow(v.scheme, float(v.additions), float(v.multiplications)) for k, v in rows.items()}


def complexity_csv(rows: dict[str, ComplexityRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "additions", "multiplications", "total"])
    for r in rows.values():
        w.writerow([r.scheme, repr(r.additions), repr(r.multiplications), repr(r.total)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# heatmaps
# ---------------------------------------------------------------------------

def export_heatmap(values, path, k_axis=None, l_axis=None) -> tuple[Path, Path]:
    """Write ``|values|`` as CSV plus an 8-bit binary PGM next to it.

    Rows are delay indices, columns Doppler indices; the header row holds
    the Doppler axis and the first column the delay axis.
    """
    mag = np.abs(np.asarray(values))
    if mag.ndim != 2:
        raise ValueError("heatmap values must be 2-D")
    rows, cols = mag.shape
    k_axis = np.arange(rows) if k_axis is None else np.asarray(k_axis)
    l_axis = np.arange(cols) if l_axis is None else np.asarray(l_axis)
    if k_axis.shape != (rows,) or l_axis.shape != (cols,):
        raise ValueError("axis lengths must match the grid")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k\\l"] + [_axis_fmt(v) for v in l_axis])
    for k, row in zip(k_axis, mag):
        w.writerow([_axis_fmt(k)] + [repr(float(v)) for v in row])
    path.write_text(buf.getvalue())
    peak = mag.max() if mag.size else 0.0
    img = np.zeros_like(mag, dtype=np.uint8) if peak == 0 else np.rint(255.0 * mag / peak).astype(np.uint8)
    pgm = path.with_suffix(".pgm")
    pgm.write_bytes(f"P5\n{cols} {rows}\n255\n".encode() + img.tobytes())
    return path, pgm


def _axis_fmt(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def read_heatmap_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`export_heatmap`'s CSV: ``(values, k_axis, l_axis)``."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    l_axis = np.array([float(v) for v in rows[0][1:]])
    k_axis = np.array([float(r[0]) for r in rows[1:]])
    vals = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return vals.reshape(len(k_axis), len(l_axis)), k_axis, l_axis
