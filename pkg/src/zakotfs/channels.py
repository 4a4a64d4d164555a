"""Physical delay-Doppler channels: power-delay profiles and random draws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "PathSet",
    "ChannelProfile",
    "ProfileError",
    "make_rng",
    "veh_a_profile",
    "load_tdl_profile",
    "draw_channel",
]


class ProfileError(ValueError):
    """Malformed or empty channel profile file."""


def make_rng(seed=None, stream: int | tuple[int, ...] | None = None) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``(seed, stream)``.

    A ``Generator`` passes through unchanged. ``stream`` selects an
    independent sub-stream, so per-trial generators do not depend on how
    trials are scheduled across workers.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        key = () if stream is None else (stream if isinstance(stream, tuple) else (stream,))
        ss = np.random.SeedSequence(0 if seed is None else int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PathSet:
    """Discrete paths ``h_i * delta(tau - tau_i) * delta(nu - nu_i)``."""

    gains: np.ndarray = field(repr=False)
    delays: np.ndarray = field(repr=False)
    dopplers: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        d = np.atleast_1d(np.asarray(self.delays, dtype=float))
        v = np.atleast_1d(np.asarray(self.dopplers, dtype=float))
        if not (g.shape == d.shape == v.shape) or g.ndim != 1:
            raise ValueError("gains, delays and dopplers must be 1-D and of equal length")
        if np.isnan(g).any() or np.isnan(d).any() or np.isnan(v).any():
            raise ValueError("path parameters contain NaN")
        for a in (g, d, v):
            a.setflags(write=False)
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "dopplers", v)

    @classmethod
    def single(cls, gain=1.0, delay=0.0, doppler=0.0) -> "PathSet":
        return cls([gain], [delay], [doppler])

    def __len__(self) -> int:
        return self.gains.size

    def scaled(self, factor) -> "PathSet":
        return PathSet(self.gains * factor, self.delays, self.dopplers)


@dataclass(frozen=True)
class ChannelProfile:
    """Tapped-delay-line profile with a Jakes-style cosine Doppler model."""

    name: str
    powers_db: tuple[float, ...]
    delays: tuple[float, ...]
    nu_max: float
    doppler_model: str = "cosine_uniform"

    def __post_init__(self):
        if len(self.powers_db) != len(self.delays):
            raise ValueError("powers and delays must have the same length")
        if not self.powers_db:
            raise ProfileError(f"profile {self.name!r} has no taps")
        if self.doppler_model != "cosine_uniform":
            raise ValueError(f"unknown doppler model {self.doppler_model!r}")

    @property
    def num_taps(self) -> int:
        return len(self.delays)

    @property
    def powers(self) -> np.ndarray:
        """Linear tap powers normalized to unit sum."""
        p = 10.0 ** (np.asarray(self.powers_db, dtype=float) / 10.0)
        return p / p.sum()

    @property
    def tau_max(self) -> float:
        return max(self.delays)


def veh_a_profile(nu_max: float = 815.0) -> ChannelProfile:
    """ITU Vehicular-A power-delay profile (6 taps, 2.51 us spread)."""
    return ChannelProfile(
        name="veh-a",
        powers_db=(0.0, -1.0, -9.0, -10.0, -15.0, -20.0),
        delays=tuple(d * 1e-6 for d in (0.0, 0.31, 0.71, 1.09, 1.73, 2.51)),
        nu_max=nu_max,
    )


def load_tdl_profile(path, delay_scaling: float, nu_max: float, name: str | None = None) -> ChannelProfile:
    """Read a TDL table: one ``normalized_delay power_dB`` pair per line.

    Blank lines and ``#`` comments are ignored. Delays are multiplied by
    ``delay_scaling`` (seconds).
    """
    path = Path(path)
    delays, powers = [], []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ProfileError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                d, p = float(parts[0]), float(parts[1])
            except ValueError:
                raise ProfileError(f"{path}:{lineno}: non-numeric token in {line!r}") from None
            if not (math.isfinite(d) and math.isfinite(p)) or d < 0:
                raise ProfileError(f"{path}:{lineno}: invalid tap ({d}, {p})")
            delays.append(d * delay_scaling)
            powers.append(p)
    if not delays:
        raise ProfileError(f"{path}: empty profile")
    return ChannelProfile(name or path.stem, tuple(powers), tuple(delays), nu_max)


def draw_channel(profile: ChannelProfile, rng=None) -> PathSet:
    """One channel realization: Rayleigh tap gains, ``nu_max*cos(theta)`` Dopplers."""
    rng = make_rng(rng)
    p = profile.powers
    n = p.size
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    w = rng.standard_normal((2, n))
    gains = np.sqrt(p / 2.0) * (w[0] + 1j * w[1])
    return PathSet(gains, np.asarray(profile.delays), profile.nu_max * np.cos(theta))
