"""Zak-OTFS link-level simulation with hybrid delay-Doppler channel estimation."""

from .channels import ChannelProfile, PathSet, ProfileError, draw_channel, load_tdl_profile, make_rng, veh_a_profile
from .detection import Alphabet, DetectionResult, cancel_pilot, lmmse_equalize, min_distance_decode
from .estimators import (
    DDEstimate,
    HybridHeff,
    Provenance,
    build_H_kappa,
    detect_paths,
    estimate_all,
    estimate_hybrid,
    hybrid_combine,
    ls_gains,
    model_free_embedded,
    model_free_exclusive,
)
from .filters import (
    EffChannelGrid,
    FilterKind,
    NoiseCovariance,
    PulseFilter,
    eval_wrx,
    eval_wtx,
    heff_closed_form,
    noise_covariance,
    sidelobe_energy_fraction,
)
from .frames import FrameKind, FrameLayout, Region, make_embedded_frame, make_exclusive_frame, make_mask, path_extent
from .grid import DDGridConfig, DDIndex, QPFrame, qp_extend, twisted_convolve_discrete, zak_forward, zak_inverse
from .io_relation import ChannelMatrix, RxFrame, build_H, heff_oracle, io_oracle_direct, synthesize_rx

__version__ = "0.1.0"
