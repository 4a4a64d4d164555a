"""Acceptance criteria, one test per criterion.

Each test prints a single ``ACn PASS|FAIL ...`` line to the terminal and
asserts both the numerical target and the runtime budget.
"""

import math
import time

import numpy as np
import pytest

from conftest import crandn
from zakotfs import harness
from zakotfs.channels import PathSet, make_rng
from zakotfs.detection import lmmse_equalize
from zakotfs.estimators import detect_paths
from zakotfs.filters import (
    EffChannelGrid,
    NoiseCovariance,
    PulseFilter,
    heff_closed_form,
    noise_covariance,
    sidelobe_energy_fraction,
)
from zakotfs.frames import make_exclusive_frame, make_mask
from zakotfs.grid import (
    DDArray,
    DDGridConfig,
    QPFrame,
    qp_extend,
    twisted_convolve_discrete,
    unit_phase,
    zak_forward,
    zak_inverse,
)
from zakotfs.harness import ExperimentConfig
from zakotfs.io_relation import ChannelMatrix, build_H, heff_oracle, io_oracle_direct, synthesize_rx

# trials per PDR point; sweep points share channel, data and noise draws
AC8_TRIALS = 150


@pytest.fixture
def report(pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")

    def emit(tag, ok, elapsed, budget, detail):
        status = "PASS" if ok and elapsed < budget else "FAIL"
        with capman.global_and_fixture_disabled():
            print(f"\n{tag} {status}  {detail}  [{elapsed:.1f} s / {budget:.0f} s]")
        assert ok, f"{tag}: {detail}"
        assert elapsed < budget, f"{tag}: runtime {elapsed:.1f} s exceeds {budget} s"

    return emit


def test_ac1_filter_localization(report):
    t0 = time.perf_counter()
    g = DDGridConfig(64, 24)
    fs = sidelobe_energy_fraction(PulseFilter.sinc(), g)
    fg = sidelobe_energy_fraction(PulseFilter.gaussian(), g)
    ok = abs(fs - 0.185) <= 0.005 and abs(fg - 0.0235) <= 0.003
    report("AC1", ok, time.perf_counter() - t0, 10, f"sinc {100 * fs:.3f}%  gaussian {100 * fg:.3f}%")


@pytest.mark.slow
def test_ac2_closed_form_vs_oracle(report):
    t0 = time.perf_counter()
    g = DDGridConfig(8, 8)
    rng = make_rng(2, 0)
    ka, la = EffChannelGrid.index_axes(g)
    pts = np.array([(a, b) for a in ka for b in la])
    worst = {}
    for filt in (PulseFilter.sinc(), PulseFilter.gaussian()):
        errs = []
        for _ in range(20):
            p = PathSet.single(
                complex(rng.standard_normal(), rng.standard_normal()),
                rng.uniform(0.0, 3.0) * g.delay_res,
                rng.uniform(-2.0, 2.0) * g.doppler_res,
            )
            ref = heff_oracle(filt, p, g, pts)
            got = heff_closed_form(filt, p, g).values.ravel()
            errs.append(np.abs(ref - got).max() / np.abs(ref).max())
        worst[filt.kind.value] = max(errs)
    ok = all(e < 1e-6 for e in worst.values())
    detail = "  ".join(f"{k} max rel err {v:.2e}" for k, v in worst.items())
    report("AC2", ok, time.perf_counter() - t0, 300, f"20 paths/filter; {detail}")


def test_ac3_build_H_equivalence(report):
    t0 = time.perf_counter()
    rng = make_rng(3, 0)
    worst = 0.0
    for shape in ((8, 8), (16, 8)):
        g = DDGridConfig(*shape)
        for _ in range(5):
            heff = EffChannelGrid(g, crandn(rng, *EffChannelGrid.shape(g)))
            x = QPFrame(g, crandn(rng, g.M, g.N))
            worst = max(worst, np.abs(build_H(heff) @ x.vec() - io_oracle_direct(heff, x).y).max())
    report("AC3", worst < 1e-10, time.perf_counter() - t0, 60, f"max abs diff {worst:.2e}")


@pytest.mark.slow
def test_ac4_leakage(report):
    t0 = time.perf_counter()
    sinc = harness.leakage_statistic(ExperimentConfig(M=16, N=16, filter="sinc", seed=4), 2000)
    gauss = harness.leakage_statistic(ExperimentConfig(M=16, N=16, filter="gaussian", seed=4), 2000)
    ok = abs(100 * sinc - 1.34) <= 0.4 and gauss < 1e-10
    report("AC4", ok, time.perf_counter() - t0, 600, f"sinc {100 * sinc:.3f}%  gaussian {gauss:.2e}")


@pytest.mark.slow
def test_ac5_kappa_trend(report):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(M=16, N=16, axis="KAPPA", values=(1.0, 2.0, 3.0), psnr_db=math.inf, trials=500, seed=5)
    res = harness.run_kappa_sweep(cfg)
    n = [res.get(float(k), "kappa").nmse for k in (1, 2, 3)]
    ok = n[0] >= n[1] >= n[2] and n[2] < 0.5 * n[0]
    detail = "  ".join(f"kappa={k} {v:.3e}" for k, v in zip((1, 2, 3), n))
    report("AC5", ok, time.perf_counter() - t0, 900, detail)


@pytest.mark.slow
def test_ac6_hybrid_nmse(report):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(values=(30.0,), trials=300, seed=6)
    res = harness.run_nmse_sweep(cfg)
    mf, dep, hyb = (res.get(30.0, e).nmse for e in ("model_free", "model_dependent", "hybrid"))
    ok = hyb < mf and hyb < dep
    detail = f"300 trials: model_free {mf:.3e}  model_dependent {dep:.3e}  hybrid {hyb:.3e}"
    report("AC6", ok, time.perf_counter() - t0, 3600, detail)


def _dsnr_at_ber(dsnr, ber, target):
    """First DSNR where the BER curve drops to ``target`` (log-BER interpolation), else None."""
    for i in range(1, len(dsnr)):
        if ber[i] <= target < ber[i - 1]:
            f = (np.log10(ber[i - 1]) - np.log10(target)) / (np.log10(ber[i - 1]) - np.log10(ber[i]))
            return dsnr[i - 1] + f * (dsnr[i] - dsnr[i - 1])
    return dsnr[0] if ber[0] <= target else None


@pytest.mark.slow
def test_ac7_hybrid_ber(report):
    t0 = time.perf_counter()
    dsnrs = (15.0, 18.0, 21.0, 24.0)
    common = dict(axis="DSNR", psnr_db=30.0, trials=33, batch=11, min_bit_errors=0, min_bits=100_000, seed=7)
    sweep = harness.run_ber_sweep(ExperimentConfig(values=dsnrs, estimators=("model_free", "hybrid"), **common))
    perfect = {
        f: harness.run_ber_sweep(ExperimentConfig(filter=f, values=(15.0,), estimators=("perfect",), **common))
        for f in ("sinc", "gaussian")
    }
    mf = np.array([sweep.get(v, "model_free").ber for v in dsnrs])
    hyb = np.array([sweep.get(v, "hybrid").ber for v in dsnrs])
    ps, pg = perfect["sinc"].get(15.0, "perfect").ber, perfect["gaussian"].get(15.0, "perfect").ber
    bits = min(r.bits for res in (sweep, *perfect.values()) for r in res.rows)

    # SNR gain at the reference BER, or at the lowest BER the hybrid reaches if it stays above it
    target = max(1.5e-3, hyb.min())
    at_hyb = _dsnr_at_ber(dsnrs, hyb, target)
    at_mf = _dsnr_at_ber(dsnrs, mf, target)
    # model-free never reaching the target makes the sweep end a lower bound on its SNR
    gain = (dsnrs[-1] if at_mf is None else at_mf) - at_hyb
    ok = hyb[0] < mf[0] and ps < pg and gain >= 1.0 and bits >= 100_000
    detail = (
        f">= {bits} bits/point; DSNR {dsnrs}: model_free [" + " ".join(f"{b:.2e}" for b in mf)
        + "]  hybrid [" + " ".join(f"{b:.2e}" for b in hyb)
        + f"]  gain at BER {target:.1e}: {gain:.2f} dB"
        + ("" if at_mf is not None else " (lower bound)")
        + f"  perfect(15) sinc {ps:.3e} gaussian {pg:.3e}"
    )
    report("AC7", ok, time.perf_counter() - t0, 7200, detail)


@pytest.mark.slow
def test_ac8_pdr_u_curve(report):
    t0 = time.perf_counter()
    pdrs = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
    cfg = ExperimentConfig(
        frame="embedded", axis="PDR", values=pdrs, dsnr_db=20.0, trials=AC8_TRIALS, batch=AC8_TRIALS,
        min_bit_errors=10**9, seed=8,
    )
    res = harness.run_ber_sweep(cfg)
    ok, parts = True, []
    for e in cfg.estimators:
        ber = np.array([res.get(v, e).ber for v in pdrs])
        inner = ber[1:-1].min()
        ok &= bool(inner < ber[0] and inner < ber[-1])
        parts.append(f"{e} [" + " ".join(f"{b:.2e}" for b in ber) + "]")
    report("AC8", ok, time.perf_counter() - t0, 7200, f"{AC8_TRIALS} trials/point; " + "  ".join(parts))


def test_ac9_complexity(report):
    t0 = time.perf_counter()
    rows = harness.complexity_report(64, 24, 3, 2, 1000, 11, 14, 15)
    targets = {"model_free": 2.95e8, "hybrid": 8.1e8, "sbl": 8.3e12}
    ratios = {k: max(rows[k].total / v, v / rows[k].total) for k, v in targets.items()}
    ok = all(r <= 1.5 for r in ratios.values())
    detail = "  ".join(f"{k} {rows[k].total:.3e} (x{ratios[k]:.2f})" for k in targets)
    report("AC9", ok, time.perf_counter() - t0, 1, detail)


def test_ac10_property_suites(report):
    t0 = time.perf_counter()
    rng = make_rng(10, 0)
    checks = {}

    g = DDGridConfig(8, 6)
    x = QPFrame(g, crandn(rng, 8, 6))
    qp = max(
        abs(qp_extend(x, (k + n * 8, l + m * 6)) - unit_phase(n * l, 6) * x.samples[k, l])
        for k in range(8) for l in range(6) for n in (-3, 0, 2) for m in (-2, 1, 5)
    )
    checks["quasi-periodicity"] = qp < 1e-12

    g = DDGridConfig(16, 8)
    t = crandn(rng, g.MN)
    checks["zak round trip"] = np.abs(zak_inverse(zak_forward(t, g)) - t).max() / np.abs(t).max() < 1e-12

    d = DDArray.impulse(g, 0, 0)
    a = DDArray(g, crandn(rng, 3, 4), -1, 2)
    imps = [DDArray.impulse(g, int(k), int(l), complex(*rng.standard_normal(2))) for k, l in rng.integers(-5, 6, (3, 2))]
    ident = twisted_convolve_discrete(d, a)
    ab_c = twisted_convolve_discrete(twisted_convolve_discrete(imps[0], imps[1]), imps[2])
    a_bc = twisted_convolve_discrete(imps[0], twisted_convolve_discrete(imps[1], imps[2]))
    checks["twisted convolution identity"] = np.allclose(ident.values, a.values) and ident.k0 == a.k0
    checks["twisted convolution associativity"] = np.allclose(ab_c.values, a_bc.values, atol=1e-12)

    psd = True
    for kind in ("sinc", "gaussian"):
        for M, N in ((8, 8), (16, 16)):
            gg = DDGridConfig(M, N)
            C = noise_covariance(PulseFilter(kind), gg).C
            psd &= np.abs(C - C.conj().T).max() < 1e-10
            psd &= np.linalg.eigvalsh(C).min() >= -1e-8 * np.trace(C).real / gg.MN
    checks["covariance Hermitian PSD"] = bool(psd)

    g = DDGridConfig(64, 24)
    mask = make_mask(g, 3, 2)
    bound = True
    for s in range(50):
        r = np.random.default_rng(s)
        y = np.where(mask & (r.random((64, 24)) < 0.8), crandn(r, 64, 24), 0)
        bound &= detect_paths(y, g, make_rng(s))[0].size <= 40
    checks["Algorithm 1 termination bound"] = bool(bound)

    g = DDGridConfig(16, 16)
    sinc = PulseFilter.sinc()
    recovered = True
    for s in range(10):
        r = np.random.default_rng(s)
        k0 = np.array([0, 2, 0])
        l0 = np.array([0, -1, 2])
        gains = r.uniform(0.5, 1.0, 3) * np.exp(2j * np.pi * r.random(3))
        paths = PathSet(gains, k0 * g.delay_res, l0 * g.doppler_res)
        y = synthesize_rx(build_H(heff_closed_form(sinc, paths, g)), make_exclusive_frame(g), None).as_grid()
        taus, nus = detect_paths(np.where(make_mask(g, 3, 2), y, 0), g, make_rng(s))
        found = set(zip(np.round(taus / g.delay_res, 9), np.round(nus / g.doppler_res, 9)))
        recovered &= set(zip(k0.astype(float), l0.astype(float))) <= found
    checks["integer-path exact recovery"] = bool(recovered)

    worst = 0.0
    for M, N in ((2, 4), (4, 4)):
        gg = DDGridConfig(M, N)
        n = gg.MN
        H = crandn(rng, n, n)
        A = crandn(rng, n, n)
        C = A @ A.conj().T / n + 0.1 * np.eye(n)
        y = crandn(rng, n)
        got = lmmse_equalize(y, ChannelMatrix(gg, H), NoiseCovariance(gg, C), 1.3)
        Ci = np.linalg.inv(C)
        ref = np.linalg.inv(H.conj().T @ Ci @ H + np.eye(n) / 1.3) @ H.conj().T @ Ci @ y
        worst = max(worst, np.abs(got - ref).max() / np.abs(ref).max())
    checks["LMMSE brute-force equivalence"] = worst < 1e-10

    cfg = ExperimentConfig(M=16, N=16, trials=3, values=(10.0, 20.0), seed=10)
    checks["determinism"] = harness.run_nmse_sweep(cfg).csv_text() == harness.run_nmse_sweep(cfg).csv_text()

    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks) - len(failed)}/{len(checks)} properties hold" + (f"; failed: {failed}" if failed else "")
    report("AC10", not failed, time.perf_counter() - t0, 120, detail)
