"""Command-line entry point: ``zakotfs <command> [--config FILE] ...``.

Exit codes: 0 success, 1 configuration or usage error, 2 failed numerical
validation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .channels import PathSet, ProfileError, draw_channel, make_rng
from .estimators import estimate_all
from .filters import EffChannelGrid, PulseFilter, heff_closed_form, noise_covariance, sidelobe_energy_fraction
from .frames import FrameLayout
from .grid import DDGridConfig, QPFrame, zak_forward, zak_inverse
from .io_relation import build_H, heff_oracle, io_oracle_direct, synthesize_rx

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI experiment file (defaults if omitted)")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--trials", type=int, help="trial count / cap (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker processes (results do not depend on it)")
    p = _Parser(prog="zakotfs", description="Zak-OTFS channel estimation experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [
        ("nmse", "NMSE sweep"),
        ("ber", "BER sweep"),
        ("kappa", "NMSE versus the kappa support parameter"),
        ("complexity", "operation-count report"),
        ("heatmap", "export |h_eff| heatmaps for one channel draw"),
        ("validate", "oracle cross-checks on a small grid"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return p


def _load(args) -> harness.ExperimentConfig:
    over = {"seed": args.seed, "trials": args.trials, "out": None if args.out is None else str(args.out)}
    if args.config is not None:
        return harness.load_config(args.config, **over)
    try:
        return harness.ExperimentConfig(**{k: v for k, v in over.items() if v is not None})
    except TypeError as exc:
        raise harness.ConfigError(str(exc)) from None


def _print_sweep(res: harness.SweepResult) -> None:
    print(f"config {res.config_hash}  seed {res.seed}  axis {res.axis}")
    for r in res.rows:
        stat = f"nmse={r.nmse:.4e}" if r.nmse is not None else f"ber={r.ber:.4e} ({r.bit_errors}/{r.bits})"
        print(f"  {r.value:>8g}  {r.estimator:<16} trials={r.trials:<5} {stat}")


def _cmd_sweep(cfg, args, kind: str) -> int:
    if kind == "kappa":
        if cfg.axis != "KAPPA":
            cfg = replace(cfg, axis="KAPPA", values=(1.0, 2.0, 3.0))
        res = harness.run_kappa_sweep(cfg, args.threads)
    elif kind == "nmse":
        res = harness.run_nmse_sweep(cfg, args.threads)
    else:
        res = harness.run_ber_sweep(cfg, args.threads)
    path = res.write_csv(Path(cfg.out) / f"{kind}.csv")
    _print_sweep(res)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_complexity(cfg, args) -> int:
    k, l = cfg.extent
    rows = harness.complexity_report(cfg.M, cfg.N, k, l, cfg.sbl_t_max, cfg.sbl_m_tau, cfg.sbl_n_nu, cfg.sbl_p_hat)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "complexity.csv").write_text(harness.complexity_csv(rows))
    for r in rows.values():
        print(f"  {r.scheme:<16} adds={r.additions:.4e} mults={r.multiplications:.4e} total={r.total:.4e}")
    print(f"wrote {out / 'complexity.csv'}")
    return EXIT_OK


def _cmd_heatmap(cfg, args) -> int:
    grid, filt = cfg.grid, cfg.pulse
    k_max, l_max = cfg.extent
    paths = draw_channel(cfg.channel_profile(), make_rng(cfg.seed, (0, 0)))
    heff = heff_closed_form(filt, paths, grid)
    H = build_H(heff)
    alpha = np.sqrt(10 ** (cfg.psnr_db / 10) * grid.MN)
    if cfg.frame == "exclusive":
        layout = FrameLayout.exclusive(grid, alpha, k_max, l_max)
    else:
        layout = FrameLayout.embedded(grid, alpha, k_max, l_max)
    C = noise_covariance(filt, grid, 1.0)
    y = synthesize_rx(H, layout.frame(), C, 1.0, make_rng(cfg.seed, (0, 1, 0)))
    est = estimate_all(y, layout, filt, grid, make_rng(cfg.seed, (0, 2, 0)))
    ka, la = EffChannelGrid.index_axes(grid)
    out = Path(cfg.out)
    for name, vals in [("heff_true", heff.values), ("heff_free", est.free.values),
                       ("heff_dep", est.dep.values), ("heff_hybrid", est.hybrid.values)]:
        csv_path, _ = harness.export_heatmap(vals, out / f"{name}.csv", ka, la)
        print(f"wrote {csv_path}")
    csv_path, _ = harness.export_heatmap(y.as_grid(), out / "rx_pilot.csv")
    print(f"wrote {csv_path}")
    return EXIT_OK


def validation_checks(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Oracle cross-checks on an 8x8 grid: ``(name, passed, detail)`` rows."""
    grid = DDGridConfig(8, 8)
    rng = make_rng(seed, 99)
    checks = []

    sinc, gauss = PulseFilter.sinc(), PulseFilter.gaussian()
    fs, fg = sidelobe_energy_fraction(sinc, grid), sidelobe_energy_fraction(gauss, grid)
    checks.append(("sidelobe sinc 18.5% +- 0.5", abs(fs - 0.185) <= 0.005, f"{100 * fs:.3f}%"))
    checks.append(("sidelobe gaussian 2.35% +- 0.3", abs(fg - 0.0235) <= 0.003, f"{100 * fg:.3f}%"))

    ka, la = EffChannelGrid.index_axes(grid)
    pts = np.array([(k, l) for k in ka for l in la])
    for filt in (sinc, gauss):
        p = PathSet.single(
            complex(rng.standard_normal(), rng.standard_normal()),
            rng.uniform(0, 3) * grid.delay_res,
            rng.uniform(-2, 2) * grid.doppler_res,
        )
        ref = heff_oracle(filt, p, grid, pts)
        got = heff_closed_form(filt, p, grid).values.ravel()
        err = np.abs(ref - got).max() / np.abs(ref).max()
        checks.append((f"closed form vs quadrature ({filt.kind.value})", err < 1e-6, f"rel err {err:.2e}"))

    heff = EffChannelGrid(grid, rng.standard_normal(EffChannelGrid.shape(grid))
                          + 1j * rng.standard_normal(EffChannelGrid.shape(grid)))
    x = QPFrame(grid, rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
    d = np.abs(build_H(heff) @ x.vec() - io_oracle_direct(heff, x).y).max()
    checks.append(("build_H vs direct I/O sum", d < 1e-10, f"max diff {d:.2e}"))

    t = rng.standard_normal(grid.MN) + 1j * rng.standard_normal(grid.MN)
    rt = np.abs(zak_inverse(zak_forward(t, grid)) - t).max() / np.abs(t).max()
    checks.append(("Zak round trip", rt < 1e-12, f"rel err {rt:.2e}"))

    for filt in (sinc, gauss):
        C = noise_covariance(filt, grid, 1.0).C
        herm = np.abs(C - C.conj().T).max()
        lam = np.linalg.eigvalsh(C).min()
        ok = herm < 1e-10 and lam >= -1e-8 * np.real(np.trace(C)) / grid.MN
        checks.append((f"covariance Hermitian PSD ({filt.kind.value})", bool(ok), f"min eig {lam:.3e}"))
    return checks


def _cmd_validate(cfg, args) -> int:
    checks = validation_checks(cfg.seed)
    width = max(len(c[0]) for c in checks)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    return EXIT_OK if all(c[1] for c in checks) else EXIT_VALIDATION


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise harness.ConfigError("--threads must be >= 1")
        cfg = _load(args)
        if args.command in ("nmse", "ber", "kappa"):
            return _cmd_sweep(cfg, args, args.command)
        if args.command == "complexity":
            return _cmd_complexity(cfg, args)
        if args.command == "heatmap":
            return _cmd_heatmap(cfg, args)
        return _cmd_validate(cfg, args)
    except (harness.ConfigError, ProfileError) as exc:
        print(f"zakotfs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
