import numpy as np
import pytest

from conftest import crandn
from zakotfs import DDGridConfig
from zakotfs.channels import PathSet, draw_channel, make_rng, veh_a_profile
from zakotfs.filters import EffChannelGrid, PulseFilter, heff_closed_form, heff_closed_form_at, noise_covariance
from zakotfs.frames import make_exclusive_frame
from zakotfs.grid import QPFrame
from zakotfs.io_relation import (
    ChannelMatrix,
    build_H,
    h_columns,
    heff_oracle,
    io_oracle_direct,
    synthesize_rx,
)


def random_heff(grid, rng):
    return EffChannelGrid(grid, crandn(rng, *EffChannelGrid.shape(grid)))


def random_frame(grid, rng):
    return QPFrame(grid, crandn(rng, grid.M, grid.N))


class TestBuildH:
    def test_identity(self, grid8):
        H = build_H(EffChannelGrid.impulse(grid8))
        np.testing.assert_array_equal(H.H, np.eye(64))

    def test_delay_shift(self, grid8):
        M, N = grid8.M, grid8.N
        H = build_H(EffChannelGrid.impulse(grid8, 1, 0)).H
        for l in range(N):
            for k in range(M):
                col = H[:, l * M + k]
                kp = (k + 1) % M
                nz = np.flatnonzero(np.abs(col) > 1e-12)
                assert nz.tolist() == [l * M + kp]
                # wrapping past the last delay bin picks up the quasi-periodic phase
                want = np.exp(-2j * np.pi * l / N) if k == M - 1 else 1.0
                assert col[l * M + kp] == pytest.approx(want, abs=1e-14)

    @pytest.mark.parametrize("shape", [(8, 8), (16, 8)])
    def test_matches_direct_sum(self, shape, rng):
        g = DDGridConfig(*shape)
        for _ in range(3):
            heff, x = random_heff(g, rng), random_frame(g, rng)
            d = build_H(heff) @ x.vec() - io_oracle_direct(heff, x).y
            assert np.abs(d).max() < 1e-10

    def test_linear(self, grid8, rng):
        a, b = random_heff(grid8, rng), random_heff(grid8, rng)
        lhs = build_H(a + 2.0 * b).H
        np.testing.assert_allclose(lhs, build_H(a).H + 2 * build_H(b).H, atol=1e-12)

    def test_support_mismatch(self, grid8, grid16):
        with pytest.raises(ValueError):
            build_H(EffChannelGrid.zeros(grid8), grid16)

    def test_h_columns(self, grid8, rng):
        heff = random_heff(grid8, rng)
        H = build_H(heff).H
        for k, l in [(0, 0), (3, 5), (7, 7)]:
            np.testing.assert_allclose(h_columns(heff.values, grid8, k, l), H[:, l * 8 + k], atol=1e-12)
        stack = h_columns(np.stack([heff.values, 2 * heff.values]), grid8, 2, 1)
        assert stack.shape == (2, 64)
        np.testing.assert_allclose(stack[1], 2 * stack[0])

    def test_nmse(self, grid8, rng):
        H = build_H(random_heff(grid8, rng))
        assert H.nmse(H) == 0.0
        assert H.nmse(ChannelMatrix(grid8, np.zeros_like(H.H))) == pytest.approx(1.0)


class TestOracleDirect:
    def test_pilot_impulse(self, grid16):
        g, alpha = grid16, 2.0
        a0, b0 = 3, -2
        y = io_oracle_direct(EffChannelGrid.impulse(g, a0, b0), make_exclusive_frame(g, alpha)).as_grid()
        nz = np.argwhere(np.abs(y) > 1e-12)
        assert nz.tolist() == [[g.M // 2 + a0, g.N // 2 + b0]]
        assert y[g.M // 2 + a0, g.N // 2 + b0] == pytest.approx(alpha * np.exp(1j * np.pi * b0 / g.N))

    def test_callable_matches_grid(self, grid8, rng):
        heff = random_heff(grid8, rng)
        x = random_frame(grid8, rng)
        a = io_oracle_direct(heff, x).y
        b = io_oracle_direct(lambda k, l: heff.at(k, l), x).y
        np.testing.assert_allclose(a, b, atol=1e-12)

    @pytest.mark.parametrize("kind,tol", [("gaussian", 1e-9), ("sinc", 1e-2)])
    def test_truncation_convergence(self, kind, tol):
        g = DDGridConfig(64, 24)
        filt = PulseFilter(kind)
        paths = draw_channel(veh_a_profile(), make_rng(7))
        x = make_exclusive_frame(g, 1.0)

        def f(k, l):
            return heff_closed_form_at(filt, paths, g, k, l)

        y2 = io_oracle_direct(f, x, m_max=2, n_max=2).y
        y4 = io_oracle_direct(f, x, m_max=4, n_max=4).y
        assert np.linalg.norm(y4 - y2) / np.linalg.norm(y2) < tol


class TestSynthesize:
    def test_noiseless(self, grid8, rng):
        H = build_H(random_heff(grid8, rng))
        x = random_frame(grid8, rng)
        np.testing.assert_array_equal(synthesize_rx(H, x, None).y, H.H @ x.vec())

    def test_deterministic(self, grid8, rng):
        H = build_H(random_heff(grid8, rng))
        C = noise_covariance(PulseFilter.sinc(), grid8)
        x = random_frame(grid8, rng)
        a = synthesize_rx(H, x, C, 1.0, make_rng(3, 1))
        b = synthesize_rx(H, x, C, 1.0, make_rng(3, 1))
        np.testing.assert_array_equal(a.y, b.y)

    def test_affine_in_x(self, grid8, rng):
        H = build_H(random_heff(grid8, rng))
        C = noise_covariance(PulseFilter.sinc(), grid8)
        x1, x2 = random_frame(grid8, rng), random_frame(grid8, rng)
        y0 = synthesize_rx(H, np.zeros(64), C, 1.0, make_rng(1))
        y1 = synthesize_rx(H, x1.vec() + x2.vec(), C, 1.0, make_rng(1))
        np.testing.assert_allclose(y1.y - y0.y, H.H @ (x1.vec() + x2.vec()), atol=1e-12)

    def test_wrong_length(self, grid8):
        H = build_H(EffChannelGrid.impulse(grid8))
        with pytest.raises(ValueError):
            synthesize_rx(H, np.zeros(10), None)

    @pytest.mark.parametrize("kind", ["sinc", "gaussian"])
    def test_noise_covariance(self, kind):
        # sample-covariance error scales as tr(C) / (sqrt(n) |C|_F); a 4x4 grid
        # keeps that below 5% at 1e4 draws
        g = DDGridConfig(4, 4)
        H = build_H(EffChannelGrid.impulse(g))
        C = noise_covariance(PulseFilter(kind), g)
        L = C.factor()
        rng = make_rng(11)
        n = np.stack([synthesize_rx(H, np.zeros(g.MN), C, 1.0, rng, noise_factor=L).y for _ in range(10_000)])
        emp = n.T @ n.conj() / n.shape[0]
        assert np.linalg.norm(emp - C.C) / np.linalg.norm(C.C) < 0.05


class TestHeffOracle:
    def test_zero_paths(self, grid8):
        v = heff_oracle(PulseFilter.sinc(), PathSet([], [], []), grid8, [(0, 0), (1, 2)])
        np.testing.assert_array_equal(v, 0)

    def test_gaussian_origin(self, grid8):
        f = PulseFilter.gaussian()
        p = PathSet.single(1.0, 0.0, 0.0)
        ref = heff_oracle(f, p, grid8, [(0, 0)])[0]
        assert ref == pytest.approx(heff_closed_form(f, p, grid8).at(0, 0), rel=1e-6)
