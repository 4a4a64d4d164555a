import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zakotfs.grid import (
    DDArray,
    DDGridConfig,
    DDIndex,
    QPFrame,
    qp_extend,
    twisted_convolve_discrete,
    unit_phase,
    unvectorize,
    vectorize,
    zak_forward,
    zak_inverse,
)

from conftest import crandn


class TestDDGridConfig:
    def test_derived_quantities(self):
        g = DDGridConfig(64, 24)
        assert g.tau_p * g.nu_p == pytest.approx(1.0, rel=1e-15)
        assert g.B == 64 * 15e3
        assert g.T == pytest.approx(24 / 15e3)
        assert g.delay_res == pytest.approx(g.tau_p / 64)
        assert g.doppler_res == pytest.approx(15e3 / 24)
        assert g.pilot_pos == (32, 12)
        assert g.MN == 1536

    @pytest.mark.parametrize("M,N", [(7, 8), (8, 5), (0, 8), (8, 0), (1, 2)])
    def test_rejects_odd_or_tiny(self, M, N):
        with pytest.raises(ValueError):
            DDGridConfig(M, N)

    def test_rejects_nonpositive_period(self):
        with pytest.raises(ValueError):
            DDGridConfig(8, 8, nu_p=0.0)


class TestVectorization:
    def test_column_major(self, grid8, rng):
        f = crandn(rng, 8, 8)
        v = vectorize(f)
        for k, l in [(0, 0), (3, 5), (7, 7)]:
            assert v[l * 8 + k] == f[k, l]
        np.testing.assert_array_equal(unvectorize(v, grid8), f)

    def test_length_checked(self, grid8):
        with pytest.raises(ValueError):
            unvectorize(np.zeros(63), grid8)


class TestQPExtend:
    def test_fundamental_identity(self, grid8, rng):
        x = QPFrame(grid8, crandn(rng, 8, 8))
        for k in range(8):
            for l in range(8):
                assert qp_extend(x, DDIndex(k, l)) == x.samples[k, l]

    def test_zero_doppler_phase(self, grid8, rng):
        x = QPFrame(grid8, crandn(rng, 8, 8))
        assert qp_extend(x, (3 + 8, 0)) == x.samples[3, 0]

    def test_quarter_turn(self, rng):
        g = DDGridConfig(4, 4)
        x = QPFrame(g, crandn(rng, 4, 4))
        assert qp_extend(x, (2 + 4, 1)) == pytest.approx(x.samples[2, 1] * 1j, abs=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(k=st.integers(0, 7), l=st.integers(0, 5), n=st.integers(-50, 50), m=st.integers(-50, 50))
    def test_quasi_periodicity(self, k, l, n, m):
        g = DDGridConfig(8, 6)
        x = QPFrame(g, np.arange(48).reshape(8, 6) + 1j)
        got = qp_extend(x, (k + n * 8, l + m * 6))
        want = unit_phase(n * l, 6) * qp_extend(x, (k, l))
        assert got == pytest.approx(want, abs=1e-12)

    def test_frame_is_read_only(self, grid8):
        x = QPFrame(grid8, np.zeros((8, 8)))
        with pytest.raises(ValueError):
            x.samples[0, 0] = 1

    def test_shape_checked(self, grid8):
        with pytest.raises(ValueError):
            QPFrame(grid8, np.zeros((8, 7)))


class TestTwistedConvolution:
    def test_identity(self, grid8, rng):
        b = DDArray(grid8, crandn(rng, 3, 4), -1, 2)
        c = twisted_convolve_discrete(DDArray.impulse(grid8, 0, 0), b)
        np.testing.assert_allclose(c.values, b.values, atol=1e-15)
        assert (c.k0, c.l0) == (b.k0, b.l0)

    def test_zero_doppler_shift(self, grid8):
        c = twisted_convolve_discrete(DDArray.impulse(grid8, 2, 0), DDArray.impulse(grid8, 3, 0))
        assert c.at(5, 0) == 1.0

    def test_single_phase_term(self, grid8):
        c = twisted_convolve_discrete(DDArray.impulse(grid8, 0, 3), DDArray.impulse(grid8, 5, 0))
        assert c.at(5, 3) == pytest.approx(np.exp(2j * np.pi * 3 * 5 / 64), abs=1e-15)

    def test_cell_area_scaling(self, grid8):
        c = twisted_convolve_discrete(DDArray.impulse(grid8, 0, 0), DDArray.impulse(grid8, 0, 0), cell_area=True)
        assert c.at(0, 0) == pytest.approx(grid8.delay_res * grid8.doppler_res)

    def test_minkowski_support(self, grid8, rng):
        a = DDArray(grid8, crandn(rng, 2, 3), -1, 0)
        b = DDArray(grid8, crandn(rng, 4, 2), 2, -3)
        c = twisted_convolve_discrete(a, b)
        assert c.values.shape == (5, 4)
        assert (c.k0, c.l0) == (1, -3)

    def test_rejects_grid_mismatch(self, grid8):
        with pytest.raises(ValueError):
            twisted_convolve_discrete(DDArray.impulse(grid8, 0, 0), DDArray.impulse(DDGridConfig(8, 4), 0, 0))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=3))
    def test_associative_on_impulses(self, pts):
        g = DDGridConfig(8, 6)
        a, b, c = (DDArray.impulse(g, k, l, amp) for (k, l), amp in zip(pts, (1.0, 1j, -0.5 + 2j)))
        left = twisted_convolve_discrete(twisted_convolve_discrete(a, b), c)
        right = twisted_convolve_discrete(a, twisted_convolve_discrete(b, c))
        assert (left.k0, left.l0) == (right.k0, right.l0)
        np.testing.assert_allclose(left.values, right.values, atol=1e-12)


class TestZak:
    def test_zero(self, grid8):
        assert not zak_forward(np.zeros(64), grid8).samples.any()
        assert not zak_inverse(QPFrame(grid8, np.zeros((8, 8)))).any()

    def test_impulse(self, grid8):
        x = np.zeros(64)
        x[0] = 1.0
        z = zak_forward(x, grid8).samples
        np.testing.assert_allclose(z[0], np.sqrt(grid8.tau_p / 8), rtol=1e-15)
        assert not z[1:].any()

    def test_round_trip(self, grid8, rng):
        x = crandn(rng, 64)
        np.testing.assert_allclose(zak_inverse(zak_forward(x, grid8)), x, rtol=0, atol=1e-12 * np.abs(x).max())
        f = QPFrame(grid8, crandn(rng, 8, 8))
        back = zak_forward(zak_inverse(f), grid8).samples
        np.testing.assert_allclose(back, f.samples, atol=1e-12 * np.abs(f.samples).max())

    def test_parseval_constant(self, rng):
        g = DDGridConfig(16, 6)
        x = crandn(rng, g.MN)
        ez = zak_forward(x, g).energy()
        assert ez == pytest.approx(g.N * g.tau_p / g.M * np.sum(np.abs(x) ** 2), rel=1e-12)

    def test_pulsone(self, grid8):
        f = np.zeros((8, 8), dtype=complex)
        f[0, 0] = 1.0
        x = zak_inverse(QPFrame(grid8, f))
        nz = np.flatnonzero(np.abs(x) > 1e-12 * np.abs(x).max())
        np.testing.assert_array_equal(nz, np.arange(0, 64, 8))

    def test_length_checked(self, grid8):
        with pytest.raises(ValueError):
            zak_forward(np.zeros(63), grid8)
