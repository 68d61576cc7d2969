"""Tests for the exact linear propagators and half-wave variables."""

import numpy as np
import pytest

from bqlab.errors import PreconditionError
from bqlab.propagators import (
    WaveState,
    apply_cosine_propagator,
    apply_sine_propagator,
    diagonalize,
    from_halfwaves,
    linear_evolve,
    linear_scaled_velocity,
    propagator_cache,
    quadratic_energy,
)
from bqlab.spectral import (
    Grid1D,
    Multiplier,
    SpectralField,
    apply_multiplier,
    dispersion_relation,
    forward_transform,
)

from conftest import mean_zero_field, random_field


def cosine_state(grid: Grid1D) -> WaveState:
    u = forward_transform(grid, np.cos(grid.nodes).astype(complex))
    return WaveState(u, SpectralField.zero(grid))


class TestWaveState:
    def test_mean_zero_enforced(self, grid64, rng):
        u = random_field(grid64, rng)
        bad = np.array(random_field(grid64, rng).coeffs)
        bad[0] = 1.0
        with pytest.raises(PreconditionError):
            WaveState(u, SpectralField(grid64, bad))

    def test_tiny_zero_mode_pinned_to_zero(self, grid64, rng):
        u = random_field(grid64, rng)
        almost = np.array(random_field(grid64, rng).coeffs)
        almost[0] = 1e-14
        st = WaveState(u, SpectralField(grid64, almost))
        assert st.ut.coeffs[0] == 0.0

    def test_from_data_differentiates(self, grid64, rng):
        phi = random_field(grid64, rng)
        psi = random_field(grid64, rng)
        st = WaveState.from_data(phi, psi)
        np.testing.assert_allclose(
            st.ut.coeffs, 1j * grid64.wavenumbers * psi.coeffs, rtol=1e-14
        )


class TestPropagatorSymbols:
    def test_cosine_identity_at_zero(self, grid64, rng):
        u = random_field(grid64, rng)
        np.testing.assert_array_equal(apply_cosine_propagator(u, 0.0).coeffs, u.coeffs)

    def test_cosine_pure_mode(self, grid64):
        u = forward_transform(grid64, np.cos(grid64.nodes).astype(complex))
        t = 0.37
        out = apply_cosine_propagator(u, t)
        np.testing.assert_allclose(
            out.coeffs, np.cos(np.sqrt(2) * t) * u.coeffs, rtol=1e-14, atol=1e-13
        )

    def test_cosine_constant_unchanged(self, grid64):
        u = forward_transform(grid64, np.ones(64))
        np.testing.assert_allclose(apply_cosine_propagator(u, 5.0).coeffs, u.coeffs, rtol=1e-14)

    def test_sine_zero_time(self, grid64, rng):
        u = random_field(grid64, rng)
        np.testing.assert_allclose(apply_sine_propagator(u, 0.0).coeffs, 0, atol=1e-15)

    def test_sine_pure_mode(self, grid64):
        u = forward_transform(grid64, np.cos(grid64.nodes).astype(complex))
        t = 1.1
        out = apply_sine_propagator(u, t)
        np.testing.assert_allclose(
            out.coeffs, np.sin(np.sqrt(2) * t) / np.sqrt(2) * u.coeffs,
            rtol=1e-14, atol=1e-13,
        )

    def test_sine_constant_limit(self, grid64):
        # at xi = 0 the symbol takes its limit value t
        u = forward_transform(grid64, np.ones(64))
        t = 2.7
        np.testing.assert_allclose(apply_sine_propagator(u, t).coeffs, t * u.coeffs, rtol=1e-14)

    def test_cache_tables(self, grid64):
        cache = propagator_cache(grid64, 0.01)
        assert cache.sinc_full[0] == 0.01
        gamma = dispersion_relation(grid64.wavenumbers)
        np.testing.assert_allclose(cache.cos_full, np.cos(gamma * 0.01), rtol=1e-15)
        # memoised per (grid, dt)
        assert propagator_cache(grid64, 0.01) is cache
        assert propagator_cache(grid64, 0.02) is not cache


class TestLinearEvolve:
    def test_time_zero_identity(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        out = linear_evolve(st, 0.0)
        np.testing.assert_array_equal(out.u.coeffs, st.u.coeffs)
        np.testing.assert_array_equal(out.ut.coeffs, st.ut.coeffs)

    def test_closed_form_cosine_data(self, grid64):
        st = cosine_state(grid64)
        t = np.pi
        out = linear_evolve(st, t)
        root2 = np.sqrt(2.0)
        np.testing.assert_allclose(
            out.u.coeffs, np.cos(root2 * t) * st.u.coeffs, rtol=1e-13, atol=1e-13
        )
        # high-mode FFT junk is amplified by gamma(xi) in the ut row
        np.testing.assert_allclose(
            out.ut.coeffs, -root2 * np.sin(root2 * t) * st.u.coeffs, rtol=1e-13, atol=1e-12
        )

    def test_group_property_and_reversibility(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        ab = linear_evolve(linear_evolve(st, 0.3), 0.45)
        direct = linear_evolve(st, 0.75)
        scale = np.max(np.abs(st.u.coeffs))
        np.testing.assert_allclose(ab.u.coeffs, direct.u.coeffs, atol=1e-12 * scale)
        back = linear_evolve(linear_evolve(st, 0.3), -0.3)
        np.testing.assert_allclose(back.u.coeffs, st.u.coeffs, atol=1e-12 * scale)
        np.testing.assert_allclose(back.ut.coeffs, st.ut.coeffs, atol=1e-12 * scale)

    def test_quadratic_energy_conserved(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        e0 = quadratic_energy(st)
        for t in (0.01, 1.0, 23.0):
            np.testing.assert_allclose(quadratic_energy(linear_evolve(st, t)), e0, rtol=1e-11)


class TestScaledVelocity:
    def test_time_zero_is_hilbert_like(self, grid64, rng):
        # at t = 0: |xi|^(-1) (psi_x)^ = i sign(xi) psi^
        phi = random_field(grid64, rng)
        psi = random_field(grid64, rng)
        st = WaveState.from_data(phi, psi)
        out = linear_scaled_velocity(phi, st.ut, 0.0)
        xi = grid64.wavenumbers
        expected = 1j * np.sign(xi) * psi.coeffs
        expected[0] = 0.0
        np.testing.assert_allclose(out.coeffs, expected, rtol=1e-13, atol=1e-13)

    def test_pure_mode_closed_form(self, grid64):
        phi = forward_transform(grid64, np.cos(grid64.nodes).astype(complex))
        t = 0.8
        out = linear_scaled_velocity(phi, SpectralField.zero(grid64), t)
        root2 = np.sqrt(2.0)
        np.testing.assert_allclose(
            out.coeffs, -root2 * np.sin(root2 * t) * phi.coeffs, rtol=1e-13, atol=1e-13
        )

    def test_matches_evolved_state(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        t = 1.3
        direct = linear_scaled_velocity(st.u, st.ut, t)
        ev = linear_evolve(st, t)
        via_state = apply_multiplier(Multiplier.abs_power(grid64, -1.0), ev.ut)
        np.testing.assert_allclose(direct.coeffs, via_state.coeffs, rtol=1e-12, atol=1e-14)

    def test_mean_zero_precondition(self, grid64, rng):
        bad = np.array(random_field(grid64, rng).coeffs)
        bad[0] = 2.0
        with pytest.raises(PreconditionError):
            linear_scaled_velocity(random_field(grid64, rng), SpectralField(grid64, bad), 0.1)


class TestHalfWaves:
    def test_zero_velocity_degenerates(self, grid64, rng):
        u = random_field(grid64, rng)
        st = WaveState(u, SpectralField.zero(grid64))
        ap, am = diagonalize(st)
        np.testing.assert_allclose(ap.coeffs[1:], u.coeffs[1:], rtol=1e-14)
        np.testing.assert_allclose(am.coeffs[1:], u.coeffs[1:], rtol=1e-14)

    def test_pure_forward_wave(self, grid64, rng):
        # ut = i*gamma*u makes the state a pure "+" wave: a+ = 2u, a- = 0
        u = mean_zero_field(grid64, rng)
        gamma = dispersion_relation(grid64.wavenumbers)
        st = WaveState(u, SpectralField(grid64, 1j * gamma * u.coeffs))
        ap, am = diagonalize(st)
        np.testing.assert_allclose(ap.coeffs[1:], 2 * u.coeffs[1:], rtol=1e-13)
        np.testing.assert_allclose(am.coeffs[1:], 0, atol=1e-13)

    def test_round_trip(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        ap, am = diagonalize(st)
        back = from_halfwaves(ap, am, st.t)
        np.testing.assert_allclose(back.u.coeffs, st.u.coeffs, atol=1e-13)
        np.testing.assert_allclose(back.ut.coeffs, st.ut.coeffs, atol=1e-13)

    def test_linear_flow_is_pure_phase(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        ap0, am0 = diagonalize(st)
        t = 0.7
        ap1, am1 = diagonalize(linear_evolve(st, t))
        gamma = dispersion_relation(grid64.wavenumbers)
        scale = np.max(np.abs(ap0.coeffs))
        np.testing.assert_allclose(
            ap1.coeffs[1:], (np.exp(1j * gamma * t) * ap0.coeffs)[1:], atol=1e-12 * scale
        )
        np.testing.assert_allclose(
            am1.coeffs[1:], (np.exp(-1j * gamma * t) * am0.coeffs)[1:], atol=1e-12 * scale
        )
