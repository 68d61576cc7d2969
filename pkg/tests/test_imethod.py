"""Tests for the truncation multiplier, energies, commutator, and increments."""

import numpy as np
import pytest

from bqlab.errors import PreconditionError
from bqlab.imethod import (
    EnergyReport,
    ISpec,
    acl_commutator,
    acl_residual,
    apply_I,
    energy,
    increment,
    modified_energy,
    smoothing_bounds,
)
from bqlab.oracles import cubic_direct
from bqlab.propagators import WaveState
from bqlab.solver import SolverConfig, evolve
from bqlab.spectral import (
    Grid1D,
    SpectralField,
    forward_transform,
    l2_inner,
    sobolev_norm,
)
from bqlab.synthesis import rough_field

from conftest import band_limited_field, random_field


def smooth_state(grid, rng, amplitude=0.8, decay=0.5):
    mags = amplitude * np.exp(-decay * np.abs(grid.wavenumbers))
    u = SpectralField(grid, mags * np.exp(2j * np.pi * rng.random(grid.modes)))
    ut_c = mags * np.exp(2j * np.pi * rng.random(grid.modes))
    ut_c[0] = 0.0
    return WaveState(u, SpectralField(grid, ut_c))


class TestISpec:
    def test_validation(self):
        with pytest.raises(PreconditionError):
            ISpec(N=0.5, s=0.75)
        with pytest.raises(PreconditionError):
            ISpec(N=8, s=0.0)
        with pytest.raises(PreconditionError):
            ISpec(N=8, s=1.5)
        with pytest.raises(PreconditionError):
            ISpec(N=8, s=0.75, shape="wavy")

    def test_sharp_formula(self):
        spec = ISpec(N=8.0, s=0.5)
        xi = np.array([0.0, 4.0, 8.0, 16.0, 32.0])
        expected = np.array([1.0, 1.0, 1.0, np.sqrt(0.5), 0.5])
        np.testing.assert_allclose(spec.weight(xi), expected, rtol=1e-14)

    def test_pure_mode_at_2N(self):
        # amplitude scaling (1/2)^(1/2) at |xi| = 2N for s = 1/2
        np.testing.assert_allclose(
            ISpec(N=8.0, s=0.5).weight(16.0), 0.70710678118654752, rtol=1e-14
        )

    def test_even_monotone_bounded(self):
        xi = np.linspace(-100, 100, 4001)
        for shape in ("sharp", "smooth"):
            w = ISpec(N=8.0, s=0.6, shape=shape).weight(xi)
            assert np.all((w > 0) & (w <= 1))
            np.testing.assert_allclose(w, w[::-1], rtol=1e-13)
            pos = xi >= 0
            assert np.all(np.diff(w[pos]) <= 1e-12)

    def test_smooth_blend_endpoints(self):
        spec = ISpec(N=8.0, s=0.6, shape="smooth")
        np.testing.assert_allclose(spec.weight(8.0), 1.0, rtol=1e-14)
        np.testing.assert_allclose(spec.weight(16.0), 0.5 ** 0.4, rtol=1e-12)
        # identical to the decay branch beyond 2N
        np.testing.assert_allclose(spec.weight(40.0), (8.0 / 40.0) ** 0.4, rtol=1e-13)

    def test_smooth_blend_c2_junctions(self):
        # second differences stay continuous through |xi| = N and 2N
        spec = ISpec(N=8.0, s=0.6, shape="smooth")
        h = 1e-3
        for x0 in (8.0, 16.0):
            xs = x0 + h * np.arange(-3, 4)
            w = spec.weight(xs)
            d2 = np.diff(w, 2) / h ** 2
            assert np.max(np.abs(np.diff(d2))) < 1e-2


class TestApplyI:
    def test_band_limited_unchanged(self, grid64, rng):
        spec = ISpec(N=10.0, s=0.75)
        u = band_limited_field(grid64, rng, 10.0)
        np.testing.assert_array_equal(apply_I(spec, u).coeffs, u.coeffs)

    def test_s_one_is_identity(self, grid64, rng):
        spec = ISpec(N=4.0, s=1.0)
        u = random_field(grid64, rng)
        np.testing.assert_array_equal(apply_I(spec, u).coeffs, u.coeffs)

    def test_commutes_with_multipliers(self, grid64, rng):
        from bqlab.spectral import Multiplier, apply_multiplier

        spec = ISpec(N=4.0, s=0.6)
        u = random_field(grid64, rng)
        m = Multiplier.bracket_power(grid64, 0.7)
        a = apply_I(spec, apply_multiplier(m, u))
        b = apply_multiplier(m, apply_I(spec, u))
        np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-14)


class TestEnergy:
    def test_zero_state(self, grid64):
        st = WaveState(SpectralField.zero(grid64), SpectralField.zero(grid64))
        assert energy(st).total == 0.0

    def test_cosine_closed_form(self):
        # E = (1/2)(pi + pi) + (1/4)(3pi/4) for u = cos x, ut = 0 on [0, 2pi]
        g = Grid1D(2 * np.pi, 64)
        st = WaveState(forward_transform(g, np.cos(g.nodes).astype(complex)),
                       SpectralField.zero(g))
        rep = energy(st)
        np.testing.assert_allclose(rep.h1_part, np.pi, rtol=1e-12)
        assert rep.kinetic_part == 0.0
        np.testing.assert_allclose(rep.quartic_part, 3 * np.pi / 16, rtol=1e-12)
        np.testing.assert_allclose(rep.total, np.pi + 3 * np.pi / 16, rtol=1e-12)

    def test_parts_nonnegative_and_sum(self, grid64, rng):
        rep = energy(smooth_state(grid64, rng))
        assert rep.h1_part >= 0 and rep.kinetic_part >= 0 and rep.quartic_part >= 0
        np.testing.assert_allclose(
            rep.total, rep.h1_part + rep.kinetic_part + rep.quartic_part, rtol=1e-15
        )

    def test_conserved_along_flow(self, grid64, rng):
        st = smooth_state(grid64, rng, amplitude=0.6)
        traj = evolve(st, 0.5, SolverConfig(dt=1e-3))
        e = np.array(traj.energies)
        assert np.max(np.abs(e - e[0])) / e[0] <= 1e-8


class TestModifiedEnergy:
    def test_band_limited_equals_full(self, grid64, rng):
        spec = ISpec(N=12.0, s=0.7)
        u = band_limited_field(grid64, rng, 12.0)
        ut = np.array(band_limited_field(grid64, rng, 12.0).coeffs)
        ut[0] = 0.0
        st = WaveState(u, SpectralField(grid64, ut))
        assert modified_energy(st, spec).total == energy(st).total

    def test_s_one_equals_full(self, grid64, rng):
        st = smooth_state(grid64, rng)
        spec = ISpec(N=4.0, s=1.0)
        assert modified_energy(st, spec).total == energy(st).total

    def test_quadratic_parts_damped(self, grid64, rng):
        # m <= 1 damps both quadratic parts (quartic not pointwise ordered)
        spec = ISpec(N=4.0, s=0.6)
        for _ in range(10):
            st = smooth_state(grid64, rng, decay=0.1)
            full = energy(st)
            mod = modified_energy(st, spec)
            assert mod.h1_part <= full.h1_part * (1 + 1e-12)
            assert mod.kinetic_part <= full.kinetic_part * (1 + 1e-12)


class TestCommutator:
    def test_locality(self, grid64, rng):
        spec = ISpec(N=9.0, s=0.75)
        u = band_limited_field(grid64, rng, 3.0)  # spectrum below N/3
        comm = acl_commutator(u, spec)
        np.testing.assert_allclose(comm.coeffs, 0, atol=1e-12 * np.max(np.abs(u.coeffs)))

    def test_s_one_vanishes(self, grid64, rng):
        spec = ISpec(N=4.0, s=1.0)
        comm = acl_commutator(random_field(grid64, rng), spec)
        np.testing.assert_array_equal(comm.coeffs, 0)

    def test_against_convolution_oracle(self, rng):
        g = Grid1D(2 * np.pi, 64)
        spec = ISpec(N=4.0, s=0.75)
        u = random_field(g, rng, decay=0.05)
        fast = acl_commutator(u, spec).coeffs
        slow = cubic_direct(apply_I(spec, u)) - spec.weight(g.wavenumbers) * cubic_direct(u)
        np.testing.assert_allclose(fast, slow, atol=1e-10 * np.max(np.abs(slow)))


class TestAclResidual:
    def test_needs_three_states(self, grid64, rng):
        st = smooth_state(grid64, rng)
        traj = evolve(st, 0.0, SolverConfig(dt=0.01))
        with pytest.raises(PreconditionError):
            acl_residual(traj, ISpec(N=4.0, s=0.75))

    def test_band_limited_reduces_to_conservation_drift(self, grid64, rng):
        # commutator vanishes, so the residual equals the centered
        # difference of the conserved energy itself
        spec = ISpec(N=24.0, s=0.75)
        u = band_limited_field(grid64, rng, 7.0)
        ut_c = np.array(band_limited_field(grid64, rng, 7.0).coeffs)
        ut_c[0] = 0.0
        st = WaveState(0.5 * u, SpectralField(grid64, 0.5 * ut_c))
        traj = evolve(st, 0.1, SolverConfig(dt=0.01))
        res = acl_residual(traj, spec)
        e = np.array(traj.energies)
        dedt = np.abs((e[2:] - e[:-2]) / (2 * 0.01))
        np.testing.assert_allclose(res, dedt, rtol=1e-6, atol=1e-14)

    def test_second_order_in_dt(self, grid64, rng):
        st = smooth_state(grid64, rng, amplitude=0.8)
        spec = ISpec(N=8.0, s=0.75)
        res = []
        for dt in (4e-3, 2e-3):
            traj = evolve(st, 0.16, SolverConfig(dt=dt))
            res.append(np.max(acl_residual(traj, spec)))
        order = np.log2(res[0] / res[1])
        assert order >= 1.8


class TestIncrement:
    def test_s_one_is_scheme_drift(self, grid64, rng):
        st = smooth_state(grid64, rng, amplitude=0.6)
        traj = evolve(st, 0.2, SolverConfig(dt=2e-3))
        spec = ISpec(N=4.0, s=1.0)
        e = np.array(traj.energies)
        drift = np.max(np.abs(e - e[0]))
        np.testing.assert_allclose(increment(traj, spec), drift, rtol=1e-12)

    def test_N_above_lattice_same_as_identity(self, grid64, rng):
        st = smooth_state(grid64, rng, amplitude=0.6)
        traj = evolve(st, 0.1, SolverConfig(dt=2e-3))
        big_n = ISpec(N=2.0 * grid64.max_wavenumber, s=0.7)
        ident = ISpec(N=4.0, s=1.0)
        np.testing.assert_allclose(
            increment(traj, big_n), increment(traj, ident), rtol=1e-12
        )


class TestSmoothingBounds:
    @pytest.mark.parametrize("N", [4.0, 16.0, 64.0])
    @pytest.mark.parametrize("s0", [0.0, 0.75])
    def test_sandwich(self, grid128, rng, N, s0):
        spec = ISpec(N=N, s=0.75)
        for _ in range(25):
            u = rough_field(grid128, 0.75, rng)
            lo, mid, hi = smoothing_bounds(u, spec, s0)
            assert lo <= mid * (1 + 1e-12)
            assert mid <= hi * (1 + 1e-12)


class TestAclIdentityPairing:
    def test_derivative_matches_pairing(self, grid64, rng):
        # d/dt E(Iu) equals the commutator pairing along an accurate run
        st = smooth_state(grid64, rng, amplitude=0.8)
        spec = ISpec(N=6.0, s=0.7)
        dt = 1e-3
        traj = evolve(st, 0.04, SolverConfig(dt=dt))
        mid = len(traj.states) // 2
        e_m1 = modified_energy(traj.states[mid - 1], spec).total
        e_p1 = modified_energy(traj.states[mid + 1], spec).total
        dedt = (e_p1 - e_m1) / (2 * dt)
        state = traj.states[mid]
        pairing = l2_inner(acl_commutator(state.u, spec), apply_I(spec, state.ut))
        # centered differencing leaves an O(dt^2) defect
        np.testing.assert_allclose(dedt, pairing, rtol=5e-3, atol=1e-12)
