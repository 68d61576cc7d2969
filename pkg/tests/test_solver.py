"""Tests for the RK4 stepper, the existence-time rule, and the Picard solver."""

import numpy as np
import pytest

from bqlab.errors import (
    ContractionFailureError,
    DivergenceError,
    PreconditionError,
)
from bqlab.propagators import WaveState, linear_evolve
from bqlab.solver import (
    SolverConfig,
    Trajectory,
    evolve,
    local_delta,
    nonlinear_rhs,
    picard_solve,
    step,
)
from bqlab.spectral import (
    Grid1D,
    SpectralField,
    forward_transform,
    sobolev_norm,
)

from conftest import mean_zero_field, random_field


def smooth_pair(grid, rng, amplitude=0.4, decay=1.2):
    mags = amplitude * np.exp(-decay * np.abs(grid.wavenumbers))
    phi = SpectralField(grid, mags * np.exp(2j * np.pi * rng.random(grid.modes)))
    psi = SpectralField(grid, mags * np.exp(2j * np.pi * rng.random(grid.modes)))
    return phi, psi


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(PreconditionError):
            SolverConfig(dt=-1.0)
        with pytest.raises(PreconditionError):
            SolverConfig(dt=0.1, sign="sideways")
        with pytest.raises(PreconditionError):
            SolverConfig(dt=0.1, tol_picard=0.5)
        with pytest.raises(PreconditionError):
            SolverConfig(dt=0.1, max_picard_iters=1)
        with pytest.raises(PreconditionError):
            SolverConfig(dt=0.1, scheme="leapfrog")


class TestNonlinearRhs:
    def test_zero(self, grid64):
        out = nonlinear_rhs(SpectralField.zero(grid64))
        np.testing.assert_array_equal(out.coeffs, 0)

    def test_pure_mode_defocusing(self, grid64):
        # |e^{ix}|^2 e^{ix} = e^{ix}; -xi^2 at xi = 1 gives -e^{ix}
        u = forward_transform(grid64, np.exp(1j * grid64.nodes))
        out = nonlinear_rhs(u, "defocusing")
        np.testing.assert_allclose(out.coeffs, -u.coeffs, rtol=1e-13, atol=1e-11)
        flipped = nonlinear_rhs(u, "focusing")
        np.testing.assert_allclose(flipped.coeffs, u.coeffs, rtol=1e-13, atol=1e-11)

    def test_mean_zero_always(self, grid64, rng):
        out = nonlinear_rhs(random_field(grid64, rng))
        assert out.coeffs[0] == 0.0


class TestStep:
    def test_zero_state_fixed_point(self, grid64):
        st = WaveState(SpectralField.zero(grid64), SpectralField.zero(grid64))
        out = step(st, SolverConfig(dt=0.01))
        np.testing.assert_array_equal(out.u.coeffs, 0)
        assert out.t == 0.01

    def test_nonlinearity_off_reproduces_exact_flow(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        out = step(st, SolverConfig(dt=0.05, sign="none"))
        exact = linear_evolve(st, 0.05)
        scale = np.max(np.abs(st.u.coeffs))
        np.testing.assert_allclose(out.u.coeffs, exact.u.coeffs, atol=1e-12 * scale)
        np.testing.assert_allclose(out.ut.coeffs, exact.ut.coeffs, atol=1e-12 * scale)

    def test_divergence_error_carries_context(self, grid64, rng):
        # focusing sign with violent data overflows within a few steps
        phi, psi = smooth_pair(grid64, rng, amplitude=80.0, decay=0.4)
        st = WaveState.from_data(phi, psi)
        cfg = SolverConfig(dt=0.5, sign="focusing")
        with pytest.raises(DivergenceError) as err:
            evolve(st, 5.0, cfg)
        assert err.value.step_index >= 0
        assert np.isfinite(err.value.t)

    def test_global_order_four(self, grid64, rng):
        # Richardson self-convergence against a dt/8 reference
        phi, psi = smooth_pair(grid64, rng, amplitude=0.8)
        st = WaveState.from_data(phi, psi)
        T = 0.5
        ref = evolve(st, T, SolverConfig(dt=T / 512)).states[-1]
        errs = []
        for n in (32, 64):
            end = evolve(st, T, SolverConfig(dt=T / n)).states[-1]
            errs.append(sobolev_norm(end.u - ref.u, 1.0))
        ratio = errs[0] / errs[1]
        assert 16 * 0.75 <= ratio <= 16 * 1.25, f"order-4 ratio {ratio}"


class TestEvolve:
    def test_zero_horizon(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        traj = evolve(st, 0.0, SolverConfig(dt=0.01))
        assert len(traj.states) == 1
        assert traj.states[0] is st

    def test_noncommensurate_rejected(self, grid64, rng):
        st = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng))
        with pytest.raises(PreconditionError):
            evolve(st, 0.035, SolverConfig(dt=0.01))

    def test_records_energy_per_state(self, grid64, rng):
        phi, psi = smooth_pair(grid64, rng)
        traj = evolve(WaveState.from_data(phi, psi), 0.05, SolverConfig(dt=0.01))
        assert len(traj.energies) == len(traj.states) == 6
        assert all(e > 0 for e in traj.energies)

    def test_small_amplitude_follows_linear_flow(self, grid64, rng):
        # cubic correction is O(amplitude^3); at 1e-3 the two flows agree to 1%
        phi, psi = smooth_pair(grid64, rng, amplitude=1e-3)
        st = WaveState.from_data(phi, psi)
        traj = evolve(st, 1.0, SolverConfig(dt=0.01))
        lin = linear_evolve(st, 1.0)
        diff = sobolev_norm(traj.states[-1].u - lin.u, 1.0)
        assert diff <= 0.01 * sobolev_norm(lin.u, 1.0)

    def test_mean_zero_preserved_exactly(self, grid64, rng):
        phi, psi = smooth_pair(grid64, rng, amplitude=1.0)
        traj = evolve(WaveState.from_data(phi, psi), 0.2, SolverConfig(dt=0.02))
        assert all(s.ut.coeffs[0] == 0.0 for s in traj.states)

    def test_energy_drift_fourth_order(self, grid64, rng):
        phi, psi = smooth_pair(grid64, rng, amplitude=1.5, decay=0.8)
        st = WaveState.from_data(phi, psi)
        drifts = []
        for dt in (4e-3, 2e-3):
            e = np.array(evolve(st, 0.32, SolverConfig(dt=dt)).energies)
            drifts.append(np.max(np.abs(e - e[0])) / e[0])
        assert drifts[0] / drifts[1] >= 12.0

    def test_trajectory_validation(self, grid64, rng):
        st0 = WaveState(random_field(grid64, rng), mean_zero_field(grid64, rng), 0.0)
        st_bad = WaveState(st0.u, st0.ut, -0.5)
        with pytest.raises(PreconditionError):
            Trajectory(states=[st0, st_bad], config=SolverConfig(dt=0.1))


class TestLocalDelta:
    def test_zero_data_free_evolution(self, grid64):
        z = SpectralField.zero(grid64)
        assert local_delta(z, z, 16.0, 0.75) == 1.0

    def test_cap_at_one(self, grid64):
        # kappa = 1, eps = 0, S = 1: (1/1)^2 = 1, capped
        c = np.zeros(64, dtype=complex)
        c[2] = 1.0
        phi = SpectralField(grid64, c)
        phi = phi * (1.0 / sobolev_norm(phi, 1.0))
        z = SpectralField.zero(grid64)
        assert local_delta(phi, z, 16.0, 0.75, kappa=1.0, eps=0.0) == 1.0

    def test_worked_example(self, grid64):
        # S = 2, kappa = 1/4, eps = 0: delta = (1/16)^2 = 1/256
        c = np.zeros(64, dtype=complex)
        c[2] = 1.0
        phi = SpectralField(grid64, c) * (1.0 / sobolev_norm(SpectralField(grid64, c), 1.0))
        psi = SpectralField(grid64, c) * (1.0 / sobolev_norm(SpectralField(grid64, c), 0.0))
        d = local_delta(phi, psi, 16.0, 0.75, kappa=0.25, eps=0.0)
        np.testing.assert_allclose(d, 1.0 / 256.0, rtol=1e-12)

    def test_doubling_scaling(self, grid64):
        # delta(2S)/delta(S) = 4^(-1/(1/2-eps)), about 2^-4 as eps -> 0
        c = np.zeros(64, dtype=complex)
        c[2] = 0.1
        phi = SpectralField(grid64, c)
        z = SpectralField.zero(grid64)
        eps = 0.01
        d1 = local_delta(phi, z, 16.0, 0.75, kappa=1e-4, eps=eps)
        d2 = local_delta(2.0 * phi, z, 16.0, 0.75, kappa=1e-4, eps=eps)
        np.testing.assert_allclose(d2 / d1, 4.0 ** (-1.0 / (0.5 - eps)), rtol=1e-10)

    def test_monotone_in_size(self, grid64, rng):
        phi, psi = smooth_pair(grid64, rng, amplitude=1.0)
        ds = [local_delta(a * phi, a * psi, 16.0, 0.75) for a in (0.5, 1.0, 2.0, 4.0)]
        assert all(b <= a for a, b in zip(ds, ds[1:]))

    def test_parameter_validation(self, grid64):
        z = SpectralField.zero(grid64)
        with pytest.raises(PreconditionError):
            local_delta(z, z, 16.0, 0.75, kappa=-1.0)
        with pytest.raises(PreconditionError):
            local_delta(z, z, 16.0, 0.75, eps=0.5)


class TestPicard:
    def test_zero_data_single_iteration(self, grid64):
        z = SpectralField.zero(grid64)
        traj = picard_solve(z, z, 0.5, SolverConfig(dt=0.01))
        assert all(np.all(s.u.coeffs == 0) for s in traj.states)
        assert traj.picard_ratios == []

    def test_contraction_ratios_small_and_steady(self, grid128, rng):
        phi, psi = smooth_pair(grid128, rng, amplitude=0.4)
        traj = picard_solve(phi, psi, 0.125, SolverConfig(dt=1e-3, tol_picard=1e-12))
        ratios = np.array(traj.picard_ratios)
        assert len(ratios) >= 2
        assert np.all(ratios < 1.0)
        # geometric: relative variance below 25%
        assert np.var(ratios) / np.mean(ratios) ** 2 < 0.25

    def test_agreement_with_evolve(self, grid128, rng):
        phi, psi = smooth_pair(grid128, rng, amplitude=0.4)
        delta = 0.125
        cfg = SolverConfig(dt=delta / 128, tol_picard=1e-12)
        tp = picard_solve(phi, psi, delta, cfg, n_times=129)
        te = evolve(WaveState.from_data(phi, psi), delta, cfg)
        sup = max(sobolev_norm(s.u, 1.0) for s in te.states)
        worst = max(
            sobolev_norm(a.u - b.u, 1.0) for a, b in zip(tp.states, te.states)
        )
        assert worst / sup <= 1e-6

    def test_contraction_failure_reports_ratios(self, grid64, rng):
        phi, psi = smooth_pair(grid64, rng, amplitude=30.0, decay=0.6)
        cfg = SolverConfig(dt=0.01, max_picard_iters=6)
        with pytest.raises(ContractionFailureError) as err:
            picard_solve(phi, psi, 1.0, cfg, n_times=65)
        assert isinstance(err.value.ratios, list)

    def test_focusing_small_data_converges(self, grid64, rng):
        phi, psi = smooth_pair(grid64, rng, amplitude=0.3)
        traj = picard_solve(phi, psi, 0.1, SolverConfig(dt=1e-3, sign="focusing"))
        assert all(r < 1 for r in traj.picard_ratios)

    def test_sample_count_guard(self, grid64, rng):
        phi, psi = smooth_pair(grid64, rng)
        with pytest.raises(PreconditionError):
            picard_solve(phi, psi, 0.1, SolverConfig(dt=0.01), n_times=16)
