"""Machine-checkable invariant suite spanning every module.

``run_verify`` executes one named check per documented invariant and
returns pass/fail rows with the measured values, so a fresh checkout can
be validated end to end from the CLI.  Checks that compare against the
dispersion symbol take it as a parameter (``gamma_fn``), which lets the
test suite inject a corrupted symbol and confirm that exactly the
symbol-dependent checks trip.

Contract violations inside a check (e.g. a grid too small for the sweep
guard ladder) are caught and reported as failing rows, never crashes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bourgain import (
    SpaceTimeField,
    decompose_pm,
    strichartz_ratio,
    xsb_norm,
)
from .errors import LabError, NumericalError, PreconditionError
from .experiments import ExperimentConfig, fit_power_law
from .imethod import ISpec, acl_commutator, acl_residual, apply_I, smoothing_bounds
from .oracles import cubic_direct, dft_direct, xsb_direct
from .propagators import (
    WaveState,
    diagonalize,
    linear_evolve,
    linear_scaled_velocity,
    quadratic_energy,
)
from .solver import SolverConfig, evolve, picard_solve
from .spectral import (
    Grid1D,
    Multiplier,
    SpectralField,
    apply_multiplier,
    bracket,
    dealiased_cubic,
    dispersion_relation,
    forward_transform,
    inverse_transform,
    lebesgue_norm,
    sobolev_norm,
)
from .synthesis import cell_rng, rough_field


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: str
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[CheckResult]
    config: ExperimentConfig

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


def _random_field(grid: Grid1D, rng, decay: float = 0.0) -> SpectralField:
    mags = np.exp(-decay * np.abs(grid.wavenumbers))
    c = (rng.normal(size=grid.modes) + 1j * rng.normal(size=grid.modes)) * mags
    return SpectralField(grid, c)


def _random_state(grid: Grid1D, rng, decay: float = 0.0, amplitude: float = 1.0) -> WaveState:
    u = _random_field(grid, rng, decay) * amplitude
    ut_c = np.array((_random_field(grid, rng, decay) * amplitude).coeffs)
    ut_c[0] = 0.0
    return WaveState(u, SpectralField(grid, ut_c))


# --- individual checks ------------------------------------------------------

def _check_round_trip(grid, rng, gamma_fn):
    worst = 0.0
    for _ in range(5):
        u = _random_field(grid, rng)
        samples = inverse_transform(u)
        back = forward_transform(grid, samples)
        worst = max(worst, np.max(np.abs(back.coeffs - u.coeffs)) / np.max(np.abs(u.coeffs)))
        direct = dft_direct(grid, samples)
        worst = max(worst, np.max(np.abs(direct - u.coeffs)) / np.max(np.abs(u.coeffs)))
    return CheckResult("transform_round_trip", worst <= 1e-12, worst, "<= 1e-12")


def _check_parseval(grid, rng, gamma_fn):
    worst = 0.0
    for _ in range(10):
        u = _random_field(grid, rng)
        a = lebesgue_norm(u, 2)
        b = sobolev_norm(u, 0.0)
        worst = max(worst, abs(a - b) / b)
    return CheckResult("parseval", worst <= 1e-10, worst, "<= 1e-10")


def _check_cubic_oracle(grid, rng, gamma_fn):
    small = Grid1D(grid.length, min(grid.modes, 64))
    worst = 0.0
    for _ in range(3):
        u = _random_field(small, rng, decay=0.05)
        fast = dealiased_cubic(u).coeffs
        slow = cubic_direct(u)
        worst = max(worst, np.max(np.abs(fast - slow)) / np.max(np.abs(slow)))
    return CheckResult("cubic_convolution_oracle", worst <= 1e-10, worst, "<= 1e-10")


def _check_bracket(grid, rng, gamma_fn):
    xi = grid.wavenumbers
    ok = bracket(0.0) == 1.0 and np.all(bracket(xi) >= np.maximum(1.0, np.abs(xi)))
    return CheckResult("bracket_lattice", bool(ok), float(ok), "exact")


def _check_dispersion_equivalence(grid, rng, gamma_fn):
    x = np.linspace(0.0, 100.0, 401)
    y = np.linspace(0.0, 100.0, 401)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    ratio = (1.0 + np.abs(xx - yy)) / (1.0 + np.abs(xx - gamma_fn(np.sqrt(yy))))
    lo, hi = float(np.min(ratio)), float(np.max(ratio))
    ok = lo >= 2.0 / 3.0 - 1e-12 and hi <= 1.5 + 1e-12
    return CheckResult(
        "dispersion_equivalence", ok, hi, "range within [2/3, 3/2]",
        detail=f"min {lo:.6f}, max {hi:.6f}",
    )


def _check_propagator_closed_form(grid, rng, gamma_fn):
    worst = 0.0
    for k in (1, 3, 7):
        idx = np.argmin(np.abs(grid.wavenumbers - k))
        xi_k = grid.wavenumbers[idx]
        c = np.zeros(grid.modes, dtype=complex)
        c[idx] = 1.0
        st = WaveState(SpectralField(grid, c), SpectralField.zero(grid))
        for t in (0.3, 1.7):
            ev = linear_evolve(st, t)
            expect = np.cos(gamma_fn(xi_k) * t)
            worst = max(worst, abs(ev.u.coeffs[idx] - expect))
    return CheckResult("propagator_closed_form", worst <= 1e-12, worst, "<= 1e-12")


def _check_quadratic_invariant(grid, rng, gamma_fn):
    worst = 0.0
    for _ in range(3):
        st = _random_state(grid, rng)
        e0 = quadratic_energy(st)
        for t in (0.1, 2.3, 17.0):
            worst = max(worst, abs(quadratic_energy(linear_evolve(st, t)) - e0) / e0)
    return CheckResult("quadratic_invariant", worst <= 1e-11, worst, "<= 1e-11")


def _check_group_property(grid, rng, gamma_fn):
    st = _random_state(grid, rng)
    fwd = linear_evolve(linear_evolve(st, 0.4), 0.35)
    onestep = linear_evolve(st, 0.75)
    back = linear_evolve(linear_evolve(st, 0.4), -0.4)
    scale = np.max(np.abs(st.u.coeffs))
    worst = max(
        np.max(np.abs(fwd.u.coeffs - onestep.u.coeffs)),
        np.max(np.abs(back.u.coeffs - st.u.coeffs)),
    ) / scale
    return CheckResult("group_reversibility", worst <= 1e-12, worst, "<= 1e-12")


def _check_velocity_consistency(grid, rng, gamma_fn):
    # against the evolved state (exact same symbols) and against the
    # closed form built from gamma_fn on a pure mode
    st = _random_state(grid, rng)
    phi, psi_x = st.u, st.ut
    t = 0.9
    v = linear_scaled_velocity(phi, psi_x, t)
    ev = linear_evolve(st, t)
    inv_abs = Multiplier.abs_power(grid, -1.0)
    v2 = apply_multiplier(inv_abs, ev.ut)
    worst = np.max(np.abs(v.coeffs - v2.coeffs)) / max(np.max(np.abs(v2.coeffs)), 1e-300)

    idx = np.argmin(np.abs(grid.wavenumbers - 2.0))
    xi_k = grid.wavenumbers[idx]
    c = np.zeros(grid.modes, dtype=complex)
    c[idx] = 1.0
    pure = SpectralField(grid, c)
    vp = linear_scaled_velocity(pure, SpectralField.zero(grid), t)
    expect = -gamma_fn(xi_k) * np.sin(gamma_fn(xi_k) * t) / abs(xi_k)
    worst = max(worst, abs(vp.coeffs[idx] - expect))
    return CheckResult("velocity_consistency", worst <= 1e-12, worst, "<= 1e-12")


def _check_halfwave_flow(grid, rng, gamma_fn):
    st = _random_state(grid, rng)
    ap0, am0 = diagonalize(st)
    t = 0.6
    ap1, am1 = diagonalize(linear_evolve(st, t))
    gamma = gamma_fn(grid.wavenumbers)
    pred_p = np.exp(1j * gamma * t) * ap0.coeffs
    pred_m = np.exp(-1j * gamma * t) * am0.coeffs
    pred_p[0], pred_m[0] = ap0.coeffs[0], am0.coeffs[0]
    scale = np.max(np.abs(ap0.coeffs))
    worst = max(np.max(np.abs(ap1.coeffs - pred_p)), np.max(np.abs(am1.coeffs - pred_m))) / scale
    return CheckResult("halfwave_flow", worst <= 1e-12, worst, "<= 1e-12")


def _check_mean_zero(grid, rng, gamma_fn):
    st = _random_state(grid, rng, decay=0.3, amplitude=0.5)
    traj = evolve(st, 0.05, SolverConfig(dt=0.005))
    worst = max(abs(s.ut.coeffs[0]) for s in traj.states)
    return CheckResult("mean_zero_preservation", worst == 0.0, worst, "exactly 0")


def _check_energy_drift_ratio(grid, rng, gamma_fn):
    st = _random_state(grid, rng, decay=0.8, amplitude=1.5)
    drifts = []
    for dt in (4e-3, 2e-3):
        traj = evolve(st, 0.32, SolverConfig(dt=dt))
        e = np.array(traj.energies)
        drifts.append(np.max(np.abs(e - e[0])) / e[0])
    ratio = drifts[0] / drifts[1] if drifts[1] > 0 else np.inf
    return CheckResult(
        "energy_drift_halving", ratio >= 12.0, ratio, ">= 12x reduction",
        detail=f"drifts {drifts[0]:.3e} -> {drifts[1]:.3e}",
    )


def _check_picard_agreement(grid, rng, gamma_fn):
    decay = np.exp(-1.2 * np.abs(grid.wavenumbers))
    phi = SpectralField(grid, 0.4 * decay * np.exp(2j * np.pi * rng.random(grid.modes)))
    psi = SpectralField(grid, 0.4 * decay * np.exp(2j * np.pi * rng.random(grid.modes)))
    delta = 0.125
    cfg = SolverConfig(dt=delta / 128, tol_picard=1e-12)
    tp = picard_solve(phi, psi, delta, cfg, n_times=129)
    te = evolve(WaveState.from_data(phi, psi), delta, cfg)
    sup = max(sobolev_norm(s.u, 1.0) for s in te.states)
    worst = max(
        sobolev_norm(sp.u - se.u, 1.0) for sp, se in zip(tp.states, te.states)
    ) / sup
    return CheckResult("picard_evolve_agreement", worst <= 1e-6, worst, "<= 1e-6")


def _check_focusing_parity(grid, rng, gamma_fn):
    decay = np.exp(-1.2 * np.abs(grid.wavenumbers))
    phi = SpectralField(grid, 0.3 * decay * np.exp(2j * np.pi * rng.random(grid.modes)))
    psi = SpectralField(grid, 0.3 * decay * np.exp(2j * np.pi * rng.random(grid.modes)))
    ok = True
    worst = 0.0
    for sign in ("defocusing", "focusing"):
        cfg = SolverConfig(dt=1e-3, sign=sign, tol_picard=1e-10)
        traj = picard_solve(phi, psi, 0.1, cfg, n_times=65)
        ratios = traj.picard_ratios or []
        ok = ok and all(r < 1 for r in ratios)
        worst = max(worst, max(ratios, default=0.0))
    return CheckResult("focusing_parity", ok, worst, "ratios < 1 for both signs")


def _check_smoothing_sandwich(grid, rng, gamma_fn):
    s = 0.75
    margin = 0.0
    ok = True
    for N in (4.0, 16.0, 64.0):
        spec = ISpec(N=N, s=s)
        for _ in range(10):
            u = rough_field(grid, s, rng)
            for s0 in (0.0, s):
                lo, mid, hi = smoothing_bounds(u, spec, s0)
                ok = ok and (lo <= mid * (1 + 1e-12)) and (mid <= hi * (1 + 1e-12))
                margin = max(margin, mid / hi)
    return CheckResult("smoothing_sandwich", ok, margin, "1 <= mid/lo, mid/upper <= 1")


def _check_commutator_locality(grid, rng, gamma_fn):
    N = grid.max_wavenumber / 4.0
    spec = ISpec(N=max(N, 1.0), s=0.75)
    c = np.zeros(grid.modes, dtype=complex)
    mask = np.abs(grid.wavenumbers) <= spec.N / 3.0
    c[mask] = rng.normal(size=mask.sum()) + 1j * rng.normal(size=mask.sum())
    comm = acl_commutator(SpectralField(grid, c), spec)
    worst = np.max(np.abs(comm.coeffs)) / max(np.max(np.abs(c)), 1e-300)
    return CheckResult("commutator_locality", worst <= 1e-12, worst, "<= 1e-12")


def _check_commutator_oracle(grid, rng, gamma_fn):
    small = Grid1D(grid.length, min(grid.modes, 64))
    spec = ISpec(N=max(small.max_wavenumber / 8.0, 1.0), s=0.75)
    u = _random_field(small, rng, decay=0.05)
    fast = acl_commutator(u, spec).coeffs
    iu = apply_I(spec, u)
    slow = cubic_direct(iu) - spec.weight(small.wavenumbers) * cubic_direct(u)
    scale = max(np.max(np.abs(slow)), 1e-300)
    worst = np.max(np.abs(fast - slow)) / scale
    return CheckResult("commutator_oracle", worst <= 1e-10, worst, "<= 1e-10")


def _check_acl_residual_order(grid, rng, gamma_fn):
    st = _random_state(grid, rng, decay=0.5, amplitude=0.8)
    spec = ISpec(N=max(grid.max_wavenumber / 8.0, 1.0), s=0.75)
    res = []
    for dt in (4e-3, 2e-3):
        traj = evolve(st, 0.16, SolverConfig(dt=dt))
        res.append(np.max(acl_residual(traj, spec)))
    order = np.log2(res[0] / res[1]) if res[1] > 0 else np.inf
    return CheckResult(
        "acl_residual_order", order >= 1.8, order, ">= 1.8",
        detail=f"residuals {res[0]:.3e} -> {res[1]:.3e}",
    )


def _check_m_shape(grid, rng, gamma_fn):
    xi = np.linspace(-80.0, 80.0, 3201)
    ok = True
    for shape in ("sharp", "smooth"):
        spec = ISpec(N=8.0, s=0.6, shape=shape)
        w = spec.weight(xi)
        ok = ok and np.all(w > 0) and np.all(w <= 1.0)
        ok = ok and np.max(np.abs(w - spec.weight(-xi))) == 0.0
        pos = xi >= 0
        ok = ok and np.all(np.diff(w[pos]) <= 1e-12)
    return CheckResult("m_shape_scan", bool(ok), float(ok), "even, (0,1], nonincreasing")


def _spacetime_sample(grid, rng, n_t=48, delta=0.5) -> SpaceTimeField:
    times = np.linspace(0.0, delta, n_t)
    vals = rng.normal(size=(n_t, grid.modes)) + 1j * rng.normal(size=(n_t, grid.modes))
    return SpaceTimeField.from_coefficients(grid, times, vals)


def _check_pm_additivity(grid, rng, gamma_fn):
    f = _spacetime_sample(grid, rng)
    fp, fm = decompose_pm(f)
    tot = xsb_norm(f, 0.4, 0.51) ** 2
    parts = xsb_norm(fp, 0.4, 0.51) ** 2 + xsb_norm(fm, 0.4, 0.51) ** 2
    worst = abs(tot - parts) / tot
    recon = np.max(np.abs(fp.values + fm.values - f.values)) / np.max(np.abs(f.values))
    worst = max(worst, recon)
    return CheckResult("pm_additivity", worst <= 1e-10, worst, "<= 1e-10")


def _check_xsb_monotone(grid, rng, gamma_fn):
    f = _spacetime_sample(grid, rng)
    ok = True
    prev = None
    for b in (0.0, 0.3, 0.51, 1.0):
        v = xsb_norm(f, 0.0, b)
        ok = ok and (prev is None or v >= prev * (1 - 1e-12))
        prev = v
    prev = None
    for s in (0.0, 0.5, 1.0):
        v = xsb_norm(f, s, 0.51)
        ok = ok and (prev is None or v >= prev * (1 - 1e-12))
        prev = v
    return CheckResult("xsb_monotone", bool(ok), float(ok), "nondecreasing in s and b")


def _check_xsb_oracle(grid, rng, gamma_fn):
    small = Grid1D(2 * np.pi, 32)
    times = np.linspace(0.0, 0.5, 32)
    vals = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    f = SpaceTimeField.from_coefficients(small, times, vals)
    a = xsb_norm(f, 0.7, 0.4)
    b = xsb_direct(f.values, small, f.times, 0.7, 0.4)
    worst = abs(a - b) / b
    return CheckResult("xsb_oracle", worst <= 1e-8, worst, "<= 1e-8")


def _check_ratio_homogeneity(grid, rng, gamma_fn):
    f = _spacetime_sample(grid, rng)
    g = SpaceTimeField(f.grid, f.times, 4.2 * f.values, f.window)
    worst = abs(strichartz_ratio(f, 4) - strichartz_ratio(g, 4)) / strichartz_ratio(f, 4)
    return CheckResult("ratio_homogeneity", worst <= 1e-12, worst, "<= 1e-12")


def _check_variant_agreement(grid, rng, gamma_fn):
    b = 0.51
    lo, hi = 3.0 ** -b, 3.0 ** b
    worst_lo, worst_hi = np.inf, 0.0
    for _ in range(5):
        f = _spacetime_sample(grid, rng)
        r = xsb_norm(f, 0.0, b) / xsb_norm(f, 0.0, b, symbol="parabolic")
        worst_lo, worst_hi = min(worst_lo, r), max(worst_hi, r)
    ok = worst_lo >= lo and worst_hi <= hi
    return CheckResult(
        "variant_agreement", bool(ok), worst_hi, f"within [{lo:.3f}, {hi:.3f}]",
        detail=f"observed [{worst_lo:.4f}, {worst_hi:.4f}]",
    )


def _check_slope_recovery(grid, rng, gamma_fn):
    ns = np.array([16.0, 32.0, 64.0, 128.0])
    ys = 3.7 * ns ** -2.0
    slope, _ = fit_power_law(ns, ys)
    worst = abs(slope + 2.0)
    return CheckResult("slope_fit_recovery", worst <= 1e-6, worst, "<= 1e-6")


def _check_sweep_guard(grid, rng, gamma_fn):
    top = grid.max_wavenumber / 4.0
    ladder = [top / 8.0, top / 4.0, top / 2.0, top]
    for n in ladder:
        ISpec(N=n, s=0.75)  # raises PreconditionError when the grid is too small
    return CheckResult("sweep_guard", True, top, "ladder constructible")


_CHECKS = [
    _check_round_trip,
    _check_parseval,
    _check_cubic_oracle,
    _check_bracket,
    _check_dispersion_equivalence,
    _check_propagator_closed_form,
    _check_quadratic_invariant,
    _check_group_property,
    _check_velocity_consistency,
    _check_halfwave_flow,
    _check_mean_zero,
    _check_energy_drift_ratio,
    _check_picard_agreement,
    _check_focusing_parity,
    _check_smoothing_sandwich,
    _check_commutator_locality,
    _check_commutator_oracle,
    _check_acl_residual_order,
    _check_m_shape,
    _check_pm_additivity,
    _check_xsb_monotone,
    _check_xsb_oracle,
    _check_ratio_homogeneity,
    _check_variant_agreement,
    _check_slope_recovery,
    _check_sweep_guard,
]


def run_verify(config: ExperimentConfig, gamma_fn=dispersion_relation) -> VerifyReport:
    """Run every invariant check on the configured grid.

    Precondition errors raised inside a check become failing rows naming
    the guard, so undersized configs are reported rather than crashing.
    """
    grid = config.grid()
    results = []
    for i, fn in enumerate(_CHECKS):
        name = fn.__name__.removeprefix("_check_")
        rng = cell_rng(config.master_seed, 0xCEC, i)
        try:
            results.append(fn(grid, rng, gamma_fn))
        except PreconditionError as exc:
            results.append(
                CheckResult(name, False, float("nan"), "precondition", detail=str(exc))
            )
        except (NumericalError, LabError) as exc:
            results.append(
                CheckResult(name, False, float("nan"), "runtime", detail=str(exc))
            )
    return VerifyReport(checks=results, config=config)
