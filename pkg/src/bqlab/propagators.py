"""Exact-in-time solution operators of u_tt - u_xx + u_xxxx = 0.

All operators are diagonal Fourier multipliers built from the dispersion
relation gamma(xi) = sqrt(xi^2 + xi^4):

* cosine propagator  cos(t*gamma)           (acts on the displacement data)
* sine propagator    sin(t*gamma)/gamma     (acts on the velocity data;
  the xi = 0 symbol takes its limit value t)

The state pair (u, u_t) evolves by the 2x2 rotation of those symbols, and
in the half-wave variables a+- = u_hat -+ i*u_t_hat/gamma the whole linear
flow is the pure phase a+- <- exp(+-i*gamma*t) a+-.

The zero mode needs care: (-Laplacian)^(-1/2) has no symbol at xi = 0, so
the discrete convention is symbol 0 there and the time derivative of every
state is required to be mean-zero (the data format u_t(0) = psi_x forces
this, and the nonlinear forcing (|u|^2 u)_xx preserves it).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PreconditionError
from .spectral import (
    Grid1D,
    Multiplier,
    SpectralField,
    _check_same_grid,
    dispersion_relation,
)

#: Relative tolerance for the mean-zero check on time derivatives.
_MEAN_ZERO_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class WaveState:
    """The pair (u, du/dt) at one instant.

    The zero mode of ``ut`` must vanish; it is checked against
    ``_MEAN_ZERO_RTOL`` and then pinned to exactly zero so the invariant
    survives long evolutions bit-for-bit.
    """

    u: SpectralField
    ut: SpectralField
    t: float = 0.0

    def __post_init__(self):
        _check_same_grid(self.u.grid, self.ut.grid)
        c0 = self.ut.coeffs[0]
        scale = max(1.0, float(np.max(np.abs(self.ut.coeffs), initial=0.0)))
        if abs(c0) > _MEAN_ZERO_RTOL * scale:
            raise PreconditionError(
                f"time derivative must be mean-zero; zero mode has magnitude {abs(c0):.3e}"
            )
        if c0 != 0:
            coeffs = np.array(self.ut.coeffs)
            coeffs[0] = 0.0
            object.__setattr__(self, "ut", SpectralField(self.ut.grid, coeffs))

    @property
    def grid(self) -> Grid1D:
        return self.u.grid

    @classmethod
    def from_data(cls, phi: SpectralField, psi: SpectralField, t: float = 0.0) -> "WaveState":
        """Build the state (phi, psi_x) from undifferentiated psi."""
        from .spectral import apply_multiplier

        psi_x = apply_multiplier(Multiplier.derivative(psi.grid), psi)
        return cls(phi, psi_x, t)


@dataclass(frozen=True, eq=False)
class PropagatorCache:
    """Precomputed per-mode symbols for one (grid, dt) pair."""

    grid: Grid1D
    dt: float
    cos_full: np.ndarray      # cos(gamma*dt)
    sinc_full: np.ndarray     # sin(gamma*dt)/gamma, value dt at xi = 0
    gamma_sin_full: np.ndarray  # gamma*sin(gamma*dt)
    phase_half: np.ndarray    # exp(+i*gamma*dt/2)
    phase_full: np.ndarray    # exp(+i*gamma*dt)


@lru_cache(maxsize=16)
def propagator_cache(grid: Grid1D, dt: float) -> PropagatorCache:
    gamma = dispersion_relation(grid.wavenumbers)
    return PropagatorCache(
        grid=grid,
        dt=dt,
        cos_full=np.cos(gamma * dt),
        sinc_full=_sinc_gamma(gamma, dt),
        gamma_sin_full=gamma * np.sin(gamma * dt),
        phase_half=np.exp(0.5j * gamma * dt),
        phase_full=np.exp(1j * gamma * dt),
    )


def _sinc_gamma(gamma: np.ndarray, t: float) -> np.ndarray:
    """sin(t*gamma)/gamma with the xi = 0 limit t."""
    out = np.full_like(gamma, float(t))
    nz = gamma != 0
    out[nz] = np.sin(gamma[nz] * t) / gamma[nz]
    return out


def apply_cosine_propagator(phi: SpectralField, t: float) -> SpectralField:
    """Multiply each coefficient by cos(t*gamma(xi))."""
    gamma = dispersion_relation(phi.grid.wavenumbers)
    return SpectralField(phi.grid, np.cos(gamma * t) * phi.coeffs)


def apply_sine_propagator(f: SpectralField, t: float) -> SpectralField:
    """Multiply each coefficient by sin(t*gamma(xi))/gamma(xi) (t at xi = 0)."""
    gamma = dispersion_relation(f.grid.wavenumbers)
    return SpectralField(f.grid, _sinc_gamma(gamma, t) * f.coeffs)


def linear_evolve(state: WaveState, t: float) -> WaveState:
    """Exact solution of the linear equation, advanced by time t.

    A two-parameter group: evolve(t1) then evolve(t2) equals evolve(t1+t2)
    to round-off, and evolve(-t) inverts evolve(t).
    """
    gamma = dispersion_relation(state.grid.wavenumbers)
    c = np.cos(gamma * t)
    s_over = _sinc_gamma(gamma, t)
    u_new = c * state.u.coeffs + s_over * state.ut.coeffs
    ut_new = -gamma * np.sin(gamma * t) * state.u.coeffs + c * state.ut.coeffs
    return WaveState(
        SpectralField(state.grid, u_new),
        SpectralField(state.grid, ut_new),
        state.t + t,
    )


def linear_scaled_velocity(
    phi: SpectralField, psi_x: SpectralField, t: float
) -> SpectralField:
    """(-Laplacian)^(-1/2) d/dt of the linear flow started from (phi, psi_x).

    Per mode: -|xi|^(-1) gamma sin(t*gamma) phi_hat + |xi|^(-1) cos(t*gamma)
    psi_x_hat, with the zero mode set to 0.  Requires psi_x mean-zero.
    """
    _check_same_grid(phi.grid, psi_x.grid)
    scale = max(1.0, float(np.max(np.abs(psi_x.coeffs), initial=0.0)))
    if abs(psi_x.coeffs[0]) > _MEAN_ZERO_RTOL * scale:
        raise PreconditionError("psi_x must be mean-zero")
    grid = phi.grid
    xi = grid.wavenumbers
    gamma = dispersion_relation(xi)
    inv_abs = Multiplier.abs_power(grid, -1.0).values
    coeffs = inv_abs * (
        -gamma * np.sin(gamma * t) * phi.coeffs + np.cos(gamma * t) * psi_x.coeffs
    )
    return SpectralField(grid, coeffs)


def diagonalize(state: WaveState) -> tuple[SpectralField, SpectralField]:
    """Half-wave variables a+- = u_hat -+ i*ut_hat/gamma.

    The linear flow acts as a+- <- exp(+-i*gamma*t) a+-.  At xi = 0 the
    transform is singular and the pair (u_hat, ut_hat) is stored untouched.
    """
    grid = state.grid
    gamma = dispersion_relation(grid.wavenumbers)
    inv_gamma = np.zeros_like(gamma)
    inv_gamma[gamma != 0] = 1.0 / gamma[gamma != 0]
    a_plus = state.u.coeffs - 1j * inv_gamma * state.ut.coeffs
    a_minus = state.u.coeffs + 1j * inv_gamma * state.ut.coeffs
    a_plus = np.array(a_plus)
    a_minus = np.array(a_minus)
    a_plus[0] = state.u.coeffs[0]
    a_minus[0] = state.ut.coeffs[0]
    return SpectralField(grid, a_plus), SpectralField(grid, a_minus)


def from_halfwaves(
    a_plus: SpectralField, a_minus: SpectralField, t: float = 0.0
) -> WaveState:
    """Inverse of :func:`diagonalize`."""
    _check_same_grid(a_plus.grid, a_minus.grid)
    grid = a_plus.grid
    gamma = dispersion_relation(grid.wavenumbers)
    u = 0.5 * (a_plus.coeffs + a_minus.coeffs)
    ut = 0.5j * gamma * (a_plus.coeffs - a_minus.coeffs)
    u = np.array(u)
    ut = np.array(ut)
    u[0] = a_plus.coeffs[0]
    ut[0] = a_minus.coeffs[0]
    return WaveState(SpectralField(grid, u), SpectralField(grid, ut), t)


def quadratic_energy(state: WaveState) -> float:
    """The linear invariant (1/2)||u||_H1^2 + (1/2)||(-Lap)^(-1/2) u_t||_L2^2.

    Conserved exactly (per mode) by :func:`linear_evolve`; the quartic term
    of the full energy is absent here.
    """
    from .spectral import apply_multiplier, sobolev_norm

    v = apply_multiplier(Multiplier.abs_power(state.grid, -1.0), state.ut)
    return 0.5 * sobolev_norm(state.u, 1.0) ** 2 + 0.5 * sobolev_norm(v, 0.0) ** 2
