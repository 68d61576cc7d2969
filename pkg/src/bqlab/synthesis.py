"""Random rough initial data with prescribed Sobolev regularity.

The sweep experiments need data that genuinely sits at the target
regularity: coefficients with magnitude <xi>^(-r - 1/2 - 0.01) and random
phases lie in H^r but in no noticeably smoother space, which keeps the
truncation-energy experiments from being vacuous.  Amplitudes are
calibrated after drawing phases so the requested norm is hit exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .spectral import Grid1D, SpectralField, bracket, sobolev_norm

#: Extra decay beyond the critical exponent; keeps the data inside H^r
#: while leaving essentially no room to spare.
MARGIN = 0.01


def rough_field(
    grid: Grid1D,
    regularity: float,
    rng: np.random.Generator,
    norm_s: float | None = None,
    amplitude: float = 1.0,
    spectral_slope: float | None = None,
) -> SpectralField:
    """Random-phase field of prescribed regularity and norm.

    Parameters
    ----------
    regularity:
        Target space H^regularity; sets the default coefficient decay
        <xi>^(-regularity - 1/2 - MARGIN).
    norm_s:
        Which Sobolev norm to calibrate (defaults to ``regularity``).
    amplitude:
        The calibrated value of that norm.
    spectral_slope:
        Overrides the default decay exponent when given.
    """
    if amplitude < 0:
        raise PreconditionError("amplitude must be nonnegative")
    slope = (
        -(regularity + 0.5 + MARGIN) if spectral_slope is None else float(spectral_slope)
    )
    xi = grid.wavenumbers
    mags = bracket(xi) ** slope
    phases = np.exp(2j * np.pi * rng.random(grid.modes))
    field = SpectralField(grid, mags * phases)
    target = regularity if norm_s is None else norm_s
    current = sobolev_norm(field, target)
    if current == 0.0 or amplitude == 0.0:
        return SpectralField.zero(grid)
    return field * (amplitude / current)


def data_pair(
    grid: Grid1D,
    s: float,
    rng: np.random.Generator,
    amplitude: float = 1.0,
) -> tuple[SpectralField, SpectralField]:
    """(phi, psi) with ||phi||_{H^s} = ||psi||_{H^{s-1}} = amplitude."""
    phi = rough_field(grid, s, rng, amplitude=amplitude)
    psi = rough_field(grid, s - 1.0, rng, norm_s=s - 1.0, amplitude=amplitude)
    return phi, psi


def gaussian_packet(
    grid: Grid1D,
    center: float,
    sigma: float,
    band_lo: float,
    band_hi: float,
) -> SpectralField:
    """Spatially localized wave packet with one-sided spectrum in a band.

    Gaussian coefficient envelope around ``center``, truncated to
    ``band_lo <= xi < band_hi`` and to positive wavenumbers, so the free
    evolution is a single packet moving at the group velocity of the
    carrier.  The product-estimate probes need genuinely localized
    factors; random-phase blocks fill the whole period and never transit
    each other.
    """
    xi = grid.wavenumbers
    coeffs = np.exp(-((np.abs(xi) - center) ** 2) / (2.0 * sigma ** 2)).astype(complex)
    coeffs[(np.abs(xi) < band_lo) | (np.abs(xi) >= band_hi)] = 0.0
    coeffs[xi < 0] = 0.0
    return SpectralField(grid, coeffs)


def cell_rng(master_seed: int, *indices: int) -> np.random.Generator:
    """Counter-derived generator: independent streams per (seed, N, ...) cell.

    Built on SeedSequence spawning keys, so sweep cells are reproducible
    and order-independent under parallel execution.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, indices)]))
