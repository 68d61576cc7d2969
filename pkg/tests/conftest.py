"""Shared fixtures and field constructors for the test suite."""

import numpy as np
import pytest

from bqlab.spectral import Grid1D, SpectralField


@pytest.fixture
def grid64():
    return Grid1D(2 * np.pi, 64)


@pytest.fixture
def grid128():
    return Grid1D(2 * np.pi, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_field(grid: Grid1D, rng, decay: float = 0.0, amplitude: float = 1.0) -> SpectralField:
    """Random complex coefficients, optionally with exponential tail decay."""
    mags = np.exp(-decay * np.abs(grid.wavenumbers))
    c = (rng.normal(size=grid.modes) + 1j * rng.normal(size=grid.modes)) * mags
    return SpectralField(grid, amplitude * c)


def mean_zero_field(grid: Grid1D, rng, decay: float = 0.0, amplitude: float = 1.0) -> SpectralField:
    c = np.array(random_field(grid, rng, decay, amplitude).coeffs)
    c[0] = 0.0
    return SpectralField(grid, c)


def band_limited_field(grid: Grid1D, rng, max_wavenumber: float) -> SpectralField:
    c = np.array(random_field(grid, rng).coeffs)
    c[np.abs(grid.wavenumbers) > max_wavenumber] = 0.0
    return SpectralField(grid, c)
