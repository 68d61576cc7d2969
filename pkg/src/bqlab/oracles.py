"""Brute-force reference implementations used to cross-check the fast paths.

Everything in here is written as a direct sum (O(M^2) discrete Fourier
sums, direct convolutions, dense space-time transforms) precisely so it
shares no code with the FFT-based implementations it validates.  The
``verify`` runner and the test suite both consume these.
"""

from __future__ import annotations

import numpy as np

from .spectral import Grid1D, SpectralField, bracket, dispersion_relation


def dft_direct(grid: Grid1D, samples: np.ndarray) -> np.ndarray:
    """Continuum-normalised forward transform as an explicit double sum."""
    samples = np.asarray(samples, dtype=complex)
    x = grid.nodes
    xi = grid.wavenumbers
    kernel = np.exp(-1j * np.outer(xi, x))
    return kernel @ samples * (grid.length / grid.modes)


def idft_direct(grid: Grid1D, coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft_direct` as an explicit double sum."""
    coeffs = np.asarray(coeffs, dtype=complex)
    x = grid.nodes
    xi = grid.wavenumbers
    kernel = np.exp(1j * np.outer(x, xi))
    return kernel @ coeffs / grid.length


def cubic_direct(u: SpectralField) -> np.ndarray:
    """Retained-band coefficients of |u|^2 u by direct triple convolution.

    Works in natural mode order with ``np.convolve`` (a direct
    multiply-add, no FFT), then maps back to FFT order.  With the
    continuum normalisation a physical product corresponds to
    convolution of coefficient arrays divided by L per product.
    """
    grid = u.grid
    m = grid.modes
    half = m // 2
    # natural order k = -M/2 .. M/2-1
    nat = np.fft.fftshift(u.coeffs)
    # conj(u) has coefficients conj(u_hat(-xi)); on the asymmetric lattice
    # the k = -M/2 mode maps to +M/2 which we must keep explicitly.
    ks = np.arange(-half, half)
    conj_ks = -ks[::-1]  # = -M/2+1 .. M/2 reversed pairing
    conj_nat = np.conj(nat[::-1])  # coefficient at wavenumber conj_ks[i]
    # full linear convolution u * conj(u): offsets of wavenumber sums
    prod2 = np.convolve(nat, conj_nat) / grid.length
    # wavenumber lattice of prod2: ks[0] + conj_ks[0] ... ks[-1] + conj_ks[-1]
    lo2 = ks[0] + conj_ks[0]
    prod3 = np.convolve(prod2, nat) / grid.length
    lo3 = lo2 + ks[0]
    out = np.zeros(m, dtype=complex)
    for i, k in enumerate(ks):
        idx = k - lo3
        if 0 <= idx < prod3.size:
            out[i] = prod3[idx]
    return np.fft.ifftshift(out)


def trapezoid_lp(u: SpectralField, p: int, refine: int = 8) -> float:
    """L^p norm by direct summation on a refined physical grid."""
    grid = u.grid
    n = refine * grid.modes
    x = np.arange(n) * (grid.length / n)
    xi = grid.wavenumbers
    phys = np.exp(1j * np.outer(x, xi)) @ u.coeffs / grid.length
    return float((np.sum(np.abs(phys) ** p) * grid.length / n) ** (1.0 / p))


def spacetime_transform_direct(
    values: np.ndarray, grid: Grid1D, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Dense (x,t) -> (xi,tau) transform of spatial-coefficient samples.

    ``values`` has shape (n_times, modes) holding spatial coefficients per
    time sample.  Returns (F, tau) where F is the space-time transform on
    the (tau, xi) lattice, computed as an explicit matrix product against
    the time kernel, and tau is the dual lattice of the sample times.
    """
    n_t = times.shape[0]
    dt = times[1] - times[0]
    tau = 2.0 * np.pi * np.fft.fftfreq(n_t, d=dt)
    kernel = np.exp(-1j * np.outer(tau, times))
    return kernel @ values * dt, tau


def xsb_direct(
    values: np.ndarray,
    grid: Grid1D,
    times: np.ndarray,
    s: float,
    b: float,
    symbol: str = "gamma",
) -> float:
    """Space-time weighted norm by dense sums, mirroring xsb_norm's contract."""
    ft, tau = spacetime_transform_direct(values, grid, times)
    xi = grid.wavenumbers
    if symbol == "gamma":
        char = dispersion_relation(xi)
    elif symbol == "parabolic":
        char = xi * xi
    else:
        raise ValueError(f"unknown symbol {symbol!r}")
    weight = bracket(np.abs(tau)[:, None] - char[None, :]) ** b * bracket(xi)[None, :] ** s
    n_t = times.shape[0]
    dt = times[1] - times[0]
    period = n_t * dt
    total = np.sum((weight * np.abs(ft)) ** 2) / (grid.length * period)
    return float(np.sqrt(total))
