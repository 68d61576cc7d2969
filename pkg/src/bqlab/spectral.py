"""Periodic grids, Fourier transforms, multipliers, and single-time norms.

Everything downstream (propagators, the nonlinear solver, the truncation
energies, the space-time norms) is built on the three value types defined
here: ``Grid1D``, ``SpectralField`` and ``Multiplier``.

Conventions
-----------
* Wavenumbers are ``xi_k = 2*pi*k/L`` for ``k in {-M/2, ..., M/2-1}``,
  stored in FFT order (``0, 1, ..., M/2-1, -M/2, ..., -1``).
* Coefficients carry the continuum normalisation
  ``coeff_k ~ integral of u(x) exp(-i xi_k x) dx``, i.e. a factor ``L/M``
  relative to the raw DFT of the samples.  With this choice Parseval reads
  ``integral |u|^2 dx = sum_k |coeff_k|^2 / L`` and all norms have
  magnitudes comparable to their whole-line counterparts.
* Fields are complex valued; cubic products mean ``|u|^2 u = u * conj(u) * u``.
* Nonlinear products are evaluated on a padded grid of ``P >= 2M`` points,
  which keeps every folded alias of a cubic product outside the retained
  band (retained modes reach M/2, cubic products reach 3M/2; with P = 2M
  the wrap-around lands beyond the retained band on both sides).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, PreconditionError


def dispersion_relation(xi):
    """Frequency of the linear flow: sqrt(xi^2 + xi^4).

    Even in xi, vanishes only at xi = 0.  Accepts scalars or arrays.
    """
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)):
        raise PreconditionError("dispersion_relation requires finite wavenumbers")
    out = np.sqrt(xi * xi + xi ** 4)
    return out if out.ndim else float(out)


def bracket(a):
    """Japanese bracket <a> = sqrt(1 + |a|^2)."""
    a = np.asarray(a, dtype=float)
    out = np.sqrt(1.0 + a * a)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Grid1D:
    """Periodic spatial grid with its dual wavenumber lattice.

    Parameters
    ----------
    length:
        Physical period L > 0.
    modes:
        Number M of retained Fourier modes (even, >= 4).
    padded_modes:
        Grid size P used when evaluating nonlinear products; defaults to
        2M, the smallest size that keeps cubic products alias-free on the
        retained band.
    """

    length: float
    modes: int
    padded_modes: int = 0

    def __post_init__(self):
        if not (self.length > 0):
            raise PreconditionError(f"grid length must be positive, got {self.length}")
        if self.modes < 4 or self.modes % 2:
            raise PreconditionError(f"modes must be even and >= 4, got {self.modes}")
        if self.padded_modes == 0:
            object.__setattr__(self, "padded_modes", 2 * self.modes)
        if self.padded_modes < 2 * self.modes:
            raise PreconditionError(
                f"padded_modes must be >= 2*modes, got {self.padded_modes} < {2 * self.modes}"
            )

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """xi_k in FFT order; read-only array of length ``modes``."""
        k = np.fft.fftfreq(self.modes, d=1.0 / self.modes)
        xi = 2.0 * np.pi * k / self.length
        xi.flags.writeable = False
        return xi

    @cached_property
    def nodes(self) -> np.ndarray:
        """Collocation points x_j = j L / M."""
        x = np.arange(self.modes) * (self.length / self.modes)
        x.flags.writeable = False
        return x

    @property
    def max_wavenumber(self) -> float:
        return float(np.pi * self.modes / self.length)

    def padded_nodes(self, n: int | None = None) -> np.ndarray:
        n = self.padded_modes if n is None else n
        return np.arange(n) * (self.length / n)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A complex field stored by its retained Fourier coefficients."""

    grid: Grid1D
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex)
        if arr.shape != (self.grid.modes,):
            raise GridMismatchError(
                f"expected {self.grid.modes} coefficients, got shape {arr.shape}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls, grid: Grid1D) -> "SpectralField":
        return cls(grid, np.zeros(grid.modes, dtype=complex))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Multiplier:
    """A diagonal Fourier operator: one weight per retained wavenumber."""

    grid: Grid1D
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.shape != (self.grid.modes,):
            raise GridMismatchError(
                f"multiplier length {arr.shape} does not match grid modes {self.grid.modes}"
            )
        arr = np.array(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_symbol(cls, grid: Grid1D, symbol, label: str = "") -> "Multiplier":
        """Evaluate a scalar symbol xi -> m(xi) on the grid lattice."""
        return cls(grid, symbol(grid.wavenumbers), label)

    @classmethod
    def identity(cls, grid: Grid1D) -> "Multiplier":
        return cls(grid, np.ones(grid.modes), "1")

    @classmethod
    def derivative(cls, grid: Grid1D) -> "Multiplier":
        return cls(grid, 1j * grid.wavenumbers, "i*xi")

    @classmethod
    def bracket_power(cls, grid: Grid1D, s: float) -> "Multiplier":
        return cls(grid, bracket(grid.wavenumbers) ** s, f"<xi>^{s}")

    @classmethod
    def abs_power(cls, grid: Grid1D, p: float) -> "Multiplier":
        """|xi|^p with the zero mode mapped to 0 (also for negative p)."""
        xi = grid.wavenumbers
        vals = np.zeros(grid.modes)
        vals[xi != 0] = np.abs(xi[xi != 0]) ** p
        return cls(grid, vals, f"|xi|^{p}")

    @classmethod
    def dispersion(cls, grid: Grid1D) -> "Multiplier":
        return cls(grid, dispersion_relation(grid.wavenumbers), "gamma(xi)")


def _check_same_grid(a: Grid1D, b: Grid1D):
    if a != b:
        raise GridMismatchError(f"grids differ: {a} vs {b}")


def forward_transform(grid: Grid1D, samples) -> SpectralField:
    """Samples on the M collocation points -> continuum-normalised coefficients."""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (grid.modes,):
        raise GridMismatchError(
            f"expected {grid.modes} samples, got shape {samples.shape}"
        )
    coeffs = np.fft.fft(samples) * (grid.length / grid.modes)
    return SpectralField(grid, coeffs)


def inverse_transform(u: SpectralField, n_points: int | None = None) -> np.ndarray:
    """Coefficients -> physical samples, optionally on a finer grid.

    Zero-padding to ``n_points > M`` evaluates the same band-limited
    function on more collocation points; the continuum normalisation makes
    the coefficients themselves padding-invariant.
    """
    n = u.grid.modes if n_points is None else n_points
    if n < u.grid.modes:
        raise PreconditionError("cannot inverse-transform onto fewer points than modes")
    padded = pad_coefficients(u.coeffs, n)
    return np.fft.ifft(padded) * (n / u.grid.length)


def pad_coefficients(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Zero-pad FFT-ordered coefficients from M modes to n >= M modes."""
    m = coeffs.shape[-1]
    if n == m:
        return coeffs
    half = m // 2
    out = np.zeros(coeffs.shape[:-1] + (n,), dtype=complex)
    out[..., :half] = coeffs[..., :half]
    out[..., n - half:] = coeffs[..., half:]
    return out


def truncate_coefficients(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Drop padded modes, keeping the retained band of size m."""
    n = coeffs.shape[-1]
    if n == m:
        return coeffs
    half = m // 2
    return np.concatenate([coeffs[..., :half], coeffs[..., n - half:]], axis=-1)


def apply_multiplier(m: Multiplier, u: SpectralField) -> SpectralField:
    """Diagonal application (m*u)^(xi_k) = m(xi_k) * u^(xi_k)."""
    _check_same_grid(m.grid, u.grid)
    return SpectralField(u.grid, m.values * u.coeffs)


def dealiased_cubic(u: SpectralField) -> SpectralField:
    """Retained-band coefficients of |u|^2 u via zero-padded collocation.

    Exact to round-off for band-limited input: with P >= 2M every alias of
    the cubic product folds outside the retained band.
    """
    grid = u.grid
    phys = inverse_transform(u, grid.padded_modes)
    w = (phys * np.conj(phys)) * phys
    coeffs_p = np.fft.fft(w) * (grid.length / grid.padded_modes)
    return SpectralField(grid, truncate_coefficients(coeffs_p, grid.modes))


def sobolev_norm(u: SpectralField, s: float) -> float:
    """H^s norm: (sum_k <xi_k>^{2s} |u_k|^2 / L)^(1/2).

    Parseval-consistent: s = 0 reproduces the physical-space L^2 norm.
    """
    w = bracket(u.grid.wavenumbers) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2) / u.grid.length))


def lebesgue_norm(u: SpectralField, p: int) -> float:
    """L^p norm by collocation quadrature on a grid fine enough to be exact.

    Only p in {2, 4, 6} is supported.  |u|^p is a trigonometric polynomial
    of bandwidth p*M/2; quadrature on max(P, p*M/2) points integrates it
    without aliasing error.
    """
    if p not in (2, 4, 6):
        raise PreconditionError(f"lebesgue_norm supports p in {{2, 4, 6}}, got {p}")
    grid = u.grid
    n = max(grid.padded_modes, (p // 2) * grid.modes)
    phys = inverse_transform(u, n)
    integral = np.sum(np.abs(phys) ** p) * (grid.length / n)
    return float(integral ** (1.0 / p))


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """Real L^2 pairing Re(integral f * conj(g) dx) via Parseval."""
    _check_same_grid(f.grid, g.grid)
    return float(np.real(np.sum(f.coeffs * np.conj(g.coeffs))) / f.grid.length)
