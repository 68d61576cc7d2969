"""Discrete space-time norms and ratio probes for the product estimates.

A :class:`SpaceTimeField` holds spatial Fourier coefficients sampled on a
uniform time grid over a window [0, delta], with a C^1 taper already
applied in time.  The taper equals 1 on the middle half of the window, so
all Lebesgue-type numerators are evaluated there, where the taper does not
distort the samples; the weighted space-time norm plays the role of the
localized norm with one fixed, canonical extension (the tapered one).
Computed norms therefore upper-bound the true localized infimum.

The weighted norm is

    || <|tau| - Lambda(xi)>^b <xi>^s F~(xi, tau) ||_{l^2}

with Lambda either the dispersion relation (default) or its large-xi
equivalent xi^2; the two variants agree within a factor 3^b, which is
itself one of the verified invariants.  The tau lattice is dual to the
time samples, so callers must sample densely enough that |tau| reaches
about twice the largest occupied dispersion frequency
(:func:`recommended_time_samples` encodes that rule).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, PreconditionError, UndefinedRatioError
from .propagators import _sinc_gamma
from .spectral import (
    Grid1D,
    Multiplier,
    SpectralField,
    apply_multiplier,
    bracket,
    dealiased_cubic,
    dispersion_relation,
    pad_coefficients,
)


def time_window(times: np.ndarray, delta: float) -> np.ndarray:
    """C^1 taper: 0 at the window ends, 1 on the middle half [d/4, 3d/4].

    Quarter-period sin^2 ramps give continuous first derivatives at all
    four junction points.
    """
    t = np.asarray(times, dtype=float)
    quarter = delta / 4.0
    w = np.ones_like(t)
    rising = t < quarter
    w[rising] = np.sin(0.5 * np.pi * t[rising] / quarter) ** 2
    falling = t > 3.0 * quarter
    w[falling] = np.sin(0.5 * np.pi * (delta - t[falling]) / quarter) ** 2
    return w


def recommended_time_samples(grid: Grid1D, delta: float, minimum: int = 64) -> int:
    """Sample count that resolves |tau| = gamma(xi_max) on the tau lattice."""
    gamma_max = dispersion_relation(grid.max_wavenumber)
    return int(max(minimum, np.ceil(4.0 * gamma_max * delta / (2.0 * np.pi)) + 1))


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Windowed samples of a field over [0, delta].

    ``values[j, k]`` is the spatial coefficient at wavenumber ``xi_k`` and
    time ``times[j]``; the time taper has already been applied.
    """

    grid: Grid1D
    times: np.ndarray
    values: np.ndarray
    window: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        window = np.asarray(self.window, dtype=float)
        n_t = times.shape[0]
        if n_t < 16:
            raise PreconditionError(f"need at least 16 time samples, got {n_t}")
        gaps = np.diff(times)
        if np.any(gaps <= 0) or np.max(np.abs(gaps - gaps[0])) > 1e-9 * gaps[0]:
            raise PreconditionError("time samples must be uniform and increasing")
        if values.shape != (n_t, self.grid.modes):
            raise GridMismatchError(
                f"values shape {values.shape} does not match "
                f"(n_times, modes) = ({n_t}, {self.grid.modes})"
            )
        if window.shape != (n_t,) or np.any(window < 0):
            raise PreconditionError("window must be a nonnegative per-sample profile")
        for arr in (times, values, window):
            arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "window", window)

    @property
    def delta(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def tau(self) -> np.ndarray:
        """Dual time-frequency lattice of the sample grid."""
        return 2.0 * np.pi * np.fft.fftfreq(self.times.shape[0], d=self.spacing)

    @classmethod
    def from_coefficients(
        cls, grid: Grid1D, times, coeffs, window=None
    ) -> "SpaceTimeField":
        """Window raw per-time coefficients with the default (or given) taper."""
        times = np.asarray(times, dtype=float)
        coeffs = np.asarray(coeffs, dtype=complex)
        delta = float(times[-1] - times[0])
        if window is None:
            window = time_window(times - times[0], delta)
        window = np.asarray(window, dtype=float)
        return cls(grid, times - times[0], coeffs * window[:, None], window)

    @classmethod
    def from_trajectory(cls, traj, component: str = "u", window=None) -> "SpaceTimeField":
        """Collect one component of a trajectory into a windowed field."""
        states = traj.states
        grid = states[0].grid
        times = np.array([s.t for s in states])
        if component == "u":
            coeffs = np.array([s.u.coeffs for s in states])
        elif component == "ut":
            coeffs = np.array([s.ut.coeffs for s in states])
        else:
            raise PreconditionError(f"unknown component {component!r}")
        return cls.from_coefficients(grid, times, coeffs, window)

    def map_multiplier(self, m: Multiplier) -> "SpaceTimeField":
        """Apply a diagonal spatial multiplier to every time slice."""
        if m.grid != self.grid:
            raise GridMismatchError("multiplier grid does not match field grid")
        return SpaceTimeField(self.grid, self.times, self.values * m.values[None, :], self.window)

    def pointwise_cubic(self) -> "SpaceTimeField":
        """|f|^2 f slice by slice (dealiased in space)."""
        out = np.empty_like(self.values)
        for j in range(self.values.shape[0]):
            out[j] = dealiased_cubic(SpectralField(self.grid, self.values[j])).coeffs
        return SpaceTimeField(self.grid, self.times, out, self.window)


def free_evolution(
    phi: SpectralField,
    psi: SpectralField,
    delta: float,
    n_times: int,
    window=None,
) -> SpaceTimeField:
    """Windowed linear flow from data (phi, psi_x), sampled on [0, delta].

    psi enters undifferentiated; its x-derivative is applied internally.
    """
    grid = phi.grid
    if psi.grid != grid:
        raise GridMismatchError("phi and psi must share a grid")
    gamma = dispersion_relation(grid.wavenumbers)
    times = np.linspace(0.0, delta, n_times)
    psi_x = apply_multiplier(Multiplier.derivative(grid), psi)
    coeffs = np.empty((n_times, grid.modes), dtype=complex)
    for j, t in enumerate(times):
        coeffs[j] = np.cos(gamma * t) * phi.coeffs + _sinc_gamma(gamma, t) * psi_x.coeffs
    return SpaceTimeField.from_coefficients(grid, times, coeffs, window)


def xsb_norm(f: SpaceTimeField, s: float, b: float, symbol: str = "gamma") -> float:
    """Weighted space-time norm with weight <|tau|-Lambda(xi)>^b <xi>^s.

    symbol "gamma" uses the dispersion relation; "parabolic" uses xi^2.
    With s = b = 0 the value is the plain L^2_{x,t} norm of the windowed
    samples (Parseval), which pins the otherwise arbitrary normalisation.
    """
    if not (0.0 <= b <= 1.0):
        raise PreconditionError(f"b must lie in [0, 1], got {b}")
    xi = f.grid.wavenumbers
    if symbol == "gamma":
        char = dispersion_relation(xi)
    elif symbol == "parabolic":
        char = xi * xi
    else:
        raise PreconditionError(f"symbol must be 'gamma' or 'parabolic', got {symbol!r}")
    dt = f.spacing
    n_t = f.times.shape[0]
    ft = np.fft.fft(f.values, axis=0) * dt
    tau = f.tau
    weight = bracket(np.abs(tau)[:, None] - char[None, :]) ** b * bracket(xi)[None, :] ** s
    period = n_t * dt
    return float(np.sqrt(np.sum((weight * np.abs(ft)) ** 2) / (f.grid.length * period)))


def decompose_pm(f: SpaceTimeField) -> tuple[SpaceTimeField, SpaceTimeField]:
    """Split by the sign of the time frequency: tau >= 0 piece and tau < 0 piece.

    The pieces sum to f exactly and partition the tau lattice, so the
    squared weighted norms are additive for any weight.
    """
    ft = np.fft.fft(f.values, axis=0)
    tau = f.tau
    plus_mask = (tau >= 0)[:, None]
    plus = np.fft.ifft(np.where(plus_mask, ft, 0.0), axis=0)
    minus = np.fft.ifft(np.where(plus_mask, 0.0, ft), axis=0)
    f_plus = SpaceTimeField(f.grid, f.times, plus, f.window)
    f_minus = SpaceTimeField(f.grid, f.times, minus, f.window)
    return f_plus, f_minus


def _middle_mask(f: SpaceTimeField) -> np.ndarray:
    delta = f.delta
    lo, hi = 0.25 * delta, 0.75 * delta
    eps = 1e-9 * max(delta, 1.0)
    return (f.times >= lo - eps) & (f.times <= hi + eps)


def middle_lp_norm(f: SpaceTimeField, p: int) -> float:
    """L^p norm over space and over the middle half of the window in time."""
    if p not in (2, 4, 6):
        raise PreconditionError(f"middle_lp_norm supports p in {{2, 4, 6}}, got {p}")
    grid = f.grid
    n = max(grid.padded_modes, (p // 2) * grid.modes)
    mask = _middle_mask(f)
    padded = pad_coefficients(f.values[mask], n)
    phys = np.fft.ifft(padded, axis=-1) * (n / grid.length)
    slice_integrals = np.sum(np.abs(phys) ** p, axis=-1) * (grid.length / n)
    return float((np.sum(slice_integrals) * f.spacing) ** (1.0 / p))


def _product_l2_middle(f1: SpaceTimeField, f2: SpaceTimeField, half_derivative: bool = False) -> float:
    """L^2 over the middle window of the pointwise product f1*f2.

    Optionally applies |xi|^(1/2) to f1 first.  Both factors are evaluated
    on the padded grid, so the quadrature of |f1*f2|^2 is alias-free for
    band-limited slices.
    """
    if f1.grid != f2.grid:
        raise GridMismatchError("product factors must share a grid")
    if f1.times.shape != f2.times.shape or np.max(np.abs(f1.times - f2.times)) > 1e-12:
        raise PreconditionError("product factors must share the time grid")
    grid = f1.grid
    n = 2 * grid.padded_modes
    mask = _middle_mask(f1)
    vals1 = f1.values[mask]
    if half_derivative:
        vals1 = vals1 * Multiplier.abs_power(grid, 0.5).values[None, :]
    u1 = np.fft.ifft(pad_coefficients(vals1, n), axis=-1) * (n / grid.length)
    u2 = np.fft.ifft(pad_coefficients(f2.values[mask], n), axis=-1) * (n / grid.length)
    prod = u1 * u2
    slice_integrals = np.sum(np.abs(prod) ** 2, axis=-1) * (grid.length / n)
    return float(np.sqrt(np.sum(slice_integrals) * f1.spacing))


@dataclass(frozen=True, eq=False)
class DyadicPiece:
    """A space-time field whose spatial spectrum lives in [lower, upper)."""

    base: SpaceTimeField
    lower: float
    upper: float

    def __post_init__(self):
        if not (0 < self.lower < self.upper):
            raise PreconditionError("band must satisfy 0 < lower < upper")
        xi = np.abs(self.base.grid.wavenumbers)
        outside = (xi < self.lower) | (xi >= self.upper)
        leak = np.max(np.abs(self.base.values[:, outside]), initial=0.0)
        scale = np.max(np.abs(self.base.values), initial=0.0)
        if scale > 0 and leak > 1e-12 * scale:
            raise PreconditionError(
                f"spectrum leaks outside the band [{self.lower}, {self.upper})"
            )


def band_projection(f: SpaceTimeField, lower: float, upper: float) -> DyadicPiece:
    """Exact spectral projection onto the annulus lower <= |xi| < upper."""
    xi = np.abs(f.grid.wavenumbers)
    mask = (xi >= lower) & (xi < upper)
    vals = np.where(mask[None, :], f.values, 0.0)
    return DyadicPiece(SpaceTimeField(f.grid, f.times, vals, f.window), lower, upper)


def strichartz_ratio(f: SpaceTimeField, p: int, b: float = 0.51) -> float:
    """||f||_{L^p(middle window)} / weighted norm at (s, b) = (0, b).

    Degree-0 homogeneous: rescaling f leaves the ratio unchanged.  The
    testable content is finiteness and stability across samples.
    """
    if p not in (4, 6):
        raise PreconditionError(f"strichartz_ratio supports p in {{4, 6}}, got {p}")
    den = xsb_norm(f, 0.0, b)
    if den == 0.0:
        raise UndefinedRatioError("strichartz_ratio is undefined for the zero field")
    return middle_lp_norm(f, p) / den


def bilinear_ratio(f1: DyadicPiece, f2: DyadicPiece, b: float = 0.51) -> float:
    """N2^(1/2) ||f1 f2||_{L^2(middle)} / (||f1|| ||f2||) with N2 = f2's lower edge.

    Requires f1's band to sit no higher than f2's.  Boundedness of this
    quantity across an N2 sweep is the discrete trace of the 1/sqrt(N2)
    product gain for frequency-separated factors.
    """
    if f1.lower > f2.lower:
        raise PreconditionError("band order violated: f1 must be the lower-frequency piece")
    num = _product_l2_middle(f1.base, f2.base)
    d1 = xsb_norm(f1.base, 0.0, b)
    d2 = xsb_norm(f2.base, 0.0, b)
    if d1 == 0.0 or d2 == 0.0:
        if num == 0.0:
            return 0.0
        raise UndefinedRatioError("bilinear_ratio with one zero factor but nonzero product")
    return float(np.sqrt(f2.lower) * num / (d1 * d2))


def halfderiv_bilinear_ratio(f1: DyadicPiece, f2: DyadicPiece, b: float = 0.51) -> float:
    """||(|xi|^(1/2) f1) f2||_{L^2(middle)} / (||f1|| ||f2||).

    Admissible only when every pair of band frequencies satisfies
    |xi1| <= min(|xi1 - xi2|, |xi1 + xi2|); on band endpoints (either sign
    allowed) that reduces to f1.upper <= f2.lower - f1.upper.  Overlapping
    bands, where xi1 + xi2 can vanish, are exactly the excluded regime.
    """
    worst_separation = f2.lower - f1.upper
    if f1.upper > worst_separation:
        raise PreconditionError(
            "separation condition violated: need f1.upper <= f2.lower - f1.upper "
            f"(got bands [{f1.lower}, {f1.upper}) and [{f2.lower}, {f2.upper}))"
        )
    num = _product_l2_middle(f1.base, f2.base, half_derivative=True)
    d1 = xsb_norm(f1.base, 0.0, b)
    d2 = xsb_norm(f2.base, 0.0, b)
    if d1 == 0.0 or d2 == 0.0:
        if num == 0.0:
            return 0.0
        raise UndefinedRatioError("halfderiv_bilinear_ratio with a zero factor")
    return num / (d1 * d2)


def cubic_bound_ratio(f: SpaceTimeField, s: float, b: float = 0.51) -> float:
    """Weighted norm of |f|^2 f at (s, 0) over the cubed norm of f at (s, b).

    Exponent 0 in the numerator is the hardest allowed case of the cubic
    estimate; the ratio is invariant under rescaling of f (3-homogeneous
    numerator and denominator).
    """
    if s < 0:
        raise PreconditionError("cubic_bound_ratio requires s >= 0")
    den = xsb_norm(f, s, b)
    if den == 0.0:
        raise UndefinedRatioError("cubic_bound_ratio is undefined for the zero field")
    return xsb_norm(f.pointwise_cubic(), s, 0.0) / den ** 3


def bilinear_gain_sweep(
    n2_values,
    low_band: tuple[float, float] = (2.0, 8.0),
    length: float = np.pi,
    b: float = 0.51,
) -> list[tuple[float, float, float]]:
    """Dyadic sweep of the product ratio with transit-scaled windows.

    For each N2 builds two localized free-wave packets (a fixed low-band
    one and one in [N2, 2N2)) on a grid just large enough for the band,
    samples the window delta = pi/N2 (a couple of packet transits; the
    estimate's constant is uniform in the window length, so rungs are
    comparable), and returns rows (N2, corrected, raw).  corrected carries
    the sqrt(N2) factor and should stay bounded; raw = corrected/sqrt(N2)
    decays if the product gain is real.

    A fixed window would not do: on a periodic domain the packets
    re-encounter each other ~ N2*delta/L times and the measured product
    norm saturates at the decorrelated average, which has no N2 decay.
    """
    lo, hi = low_band
    zero_center = 0.5 * (lo + hi)
    rows = []
    for n2 in n2_values:
        n2 = float(n2)
        if n2 < hi:
            raise PreconditionError(
                f"N2 = {n2} overlaps the low band {low_band}"
            )
        modes = int(4 * n2 * length / (2.0 * np.pi) + 0.5) * 2
        grid = Grid1D(length, max(modes, 16))
        delta = np.pi / n2
        n_t = recommended_time_samples(grid, delta, minimum=64)
        from .synthesis import gaussian_packet

        low = gaussian_packet(grid, zero_center, (hi - lo) / 4.0, lo, hi)
        high = gaussian_packet(grid, 1.5 * n2, n2 / 4.0, n2, 2.0 * n2)
        f_lo = free_evolution(low, SpectralField.zero(grid), delta, n_t)
        f_hi = free_evolution(high, SpectralField.zero(grid), delta, n_t)
        p_lo = band_projection(f_lo, lo, hi)
        p_hi = band_projection(f_hi, n2, 2.0 * n2)
        corrected = bilinear_ratio(p_lo, p_hi, b=b)
        rows.append((n2, corrected, corrected / np.sqrt(n2)))
    return rows


def linear_bound_ratio(
    phi: SpectralField,
    psi: SpectralField,
    s: float,
    delta: float = 1.0,
    n_times: int | None = None,
    b: float = 0.51,
) -> float:
    """Windowed free-evolution norm over the data norms.

    Returns xsb_norm(windowed flow, s, b) / (||phi||_{H^s} + ||psi||_{H^{s-1}}).
    For a single-mode phi the value reduces to the window's own
    time-frequency mass and is independent of the mode.
    """
    from .spectral import sobolev_norm

    den = sobolev_norm(phi, s) + sobolev_norm(psi, s - 1.0)
    if den == 0.0:
        raise UndefinedRatioError("linear_bound_ratio is undefined for zero data")
    if n_times is None:
        n_times = recommended_time_samples(phi.grid, delta)
    flow = free_evolution(phi, psi, delta, n_times)
    return xsb_norm(flow, s, b) / den
