"""Experiment orchestration: configuration, runners, persistence.

The runners implement the desk-scale studies:

* ``run_sweep_acl`` - the truncation-energy increment over one local
  window, swept over the threshold N, with the power-law slope fitted to
  probe the expected decay.
* ``run_growth`` - iterated local windows up to a target time T with the
  threshold chosen by N ~ T^(1/(6s-4)), a doubling monitor on the
  truncated energy, and the polynomial bound curve C(1+t)^((1-s)/(6s-4))
  fitted at the first checkpoint past t = 1.
* ``run_contraction`` - the fixed-point solver across a ladder of data
  sizes, with a bisection search for the largest contracting window.
* ``run_norms`` - the statistical ratio probes of the space-time
  estimates.
* ``run_simulate`` - plain time integration with energy diagnostics.

All outputs are deterministic: a master seed expands through counter-based
streams (order-independent across parallel cells), rows are sorted by key
before emission, and files carry no timestamps, so identical configs give
byte-identical files.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from configparser import ConfigParser
from dataclasses import asdict, dataclass, field, replace
from io import StringIO
from pathlib import Path

import numpy as np

from . import __version__
from .bourgain import (
    SpaceTimeField,
    band_projection,
    bilinear_gain_sweep,
    cubic_bound_ratio,
    free_evolution,
    halfderiv_bilinear_ratio,
    linear_bound_ratio,
    recommended_time_samples,
    strichartz_ratio,
    xsb_norm,
)
from .errors import (
    EnergyDoublingError,
    NumericalError,
    PreconditionError,
    SlopeFitError,
)
from .imethod import ISpec, apply_I, modified_energy, modified_energy_series
from .propagators import WaveState
from .solver import SolverConfig, Trajectory, evolve, local_delta, picard_solve
from .spectral import (
    Grid1D,
    Multiplier,
    SpectralField,
    apply_multiplier,
    dispersion_relation,
    sobolev_norm,
)
from .synthesis import cell_rng, data_pair, gaussian_packet

KINDS = ("simulate", "sweep_acl", "growth", "contraction", "norms", "verify")

#: Hard cap on time samples per local window (resource guard).
MAX_WINDOW_SAMPLES = 200_000


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    kind: str = "simulate"
    # [run]
    seeds: int = 1
    jobs: int = 1
    T: float = 1.0
    delta: float = 0.0          # 0 means "use the existence-time rule"
    freeze_delta: bool = True
    master_seed: int = 20260809
    # [grid]
    L: float = 64.0 * math.pi
    M: int = 1024
    # [solver]
    dt: float = 1e-3
    sign: str = "defocusing"
    kappa: float = 0.25
    eps: float = 0.01
    tol_picard: float = 1e-10
    max_picard_iters: int = 12
    # [ispec]
    s: float = 0.75
    N_list: list[float] = field(default_factory=lambda: [16.0])
    shape: str = "sharp"
    # [data]
    amplitude: float = 1.0
    spectral_slope: float | None = None
    data_file: str = ""
    # [output]
    out_dir: str = "out"
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])

    _SECTIONS = {
        "run": ("kind", "seeds", "jobs", "T", "delta", "freeze_delta", "master_seed"),
        "grid": ("L", "M"),
        "solver": ("dt", "sign", "kappa", "eps", "tol_picard", "max_picard_iters"),
        "ispec": ("s", "N_list", "shape"),
        "data": ("amplitude", "spectral_slope", "data_file"),
        "output": ("out_dir", "formats"),
    }

    def grid(self) -> Grid1D:
        return Grid1D(self.L, self.M)

    def solver_config(self, dt: float | None = None) -> SolverConfig:
        return SolverConfig(
            dt=self.dt if dt is None else dt,
            sign=self.sign,
            tol_picard=self.tol_picard,
            max_picard_iters=self.max_picard_iters,
        )

    @property
    def regime(self) -> str:
        """Label the regularity relative to the global theory threshold 2/3."""
        return "inside theorem range" if self.s > 2.0 / 3.0 else "exploratory"

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise PreconditionError(f"kind must be one of {KINDS}, got {self.kind!r}")
        grid = self.grid()          # validates L, M
        self.solver_config()        # validates dt, sign, tolerances
        if self.seeds < 1 or self.jobs < 1:
            raise PreconditionError("seeds and jobs must be >= 1")
        if self.kind in ("sweep_acl", "growth"):
            if not (0 < self.s < 1):
                raise PreconditionError(
                    f"truncation experiments need 0 < s < 1, got s = {self.s}"
                )
        if self.kind == "growth" and not (2.0 / 3.0 < self.s < 1):
            raise PreconditionError(
                f"growth runs need 2/3 < s < 1 (got s = {self.s}): the window "
                "iteration count is only finite inside the theorem range"
            )
        if self.kind == "sweep_acl":
            ns = self.N_list
            if len(ns) < 4:
                raise PreconditionError("sweep_acl needs a dyadic N list with >= 4 entries")
            for a, b in zip(ns, ns[1:]):
                if abs(b / a - 2.0) > 1e-12:
                    raise PreconditionError("sweep_acl N list must be dyadic (ratio 2)")
            if max(ns) > grid.max_wavenumber / 4.0:
                raise PreconditionError(
                    f"largest N = {max(ns)} exceeds max wavenumber / 4 = "
                    f"{grid.max_wavenumber / 4.0}"
                )
            ISpec(N=min(ns), s=self.s, shape=self.shape)
        return self

    # -- INI round trip ------------------------------------------------------

    def to_ini(self) -> str:
        cp = ConfigParser()
        cp.optionxform = str
        for section, keys in self._SECTIONS.items():
            cp[section] = {}
            for key in keys:
                cp[section][_INI_NAMES.get(key, key)] = _to_text(getattr(self, key))
        buf = StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        cfg = cls()
        for section, keys in cls._SECTIONS.items():
            if not cp.has_section(section):
                continue
            for key in keys:
                name = _INI_NAMES.get(key, key)
                if cp.has_option(section, name):
                    setattr(cfg, key, _from_text(key, cp.get(section, name)))
        return cfg

    def apply_override(self, assignment: str) -> None:
        """Apply one 'section.key=value' override (CLI --set)."""
        try:
            path, value = assignment.split("=", 1)
            section, name = path.strip().split(".", 1)
        except ValueError:
            raise PreconditionError(
                f"override must look like section.key=value, got {assignment!r}"
            ) from None
        for key in self._SECTIONS.get(section, ()):
            if _INI_NAMES.get(key, key) == name.strip():
                setattr(self, key, _from_text(key, value.strip()))
                return
        raise PreconditionError(f"unknown config key {path.strip()!r}")


_INI_NAMES = {"N_list": "N", "out_dir": "dir", "data_file": "file", "T": "T", "L": "L", "M": "M"}

_FLOAT_KEYS = {"T", "delta", "L", "dt", "kappa", "eps", "tol_picard", "s", "amplitude"}
_INT_KEYS = {"seeds", "jobs", "master_seed", "M", "max_picard_iters"}
_BOOL_KEYS = {"freeze_delta"}


def _to_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ",".join(_to_text(v) for v in value)
    if value is None:
        return ""
    return str(value)


def _from_text(key: str, text: str):
    text = text.strip()
    if key == "N_list":
        return [float(v) for v in text.split(",") if v.strip()]
    if key == "formats":
        return [v.strip() for v in text.split(",") if v.strip()]
    if key == "spectral_slope":
        return None if text in ("", "auto", "none") else float(text)
    if key in _BOOL_KEYS:
        return text.lower() in ("1", "true", "yes", "on")
    if key in _INT_KEYS:
        return int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    return text


def default_config(kind: str) -> ExperimentConfig:
    """Desk-scale presets per experiment kind."""
    cfg = ExperimentConfig(kind=kind)
    if kind == "sweep_acl":
        cfg = replace(
            cfg, kind=kind, L=2.0 * math.pi, M=4096, s=0.75, seeds=8,
            N_list=[16.0, 32.0, 64.0, 128.0, 256.0, 512.0], amplitude=1.0,
        )
    elif kind == "growth":
        cfg = replace(cfg, kind=kind, L=2.0 * math.pi, M=512, s=0.75, T=10.0,
                      amplitude=0.3, dt=5e-4)
    elif kind == "contraction":
        cfg = replace(cfg, kind=kind, L=2.0 * math.pi, M=128, s=0.75,
                      N_list=[16.0], amplitude=4.0, dt=1e-3)
    elif kind == "norms":
        cfg = replace(cfg, kind=kind, L=2.0 * math.pi, M=512, s=0.75, seeds=20,
                      delta=0.05)
    elif kind == "verify":
        cfg = replace(cfg, kind=kind, L=2.0 * math.pi, M=64)
    else:
        cfg = replace(cfg, kind="simulate", amplitude=0.5)
    return cfg


# ---------------------------------------------------------------------------
# Power-law fitting
# ---------------------------------------------------------------------------

#: Minimum log2 dynamic range for a slope fit to be meaningful.
FLAT_RANGE_BITS = 1.5


def fit_power_law(n_values, y_values) -> tuple[float, float]:
    """Least-squares slope and intercept of log2 y against log2 N.

    Raises SlopeFitError for fewer than 3 points, nonpositive values, or a
    dynamic range too small to distinguish decay from a noise floor.
    """
    n_values = np.asarray(n_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    if n_values.size < 3:
        raise SlopeFitError(f"need >= 3 points for a slope fit, got {n_values.size}")
    if np.any(y_values <= 0):
        raise SlopeFitError("power-law fit needs positive values")
    ly = np.log2(y_values)
    if ly.max() - ly.min() < FLAT_RANGE_BITS:
        raise SlopeFitError("flat/no signal")
    slope, intercept = np.polyfit(np.log2(n_values), ly, 1)
    return float(slope), float(intercept)


def bootstrap_slope_ci(
    rows: list[tuple[int, float, float]],
    master_seed: int,
    n_boot: int = 400,
) -> tuple[float, float]:
    """Percentile CI for the slope by resampling seeds with replacement.

    rows are (seed, N, value) triples; resampling is clustered by seed so
    correlated N-ladders stay together.
    """
    seeds = sorted({r[0] for r in rows})
    by_seed = {sd: [(r[1], r[2]) for r in rows if r[0] == sd] for sd in seeds}
    rng = cell_rng(master_seed, 0xB007)
    slopes = []
    for _ in range(n_boot):
        picked = rng.choice(len(seeds), size=len(seeds), replace=True)
        ns, ys = [], []
        for i in picked:
            for n, y in by_seed[seeds[i]]:
                ns.append(n)
                ys.append(y)
        try:
            slope, _ = fit_power_law(ns, ys)
            slopes.append(slope)
        except SlopeFitError:
            continue
    if not slopes:
        raise SlopeFitError("bootstrap produced no valid fits")
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# Sweep of the truncation-energy increment over N
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    seed: int
    N: float
    delta: float = float("nan")
    increment: float = float("nan")
    normalized_increment: float = float("nan")
    xsb_cubed: float = float("nan")
    kinetic_xsb: float = float("nan")
    error: str = ""


@dataclass
class SweepResult:
    rows: list[SweepRow]
    fitted_slope: float | None
    slope_ci: tuple[float, float] | None
    normalized_slope: float | None
    normalized_ci: tuple[float, float] | None
    fit_status: str
    config: ExperimentConfig


def window_samples(grid: Grid1D, delta: float, minimum: int = 64) -> int:
    """Steps per local window: resolve the fastest dispersion phase."""
    n = recommended_time_samples(grid, delta, minimum=minimum)
    if n > MAX_WINDOW_SAMPLES:
        raise PreconditionError(
            f"window needs {n} samples to resolve the dispersion phase "
            f"(cap {MAX_WINDOW_SAMPLES}); reduce M or delta"
        )
    return n


def _sweep_cell(config: ExperimentConfig, seed_idx: int, N: float) -> SweepRow:
    grid = config.grid()
    rng = cell_rng(config.master_seed, seed_idx)
    phi, psi = data_pair(grid, config.s, rng, amplitude=config.amplitude)
    spec = ISpec(N=N, s=config.s, shape=config.shape)
    delta = (
        config.delta
        if config.delta > 0
        else local_delta(phi, psi, N, config.s, config.kappa, config.eps)
    )
    n = window_samples(grid, delta)
    dt = delta / n
    traj = evolve(WaveState.from_data(phi, psi), delta, config.solver_config(dt))

    e_series = modified_energy_series(traj, spec)
    inc = float(np.max(np.abs(e_series - e_series[0])))

    iu_coeffs = np.array([apply_I(spec, st.u).coeffs for st in traj.states])
    f_iu = SpaceTimeField.from_coefficients(grid, traj.times, iu_coeffs)
    xsb1 = xsb_norm(f_iu, 1.0, 0.51)
    inv_abs = Multiplier.abs_power(grid, -1.0)
    kin_coeffs = np.array(
        [apply_multiplier(inv_abs, apply_I(spec, st.ut)).coeffs for st in traj.states]
    )
    f_kin = SpaceTimeField.from_coefficients(grid, traj.times, kin_coeffs)
    xsb0 = xsb_norm(f_kin, 0.0, 0.51)

    norm_factor = xsb1 ** 3 * xsb0
    normalized = inc / norm_factor if norm_factor > 0 else float("nan")
    return SweepRow(
        seed=seed_idx, N=N, delta=delta, increment=inc,
        normalized_increment=normalized, xsb_cubed=xsb1 ** 3, kinetic_xsb=xsb0,
    )


def _sweep_cell_guarded(args) -> SweepRow:
    config, seed_idx, N = args
    try:
        return _sweep_cell(config, seed_idx, N)
    except NumericalError as exc:
        return SweepRow(seed=seed_idx, N=N, error=str(exc))


def run_sweep_acl(config: ExperimentConfig) -> SweepResult:
    config.validate()
    cells = [(config, sd, N) for sd in range(config.seeds) for N in config.N_list]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_sweep_cell_guarded, cells))
    else:
        rows = [_sweep_cell_guarded(c) for c in cells]
    rows.sort(key=lambda r: (r.seed, r.N))

    valid = [r for r in rows if not r.error]
    status = "ok"
    slope = ci = nslope = nci = None
    try:
        if len({r.N for r in valid}) < 3:
            raise SlopeFitError("fewer than 3 valid N values")
        slope, _ = fit_power_law([r.N for r in valid], [r.increment for r in valid])
        ci = bootstrap_slope_ci(
            [(r.seed, r.N, r.increment) for r in valid], config.master_seed
        )
        nslope, _ = fit_power_law(
            [r.N for r in valid], [r.normalized_increment for r in valid]
        )
        nci = bootstrap_slope_ci(
            [(r.seed, r.N, r.normalized_increment) for r in valid], config.master_seed
        )
    except SlopeFitError as exc:
        status = str(exc)
    return SweepResult(
        rows=rows, fitted_slope=slope, slope_ci=ci,
        normalized_slope=nslope, normalized_ci=nci,
        fit_status=status, config=config,
    )


# ---------------------------------------------------------------------------
# Global growth tracking
# ---------------------------------------------------------------------------

@dataclass
class GrowthRecord:
    times: list[float]
    sup_norms: list[float]           # running sup of the s-level norm square
    raw_norms: list[float]           # instantaneous value at each checkpoint
    e_iu: list[float]
    bound_curve: list[float]
    N_used: float
    bound_constant: float
    bound_exponent: float
    delta_used: float
    config: ExperimentConfig


def growth_threshold(T: float, s: float) -> float:
    """The time-to-threshold rule N = ceil(T^(1/(6s-4)))."""
    if not (2.0 / 3.0 < s < 1.0):
        raise PreconditionError("growth threshold rule needs 2/3 < s < 1")
    return float(math.ceil(T ** (1.0 / (6.0 * s - 4.0))))


def _s_level_norm_sq(state: WaveState, s: float) -> float:
    """||u||_{H^s}^2 + ||(-Lap)^(-1/2) u_t||_{H^{s-1}}^2."""
    v = apply_multiplier(Multiplier.abs_power(state.grid, -1.0), state.ut)
    return sobolev_norm(state.u, s) ** 2 + sobolev_norm(v, s - 1.0) ** 2


def run_growth(config: ExperimentConfig) -> GrowthRecord:
    config.validate()
    grid = config.grid()
    s = config.s
    N = growth_threshold(config.T, s)
    spec = ISpec(N=N, s=s, shape=config.shape)
    rng = cell_rng(config.master_seed, 0)
    phi, psi = data_pair(grid, s, rng, amplitude=config.amplitude)
    state = WaveState.from_data(phi, psi)

    delta0 = (
        config.delta
        if config.delta > 0
        else local_delta(phi, psi, N, s, config.kappa, config.eps)
    )
    e0 = modified_energy(state, spec).total

    times = [0.0]
    raw = [_s_level_norm_sq(state, s)]
    sups = [raw[0]]
    e_series = [e0]
    t = 0.0
    delta = delta0
    while t < config.T - 1e-12:
        if not config.freeze_delta:
            psi_now = _antiderivative(state.ut)
            delta = local_delta(state.u, psi_now, N, s, config.kappa, config.eps)
        delta_step = min(delta, config.T - t)
        n = max(16, int(math.ceil(delta_step / config.dt)))
        if n > MAX_WINDOW_SAMPLES:
            raise PreconditionError(
                f"growth window needs {n} steps; increase dt or reduce T"
            )
        traj = evolve(state, delta_step, config.solver_config(delta_step / n))
        state = traj.states[-1]
        t = state.t
        times.append(t)
        raw.append(_s_level_norm_sq(state, s))
        sups.append(max(sups[-1], raw[-1]))
        e_now = modified_energy(state, spec).total
        e_series.append(e_now)
        if e0 > 0 and e_now > 2.0 * e0:
            raise EnergyDoublingError(
                f"truncated energy doubled on ({times[-2]:.6g}, {t:.6g}) "
                f"before the scheduled T = {config.T}",
                t_start=times[-2],
                t_fail=t,
            )

    exponent = (1.0 - s) / (6.0 * s - 4.0)
    anchor_t = min(1.0, times[-1])
    anchor = next(i for i, tv in enumerate(times) if tv >= anchor_t - 1e-12)
    constant = sups[anchor] / (1.0 + times[anchor]) ** exponent
    bound = [constant * (1.0 + tv) ** exponent for tv in times]
    return GrowthRecord(
        times=times, sup_norms=sups, raw_norms=raw, e_iu=e_series,
        bound_curve=bound, N_used=N, bound_constant=constant,
        bound_exponent=exponent, delta_used=delta0, config=config,
    )


def _antiderivative(ut: SpectralField) -> SpectralField:
    """psi with psi_x = ut (zero mode set to 0)."""
    xi = ut.grid.wavenumbers
    coeffs = np.zeros_like(ut.coeffs)
    nz = xi != 0
    coeffs[nz] = ut.coeffs[nz] / (1j * xi[nz])
    return SpectralField(ut.grid, coeffs)


# ---------------------------------------------------------------------------
# Contraction study
# ---------------------------------------------------------------------------

@dataclass
class ContractionRow:
    amplitude: float
    data_size: float            # ||I phi||_H1 + ||I psi||_L2
    delta_rule: float
    held_at_rule: bool
    delta_star: float           # largest contracting window found by bisection
    ratio_mean: float
    ratio_spread: float         # relative variance of the ratio history
    error: str = ""


@dataclass
class ContractionReport:
    rows: list[ContractionRow]
    monotone: bool
    config: ExperimentConfig


def _picard_holds(phi, psi, delta, solver_cfg, grid) -> tuple[bool, list[float]]:
    try:
        n_t = max(33, min(4097, recommended_time_samples(grid, delta, minimum=33)))
        traj = picard_solve(phi, psi, delta, solver_cfg, n_times=n_t)
    except NumericalError:
        return False, []
    ratios = traj.picard_ratios or []
    return all(r < 1.0 for r in ratios), ratios


def run_contraction(config: ExperimentConfig) -> ContractionReport:
    config.validate()
    grid = config.grid()
    N = config.N_list[0]
    rng = cell_rng(config.master_seed, 0)
    base_phi, base_psi = data_pair(grid, config.s, rng, amplitude=1.0)
    solver_cfg = config.solver_config()
    spec = ISpec(N=N, s=config.s) if config.s < 1 else ISpec(N=N, s=1.0)

    rows = []
    for k in range(4):
        amp = config.amplitude * 2.0 ** k
        phi = base_phi * amp
        psi = base_psi * amp
        size = sobolev_norm(apply_I(spec, phi), 1.0) + sobolev_norm(
            apply_I(spec, psi), 0.0
        )
        d_rule = local_delta(phi, psi, N, config.s, config.kappa, config.eps)
        held, ratios = _picard_holds(phi, psi, d_rule, solver_cfg, grid)
        # log-space bisection for the largest contracting window: the
        # admissible range spans decades across the size ladder
        lo, hi = (d_rule, 1.0) if held else (1e-12 * d_rule, d_rule)
        if held and d_rule >= 1.0:
            lo = 1.0
        else:
            for _ in range(8):
                mid = math.sqrt(lo * hi)
                ok, _ = _picard_holds(phi, psi, mid, solver_cfg, grid)
                if ok:
                    lo = mid
                else:
                    hi = mid
        r = np.array(ratios) if ratios else np.array([0.0])
        rows.append(
            ContractionRow(
                amplitude=amp, data_size=size, delta_rule=d_rule,
                held_at_rule=held, delta_star=lo,
                ratio_mean=float(np.mean(r)),
                ratio_spread=float(np.var(r) / np.mean(r) ** 2) if np.mean(r) > 0 else 0.0,
            )
        )
    stars = [r.delta_star for r in rows]
    monotone = all(b <= a * (1 + 1e-9) for a, b in zip(stars, stars[1:]))
    return ContractionReport(rows=rows, monotone=monotone, config=config)


# ---------------------------------------------------------------------------
# Space-time norm probes
# ---------------------------------------------------------------------------

@dataclass
class NormsRow:
    probe: str
    parameter: str
    seed: int
    value: float


@dataclass
class NormsReport:
    rows: list[NormsRow]
    summary: dict[str, dict[str, float]]
    config: ExperimentConfig


def run_norms(config: ExperimentConfig) -> NormsReport:
    config.validate()
    grid = config.grid()
    delta = config.delta if config.delta > 0 else 0.05
    n_t = window_samples(grid, delta)
    rows: list[NormsRow] = []

    for sd in range(config.seeds):
        rng = cell_rng(config.master_seed, sd, 1)
        phi, psi = data_pair(grid, 1.0, rng)
        flow = free_evolution(phi, psi, delta, n_t)
        for p in (4, 6):
            rows.append(NormsRow("strichartz", f"p={p}", sd, strichartz_ratio(flow, p)))
        rows.append(
            NormsRow("cubic_bound", f"s={config.s}", sd, cubic_bound_ratio(flow, config.s))
        )
        for s_probe in (0.0, 0.75, 1.0):
            rngs = cell_rng(config.master_seed, sd, 2)
            phi2, psi2 = data_pair(grid, s_probe, rngs)
            rows.append(
                NormsRow(
                    "linear_bound", f"s={s_probe}", sd,
                    linear_bound_ratio(phi2, psi2, s_probe, delta=delta, n_times=n_t),
                )
            )

    # dyadic product-gain sweep with localized packets and scaled windows
    for n2, corrected, raw in bilinear_gain_sweep((8, 16, 32, 64, 128)):
        rows.append(NormsRow("bilinear_gain", f"N2={n2:g}", 0, corrected))
        rows.append(NormsRow("bilinear_raw", f"N2={n2:g}", 0, raw))

    # half-derivative product probe on separated packet bands
    for n2 in (32, 64, 128):
        pack_grid = Grid1D(np.pi, int(4 * n2))
        d2 = np.pi / n2
        n_t2 = recommended_time_samples(pack_grid, d2, minimum=64)
        low = gaussian_packet(pack_grid, 5.0, 1.5, 2.0, 8.0)
        high = gaussian_packet(pack_grid, 1.5 * n2, n2 / 4.0, float(n2), 2.0 * n2)
        f_lo = free_evolution(low, SpectralField.zero(pack_grid), d2, n_t2)
        f_hi = free_evolution(high, SpectralField.zero(pack_grid), d2, n_t2)
        p_lo = band_projection(f_lo, 2.0, 8.0)
        p_hi = band_projection(f_hi, float(n2), 2.0 * n2)
        rows.append(
            NormsRow(
                "halfderiv_bilinear", f"N2={n2}", 0,
                halfderiv_bilinear_ratio(p_lo, p_hi),
            )
        )

    summary: dict[str, dict[str, float]] = {}
    for probe in sorted({r.probe for r in rows}):
        vals = np.array([r.value for r in rows if r.probe == probe])
        med = float(np.median(vals))
        summary[probe] = {
            "count": float(vals.size),
            "median": med,
            "max": float(np.max(vals)),
            "max_over_median": float(np.max(vals) / med) if med > 0 else float("inf"),
        }
    return NormsReport(rows=rows, summary=summary, config=config)


# ---------------------------------------------------------------------------
# Plain simulation
# ---------------------------------------------------------------------------

@dataclass
class SimulateResult:
    trajectory: Trajectory
    config: ExperimentConfig


def initial_state(config: ExperimentConfig) -> WaveState:
    if config.data_file:
        return load_state(config.data_file)
    grid = config.grid()
    rng = cell_rng(config.master_seed, 0)
    phi, psi = data_pair(grid, min(config.s, 1.0), rng, amplitude=config.amplitude)
    return WaveState.from_data(phi, psi)


def run_simulate(config: ExperimentConfig) -> SimulateResult:
    config.validate()
    state = initial_state(config)
    n = max(1, int(round(config.T / config.dt)))
    traj = evolve(state, n * config.dt, config.solver_config())
    return SimulateResult(trajectory=traj, config=config)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def _header_lines(config: ExperimentConfig) -> list[str]:
    lines = [f"bqlab {__version__}", f"regime: {config.regime}"]
    lines += [ln for ln in config.to_ini().splitlines() if ln.strip()]
    return lines


def write_csv(path: Path, header: list[str], columns: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def save_state(path: str | Path, state: WaveState) -> None:
    np.savez(
        path,
        length=state.grid.length,
        modes=state.grid.modes,
        padded=state.grid.padded_modes,
        t=state.t,
        u=state.u.coeffs,
        ut=state.ut.coeffs,
    )


def load_state(path: str | Path) -> WaveState:
    with np.load(path) as data:
        grid = Grid1D(float(data["length"]), int(data["modes"]), int(data["padded"]))
        return WaveState(
            SpectralField(grid, data["u"]),
            SpectralField(grid, data["ut"]),
            float(data["t"]),
        )


def emit(result, out_dir: str | Path, formats: list[str] | None = None) -> list[Path]:
    """Write a result object to CSV/JSON files with a config-echo header."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats = formats if formats is not None else result.config.formats
    header = _header_lines(result.config)
    written: list[Path] = []

    if isinstance(result, SweepResult):
        footer = [
            f"fit_status: {result.fit_status}",
            f"fitted_slope: {_fmt_opt(result.fitted_slope)}",
            f"slope_ci: {_fmt_pair(result.slope_ci)}",
            f"normalized_slope: {_fmt_opt(result.normalized_slope)}",
            f"normalized_ci: {_fmt_pair(result.normalized_ci)}",
        ]
        if "csv" in formats:
            path = out / "sweep.csv"
            write_csv(
                path, header + footer,
                ["seed", "N", "increment", "normalized_increment", "xsb_cubed",
                 "kinetic_xsb", "delta", "error"],
                [[r.seed, r.N, r.increment, r.normalized_increment, r.xsb_cubed,
                  r.kinetic_xsb, r.delta, r.error] for r in result.rows],
            )
            written.append(path)
        if "json" in formats:
            path = out / "sweep.json"
            write_json(path, {
                "version": __version__,
                "config": asdict(result.config),
                "rows": [asdict(r) for r in result.rows],
                "fitted_slope": result.fitted_slope,
                "slope_ci": result.slope_ci,
                "normalized_slope": result.normalized_slope,
                "normalized_ci": result.normalized_ci,
                "fit_status": result.fit_status,
            })
            written.append(path)
    elif isinstance(result, GrowthRecord):
        extra = [
            f"N_used: {_fmt(result.N_used)}",
            f"bound_constant: {_fmt(result.bound_constant)}",
            f"bound_exponent: {_fmt(result.bound_exponent)}",
            f"delta_used: {_fmt(result.delta_used)}",
        ]
        if "csv" in formats:
            path = out / "growth.csv"
            write_csv(
                path, header + extra,
                ["time", "sup_norm", "raw_norm", "e_iu"],
                [[t, s_, r_, e] for t, s_, r_, e in
                 zip(result.times, result.sup_norms, result.raw_norms, result.e_iu)],
            )
            written.append(path)
            path2 = out / "bound_curve.csv"
            write_csv(
                path2, header + extra, ["time", "bound"],
                [[t, b] for t, b in zip(result.times, result.bound_curve)],
            )
            written.append(path2)
        if "json" in formats:
            path = out / "growth.json"
            payload = asdict(result)
            payload["config"] = asdict(result.config)
            payload["version"] = __version__
            write_json(path, payload)
            written.append(path)
    elif isinstance(result, ContractionReport):
        if "csv" in formats:
            path = out / "contraction.csv"
            write_csv(
                path, header + [f"monotone: {result.monotone}"],
                ["amplitude", "data_size", "delta_rule", "held_at_rule",
                 "delta_star", "ratio_mean", "ratio_spread", "error"],
                [[r.amplitude, r.data_size, r.delta_rule, r.held_at_rule,
                  r.delta_star, r.ratio_mean, r.ratio_spread, r.error]
                 for r in result.rows],
            )
            written.append(path)
        if "json" in formats:
            path = out / "contraction.json"
            payload = asdict(result)
            payload["config"] = asdict(result.config)
            payload["version"] = __version__
            write_json(path, payload)
            written.append(path)
    elif isinstance(result, NormsReport):
        if "csv" in formats:
            path = out / "norms.csv"
            write_csv(
                path, header,
                ["probe", "parameter", "seed", "value"],
                [[r.probe, r.parameter, r.seed, r.value] for r in result.rows],
            )
            written.append(path)
        if "json" in formats:
            path = out / "norms.json"
            payload = asdict(result)
            payload["config"] = asdict(result.config)
            payload["version"] = __version__
            write_json(path, payload)
            written.append(path)
    elif isinstance(result, SimulateResult):
        traj = result.trajectory
        if "csv" in formats:
            path = out / "trajectory.csv"
            write_csv(
                path, header, ["time", "energy"],
                [[s.t, e] for s, e in zip(traj.states, traj.energies)],
            )
            written.append(path)
        state_path = out / "final_state.npz"
        save_state(state_path, traj.states[-1])
        written.append(state_path)
    else:
        raise PreconditionError(f"emit does not know how to persist {type(result)!r}")
    return written


def _fmt_opt(x) -> str:
    return "none" if x is None else _fmt(float(x))


def _fmt_pair(pair) -> str:
    if pair is None:
        return "none"
    return f"[{_fmt(float(pair[0]))}, {_fmt(float(pair[1]))}]"
