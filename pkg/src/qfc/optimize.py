"""Scalar searches and sweep drivers over the conversion pipeline.

Everything revolves around :class:`Setup`, an immutable snapshot of the
crystal, pump, input photon and numerical resolution.  ``evaluate`` runs
the full pipeline once; sweeps map it over a list of setups with a thread
pool and keep the input order.
"""

from __future__ import annotations

import csv
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

import numpy as np
from scipy.constants import c
from scipy.optimize import bisect, minimize_scalar

from .conversion import (ConversionReport, CouplingBudget, TransferOperator, build_transfer_operator, convert_state, coupling_constant,
                         mode_efficiencies)
from .dispersion import CrystalConfig, Geometry, solve_poling_period
from .fields import (JitterModel, PhotonState, PumpPulse, QdPhotonSpec, TruncationError, build_mixed_state,
                     photon_axis)
from .jsd import Jsd, auto_grid, build_jsd, output_bandwidth
from .schmidt import SchmidtData, decompose


class BracketError(ValueError):
    """The search bracket does not contain the requested minimum or root."""


@dataclass(frozen=True)
class Setup:
    """One operating point of the converter plus its numerical resolution.

    The input band centre is the photon carrier; the pump carrier is
    ``omega_i - omega_o``.  ``photon_refinement`` multiplies the number of
    intervals on the automatically sized photon axis.
    """

    crystal: CrystalConfig
    pump: PumpPulse
    photon: QdPhotonSpec
    output_wavelength: float
    jitter: JitterModel = field(default_factory=JitterModel)
    grid_points: tuple[int, int] = (512, 512)
    range_factor: float = 5.0
    max_modes: int = 32
    photon_refinement: int = 1

    def __post_init__(self):
        object.__setattr__(self, "grid_points", tuple(int(p) for p in self.grid_points))
        if self.crystal.poling_period is None:
            period = solve_poling_period(self.crystal, self.photon.center_wavelength, self.output_wavelength)
            object.__setattr__(self, "crystal", replace(self.crystal, poling_period=period))
        omega_p = self.omega_i - self.omega_o
        if abs(self.pump.center_frequency - omega_p) > 1e-9 * omega_p:
            raise ValueError("pump carrier must equal omega_i - omega_o")

    @classmethod
    def create(cls, crystal: CrystalConfig, input_wavelength: float, output_wavelength: float,
               duration: float, peak_power: float, repetition_rate: float = 80e6,
               duration_convention: str = "field", photon: QdPhotonSpec | None = None, **kwargs) -> "Setup":
        pump_wavelength = 1.0 / (1.0 / input_wavelength - 1.0 / output_wavelength)
        pump = PumpPulse(pump_wavelength, duration, peak_power, repetition_rate, duration_convention)
        photon = photon or QdPhotonSpec(input_wavelength)
        return cls(crystal, pump, photon, output_wavelength, **kwargs)

    @property
    def omega_i(self) -> float:
        return self.photon.center_frequency

    @property
    def omega_o(self) -> float:
        return 2 * np.pi * c / self.output_wavelength

    def with_power(self, power: float) -> "Setup":
        return replace(self, pump=replace(self.pump, peak_power=float(power)))

    def with_duration(self, duration: float) -> "Setup":
        return replace(self, pump=replace(self.pump, duration_fwhm=float(duration)))

    def with_jitter(self, sigma_frequency: float | None = None, sigma_time: float | None = None) -> "Setup":
        j = self.jitter
        return replace(self, jitter=JitterModel(
            j.sigma_frequency if sigma_frequency is None else float(sigma_frequency),
            j.sigma_time if sigma_time is None else float(sigma_time)))

    def with_length(self, length: float) -> "Setup":
        return replace(self, crystal=replace(self.crystal, length=float(length)))

    def with_qpm_order(self, order: int) -> "Setup":
        """Order m with the period re-solved; an explicit d_eff is rescaled by m_old/m."""
        old = self.crystal
        d_eff = None if old.d_eff is None else old.d_eff * old.qpm_order / order
        crystal = replace(old, qpm_order=int(order), poling_period=None, d_eff=d_eff)
        return replace(self, crystal=crystal)

    def with_geometry(self, geometry: Geometry) -> "Setup":
        return replace(self, crystal=replace(self.crystal, geometry=Geometry(geometry), poling_period=None))

    def refined(self, factor: int = 2) -> "Setup":
        """Same ranges at ``factor`` x the resolution on every axis."""
        ni, no = self.grid_points
        return replace(self, grid_points=((ni - 1) * factor + 1, (no - 1) * factor + 1),
                       photon_refinement=self.photon_refinement * factor)


# --- pipeline pieces ---------------------------------------------------------

def build_setup_jsd(setup: Setup, check_edges: bool = True) -> Jsd:
    grid = auto_grid(setup.crystal, setup.pump, setup.omega_i, setup.omega_o, setup.grid_points,
                     setup.range_factor)
    return build_jsd(setup.crystal, setup.pump, grid, check_edges=check_edges)


@functools.lru_cache(maxsize=64)
def _cached_modes(crystal: CrystalConfig, pump: PumpPulse, photon_center: float, output_wavelength: float,
                  grid_points, range_factor, max_modes, check_edges) -> tuple[SchmidtData, float, float]:
    omega_o = 2 * np.pi * c / output_wavelength
    grid = auto_grid(crystal, pump, photon_center, omega_o, grid_points, range_factor)
    jsd = build_jsd(crystal, pump, grid, check_edges=check_edges)
    modes = decompose(jsd, max_modes)
    return modes, jsd.normalization, output_bandwidth(crystal, pump, grid).fwhm_hz


def schmidt_modes(setup: Setup, check_edges: bool = True) -> tuple[SchmidtData, float, float]:
    """(Schmidt data, JSD normalization, output bandwidth in Hz); cached, independent of pump power."""
    unit_pump = replace(setup.pump, peak_power=1.0)
    return _cached_modes(setup.crystal, unit_pump, setup.omega_i, setup.output_wavelength,
                         setup.grid_points, setup.range_factor, setup.max_modes, check_edges)


def coupling_budget(setup: Setup) -> CouplingBudget:
    modes, norm, _ = schmidt_modes(setup)
    return coupling_constant(setup.crystal, setup.pump, norm, setup.omega_i, setup.omega_o, modes.coefficients)


def input_state(setup: Setup) -> PhotonState:
    axis = photon_axis(setup.photon, setup.jitter)
    if setup.photon_refinement > 1:
        axis = np.linspace(axis[0], axis[-1], (axis.size - 1) * setup.photon_refinement + 1)
    return build_mixed_state(setup.photon, setup.jitter, axis)


def schmidt_number_for(setup: Setup) -> float:
    return schmidt_modes(setup)[0].schmidt_number


# --- sweep rows --------------------------------------------------------------

COLUMNS = ("variable_value", "K_JSD", "eta0_normalized", "eta0", "eta1", "eta2", "eta3", "eta4",
           "input_purity", "output_purity", "transmission", "output_bandwidth", "flagged")


class SweepRow(NamedTuple):
    variable_value: float
    K_JSD: float
    eta0_normalized: float
    eta0: float
    eta1: float
    eta2: float
    eta3: float
    eta4: float
    input_purity: float
    output_purity: float
    transmission: float
    output_bandwidth: float  # Hz, FWHM of the JSD output marginal
    flagged: bool


class PipelineResult(NamedTuple):
    report: ConversionReport
    modes: SchmidtData
    budget: CouplingBudget
    input: PhotonState
    output_bandwidth: float  # Hz
    flagged: bool


def run_pipeline(setup: Setup, strict: bool = False) -> PipelineResult:
    """JSD, Schmidt modes, input state and conversion for one setup.

    With ``strict=False`` grid truncation (JSD or photon) does not raise:
    the piece is recomputed without the edge check and the result is
    flagged.  A photon extending beyond the JSD input axis is flagged too.
    At zero pump power the converted state is reported in its small-signal
    limit (sin(theta_j) -> theta_j), with zero transmission and efficiencies.
    """
    flagged = False
    try:
        modes, norm, bandwidth = schmidt_modes(setup)
    except TruncationError:
        if strict:
            raise
        flagged = True
        modes, norm, bandwidth = schmidt_modes(setup, check_edges=False)
    try:
        state = input_state(setup)
    except TruncationError:
        if strict:
            raise
        flagged = True
        axis = photon_axis(setup.photon, setup.jitter, span=12.0, max_points=8192)
        state = build_mixed_state(setup.photon, setup.jitter, axis, edge_tol=np.inf)
    if state.axis[0] < modes.omega_i[0] or state.axis[-1] > modes.omega_i[-1]:
        flagged = True
    budget = coupling_constant(setup.crystal, setup.pump, norm, setup.omega_i, setup.omega_o, modes.coefficients)
    if budget.theta == 0:
        report = convert_state(state, TransferOperator(modes, modes.coefficients.copy()))
        report = replace(report, eta_unnormalized=np.zeros(modes.n_modes), transmission=0.0)
    else:
        report = convert_state(state, build_transfer_operator(modes, budget))
    return PipelineResult(report, modes, budget, state, bandwidth, flagged)


def evaluate(setup: Setup, variable_value: float = float("nan")) -> SweepRow:
    """One sweep row for ``setup`` (see :func:`run_pipeline` for flagging)."""
    res = run_pipeline(setup)
    r = res.report
    eta = mode_efficiencies(res.budget)
    return SweepRow(float(variable_value), res.modes.schmidt_number, r.eta0_normalized, *map(float, eta[:5]),
                    r.input_purity, r.output_purity, r.transmission, res.output_bandwidth, res.flagged)


def run_parallel(fn: Callable, items: Iterable, threads: int = 1) -> list:
    """Ordered map over ``items``; ``threads`` > 1 uses a thread pool."""
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


VARIABLES = ("peak_power", "pulse_duration", "sigma_frequency", "sigma_time", "length_L", "qpm_order")


@dataclass(frozen=True)
class SweepSpec:
    """One-variable sweep; values in SI units (sigma_frequency in rad/s)."""

    variable: str
    start: float
    stop: float
    points: int
    fixed: Setup
    scale: str = "linear"

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; expected one of {VARIABLES}")
        if not self.start < self.stop:
            raise ValueError("sweep range is empty: start must be below stop")
        if self.points < 2:
            raise ValueError("a sweep needs at least 2 points")
        if self.scale not in ("linear", "log"):
            raise ValueError("scale must be 'linear' or 'log'")
        if self.scale == "log" and self.start <= 0:
            raise ValueError("log sweeps need a positive start")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        if self.variable == "qpm_order":
            return np.unique(np.round(np.linspace(self.start, self.stop, self.points)))
        return np.linspace(self.start, self.stop, self.points)

    def setup_at(self, value: float) -> Setup:
        s = self.fixed
        return {
            "peak_power": lambda: s.with_power(value),
            "pulse_duration": lambda: s.with_duration(value),
            "sigma_frequency": lambda: s.with_jitter(sigma_frequency=value),
            "sigma_time": lambda: s.with_jitter(sigma_time=value),
            "length_L": lambda: s.with_length(value),
            "qpm_order": lambda: s.with_qpm_order(int(value)),
        }[self.variable]()


@dataclass(frozen=True)
class SweepResult:
    variable: str
    rows: tuple[SweepRow, ...]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# variable={self.variable}\n")
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow([repr(float(v)) if k != "flagged" else int(v) for k, v in zip(COLUMNS, r)])

    @classmethod
    def read_csv(cls, path: str | Path) -> "SweepResult":
        with open(path, newline="") as fh:
            variable = fh.readline().strip().split("=", 1)[1]
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != COLUMNS:
                raise ValueError(f"{path}: unexpected columns {header}")
            rows = tuple(SweepRow(*(float(x) for x in line[:-1]), bool(int(line[-1]))) for line in reader)
        return cls(variable, rows)


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    values = spec.values()
    rows = run_parallel(lambda v: evaluate(spec.setup_at(v), v), values, threads)
    return SweepResult(spec.variable, tuple(rows))


# --- scalar searches ---------------------------------------------------------

def optimal_pulse_duration(setup: Setup, duration_bracket: tuple[float, float] = (1e-12, 50e-12),
                           rel_tol: float = 1e-3) -> tuple[float, float]:
    """Pump duration (in the pump's convention) minimizing K_JSD, and that minimum.

    Bounded Brent search (golden section with parabolic steps) in log
    duration.  Raises BracketError when the minimum sits on a bracket end.
    """
    lo, hi = duration_bracket
    if not 0 < lo < hi:
        raise BracketError("duration bracket must satisfy 0 < lo < hi")

    def k_of(log_tau):
        return schmidt_number_for(setup.with_duration(float(np.exp(log_tau))))

    res = minimize_scalar(k_of, bounds=(np.log(lo), np.log(hi)), method="bounded",
                          options={"xatol": rel_tol})
    tau = float(np.exp(res.x))
    edge = 3 * rel_tol
    if res.x - np.log(lo) < edge or np.log(hi) - res.x < edge:
        raise BracketError(f"K has no interior minimum in [{lo:.3g}, {hi:.3g}] s (best at {tau:.3g} s)")
    k_min = float(res.fun)
    if k_min > min(k_of(np.log(lo)), k_of(np.log(hi))):
        raise BracketError("bracket ends have lower K than the interior search result")
    return tau, k_min


def power_for_unit_eta0(setup: Setup, power_bracket: tuple[float, float] = (0.0, 500.0),
                        xtol: float = 1e-13) -> float:
    """Peak power at which the zeroth mode first converts completely (theta_0 = pi/2).

    Bisection on theta_0(P) - pi/2 down to ``xtol`` watts (or machine
    precision relative to the root).
    """
    lo, hi = power_bracket
    if not 0 <= lo < hi:
        raise BracketError("power bracket must satisfy 0 <= lo < hi")
    modes, norm, _ = schmidt_modes(setup)
    d0 = modes.coefficients[0]

    def f(p):
        b = coupling_constant(setup.crystal, setup.with_power(p).pump, norm, setup.omega_i, setup.omega_o, [d0])
        return b.per_mode_theta[0] - np.pi / 2

    if np.sign(f(lo)) == np.sign(f(hi)):
        raise BracketError(f"theta_0 does not cross pi/2 for peak powers in [{lo}, {hi}] W")
    return float(bisect(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


# --- figure drivers ----------------------------------------------------------

def purity_noise_sweep(spec: SweepSpec, pump_durations, power_bracket=(0.0, 500.0),
                       threads: int = 1) -> dict[float, SweepResult]:
    """Noise sweep per pump duration, each at its own unit-eta0 power."""
    if spec.variable not in ("sigma_frequency", "sigma_time"):
        raise ValueError("purity_noise_sweep sweeps sigma_frequency or sigma_time")
    out = {}
    for tau in pump_durations:
        base = spec.fixed.with_duration(tau)
        base = base.with_power(power_for_unit_eta0(base, power_bracket))
        out[float(tau)] = run_sweep(replace(spec, fixed=base), threads)
    return out


def efficiency_purity_tradeoff(setup: Setup, powers, threads: int = 1) -> SweepResult:
    powers = np.asarray(powers, dtype=float)
    rows = run_parallel(lambda p: evaluate(setup.with_power(p), p), powers, threads)
    return SweepResult("peak_power", tuple(rows))


class GeometryComparison(NamedTuple):
    bandwidth_co: float  # Hz
    bandwidth_counter: float  # Hz
    duration_co: float
    duration_counter: float
    k_co: float
    k_counter: float
    period_co: float
    period_counter: float
    feasible: bool

    @property
    def bandwidth_ratio(self) -> float:
        return self.bandwidth_co / self.bandwidth_counter


def geometry_comparison(counter: Setup, co: Setup | None = None,
                        counter_bracket=(1e-12, 50e-12), co_bracket=(0.13e-12, 0.9e-12),
                        k_tol: float = 0.01) -> GeometryComparison:
    """Output bandwidths of both geometries at matched Schmidt number.

    The counter-propagating pump runs at its optimal duration.  The
    co-propagating duration is the one whose K equals that value, taken on
    the long-duration side of the co-propagating minimum.  When even the
    best co-propagating K in ``co_bracket`` misses the target by more than
    ``k_tol`` the result is marked infeasible and reports that best point.
    The default co-propagating bracket stops where the pump spectrum would
    leave the Sellmeier validity range.
    """
    if counter.crystal.geometry is not Geometry.COUNTER_PROPAGATING:
        raise ValueError("first setup must be counter-propagating")
    co = co or counter.with_geometry(Geometry.CO_PROPAGATING)
    tau_c, k_c = optimal_pulse_duration(counter, counter_bracket)
    counter = counter.with_duration(tau_c)
    bw_c = schmidt_modes(counter)[2]

    def k_co(log_tau):
        return schmidt_number_for(co.with_duration(float(np.exp(log_tau))))

    lo, hi = np.log(co_bracket[0]), np.log(co_bracket[1])
    res = minimize_scalar(k_co, bounds=(lo, hi), method="bounded", options={"xatol": 1e-3})
    best = min([(float(res.fun), float(res.x)), (k_co(lo), lo)])
    k_min, log_tau_min = best
    if k_min > k_c + k_tol:
        tau, feasible = float(np.exp(log_tau_min)), False
    elif k_min >= k_c:
        tau, feasible = float(np.exp(log_tau_min)), True
    else:
        if k_co(hi) < k_c:
            raise BracketError("co-propagating K stays below the target up to the bracket end")
        tau = float(np.exp(bisect(lambda x: k_co(x) - k_c, log_tau_min, hi, xtol=1e-6)))
        feasible = True
    co = co.with_duration(tau)
    modes_co, _, bw_co = schmidt_modes(co)
    return GeometryComparison(bw_co, bw_c, tau, tau_c, modes_co.schmidt_number, k_c,
                              co.crystal.poling_period, counter.crystal.poling_period, feasible)


class QpmRow(NamedTuple):
    order: int
    period: float
    eta0: float
    eta0_normalized: float
    output_purity: float


def qpm_order_tradeoff(setup: Setup, orders, reference_power: float = 60.0, threads: int = 1) -> list[QpmRow]:
    """Zeroth-mode efficiency and purity at a fixed power for each QPM order."""
    if any(int(m) < 1 for m in orders):
        raise ValueError("QPM orders must be >= 1")

    def one(m):
        s = setup.with_qpm_order(int(m)).with_power(reference_power)
        row = evaluate(s, m)
        return QpmRow(int(m), s.crystal.poling_period, row.eta0, row.eta0_normalized, row.output_purity)

    return run_parallel(one, orders, threads)


class ConvergenceReport(NamedTuple):
    base: SweepRow
    refined: SweepRow
    max_change: float
    passed: bool


def convergence_check(setup: Setup, tol: float = 1e-4, factor: int = 2) -> ConvergenceReport:
    """Compare K, eta0_normalized, eta0 and output purity against a ``factor`` x finer resolution."""
    a = evaluate(setup)
    b = evaluate(setup.refined(factor))
    keys = ("K_JSD", "eta0_normalized", "eta0", "output_purity", "input_purity")
    change = max(abs(getattr(a, k) - getattr(b, k)) for k in keys)
    return ConvergenceReport(a, b, float(change), bool(change < tol))
