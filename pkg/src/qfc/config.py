"""Strict TOML scenarios.

Keys carry their unit as a suffix (``length_mm``, ``duration_ps``,
``linewidth_ghz`` ...) and are converted to SI on load.  Unknown sections
or keys are errors, so a misspelt unit never passes silently.  Frequency
keys in GHz are ordinary (cyclic) frequencies; jitter widths are standard
deviations.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dispersion import ZERO_CELSIUS, CrystalConfig, Geometry, load_material
from .fields import JitterModel, QdPhotonSpec, frequency_jitter_for_purity
from .optimize import Setup

GHZ = 2 * np.pi * 1e9  # rad/s per GHz


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialSection:
    name: str = "mgo_ln_gayer2008"
    temperature_c: float = 25.0
    axis: str = "e"


@dataclass(frozen=True)
class CrystalSection:
    length_mm: float = 15.0
    qpm_order: int = 1
    geometry: str = "counter_propagating"
    poling_period_nm: float | None = None
    d_eff_pm_per_v: float | None = None
    effective_area_um2: float = 13.0 * 13.4
    coupling_calibration: float = 1.0


@dataclass(frozen=True)
class ProcessSection:
    input_wavelength_nm: float = 942.0
    output_wavelength_nm: float = 1550.0


@dataclass(frozen=True)
class PumpSection:
    duration_ps: float = 13.0
    duration_convention: str = "field"
    peak_power_w: float = 60.0
    repetition_rate_mhz: float = 80.0


@dataclass(frozen=True)
class PhotonSection:
    linewidth_ghz: float = 1.0
    emission_time_offset_ps: float = 0.0
    frequency_offset_ghz: float = 0.0


@dataclass(frozen=True)
class JitterSection:
    """Either explicit widths or ``target_purity`` (frequency jitter only), not both."""

    sigma_frequency_ghz: float | None = None
    sigma_time_ps: float | None = None
    target_purity: float | None = None


@dataclass(frozen=True)
class GridSection:
    points_i: int = 512
    points_o: int = 512
    range_factor: float = 5.0
    max_modes: int = 32
    convergence_tol: float = 1e-4


@dataclass(frozen=True)
class SweepSection:
    lengths_mm: list = field(default_factory=lambda: [10.0, 15.0, 20.0, 25.0])
    duration_range_ps: list = field(default_factory=lambda: [2.0, 50.0])
    duration_points: int = 40
    duration_bracket_ps: list = field(default_factory=lambda: [1.0, 50.0])
    power_bracket_w: list = field(default_factory=lambda: [0.0, 500.0])
    power_range_w: list = field(default_factory=lambda: [0.0, 150.0])
    power_points: int = 61
    noise_frequency_range_ghz: list = field(default_factory=lambda: [0.0, 1.5])
    noise_time_range_ps: list = field(default_factory=lambda: [0.0, 300.0])
    noise_points: int = 11
    noise_durations_ps: list = field(default_factory=lambda: [6.0, 13.0, 26.0])
    mode_test_purities: list = field(default_factory=lambda: [1.0, 0.95, 0.9, 0.85, 0.8, 0.76])
    qpm_orders: list = field(default_factory=lambda: [1, 3])
    reference_power_w: float = 60.0
    co_duration_bracket_ps: list = field(default_factory=lambda: [0.13, 0.9])
    filter_fwhm_ghz: float = 1.0
    filter_shape: str = "lorentzian"


SECTIONS = {
    "material": MaterialSection,
    "crystal": CrystalSection,
    "process": ProcessSection,
    "pump": PumpSection,
    "photon": PhotonSection,
    "jitter": JitterSection,
    "grid": GridSection,
    "sweep": SweepSection,
}


@dataclass(frozen=True)
class Scenario:
    material: MaterialSection
    crystal: CrystalSection
    process: ProcessSection
    pump: PumpSection
    photon: PhotonSection
    jitter: JitterSection
    grid: GridSection
    sweep: SweepSection
    source_text: str = field(default="", repr=False, compare=False)

    def to_setup(self) -> Setup:
        m = load_material(self.material.name, temperature=ZERO_CELSIUS + self.material.temperature_c,
                          axis=self.material.axis)
        cr = self.crystal
        crystal = CrystalConfig(
            material=m,
            length=cr.length_mm * 1e-3,
            poling_period=None if cr.poling_period_nm is None else cr.poling_period_nm * 1e-9,
            qpm_order=cr.qpm_order,
            geometry=Geometry(cr.geometry),
            d_eff=None if cr.d_eff_pm_per_v is None else cr.d_eff_pm_per_v * 1e-12,
            effective_area=cr.effective_area_um2 * 1e-12,
            coupling_calibration=cr.coupling_calibration,
        )
        lam_i = self.process.input_wavelength_nm * 1e-9
        lam_o = self.process.output_wavelength_nm * 1e-9
        ph = self.photon
        photon = QdPhotonSpec(lam_i, ph.linewidth_ghz * 1e9, ph.emission_time_offset_ps * 1e-12,
                              ph.frequency_offset_ghz * GHZ)
        return Setup.create(
            crystal, lam_i, lam_o,
            duration=self.pump.duration_ps * 1e-12,
            peak_power=self.pump.peak_power_w,
            repetition_rate=self.pump.repetition_rate_mhz * 1e6,
            duration_convention=self.pump.duration_convention,
            photon=photon,
            jitter=self.jitter_model(photon),
            grid_points=(self.grid.points_i, self.grid.points_o),
            range_factor=self.grid.range_factor,
            max_modes=self.grid.max_modes,
        )

    def jitter_model(self, photon: QdPhotonSpec) -> JitterModel:
        j = self.jitter
        if j.target_purity is not None:
            return JitterModel(frequency_jitter_for_purity(photon, j.target_purity), 0.0)
        return JitterModel((j.sigma_frequency_ghz or 0.0) * GHZ, (j.sigma_time_ps or 0.0) * 1e-12)

    def to_dict(self) -> dict:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}


def _build_section(cls, table, name):
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}; allowed: {', '.join(known)}")
    for key, value in table.items():
        default = getattr(cls(), key)
        if default is None and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigError(f"[{name}] {key} must be a number")
        if isinstance(default, list) and not isinstance(value, list):
            raise ConfigError(f"[{name}] {key} must be a list")
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"[{name}] {key} must be a number")
        if isinstance(default, str) and not isinstance(value, str):
            raise ConfigError(f"[{name}] {key} must be a string")
    return cls(**table)


def _check(scn: Scenario) -> None:
    def positive(value, what):
        if value is None or not value > 0:
            raise ConfigError(f"{what} must be positive")

    def interval(values, what, allow_zero=True):
        if len(values) != 2 or not values[0] < values[1] or (values[0] < 0 if allow_zero else values[0] <= 0):
            raise ConfigError(f"{what} must be [min, max] with {'0 <= ' if allow_zero else '0 < '}min < max")

    positive(scn.crystal.length_mm, "crystal.length_mm")
    positive(scn.crystal.effective_area_um2, "crystal.effective_area_um2")
    positive(scn.crystal.coupling_calibration, "crystal.coupling_calibration")
    if scn.crystal.qpm_order < 1 or int(scn.crystal.qpm_order) != scn.crystal.qpm_order:
        raise ConfigError("crystal.qpm_order must be a positive integer")
    try:
        Geometry(scn.crystal.geometry)
    except ValueError:
        raise ConfigError(f"crystal.geometry must be one of {[g.value for g in Geometry]}") from None
    if scn.pump.duration_convention not in ("field", "intensity"):
        raise ConfigError("pump.duration_convention must be 'field' or 'intensity'")
    pr = scn.process
    positive(pr.input_wavelength_nm, "process.input_wavelength_nm")
    if not pr.output_wavelength_nm > pr.input_wavelength_nm:
        raise ConfigError("process.output_wavelength_nm must exceed input_wavelength_nm (difference-frequency "
                          "generation needs a positive pump frequency)")
    positive(scn.pump.duration_ps, "pump.duration_ps")
    if scn.pump.peak_power_w < 0:
        raise ConfigError("pump.peak_power_w must be non-negative")
    positive(scn.photon.linewidth_ghz, "photon.linewidth_ghz")
    j = scn.jitter
    if j.target_purity is not None and (j.sigma_frequency_ghz is not None or j.sigma_time_ps is not None):
        raise ConfigError("[jitter] takes either target_purity or explicit widths, not both")
    if j.target_purity is not None and not 0 < j.target_purity <= 1:
        raise ConfigError("jitter.target_purity must lie in (0, 1]")
    for v, what in ((j.sigma_frequency_ghz, "sigma_frequency_ghz"), (j.sigma_time_ps, "sigma_time_ps")):
        if v is not None and v < 0:
            raise ConfigError(f"jitter.{what} must be non-negative")
    if min(scn.grid.points_i, scn.grid.points_o) < 64:
        raise ConfigError("grid points must be at least 64 per axis")
    if scn.grid.max_modes < 5:
        raise ConfigError("grid.max_modes must be at least 5")
    sw = scn.sweep
    interval(sw.duration_range_ps, "sweep.duration_range_ps", allow_zero=False)
    interval(sw.duration_bracket_ps, "sweep.duration_bracket_ps", allow_zero=False)
    interval(sw.power_bracket_w, "sweep.power_bracket_w")
    interval(sw.power_range_w, "sweep.power_range_w")
    interval(sw.noise_frequency_range_ghz, "sweep.noise_frequency_range_ghz")
    interval(sw.noise_time_range_ps, "sweep.noise_time_range_ps")
    interval(sw.co_duration_bracket_ps, "sweep.co_duration_bracket_ps", allow_zero=False)
    for n, what in ((sw.duration_points, "duration_points"), (sw.power_points, "power_points"),
                    (sw.noise_points, "noise_points")):
        if n < 2:
            raise ConfigError(f"sweep.{what} must be at least 2")
    for lst, what in ((sw.lengths_mm, "lengths_mm"), (sw.noise_durations_ps, "noise_durations_ps"),
                      (sw.qpm_orders, "qpm_orders"), (sw.mode_test_purities, "mode_test_purities")):
        if not lst:
            raise ConfigError(f"sweep.{what} must not be empty")
    if any(not 0 < p <= 1 for p in sw.mode_test_purities):
        raise ConfigError("sweep.mode_test_purities must lie in (0, 1]")
    if sw.filter_shape not in ("lorentzian", "gaussian"):
        raise ConfigError("sweep.filter_shape must be 'lorentzian' or 'gaussian'")


def parse_scenario(text: str) -> Scenario:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    missing = sorted(set(SECTIONS) - set(raw))
    if missing:
        raise ConfigError(f"missing section(s): {', '.join(missing)}")
    try:
        sections = {name: _build_section(cls, raw[name], name) for name, cls in SECTIONS.items()}
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    scn = Scenario(**sections, source_text=text)
    _check(scn)
    return scn


def load_scenario(path: str | Path | None = None) -> Scenario:
    """Read a scenario file; ``None`` loads the bundled reference scenario."""
    if path is None:
        text = resources.files("qfc.data").joinpath("paper.toml").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text)
