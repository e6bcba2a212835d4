"""Bulk dispersion of periodically poled lithium niobate.

Refractive index, wavevector and group velocity come from a temperature
dependent Sellmeier model shipped as JSON under ``qfc/data``.  All public
functions take SI units (metres, rad/s, kelvin) and accept numpy arrays.

Phase mismatch convention for difference-frequency generation with
``omega_p = omega_i - omega_o``::

    counter-propagating:  dk = k_i - k_p + k_o - 2*pi*m/period
    co-propagating:       dk = k_i - k_p - k_o - 2*pi*m/period
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

ZERO_CELSIUS = 273.15
DEFAULT_FD_STEP = 2 * np.pi * 1e9  # rad/s


class DispersionDomainError(ValueError):
    """Wavelength or frequency outside the material model's validity range."""


class InfeasibleConfigurationError(ValueError):
    """No poling period can phase-match the requested process."""


class Geometry(str, enum.Enum):
    CO_PROPAGATING = "co_propagating"
    COUNTER_PROPAGATING = "counter_propagating"


@dataclass(frozen=True)
class MaterialModel:
    """Sellmeier description of one crystal at one temperature.

    ``coefficients`` maps a polarization axis ("e", "o") to ``{"a": [6],
    "b": [4]}`` in the Gayer/Jundt form; wavelengths in the formula are in
    microns.
    """

    name: str
    coefficients: dict = field(compare=False, repr=False)
    temperature: float = ZERO_CELSIUS + 25.0
    valid_wavelength_range: tuple[float, float] = (0.5e-6, 4.0e-6)
    d33: float = 25e-12
    axis: str = "e"
    source: str = ""

    def __post_init__(self):
        lo, hi = self.valid_wavelength_range
        if not 0 < lo < hi:
            raise ValueError(f"bad valid_wavelength_range {self.valid_wavelength_range}")
        if self.axis not in self.coefficients:
            raise ValueError(f"material {self.name!r} has no coefficients for axis {self.axis!r}")

    def at_temperature(self, kelvin: float) -> "MaterialModel":
        return replace(self, temperature=float(kelvin))


def load_material(name_or_path: str | Path = "mgo_ln_gayer2008", *, temperature: float | None = None,
                  axis: str = "e") -> MaterialModel:
    """Load a bundled coefficient table by name, or any JSON file following the same schema."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
    else:
        text = resources.files("qfc.data").joinpath(f"{name_or_path}.json").read_text()
    raw = json.loads(text)
    lo_um, hi_um = raw["valid_wavelength_um"]
    return MaterialModel(
        name=raw["name"],
        coefficients=raw["axes"],
        temperature=ZERO_CELSIUS + 25.0 if temperature is None else float(temperature),
        valid_wavelength_range=(lo_um * 1e-6, hi_um * 1e-6),
        d33=raw.get("d33_pm_per_v", 25.0) * 1e-12,
        axis=axis,
        source=raw.get("source", ""),
    )


def _check_wavelength(material: MaterialModel, wavelength):
    lo, hi = material.valid_wavelength_range
    wl = np.asarray(wavelength, dtype=float)
    # inclusive bounds, with a relative slack for float round trips through omega
    if np.any(~np.isfinite(wl)) or np.any(wl < lo * (1 - 1e-12)) or np.any(wl > hi * (1 + 1e-12)):
        bad = wl[(wl < lo) | (wl > hi) | ~np.isfinite(wl)] if wl.ndim else wl
        raise DispersionDomainError(
            f"wavelength {np.ravel(bad)[0]:.6g} m outside valid range "
            f"[{lo:.4g}, {hi:.4g}] m of material {material.name!r}")
    return wl


def _index_squared(material: MaterialModel, wl_um):
    a1, a2, a3, a4, a5, a6 = material.coefficients[material.axis]["a"]
    b1, b2, b3, b4 = material.coefficients[material.axis]["b"]
    t = material.temperature - ZERO_CELSIUS
    f = (t - 24.5) * (t + 570.82)
    lam2 = wl_um**2
    return (a1 + b1 * f
            + (a2 + b2 * f) / (lam2 - (a3 + b3 * f) ** 2)
            + (a4 + b4 * f) / (lam2 - a5**2)
            - a6 * lam2)


def refractive_index(material: MaterialModel, wavelength):
    """Refractive index n(lambda, T) on the configured polarization axis."""
    wl = _check_wavelength(material, wavelength)
    return np.sqrt(_index_squared(material, wl * 1e6))


def _omega_to_wavelength(angular_frequency):
    w = np.asarray(angular_frequency, dtype=float)
    if np.any(w <= 0):
        raise DispersionDomainError("angular frequency must be positive (wavelength is infinite at omega = 0)")
    return 2 * np.pi * c / w


def wavevector(material: MaterialModel, angular_frequency):
    """k(omega) = n(omega) * omega / c in rad/m."""
    w = np.asarray(angular_frequency, dtype=float)
    n = refractive_index(material, _omega_to_wavelength(w))
    return n * w / c


def group_velocity(material: MaterialModel, angular_frequency, step: float = DEFAULT_FD_STEP):
    """Group velocity (dk/domega)^-1 from a central difference of width ``2*step``."""
    w = np.asarray(angular_frequency, dtype=float)
    if np.any(w - step <= 0):
        raise DispersionDomainError("finite-difference stencil reaches omega <= 0")
    dk = (wavevector(material, w + step) - wavevector(material, w - step)) / (2 * step)
    return 1.0 / dk


def inverse_group_velocity(material: MaterialModel, angular_frequency, step: float = DEFAULT_FD_STEP):
    return 1.0 / group_velocity(material, angular_frequency, step)


@dataclass(frozen=True)
class CrystalConfig:
    """Poled waveguide treated in the bulk-crystal approximation.

    ``poling_period`` may be None until :func:`solve_poling_period` fills it
    in.  ``d_eff`` defaults to the first-order QPM value ``2/(m*pi) * d33``.
    ``coupling_calibration`` is a dimensionless factor on the coupling
    constant, fixed once against a reference operating point.
    """

    material: MaterialModel
    length: float
    poling_period: float | None = None
    qpm_order: int = 1
    geometry: Geometry = Geometry.COUNTER_PROPAGATING
    d_eff: float | None = None
    effective_area: float = 13e-6 * 13.4e-6
    coupling_calibration: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        if self.length <= 0:
            raise ValueError("length must be positive")
        if self.poling_period is not None and self.poling_period <= 0:
            raise ValueError("poling period must be positive")
        if int(self.qpm_order) != self.qpm_order or self.qpm_order < 1:
            raise ValueError("qpm_order must be a positive integer")
        if self.effective_area <= 0:
            raise ValueError("effective_area must be positive")
        if self.coupling_calibration <= 0:
            raise ValueError("coupling_calibration must be positive")

    @property
    def effective_nonlinearity(self) -> float:
        if self.d_eff is not None:
            return self.d_eff
        return 2.0 / (self.qpm_order * np.pi) * self.material.d33

    @property
    def grating_vector(self) -> float:
        if self.poling_period is None:
            raise ValueError("poling period not set; call solve_poling_period first")
        return 2 * np.pi * self.qpm_order / self.poling_period


def _material_mismatch(config: CrystalConfig, omega_i, omega_o):
    omega_i = np.asarray(omega_i, dtype=float)
    omega_o = np.asarray(omega_o, dtype=float)
    if np.any(omega_i <= omega_o):
        raise ValueError("difference-frequency generation needs omega_i > omega_o (pump frequency > 0)")
    m = config.material
    k_i = wavevector(m, omega_i)
    k_p = wavevector(m, omega_i - omega_o)
    k_o = wavevector(m, omega_o)
    if config.geometry is Geometry.COUNTER_PROPAGATING:
        return k_i - k_p + k_o
    return k_i - k_p - k_o


def phase_mismatch(config: CrystalConfig, omega_i, omega_o):
    """Residual wavevector mismatch including the grating term, in rad/m."""
    return _material_mismatch(config, omega_i, omega_o) - config.grating_vector


def mismatch_slopes(config: CrystalConfig, omega_i: float, omega_o: float,
                    step: float = DEFAULT_FD_STEP) -> tuple[float, float]:
    """Linearized d(dk)/d(omega_i) and d(dk)/d(omega_o) at a band centre (s/m)."""
    m = config.material
    inv_i = inverse_group_velocity(m, omega_i, step)
    inv_p = inverse_group_velocity(m, omega_i - omega_o, step)
    inv_o = inverse_group_velocity(m, omega_o, step)
    sign = 1.0 if config.geometry is Geometry.COUNTER_PROPAGATING else -1.0
    return float(inv_i - inv_p), float(inv_p + sign * inv_o)


def solve_poling_period(config: CrystalConfig, wavelength_i: float, wavelength_o: float,
                        bracket: tuple[float, float] = (1e-8, 1e-2)) -> float:
    """Poling period that zeroes the mismatch at the band centres.

    Raises InfeasibleConfigurationError when the residual has no sign change in
    ``bracket`` (e.g. a negative material mismatch).
    """
    if not wavelength_i < wavelength_o:
        raise ValueError("input wavelength must be shorter than output wavelength")
    omega_i = 2 * np.pi * c / wavelength_i
    omega_o = 2 * np.pi * c / wavelength_o
    dk_material = float(_material_mismatch(config, omega_i, omega_o))
    m = config.qpm_order

    def residual(period):
        return dk_material - 2 * np.pi * m / period

    lo, hi = bracket
    if np.sign(residual(lo)) == np.sign(residual(hi)):
        raise InfeasibleConfigurationError(
            f"no poling period in [{lo:.3g}, {hi:.3g}] m phase-matches "
            f"{wavelength_i * 1e9:.1f} nm -> {wavelength_o * 1e9:.1f} nm "
            f"({config.geometry.value}, m={m}); material mismatch {dk_material:.4g} rad/m")
    return brentq(residual, lo, hi, xtol=1e-18, rtol=4 * np.finfo(float).eps, maxiter=500)


def with_solved_period(config: CrystalConfig, wavelength_i: float, wavelength_o: float) -> CrystalConfig:
    return replace(config, poling_period=solve_poling_period(config, wavelength_i, wavelength_o))
