"""Two-colour beam-splitter model of the frequency conversion.

Input Schmidt mode g_j converts into output mode h_j with amplitude
sin(theta_j), theta_j = sqrt(d_j) * theta.  A mixed input rho maps to
T rho T^dagger with

    T(w_o, w_i) = sum_j sin(theta_j) h_j(w_o) g_j*(w_i)

and the converted state is renormalized to unit trace.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.constants import c, epsilon_0

from .dispersion import CrystalConfig, refractive_index
from .fields import PhotonState, PumpPulse, pump_envelope_integral, purity
from .schmidt import SchmidtData, overlap_matrix


class NoConversionError(ValueError):
    """Conversion probability too small to renormalize the output state."""


@dataclass(frozen=True)
class CouplingBudget:
    theta: float
    per_mode_theta: np.ndarray
    peak_power: float
    effective_area: float
    d_eff: float
    length: float
    n_p: float
    n_i: float
    n_o: float
    pump_field_integral: float
    normalization: float
    calibration: float


def coupling_prefactor(config: CrystalConfig, pump: PumpPulse, normalization: float,
                       omega_i: float, omega_o: float) -> tuple[float, dict]:
    """theta / sqrt(P_p) and the indices used, without the calibration factor."""
    m = config.material
    omega_p = omega_i - omega_o
    n_i, n_o, n_p = (float(refractive_index(m, 2 * np.pi * c / w)) for w in (omega_i, omega_o, omega_p))
    field_integral = pump_envelope_integral(pump)
    d_eff = config.effective_nonlinearity
    pre = (2 * d_eff * np.pi**2 * config.length * normalization / c
           * np.sqrt(2 * omega_i * omega_o / (c * epsilon_0 * n_p * n_i * n_o * field_integral**2))
           / np.sqrt(config.effective_area))
    return pre, dict(n_i=n_i, n_o=n_o, n_p=n_p, d_eff=d_eff, pump_field_integral=field_integral)


def coupling_constant(config: CrystalConfig, pump: PumpPulse, normalization: float,
                      omega_i: float, omega_o: float, coefficients) -> CouplingBudget:
    """Coupling constant theta of the converter and its per-mode split theta_j = sqrt(d_j) theta.

    ``normalization`` is the JSD normalization (sqrt(rad/s) with the
    L2-normalized pump envelope) and ``coefficients`` the sqrt(d_j).
    """
    pre, extra = coupling_prefactor(config, pump, normalization, omega_i, omega_o)
    theta = config.coupling_calibration * pre * np.sqrt(pump.peak_power)
    coeffs = np.asarray(coefficients, dtype=float)
    return CouplingBudget(
        theta=float(theta),
        per_mode_theta=coeffs * theta,
        peak_power=pump.peak_power,
        effective_area=config.effective_area,
        length=config.length,
        normalization=normalization,
        calibration=config.coupling_calibration,
        **extra,
    )


def mode_efficiencies(budget: CouplingBudget) -> np.ndarray:
    """eta_j = sin(theta_j)**2."""
    return np.sin(budget.per_mode_theta) ** 2


@dataclass(frozen=True)
class TransferOperator:
    modes: SchmidtData
    amplitudes: np.ndarray  # sin(theta_j)

    def matrix(self) -> np.ndarray:
        """Kernel T(omega_o, omega_i) on the JSD grid."""
        return np.einsum("j,ja,jb->ab", self.amplitudes, self.modes.output_modes,
                         self.modes.input_modes.conj())

    def apply(self, amplitude, axis=None) -> np.ndarray:
        """Converted amplitude on the omega_o axis for an input amplitude on ``axis``."""
        axis = self.modes.omega_i if axis is None else np.asarray(axis, dtype=float)
        g = self.modes.input_modes_on(axis)
        overlaps = (g.conj() @ np.asarray(amplitude, dtype=complex)) * (axis[1] - axis[0])
        return (self.amplitudes * overlaps) @ self.modes.output_modes

    def largest_singular_value(self) -> float:
        return float(np.max(np.abs(self.amplitudes)))


def build_transfer_operator(modes: SchmidtData, budget: CouplingBudget) -> TransferOperator:
    if budget.per_mode_theta.size != modes.n_modes:
        raise ValueError("budget and Schmidt data disagree on the number of modes")
    return TransferOperator(modes, np.sin(budget.per_mode_theta))


@dataclass(frozen=True)
class ConversionReport:
    """Result of converting one input state.

    ``eta_unnormalized`` are the per-mode sin**2 efficiencies,
    ``eta0_normalized`` the fraction of the converted photon found in output
    mode 0, ``transmission`` the total conversion probability of the input.
    """

    eta_unnormalized: np.ndarray
    eta0_normalized: float
    output_state: PhotonState
    output_purity: float
    input_purity: float
    transmission: float
    input_populations: np.ndarray
    converted_populations: np.ndarray

    def to_dict(self, n_modes: int = 8) -> dict:
        return {
            "eta0_normalized": self.eta0_normalized,
            "output_purity": self.output_purity,
            "input_purity": self.input_purity,
            "transmission": self.transmission,
            "eta_unnormalized": self.eta_unnormalized[:n_modes].tolist(),
            "input_populations": self.input_populations[:n_modes].tolist(),
            "converted_populations": self.converted_populations[:n_modes].tolist(),
        }


def convert_state(state: PhotonState, transfer: TransferOperator) -> ConversionReport:
    rho_modes = overlap_matrix(state, transfer.modes)
    s = transfer.amplitudes
    converted = s[:, None] * rho_modes * s[None, :]
    transmission = float(np.real(np.trace(converted)))
    if transmission < 1e-12:
        raise NoConversionError(f"conversion probability {transmission:.3g} is too small to renormalize")
    h = transfer.modes.output_modes
    rho_out = h.T @ (converted / transmission) @ h.conj()
    rho_out = 0.5 * (rho_out + rho_out.conj().T)
    out = PhotonState(transfer.modes.omega_o, rho_out, center=float(np.mean(transfer.modes.omega_o)))
    populations = np.real(np.diag(converted))
    return ConversionReport(
        eta_unnormalized=s**2,
        eta0_normalized=float(populations[0] / transmission),
        output_state=out,
        output_purity=purity(out),
        input_purity=purity(state),
        transmission=transmission,
        input_populations=np.real(np.diag(rho_modes)),
        converted_populations=populations / transmission,
    )


def uniform_input_figures(eta) -> tuple[float, float]:
    """(eta0_normalized, output purity) for an input spread evenly and incoherently over the modes.

    The converted state is then diagonal with populations proportional to
    eta_j, so the figures depend on the JSD alone.
    """
    eta = np.asarray(eta, dtype=float)
    total = eta.sum()
    return float(eta[0] / total), float(np.sum(eta**2) / total**2)


@dataclass(frozen=True)
class FilterReport:
    transmission: float
    output_purity: float
    input_purity: float
    output_state: PhotonState


def filter_amplitude(detuning, fwhm_hz: float, shape: Literal["lorentzian", "gaussian"] = "lorentzian"):
    """Field transmission of a filter whose intensity transmission has FWHM ``fwhm_hz``."""
    nu = np.asarray(detuning, dtype=float)
    if np.isinf(fwhm_hz):
        return np.ones_like(nu, dtype=complex)
    gamma = 2 * np.pi * fwhm_hz
    if shape == "lorentzian":
        return 1.0 / (1.0 - 2j * nu / gamma)
    if shape == "gaussian":
        return np.exp(-2 * np.log(2.0) * nu**2 / gamma**2).astype(complex)
    raise ValueError(f"unknown filter shape {shape!r}")


def passive_filter_benchmark(state: PhotonState, filter_fwhm: float,
                             filter_shape: Literal["lorentzian", "gaussian"] = "lorentzian") -> FilterReport:
    """Time-stationary spectral filter centred on the photon carrier."""
    f = filter_amplitude(state.axis - state.center, filter_fwhm, filter_shape)
    rho = f[:, None] * state.rho * f.conj()[None, :]
    transmission = float(np.real(np.trace(rho)) * state.spacing)
    out = PhotonState(state.axis, rho / transmission, center=state.center)
    return FilterReport(transmission, purity(out), purity(state), out)


def write_report(path: str | Path, report: ConversionReport, extra: dict | None = None) -> None:
    """JSON result file; see README for the schema."""
    payload = {"schema": "qfc.conversion_report/1", **report.to_dict()}
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable))


def read_report(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != "qfc.conversion_report/1":
        raise ValueError(f"{path}: not a conversion report")
    return data


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
