"""Pump pulse and quantum-dot photon spectra, and the jittered photon state.

Frequency variables are angular (rad/s).  Spectral amplitudes are
L2-normalized: ``sum(|a|**2) * d_omega == 1`` on a fine grid.

A jittered photon is the Gaussian mixture

    rho(w, w') = E_{t0, w0}[ g(w - w0) g*(w' - w0) exp(i (w - w') t0) ]

over independent normal offsets ``w0`` and ``t0``.  The time part depends on
``w - w'`` only, so the mixture factorizes into a frequency-jitter sum times
a Toeplitz coherence factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.constants import c

FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))

# Gauss-Hermite order above which the mixture falls back to a uniform
# (trapezoidal) node set; numpy's node computation is O(n^3).
MAX_HERMITE_ORDER = 200


class TruncationError(ValueError):
    """The frequency grid clips a spectrum that should decay at its edges."""


@dataclass(frozen=True)
class PumpPulse:
    """Transform-limited Gaussian pump.

    ``duration_convention`` says which temporal profile ``duration_fwhm`` is
    the FWHM of: ``"field"`` for the envelope |E(t)|, ``"intensity"`` for
    |E(t)|**2.  The intensity FWHM of a field-convention pulse is
    ``duration_fwhm / sqrt(2)``.
    """

    center_wavelength: float
    duration_fwhm: float
    peak_power: float
    repetition_rate: float = 80e6
    duration_convention: Literal["field", "intensity"] = "field"

    def __post_init__(self):
        if self.duration_fwhm <= 0 or self.repetition_rate <= 0 or self.center_wavelength <= 0:
            raise ValueError("pump duration, repetition rate and wavelength must be positive")
        if self.peak_power < 0:
            raise ValueError("peak power must be non-negative")
        if self.duration_fwhm * self.repetition_rate >= 1:
            raise ValueError("pulse duration times repetition rate must be below 1")
        if self.duration_convention not in ("field", "intensity"):
            raise ValueError(f"unknown duration convention {self.duration_convention!r}")

    @property
    def center_frequency(self) -> float:
        return 2 * np.pi * c / self.center_wavelength

    @property
    def intensity_duration(self) -> float:
        if self.duration_convention == "field":
            return self.duration_fwhm / np.sqrt(2.0)
        return self.duration_fwhm

    @property
    def spectral_sigma(self) -> float:
        """Std of the amplitude alpha(omega) ~ exp(-nu**2 / (2 sigma**2))."""
        # I(t) = exp(-t^2/T^2) has FWHM 2 sqrt(ln 2) T and alpha ~ exp(-nu^2 T^2 / 2)
        temporal_T = self.intensity_duration / (2 * np.sqrt(np.log(2.0)))
        return 1.0 / temporal_T

    @property
    def intensity_bandwidth(self) -> float:
        """FWHM of |alpha|**2 in rad/s; equals 4 ln2 / intensity_duration."""
        return 2 * np.sqrt(np.log(2.0)) * self.spectral_sigma

    @property
    def average_power(self) -> float:
        # square-pulse equivalent: P_peak * duration * f_rep
        return self.peak_power * self.duration_fwhm * self.repetition_rate


def pump_envelope(pump: PumpPulse, omega_p):
    """Real Gaussian pump envelope function alpha(omega_p), L2-normalized."""
    sigma = pump.spectral_sigma
    nu = np.asarray(omega_p, dtype=float) - pump.center_frequency
    return (np.pi * sigma**2) ** -0.25 * np.exp(-(nu**2) / (2 * sigma**2))


def pump_envelope_integral(pump: PumpPulse) -> float:
    """Integral of ``pump_envelope`` over omega_p (units sqrt(rad/s))."""
    return float(np.sqrt(2.0) * np.pi**0.25 * np.sqrt(pump.spectral_sigma))


@dataclass(frozen=True)
class QdPhotonSpec:
    """Gaussian quantum-dot photon; ``linewidth_fwhm`` is the FWHM of |g|**2 in Hz."""

    center_wavelength: float
    linewidth_fwhm: float = 1e9
    emission_time_offset: float = 0.0
    frequency_offset: float = 0.0

    def __post_init__(self):
        if self.linewidth_fwhm <= 0:
            raise ValueError("linewidth must be positive")

    @property
    def center_frequency(self) -> float:
        return 2 * np.pi * c / self.center_wavelength

    @property
    def spectral_sigma(self) -> float:
        """Std of |g|**2 in rad/s."""
        return 2 * np.pi * self.linewidth_fwhm / FWHM_PER_SIGMA


def qd_amplitude(spec: QdPhotonSpec, omega):
    """Photon amplitude g(omega), L2-normalized.

    The emission-time offset enters as ``exp(i * nu * t0)`` with ``nu`` the
    detuning from the photon carrier, which differs from ``exp(i omega t0)``
    only by a global phase.
    """
    sigma = spec.spectral_sigma
    nu = np.asarray(omega, dtype=float) - spec.center_frequency
    env = (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((nu - spec.frequency_offset) ** 2) / (4 * sigma**2))
    if spec.emission_time_offset:
        return env * np.exp(1j * nu * spec.emission_time_offset)
    return env.astype(complex)


@dataclass(frozen=True)
class JitterModel:
    """Independent Gaussian jitter: ``sigma_frequency`` in rad/s, ``sigma_time`` in s."""

    sigma_frequency: float = 0.0
    sigma_time: float = 0.0

    def __post_init__(self):
        if self.sigma_frequency < 0 or self.sigma_time < 0:
            raise ValueError("jitter widths must be non-negative")

    @property
    def is_pure(self) -> bool:
        return self.sigma_frequency == 0 and self.sigma_time == 0


@dataclass(frozen=True)
class PhotonState:
    """Single-photon spectral density matrix on a uniform absolute-frequency axis.

    ``rho`` is the kernel rho(w, w') so that the trace is
    ``sum(diag(rho)) * spacing``.
    """

    axis: np.ndarray
    rho: np.ndarray
    center: float = field(default=np.nan)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        rho = np.asarray(self.rho, dtype=complex)
        if axis.ndim != 1 or rho.shape != (axis.size, axis.size):
            raise ValueError("rho must be square and match the axis length")
        steps = np.diff(axis)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
            raise ValueError("axis must be strictly increasing and uniform")
        axis.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "rho", rho)
        if np.isnan(self.center):
            object.__setattr__(self, "center", float(axis[axis.size // 2]))

    @property
    def spacing(self) -> float:
        return float(self.axis[1] - self.axis[0])

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)) * self.spacing)

    def spectrum(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the quadrature-weighted operator, descending; they sum to the trace."""
        return np.linalg.eigvalsh(self.rho * self.spacing)[::-1]

    def check(self, hermitian_tol=1e-12, trace_tol=1e-9, psd_tol=1e-9) -> None:
        scale = np.max(np.abs(self.rho))
        if np.max(np.abs(self.rho - self.rho.conj().T)) > hermitian_tol * max(scale, 1.0):
            raise ValueError("density matrix is not hermitian")
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace():.12f} differs from 1")
        ev = self.eigenvalues()
        if ev[-1] < -psd_tol * ev[0]:
            raise ValueError(f"density matrix not positive semidefinite (min eigenvalue {ev[-1]:.3g})")


def pure_state(axis, amplitude, center: float | None = None) -> PhotonState:
    """Projector onto an amplitude sampled on ``axis``; normalized to unit trace."""
    axis = np.asarray(axis, dtype=float)
    amp = np.asarray(amplitude, dtype=complex)
    amp = amp / np.sqrt(np.sum(np.abs(amp) ** 2) * (axis[1] - axis[0]))
    return PhotonState(axis, np.outer(amp, amp.conj()), center=np.nan if center is None else center)


def purity(state: PhotonState) -> float:
    """Tr(rho^2) with uniform quadrature weights."""
    return float(np.sum(np.abs(state.rho) ** 2) * state.spacing**2)


def photon_axis(spec: QdPhotonSpec, jitter: JitterModel, span: float = 8.0,
                min_points: int = 256, max_points: int = 4096) -> np.ndarray:
    """Uniform axis covering the jittered photon with ``span`` combined widths on each side.

    The spacing resolves the intrinsic linewidth and the coherence length set
    by the time jitter.
    """
    sigma = spec.spectral_sigma
    combined = np.hypot(sigma, jitter.sigma_frequency)
    half = span * combined + abs(spec.frequency_offset)
    step = sigma / 2
    if jitter.sigma_time > 0:
        step = min(step, 1.0 / (2 * jitter.sigma_time))
    n = int(np.clip(2 * int(np.ceil(half / step)) + 1, min_points, max_points))
    return spec.center_frequency + np.linspace(-half, half, n)


def jitter_nodes(sigma: float, resolution: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes/weights for a zero-mean normal of std ``sigma``.

    Gauss-Hermite of at least ``order`` points, raised until the central node
    spacing (~ pi*sigma/sqrt(n)) is below ``resolution/2``.  If that would
    exceed MAX_HERMITE_ORDER, a uniform node set with spacing
    ``resolution/2`` over +-9 sigma is used instead (spectrally accurate for
    Gaussian integrands).  Weights sum to 1.
    """
    if sigma == 0:
        return np.zeros(1), np.ones(1)
    needed = int(np.ceil((2 * np.pi * sigma / resolution) ** 2))
    n = max(order, needed)
    if n <= MAX_HERMITE_ORDER:
        x, w = np.polynomial.hermite_e.hermegauss(n)
        return sigma * x, w / w.sum()
    h = resolution / 2
    half = int(np.ceil(9 * sigma / h))
    x = h * np.arange(-half, half + 1)
    w = np.exp(-(x**2) / (2 * sigma**2))
    return x, w / w.sum()


def build_mixed_state(spec: QdPhotonSpec, jitter: JitterModel, axis=None,
                      quadrature_order: int = 9, edge_tol: float = 1e-4) -> PhotonState:
    """Jittered photon density matrix by tensor-product quadrature over (t0, w0)."""
    if quadrature_order < 7:
        raise ValueError("quadrature_order must be at least 7")
    axis = photon_axis(spec, jitter) if axis is None else np.asarray(axis, dtype=float)
    nu = axis - spec.center_frequency
    sigma = spec.spectral_sigma
    d_omega = axis[1] - axis[0]

    w0, wf = jitter_nodes(jitter.sigma_frequency, sigma, quadrature_order)
    shifted = nu[:, None] - spec.frequency_offset - w0[None, :]
    amps = (2 * np.pi * sigma**2) ** -0.25 * np.exp(-(shifted**2) / (4 * sigma**2))
    rho = (amps * wf) @ amps.T

    # edge check on the mixed spectrum's amplitude
    diag = np.sqrt(np.clip(np.diag(rho), 0, None))
    if max(diag[0], diag[-1]) > edge_tol * diag.max():
        raise TruncationError(
            f"photon grid [{nu[0]:.3g}, {nu[-1]:.3g}] rad/s clips the spectrum "
            f"(edge amplitude {max(diag[0], diag[-1]) / diag.max():.2e} of peak); widen the axis")

    if jitter.sigma_time > 0 or spec.emission_time_offset:
        lags = d_omega * np.arange(-(nu.size - 1), nu.size)
        span = 2 * (nu[-1] - nu[0]) + d_omega
        t0, wt = jitter_nodes(jitter.sigma_time, 1.0 / span, quadrature_order)
        t0 = t0 + spec.emission_time_offset
        coherence = np.exp(1j * np.outer(lags, t0)) @ wt
        idx = np.arange(nu.size)
        rho = rho * coherence[(idx[:, None] - idx[None, :]) + nu.size - 1]

    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / (np.real(np.trace(rho)) * d_omega)
    return PhotonState(axis, rho, center=spec.center_frequency)


def gaussian_mixture_purity(spec: QdPhotonSpec, jitter: JitterModel) -> float:
    """Closed-form purity of the Gaussian jitter mixture.

    1 / sqrt((1 + s_f**2 / s**2) * (1 + 4 s**2 s_t**2)) with ``s`` the std of |g|**2.
    """
    s = spec.spectral_sigma
    return float(1.0 / np.sqrt((1 + (jitter.sigma_frequency / s) ** 2) * (1 + 4 * s**2 * jitter.sigma_time**2)))


def frequency_jitter_for_purity(spec: QdPhotonSpec, target: float) -> float:
    """Frequency-jitter std (rad/s) that brings a transform-limited photon to ``target`` purity."""
    if not 0 < target <= 1:
        raise ValueError("target purity must lie in (0, 1]")
    return float(spec.spectral_sigma * np.sqrt(1.0 / target**2 - 1.0))
