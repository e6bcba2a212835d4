"""Joint spectral distribution F(omega_i, omega_o) of the conversion process.

F is the pump envelope evaluated at omega_p = omega_i - omega_o times the
sinc phase-matching function, L2-normalized on an anisotropic uniform grid.
Rows index omega_i, columns omega_o.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dispersion import CrystalConfig, mismatch_slopes, phase_mismatch
from .fields import PumpPulse, TruncationError, pump_envelope

# sinc(x)**2 = 1/2 at |x| = 1.39156
SINC_HALF_POWER = 1.3915573781515103
MIN_POINTS = 64


@dataclass(frozen=True)
class SpectralGrid:
    omega_i: np.ndarray
    omega_o: np.ndarray

    def __post_init__(self):
        for name in ("omega_i", "omega_o"):
            ax = np.asarray(getattr(self, name), dtype=float)
            if ax.ndim != 1 or ax.size < MIN_POINTS:
                raise ValueError(f"{name} needs at least {MIN_POINTS} points")
            steps = np.diff(ax)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
                raise ValueError(f"{name} must be strictly increasing and uniform")
            ax.setflags(write=False)
            object.__setattr__(self, name, ax)

    @classmethod
    def centered(cls, center_i, center_o, half_width_i, half_width_o, points_i=512, points_o=512):
        return cls(center_i + np.linspace(-half_width_i, half_width_i, points_i),
                   center_o + np.linspace(-half_width_o, half_width_o, points_o))

    @property
    def d_omega_i(self) -> float:
        return float(self.omega_i[1] - self.omega_i[0])

    @property
    def d_omega_o(self) -> float:
        return float(self.omega_o[1] - self.omega_o[0])

    @property
    def center_i(self) -> float:
        return float(0.5 * (self.omega_i[0] + self.omega_i[-1]))

    @property
    def center_o(self) -> float:
        return float(0.5 * (self.omega_o[0] + self.omega_o[-1]))

    def refined(self, factor_i: int = 1, factor_o: int = 1) -> "SpectralGrid":
        """Same ranges, resolution multiplied per axis."""
        def refine(ax, f):
            return np.linspace(ax[0], ax[-1], (ax.size - 1) * f + 1)
        return SpectralGrid(refine(self.omega_i, factor_i), refine(self.omega_o, factor_o))


@dataclass(frozen=True)
class Jsd:
    grid: SpectralGrid
    amplitude: np.ndarray
    normalization: float

    def __post_init__(self):
        amp = np.asarray(self.amplitude)
        if amp.shape != (self.grid.omega_i.size, self.grid.omega_o.size):
            raise ValueError("amplitude shape does not match grid")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitude) ** 2) * self.grid.d_omega_i * self.grid.d_omega_o))

    def output_marginal(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitude) ** 2, axis=0) * self.grid.d_omega_i

    def input_marginal(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitude) ** 2, axis=1) * self.grid.d_omega_o


def phase_matching_amplitude(config: CrystalConfig, omega_i, omega_o):
    """sinc(dk L / 2) with sinc(0) = 1."""
    dk = phase_mismatch(config, omega_i, omega_o)
    return np.sinc(dk * config.length / (2 * np.pi))


def acceptance_bandwidth(config: CrystalConfig, omega_i: float, omega_o: float) -> float:
    """FWHM (rad/s) of |sinc|**2 along its narrowest frequency direction, from linearized slopes."""
    s_i, s_o = mismatch_slopes(config, omega_i, omega_o)
    return 4 * SINC_HALF_POWER / (config.length * max(abs(s_i), abs(s_o)))


def auto_grid(config: CrystalConfig, pump: PumpPulse, omega_i: float, omega_o: float,
              points: tuple[int, int] = (512, 512), range_factor: float = 5.0,
              photon_linewidth: float = 0.0) -> SpectralGrid:
    """Grid centred on the band centres, each half-range ``range_factor`` x the largest scale.

    The scales are the pump intensity bandwidth, the photon linewidth (rad/s)
    and the phase-matching acceptance.  The output axis is sized like the
    input axis: the sinc tails along omega_o are cut off only by the pump
    envelope, and truncating them biases the Schmidt number.
    """
    scale = max(pump.intensity_bandwidth, photon_linewidth, acceptance_bandwidth(config, omega_i, omega_o))
    half = range_factor * scale
    return SpectralGrid.centered(omega_i, omega_o, half, half, *points)


def build_jsd(config: CrystalConfig, pump: PumpPulse, grid: SpectralGrid,
              edge_tol: float = 1e-3, check_edges: bool = True) -> Jsd:
    """Sample F = alpha(omega_i - omega_o) * phi(omega_i, omega_o) and L2-normalize it.

    Raises TruncationError when the ridge is clipped: the |F|**2 marginal at
    an axis edge exceeds ``edge_tol`` of its peak.  A pointwise |F| test is
    not usable: along the line omega_i - omega_o = const the pump envelope is
    flat and only the sinc cuts F off, so |F| decays as 1/x there.  The
    weight in that tail, and with it K, converges as 1/range.
    """
    expected_pump = grid.center_i - grid.center_o
    if abs(pump.center_frequency - expected_pump) > 1e-6 * pump.intensity_bandwidth + 1e-9 * expected_pump:
        raise ValueError("pump centre must equal omega_i,centre - omega_o,centre")

    wi = grid.omega_i[:, None]
    wo = grid.omega_o[None, :]
    alpha = pump_envelope(pump, wi - wo)
    phi = phase_matching_amplitude(config, wi, wo)
    raw = alpha * phi
    norm = float(np.sqrt(np.sum(np.abs(raw) ** 2) * grid.d_omega_i * grid.d_omega_o))
    if norm == 0:
        raise TruncationError("JSD vanishes on the grid; it does not cover the phase-matched ridge")
    jsd = Jsd(grid, raw / norm, norm)
    if check_edges:
        _check_edges(jsd, edge_tol)
    return jsd


def _check_edges(jsd: Jsd, tol: float) -> None:
    for name, marg in (("omega_i", jsd.input_marginal()), ("omega_o", jsd.output_marginal())):
        edge = max(marg[0], marg[-1]) / marg.max()
        if edge > tol:
            raise TruncationError(
                f"JSD ridge clipped along {name}: edge marginal {edge:.2e} of peak; "
                f"expand the {name} range (e.g. double range_factor)")


class Bandwidth(NamedTuple):
    fwhm_hz: float
    multimodal: bool


def fwhm(axis, profile) -> Bandwidth:
    """FWHM by linear interpolation at half maximum, in the units of ``axis``.

    For a multi-peaked profile the outermost half-max crossings are used and
    the result is flagged.
    """
    axis = np.asarray(axis, dtype=float)
    y = np.asarray(profile, dtype=float)
    half = 0.5 * y.max()
    above = y >= half
    idx = np.flatnonzero(above)
    lo, hi = idx[0], idx[-1]
    runs = np.count_nonzero(np.diff(above.astype(int)) == 1) + (1 if above[0] else 0)
    if lo == 0 or hi == y.size - 1:
        raise TruncationError("profile does not fall below half maximum inside the grid")
    left = np.interp(half, [y[lo - 1], y[lo]], [axis[lo - 1], axis[lo]])
    right = np.interp(half, [y[hi + 1], y[hi]], [axis[hi + 1], axis[hi]])
    return Bandwidth(float(right - left), runs > 1)


def output_marginal_bandwidth(jsd: Jsd) -> Bandwidth:
    """Intensity FWHM of the omega_o marginal, in Hz."""
    bw = fwhm(jsd.grid.omega_o, jsd.output_marginal())
    return Bandwidth(bw.fwhm_hz / (2 * np.pi), bw.multimodal)


def output_bandwidth(config: CrystalConfig, pump: PumpPulse, grid: SpectralGrid,
                     fine_points: int = 2049, window: float = 3.0) -> Bandwidth:
    """Output marginal FWHM (Hz) resampled on a fine omega_o axis.

    The JSD grid spans the pump bandwidth on both axes, which can leave only
    a few samples across a GHz-wide output marginal.  The coarse FWHM picks
    a window of ``window`` FWHMs on each side of the peak; the marginal is
    re-integrated there over the full omega_i axis.
    """
    coarse = fwhm(grid.omega_o, _marginal_o(config, pump, grid.omega_i, grid.omega_o))
    half = window * coarse.fwhm_hz + 2 * grid.d_omega_o
    centre = grid.omega_o[np.argmax(_marginal_o(config, pump, grid.omega_i, grid.omega_o))]
    fine = np.linspace(max(centre - half, grid.omega_o[0]), min(centre + half, grid.omega_o[-1]), fine_points)
    bw = fwhm(fine, _marginal_o(config, pump, grid.omega_i, fine))
    return Bandwidth(bw.fwhm_hz / (2 * np.pi), bw.multimodal or coarse.multimodal)


def _marginal_o(config, pump, omega_i, omega_o):
    wi = omega_i[:, None]
    wo = omega_o[None, :]
    f = pump_envelope(pump, wi - wo) * phase_matching_amplitude(config, wi, wo)
    return np.sum(np.abs(f) ** 2, axis=0)


def write_jsd(path: str | Path, jsd: Jsd) -> None:
    """Delimited-text export, row-major over omega_i.

    Columns: omega_i_rad_s, omega_o_rad_s, re_F, im_F; one line per sample,
    omega_o varying fastest.  A '#' header records the normalization.
    """
    wi, wo = np.meshgrid(jsd.grid.omega_i, jsd.grid.omega_o, indexing="ij")
    amp = np.asarray(jsd.amplitude, dtype=complex)
    table = np.column_stack([wi.ravel(), wo.ravel(), amp.real.ravel(), amp.imag.ravel()])
    header = (f"normalization={jsd.normalization!r} shape={amp.shape[0]}x{amp.shape[1]}\n"
              "omega_i_rad_s,omega_o_rad_s,re_F,im_F")
    np.savetxt(path, table, delimiter=",", header=header, fmt="%.17g")


def read_jsd(path: str | Path) -> Jsd:
    with open(path) as fh:
        meta = fh.readline().lstrip("# ").strip()
    fields = dict(item.split("=") for item in meta.split())
    ni, no = (int(v) for v in fields["shape"].split("x"))
    table = np.loadtxt(path, delimiter=",")
    wi = table[::no, 0]
    wo = table[:no, 1]
    amp = (table[:, 2] + 1j * table[:, 3]).reshape(ni, no)
    return Jsd(SpectralGrid(wi, wo), amp, float(fields["normalization"]))
