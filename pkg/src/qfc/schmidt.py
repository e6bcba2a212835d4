"""Schmidt decomposition of a joint spectral distribution.

The SVD is taken of ``F * sqrt(d_omega_i * d_omega_o)`` so the singular
values approximate the continuum coefficients sqrt(d_j) on any grid
spacing.  Modes are returned as functions, orthonormal under the uniform
quadrature of their axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .fields import PhotonState
from .jsd import Jsd

DEFAULT_MAX_MODES = 32


class InsufficientModesError(ValueError):
    pass


@dataclass(frozen=True)
class SchmidtData:
    """Leading Schmidt modes of a JSD.

    ``input_modes[j]`` lives on ``omega_i``, ``output_modes[j]`` on
    ``omega_o``.  ``schmidt_number`` uses the full singular spectrum;
    ``discarded_weight`` is the sum of d_j beyond the retained modes.
    """

    coefficients: np.ndarray
    input_modes: np.ndarray
    output_modes: np.ndarray
    schmidt_number: float
    omega_i: np.ndarray
    omega_o: np.ndarray
    discarded_weight: float = 0.0

    @property
    def weights(self) -> np.ndarray:
        return self.coefficients**2

    @property
    def n_modes(self) -> int:
        return self.coefficients.size

    def input_modes_on(self, axis) -> np.ndarray:
        """Input modes resampled onto ``axis`` (cubic spline, zero outside the JSD grid).

        Returns an array of shape (n_modes, len(axis)).
        """
        axis = np.asarray(axis, dtype=float)
        if axis.shape == self.omega_i.shape and np.array_equal(axis, self.omega_i):
            return self.input_modes
        inside = (axis >= self.omega_i[0]) & (axis <= self.omega_i[-1])
        out = np.zeros((self.n_modes, axis.size), dtype=complex)
        spline_re = CubicSpline(self.omega_i, self.input_modes.real, axis=1)
        spline_im = CubicSpline(self.omega_i, self.input_modes.imag, axis=1)
        out[:, inside] = spline_re(axis[inside]) + 1j * spline_im(axis[inside])
        return out


def decompose(jsd: Jsd, max_modes: int = DEFAULT_MAX_MODES, norm_tol: float = 1e-9) -> SchmidtData:
    if max_modes < 5:
        raise ValueError("max_modes must be at least 5")
    if abs(jsd.norm() - 1.0) > norm_tol:
        raise ValueError(f"JSD is not L2-normalized (norm {jsd.norm():.12f})")
    g = jsd.grid
    scaled = jsd.amplitude * np.sqrt(g.d_omega_i * g.d_omega_o)
    u, s, vh = np.linalg.svd(scaled, full_matrices=False)
    weights = s**2
    k = schmidt_number(weights / weights.sum())
    keep = min(max_modes, s.size)

    g_modes = u[:, :keep].T / np.sqrt(g.d_omega_i)
    h_modes = vh[:keep, :] / np.sqrt(g.d_omega_o)
    # gauge: the largest-magnitude sample of each input mode is real positive;
    # symmetric lobes tie to rounding, so take the first sample within 1e-6 of the max
    mag = np.abs(g_modes)
    peak = np.argmax(mag >= (1 - 1e-6) * mag.max(axis=1, keepdims=True), axis=1)
    phase = g_modes[np.arange(keep), peak]
    phase = phase / np.abs(phase)
    g_modes = g_modes * phase.conj()[:, None]
    h_modes = h_modes * phase[:, None]
    return SchmidtData(
        coefficients=s[:keep].copy(),
        input_modes=np.asarray(g_modes, dtype=complex),
        output_modes=np.asarray(h_modes, dtype=complex),
        schmidt_number=k,
        omega_i=g.omega_i,
        omega_o=g.omega_o,
        discarded_weight=float(weights[keep:].sum()),
    )


def schmidt_number(weights, tol: float = 1e-9) -> float:
    """K = 1 / sum(d_j**2) for Schmidt weights d_j that sum to one."""
    d = np.asarray(weights, dtype=float)
    if abs(d.sum() - 1.0) > tol:
        raise ValueError(f"Schmidt weights sum to {d.sum():.12f}, not 1")
    return float(1.0 / np.sum(d**2))


def reconstruct(modes: SchmidtData) -> np.ndarray:
    """Sum of sqrt(d_j) g_j(omega_i) h_j(omega_o) over the retained modes."""
    return np.einsum("j,ja,jb->ab", modes.coefficients, modes.input_modes, modes.output_modes)


@dataclass(frozen=True)
class ModeProjection:
    """rho~_jk = <g_j|rho|g_k>; the diagonal gives per-mode populations."""

    matrix: np.ndarray
    truncation_weight: float

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def purity(self) -> float:
        tr = np.real(np.trace(self.matrix))
        return float(np.sum(np.abs(self.matrix) ** 2) / tr**2)


def overlap_matrix(state: PhotonState, modes: SchmidtData) -> np.ndarray:
    g = modes.input_modes_on(state.axis)
    return (g.conj() @ state.rho @ g.T) * state.spacing**2


def project_onto_input_modes(state: PhotonState, modes: SchmidtData,
                             max_truncation: float = 0.01) -> ModeProjection:
    """Density matrix in the input Schmidt basis.

    Raises InsufficientModesError if more than ``max_truncation`` of the
    state's trace falls outside the retained modes.
    """
    m = overlap_matrix(state, modes)
    truncation = state.trace() - float(np.real(np.trace(m)))
    if truncation > max_truncation:
        raise InsufficientModesError(
            f"{truncation:.3f} of the state lies outside the {modes.n_modes} retained input modes")
    return ModeProjection(m, truncation)


def write_schmidt(directory: str | Path, modes: SchmidtData, prefix: str = "schmidt") -> list[Path]:
    """Write coefficients and mode functions as CSV files; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    coeff_path = directory / f"{prefix}_coefficients.csv"
    j = np.arange(modes.n_modes)
    np.savetxt(coeff_path, np.column_stack([j, modes.coefficients, modes.weights]), delimiter=",",
               header="mode,sqrt_d,d", comments="", fmt=["%d", "%.17g", "%.17g"])
    paths = [coeff_path]
    for name, axis, arr in (("input", modes.omega_i, modes.input_modes),
                            ("output", modes.omega_o, modes.output_modes)):
        cols = [axis]
        head = ["omega_rad_s"]
        for k in range(modes.n_modes):
            cols += [arr[k].real, arr[k].imag]
            head += [f"re_{k}", f"im_{k}"]
        p = directory / f"{prefix}_{name}_modes.csv"
        np.savetxt(p, np.column_stack(cols), delimiter=",", header=",".join(head), comments="", fmt="%.17g")
        paths.append(p)
    return paths
