"""``qfc`` command line: poling period, figure datasets and single-point purification.

Exit codes: 0 success, 1 computational infeasibility (no phase matching,
bracket without solution, failed convergence gate ...), 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import GHZ, ConfigError, Scenario, load_scenario
from .conversion import (NoConversionError, mode_efficiencies, passive_filter_benchmark, uniform_input_figures,
                         write_report)
from .dispersion import DispersionDomainError, Geometry, InfeasibleConfigurationError, solve_poling_period
from .fields import TruncationError, frequency_jitter_for_purity
from .optimize import (BracketError, Setup, SweepSpec, coupling_budget, convergence_check,
                       efficiency_purity_tradeoff, geometry_comparison, optimal_pulse_duration,
                       power_for_unit_eta0, purity_noise_sweep, qpm_order_tradeoff, run_parallel, run_pipeline,
                       schmidt_modes)
from .schmidt import InsufficientModesError, overlap_matrix, write_schmidt

FIGURES = ("modes", "power", "duration", "noise_freq", "noise_time", "tradeoff", "geometry", "qpm")
ROMAN = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x")

INFEASIBLE = (InfeasibleConfigurationError, BracketError, TruncationError, NoConversionError,
              InsufficientModesError, DispersionDomainError)


class ConvergenceError(RuntimeError):
    pass


def _write_rows(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def resolved_setup(setup: Setup) -> dict:
    """The fully resolved operating point in SI units."""
    cr = setup.crystal
    return {
        "material": cr.material.name,
        "temperature_k": cr.material.temperature,
        "length_m": cr.length,
        "poling_period_m": cr.poling_period,
        "qpm_order": cr.qpm_order,
        "geometry": cr.geometry.value,
        "d_eff_m_per_v": cr.effective_nonlinearity,
        "effective_area_m2": cr.effective_area,
        "coupling_calibration": cr.coupling_calibration,
        "pump": dataclasses.asdict(setup.pump),
        "photon": dataclasses.asdict(setup.photon),
        "jitter_rad_s_and_s": dataclasses.asdict(setup.jitter),
        "output_wavelength_m": setup.output_wavelength,
        "grid_points": list(setup.grid_points),
        "range_factor": setup.range_factor,
        "max_modes": setup.max_modes,
    }


def write_manifest(out: Path, command: str, scn: Scenario, setup: Setup, threads: int, outputs, extra=None):
    (out / "scenario.toml").write_text(scn.source_text)
    manifest = {
        "command": command,
        "qfc_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "threads": threads,
        "scenario_file": "scenario.toml",
        "scenario": scn.to_dict(),
        "resolved": resolved_setup(setup),
        "outputs": sorted(Path(p).name for p in outputs),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str))


# --- subcommands -------------------------------------------------------------

def cmd_poling(scn: Scenario, out: Path, threads: int) -> dict:
    setup = scn.to_setup()
    lam_i, lam_o = setup.photon.center_wavelength, setup.output_wavelength
    periods = {}
    for geometry in Geometry:
        crystal = dataclasses.replace(setup.crystal, geometry=geometry, poling_period=None)
        try:
            periods[geometry.value] = solve_poling_period(crystal, lam_i, lam_o)
        except InfeasibleConfigurationError as exc:
            if geometry is setup.crystal.geometry:
                raise
            periods[geometry.value] = None
            print(f"note: {exc}", file=sys.stderr)
    configured = periods[setup.crystal.geometry.value]
    result = {
        "schema": "qfc.poling/1",
        "geometry": setup.crystal.geometry.value,
        "qpm_order": setup.crystal.qpm_order,
        "poling_period_m": configured,
        "periods_by_geometry_m": periods,
    }
    path = out / "poling.json"
    path.write_text(json.dumps(result, indent=2))
    for g, p in periods.items():
        mark = "*" if g == setup.crystal.geometry.value else " "
        text = "infeasible" if p is None else f"{p * 1e9:.3f} nm"
        print(f"{mark} {g:<20} m={setup.crystal.qpm_order}  period {text}")
    write_manifest(out, "poling", scn, setup, threads, [path])
    return result


def cmd_purify(scn: Scenario, out: Path, threads: int, filter_benchmark: bool = False) -> dict:
    setup = scn.to_setup()
    res = run_pipeline(setup, strict=True)
    r = res.report
    eta = mode_efficiencies(res.budget)
    extra = {
        "K_JSD": res.modes.schmidt_number,
        "peak_power_w": setup.pump.peak_power,
        "average_power_w": setup.pump.average_power,
        "theta": res.budget.theta,
        "output_bandwidth_hz": res.output_bandwidth,
        "uniform_mode_weighting": dict(zip(("eta0_normalized", "output_purity"), uniform_input_figures(eta))),
    }
    if filter_benchmark:
        f = passive_filter_benchmark(res.input, scn.sweep.filter_fwhm_ghz * 1e9, scn.sweep.filter_shape)
        extra["filter_benchmark"] = [
            {"method": "conversion", "transmission": r.transmission, "output_purity": r.output_purity},
            {"method": f"passive_{scn.sweep.filter_shape}_{scn.sweep.filter_fwhm_ghz:g}ghz",
             "transmission": f.transmission, "output_purity": f.output_purity},
        ]
    path = out / "report.json"
    write_report(path, r, extra)
    spec_path = _write_rows(out / "output_spectrum.csv", ("omega_rad_s", "spectral_density"),
                            zip(r.output_state.axis, r.output_state.spectrum()))
    print(f"K_JSD {res.modes.schmidt_number:.6f}  eta0_normalized {r.eta0_normalized:.6f}  "
          f"input purity {r.input_purity:.6f}  output purity {r.output_purity:.6f}  "
          f"transmission {r.transmission:.6f}")
    write_manifest(out, "purify", scn, setup, threads, [path, spec_path])
    return json.loads(path.read_text())


def _noise_free(setup: Setup) -> Setup:
    return setup.with_jitter(0.0, 0.0)


def figure_modes(scn, setup, out, threads):
    modes, _, _ = schmidt_modes(setup)
    paths = write_schmidt(out, modes, "modes_schmidt")

    def one(p):
        s = setup.with_jitter(frequency_jitter_for_purity(setup.photon, p), 0.0)
        res = run_pipeline(s)
        inp = np.real(np.diag(overlap_matrix(res.input, res.modes)))
        return res, inp

    rows = []
    for k, (res, inp) in enumerate(run_parallel(one, scn.sweep.mode_test_purities, threads)):
        label = ROMAN[k] if k < len(ROMAN) else str(k + 1)
        trunc = 1.0 - inp.sum()
        for j in range(res.modes.n_modes):
            rows.append((label, res.report.input_purity, res.report.output_purity, j, float(inp[j]),
                         float(res.report.converted_populations[j]), trunc))
    paths.append(_write_rows(out / "modes.csv", ("state", "input_purity", "output_purity", "mode",
                                                 "input_population", "output_population",
                                                 "input_truncation_weight"), rows))
    return paths


def figure_power(scn, setup, out, threads):
    sw = scn.sweep
    powers = np.linspace(*sw.power_range_w, sw.power_points)

    def one(length_mm):
        s = setup.with_length(length_mm * 1e-3)
        p_star = power_for_unit_eta0(s, tuple(sw.power_bracket_w))
        eta0 = np.array([mode_efficiencies(coupling_budget(s.with_power(p)))[0] for p in powers])
        return length_mm, p_star, schmidt_modes(s)[0].schmidt_number, eta0

    rows, summary = [], []
    for length_mm, p_star, k, eta0 in run_parallel(one, sw.lengths_mm, threads):
        summary.append((length_mm, p_star, k))
        peak = eta0.max() if eta0.max() > 0 else 1.0
        rows += [(length_mm, p, e, e / peak) for p, e in zip(powers, eta0)]
    return [_write_rows(out / "power.csv", ("length_mm", "peak_power_w", "eta0", "eta0_over_max"), rows),
            _write_rows(out / "power_summary.csv", ("length_mm", "power_for_unit_eta0_w", "K_JSD"), summary)]


def figure_duration(scn, setup, out, threads):
    sw = scn.sweep
    durations = np.geomspace(sw.duration_range_ps[0] * 1e-12, sw.duration_range_ps[1] * 1e-12, sw.duration_points)
    jobs = [(length, tau) for length in sw.lengths_mm for tau in durations]
    ks = run_parallel(lambda j: schmidt_modes(setup.with_length(j[0] * 1e-3).with_duration(j[1]))[0].schmidt_number,
                      jobs, threads)
    rows = [(length, tau * 1e12, k) for (length, tau), k in zip(jobs, ks)]
    bracket = tuple(x * 1e-12 for x in sw.duration_bracket_ps)
    optima = run_parallel(lambda length: (length, *optimal_pulse_duration(setup.with_length(length * 1e-3), bracket)),
                          sw.lengths_mm, threads)
    return [_write_rows(out / "duration.csv", ("length_mm", "duration_ps", "K_JSD"), rows),
            _write_rows(out / "duration_optima.csv", ("length_mm", "optimal_duration_ps", "K_min"),
                        [(length, tau * 1e12, k) for length, tau, k in optima])]


def _noise_figure(scn, setup, out, threads, variable):
    sw = scn.sweep
    if variable == "sigma_frequency":
        lo, hi = (x * GHZ for x in sw.noise_frequency_range_ghz)
        name = "noise_freq"
    else:
        lo, hi = (x * 1e-12 for x in sw.noise_time_range_ps)
        name = "noise_time"
    spec = SweepSpec(variable, lo, hi, sw.noise_points, _noise_free(setup))
    results = purity_noise_sweep(spec, [t * 1e-12 for t in sw.noise_durations_ps], tuple(sw.power_bracket_w), threads)
    paths = []
    for tau, result in results.items():
        p = out / f"{name}_tau{tau * 1e12:g}ps.csv"
        result.write_csv(p)
        paths.append(p)
    return paths


def figure_tradeoff(scn, setup, out, threads):
    powers = np.linspace(*scn.sweep.power_range_w, scn.sweep.power_points)
    p = out / "tradeoff.csv"
    efficiency_purity_tradeoff(setup, powers, threads).write_csv(p)
    return [p]


def figure_geometry(scn, setup, out, threads):
    sw = scn.sweep
    g = geometry_comparison(setup, counter_bracket=tuple(x * 1e-12 for x in sw.duration_bracket_ps),
                            co_bracket=tuple(x * 1e-12 for x in sw.co_duration_bracket_ps))
    header = g._fields + ("bandwidth_ratio",)
    return [_write_rows(out / "geometry.csv", header, [tuple(g) + (g.bandwidth_ratio,)])]


def figure_qpm(scn, setup, out, threads):
    rows = qpm_order_tradeoff(setup, scn.sweep.qpm_orders, scn.sweep.reference_power_w, threads)
    return [_write_rows(out / "qpm.csv", ("qpm_order", "poling_period_m", "eta0", "eta0_normalized",
                                          "output_purity"), rows)]


FIGURE_DRIVERS = {
    "modes": figure_modes,
    "power": figure_power,
    "duration": figure_duration,
    "noise_freq": lambda *a: _noise_figure(*a, "sigma_frequency"),
    "noise_time": lambda *a: _noise_figure(*a, "sigma_time"),
    "tradeoff": figure_tradeoff,
    "geometry": figure_geometry,
    "qpm": figure_qpm,
}


def cmd_figure(scn: Scenario, out: Path, threads: int, figure: str) -> list[Path]:
    setup = scn.to_setup()
    gate = convergence_check(setup, scn.grid.convergence_tol)
    if not gate.passed:
        ni, no = setup.grid_points
        raise ConvergenceError(
            f"grid not converged: doubling the resolution changes results by {gate.max_change:.2e} "
            f"(> {scn.grid.convergence_tol:g}); try points_i = {2 * ni}, points_o = {2 * no}")
    paths = FIGURE_DRIVERS[figure](scn, setup, out, threads)
    write_manifest(out, f"figure {figure}", scn, setup, threads, paths,
                   {"figure": figure, "convergence_max_change": gate.max_change})
    for p in paths:
        print(p)
    return paths


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfc", description="Counter-propagating quantum frequency conversion model")
    ap.add_argument("--version", action="version", version=f"qfc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("poling", "solve the poling period"),
                       ("figure", "emit the dataset behind one figure"),
                       ("purify", "run the pipeline at the configured operating point")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--scenario", help="scenario TOML (default: bundled reference scenario)")
        p.add_argument("--out", default="qfc_out", help="output directory")
        p.add_argument("--threads", type=int, default=1)
        if name == "figure":
            p.add_argument("--figure", required=True, choices=FIGURES)
        if name == "purify":
            p.add_argument("--filter-benchmark", action="store_true",
                           help="add a passive-filter comparison to the report")
    return ap


def _tag(exc: Exception) -> str:
    return f"{type(exc).__module__}: {type(exc).__name__}: {exc}"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("qfc: error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        scn = load_scenario(args.scenario)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "poling":
            cmd_poling(scn, out, args.threads)
        elif args.command == "purify":
            cmd_purify(scn, out, args.threads, args.filter_benchmark)
        else:
            cmd_figure(scn, out, args.threads, args.figure)
    except ConfigError as exc:
        print(f"qfc: config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, *INFEASIBLE) as exc:
        print(f"qfc: infeasible: {_tag(exc)}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # remaining ValueErrors come from invariant checks on user-supplied values
        print(f"qfc: invalid input: {_tag(exc)}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
