from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import curve_fit

from qfc.dispersion import Geometry
from qfc.fields import PumpPulse
from qfc.optimize import (COLUMNS, BracketError, Setup, SweepResult, SweepSpec, convergence_check,
                          efficiency_purity_tradeoff, evaluate, optimal_pulse_duration, power_for_unit_eta0,
                          purity_noise_sweep, run_parallel, run_sweep, schmidt_modes)

GHZ = 2 * np.pi * 1e9


def rows_equal(a, b):
    return all(np.array_equal(np.array(x, dtype=float), np.array(y, dtype=float), equal_nan=True)
               for x, y in zip(a, b)) and len(a) == len(b)


def test_setup_solves_period_and_checks_pump(paper_setup):
    assert paper_setup.crystal.poling_period == pytest.approx(360e-9, rel=0.15)
    wrong = PumpPulse(2000e-9, 13e-12, 60.0)
    with pytest.raises(ValueError, match="pump carrier"):
        replace(paper_setup, pump=wrong)


def test_qpm_order_rescales_explicit_nonlinearity(paper_setup):
    explicit = replace(paper_setup, crystal=replace(paper_setup.crystal, d_eff=10e-12))
    third = explicit.with_qpm_order(3)
    assert third.crystal.d_eff == pytest.approx(10e-12 / 3)
    assert third.crystal.poling_period == pytest.approx(3 * paper_setup.crystal.poling_period, rel=1e-12)


def test_refined_setup_doubles_resolution(paper_setup):
    r = paper_setup.refined(2)
    assert r.grid_points == (1023, 1023) and r.photon_refinement == 2


def test_optimal_duration_needs_interior_minimum(paper_setup):
    with pytest.raises(BracketError):
        optimal_pulse_duration(paper_setup, (1e-12, 3e-12))
    with pytest.raises(BracketError):
        optimal_pulse_duration(paper_setup, (5e-12, 1e-12))


def test_optimal_duration_grows_with_length(paper_setup):
    t10, k10 = optimal_pulse_duration(paper_setup.with_length(10e-3))
    t20, k20 = optimal_pulse_duration(paper_setup.with_length(20e-3))
    assert t20 > t10
    # the counter-propagating optimum tracks the transit time, so it is close to linear in L
    assert t20 / t10 == pytest.approx(2.0, rel=0.02)
    assert 1.0 <= k10 < 1.07 and 1.0 <= k20 < 1.07


def test_unit_power_converts_zeroth_mode_through_pipeline(paper_setup):
    p = power_for_unit_eta0(paper_setup)
    assert evaluate(paper_setup.with_power(p)).eta0 >= 1 - 1e-6


def test_power_bracket_errors(paper_setup):
    with pytest.raises(BracketError):
        power_for_unit_eta0(paper_setup, (0.0, 10.0))
    with pytest.raises(BracketError):
        power_for_unit_eta0(paper_setup, (10.0, 5.0))


def test_required_power_falls_with_length(paper_setup):
    powers = [power_for_unit_eta0(paper_setup.with_length(L * 1e-3)) for L in (10, 15, 20, 25)]
    assert np.all(np.diff(powers) < 0)


def test_quadrupling_length_quarters_power(paper_setup):
    short, long_ = paper_setup.with_length(5e-3), paper_setup.with_length(20e-3)
    p_s, p_l = power_for_unit_eta0(short), power_for_unit_eta0(long_)
    d_s, d_l = schmidt_modes(short)[0].weights[0], schmidt_modes(long_)[0].weights[0]
    # theta_0 = sqrt(d0) theta and theta**2 is proportional to L P: the single-mode correction is d0
    assert p_l / p_s == pytest.approx(0.25 * d_s / d_l, rel=1e-2)
    assert p_l / p_s == pytest.approx(0.25, rel=0.05)


def test_eta0_follows_sine_squared_of_root_power(paper_setup):
    powers = np.linspace(0.0, 150.0, 31)
    eta0 = efficiency_purity_tradeoff(paper_setup, powers).column("eta0")
    (c_fit,), _ = curve_fit(lambda p, c: np.sin(c * np.sqrt(p)) ** 2, powers, eta0, p0=[0.2])
    assert np.max(np.abs(np.sin(c_fit * np.sqrt(powers)) ** 2 - eta0)) < 1e-6


@pytest.fixture(scope="module")
def power_spec(paper_setup):
    return SweepSpec("peak_power", 10.0, 120.0, 6, paper_setup)


def test_sweeps_are_deterministic_and_thread_independent(power_spec):
    a = run_sweep(power_spec, threads=1)
    b = run_sweep(power_spec, threads=1)
    c = run_sweep(power_spec, threads=4)
    assert rows_equal(a.rows, b.rows) and rows_equal(a.rows, c.rows)
    assert len(a.rows) == power_spec.points
    for name in ("eta0", "eta1", "eta2", "eta3", "eta4", "eta0_normalized", "transmission"):
        col = a.column(name)
        assert np.all((col >= 0) & (col <= 1))


def test_sweep_csv_round_trip(tmp_path, power_spec):
    res = run_sweep(power_spec)
    path = tmp_path / "sweep.csv"
    res.write_csv(path)
    with open(path) as fh:
        assert fh.readline().strip() == "# variable=peak_power"
        assert fh.readline().strip() == ",".join(COLUMNS)
    back = SweepResult.read_csv(path)
    assert back.variable == "peak_power" and rows_equal(back.rows, res.rows)


@given(st.floats(0.0, 1e3), st.floats(1e-3, 1e3), st.integers(2, 50))
def test_sweep_spec_values(start, width, points):
    # validation and values() never touch the fixed setup
    spec = SweepSpec("peak_power", start, start + width, points, None)
    v = spec.values()
    assert v.size == points and v[0] == start and v[-1] == pytest.approx(start + width)
    assert np.all(np.diff(v) > 0)


@pytest.mark.parametrize("kwargs", [dict(start=5.0, stop=5.0), dict(start=5.0, stop=1.0), dict(points=1),
                                    dict(variable="temperature"), dict(scale="cubic"),
                                    dict(scale="log", start=0.0)])
def test_sweep_spec_rejects_bad_ranges(paper_setup, kwargs):
    base = dict(variable="peak_power", start=0.0, stop=10.0, points=5, fixed=paper_setup)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SweepSpec(**base)


def test_qpm_order_sweep_uses_integers(paper_setup):
    spec = SweepSpec("qpm_order", 1, 3, 5, paper_setup)
    assert list(spec.values()) == [1.0, 2.0, 3.0]
    assert spec.setup_at(3.0).crystal.qpm_order == 3


def test_run_parallel_preserves_order():
    assert run_parallel(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]


@pytest.fixture(scope="module")
def noise_sweep(paper_setup, scenario):
    sw = scenario.sweep
    lo, hi = sw.noise_frequency_range_ghz
    base = paper_setup.with_jitter(0.0, 0.0)
    spec = SweepSpec("sigma_frequency", lo * GHZ, hi * GHZ, 6, base)
    return purity_noise_sweep(spec, [t * 1e-12 for t in sw.noise_durations_ps], sw.power_bracket_w)


def test_zero_noise_stays_pure(noise_sweep):
    for res in noise_sweep.values():
        assert res.rows[0].input_purity == pytest.approx(1.0, abs=1e-9)
        assert res.rows[0].output_purity == pytest.approx(1.0, abs=1e-9)


def test_conversion_purifies_at_every_noise_point_and_duration(noise_sweep):
    for res in noise_sweep.values():
        noisy = res.rows[1:]
        assert all(r.output_purity > r.input_purity for r in noisy)


def test_thirteen_picosecond_pump_dominates_in_output_purity(noise_sweep):
    ref = noise_sweep[13e-12].column("output_purity")
    for tau, res in noise_sweep.items():
        assert np.all(ref >= res.column("output_purity") - 1e-12), f"{tau * 1e12:.0f} ps beats 13 ps"


def test_noise_sweep_rejects_other_variables(power_spec):
    with pytest.raises(ValueError):
        purity_noise_sweep(power_spec, [13e-12])


@pytest.fixture(scope="module")
def tradeoff(paper_setup):
    return efficiency_purity_tradeoff(paper_setup, np.linspace(0.0, 150.0, 31), threads=2)


def test_purity_and_normalized_efficiency_fall_with_power(tradeoff):
    p = tradeoff.column("variable_value")
    low = (p > 0) & (p <= 60.0)
    assert np.all(np.diff(tradeoff.column("output_purity")[low]) < 0)
    assert np.all(np.diff(tradeoff.column("eta0_normalized")[low]) < 0)


def test_higher_modes_keep_rising_past_unit_efficiency(tradeoff):
    p = tradeoff.column("variable_value")
    high = p >= 60.0
    assert np.all(np.diff(tradeoff.column("eta0")[high]) < 0)
    assert np.all(np.diff(tradeoff.column("eta1")[high]) > 0)
    assert np.all(np.diff(tradeoff.column("eta2")[high]) > 0)


def test_zero_power_row_is_small_signal_limit(tradeoff):
    row = tradeoff.rows[0]
    assert row.variable_value == 0 and row.eta0 == 0 and row.transmission == 0
    assert 0 < row.eta0_normalized <= 1 and row.output_purity > row.input_purity


def test_geometries_reach_matched_schmidt_number(geometry_result):
    g = geometry_result
    assert g.feasible
    assert abs(g.k_co - g.k_counter) <= 0.01
    assert g.period_co > 10e-6 and g.period_counter < 1e-6


def test_geometry_comparison_requires_counter_first(paper_setup):
    with pytest.raises(ValueError):
        from qfc.optimize import geometry_comparison
        geometry_comparison(paper_setup.with_geometry(Geometry.CO_PROPAGATING))


def test_first_order_converts_fully_at_reference_power(qpm_rows):
    assert qpm_rows[1].eta0 == pytest.approx(1.0, abs=1e-6)
    assert qpm_rows[3].period == pytest.approx(3 * qpm_rows[1].period, rel=1e-12)


def test_qpm_orders_must_be_positive(paper_setup):
    from qfc.optimize import qpm_order_tradeoff
    with pytest.raises(ValueError):
        qpm_order_tradeoff(paper_setup, [0, 1])


def test_reference_point_is_converged(paper_setup):
    rep = convergence_check(paper_setup)
    assert rep.passed and rep.max_change < 1e-4


def test_setup_is_hashable_for_caching(paper_setup):
    assert hash(paper_setup) == hash(Setup(**{f: getattr(paper_setup, f) for f in paper_setup.__dataclass_fields__}))
