"""Monte Carlo harness: experiments, slopes, runtime table, landscape sweep."""

import dataclasses

import numpy as np
import pytest

import _oracles as orc
from gradmusic.estimator import EstimatorConfig, FixedIterations, GradientTermination
from gradmusic.harness import (
    ExperimentSpec,
    LandscapeInstance,
    check_instance,
    clean_reference,
    default_signal,
    fit_slope,
    generate_instance,
    landscape_sweep,
    log_spaced_m,
    MSummary,
    nearest_rank,
    perturbed_subspace,
    run_experiment,
    run_slope_matrix,
    runtime_benchmark,
    summarize,
    write_runtime_outputs,
    write_slope_outputs,
)
from gradmusic.landscape import LandscapeHandle, locate_minimum
from gradmusic.noise import GaussianDiagonal
from gradmusic.signal import fourier_matrix, min_separation
from gradmusic.subspace import Subspace, sine_theta

TWO_PI = 2.0 * np.pi

VALUE_FIELDS = [f.name for f in dataclasses.fields(
    __import__("gradmusic.harness", fromlist=["TrialRecord"]).TrialRecord)
    if not f.name.startswith("seconds_")]


def record_values(rec):
    return tuple(getattr(rec, name) for name in VALUE_FIELDS)


def test_default_signal_shape():
    sig = default_signal()
    assert sig.s == 3
    assert np.allclose(sig.frequencies, [0.5, 2.0, 4.0])
    assert np.allclose(np.abs(sig.amplitudes), 1.0)
    assert min_separation(sig.frequencies) >= 8 * np.pi / 100


def test_log_spaced_m():
    assert log_spaced_m() == (100, 237, 562, 1333, 3162)
    assert log_spaced_m(100, 400, 3) == (100, 200, 400)


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(noise=GaussianDiagonal(sigma=0.1), m_values=(200, 100))
    with pytest.raises(ValueError):
        ExperimentSpec(noise=GaussianDiagonal(sigma=0.1), m_values=(100,),
                       trials=0)
    spec = ExperimentSpec(noise=GaussianDiagonal(sigma=0.1), m_values=(100,))
    cfg = spec.config_for(100)
    assert isinstance(cfg.policy, GradientTermination)
    assert cfg.policy.epsilon == pytest.approx(0.01 / 100)
    override = ExperimentSpec(noise=GaussianDiagonal(sigma=0.1),
                              m_values=(100,),
                              config=EstimatorConfig(policy=FixedIterations(40)))
    assert override.config_for(100).policy == FixedIterations(40)


def test_nearest_rank_percentile():
    vals = list(range(1, 11))  # 1..10
    assert nearest_rank(vals, 90.0) == 9
    assert nearest_rank(vals, 100.0) == 10
    assert nearest_rank(vals, 1.0) == 1


def test_clean_reference_consistency():
    sig = default_signal()
    m = 120
    ref = clean_reference(sig, m)
    eye = ref.subspace.basis.conj().T @ ref.subspace.basis
    assert np.allclose(eye, np.eye(3), atol=1e-10)
    assert ref.sigma_s >= 0.75 * sig.a_min * m


def test_run_experiment_zero_noise():
    spec = ExperimentSpec(noise=GaussianDiagonal(sigma=0.0),
                          m_values=(100, 200), trials=2, seed=3)
    res = run_experiment(spec)
    assert all(not r.failed for r in res.records)
    assert all(r.freq_error <= 1e-8 for r in res.records)
    assert all(r.amp_error <= 1e-8 for r in res.records)
    assert res.freq_slope is None  # errors at the float noise floor
    assert res.amp_slope is None


def test_run_experiment_reproducible_and_thread_invariant():
    spec = ExperimentSpec(noise=GaussianDiagonal(sigma=0.1),
                          m_values=(100, 150), trials=3, seed=11)
    a = run_experiment(spec, threads=1)
    b = run_experiment(spec, threads=1)
    c = run_experiment(spec, threads=2)
    for ra, rb, rc in zip(a.records, b.records, c.records):
        assert record_values(ra) == record_values(rb)
        assert record_values(ra) == record_values(rc)


def test_run_experiment_noisy_records_have_diagnostics():
    spec = ExperimentSpec(noise=GaussianDiagonal(sigma=0.1),
                          m_values=(150,), trials=4, seed=5)
    res = run_experiment(spec)
    ok = [r for r in res.records if not r.failed]
    assert len(ok) == 4
    for r in ok:
        assert r.theta is not None and 0 <= r.theta < 1
        assert r.rho is not None and r.rho > 0
        assert r.s_hat_correct
        assert r.coarse_evals > 0 and r.gradient_evals > 0
        assert r.freq_error > 0


def test_run_experiment_records_failures():
    spec = ExperimentSpec(noise=GaussianDiagonal(sigma=100.0),
                          m_values=(100,), trials=3, seed=9)
    res = run_experiment(spec)
    failed = [r for r in res.records if r.failed]
    assert failed  # overwhelming noise must break at least one stage
    for r in failed:
        assert r.failure_stage is not None
        assert r.freq_error is None and r.amp_error is None


def test_summarize_and_nearest_rank_integration():
    spec = ExperimentSpec(noise=GaussianDiagonal(sigma=0.1),
                          m_values=(100,), trials=5, seed=21, percentile=90.0)
    res = run_experiment(spec)
    errs = sorted(r.freq_error for r in res.records)
    want = errs[int(np.ceil(0.9 * 5)) - 1]
    assert res.summaries[0].freq_percentile == pytest.approx(want)


def test_fit_slope_exact_power_law():
    rows = [MSummary(m=m, trials=1, successes=1,
                     freq_percentile=2.0 * m ** -1.5,
                     amp_percentile=0.3 * m ** -0.5)
            for m in (100, 200, 400, 800)]
    assert fit_slope(rows, "freq_percentile") == pytest.approx(-1.5, abs=1e-12)
    assert fit_slope(rows, "amp_percentile") == pytest.approx(-0.5, abs=1e-12)
    assert fit_slope(rows[:1], "freq_percentile") is None


def test_run_slope_matrix_tiny_and_outputs(tmp_path):
    matrix = run_slope_matrix(sigma=0.05, r_values=(0.0,),
                              m_values=(100, 200), trials=2, seed=2)
    rows = list(matrix.slope_rows())
    assert len(rows) == 1
    r, fslope, aslope = rows[0]
    assert r == 0.0
    assert fslope is not None and fslope < 0
    paths = write_slope_outputs(matrix, str(tmp_path / "results.csv"))
    for key in ("results", "summary", "plot"):
        content = open(paths[key]).read()
        assert content
    header = open(paths["results"]).readline()
    assert header.startswith("r,m,trial")


def test_runtime_benchmark_small(tmp_path):
    report = runtime_benchmark(m=200, sigma=0.01, trials=2, seed=3)
    assert report.classical_spacing == pytest.approx(0.1 * 0.01 * 200 ** -1.5)
    assert len(report.rows) == 2
    mesh = report.classical_spacing / 2
    slack = 37 * (0.01 / 200) / 200  # termination residual of the default policy
    for row in report.rows:
        assert row.agreement is not None
        assert row.agreement <= mesh + slack
        assert row.classical_evals > row.coarse_evals + row.gradient_evals
    assert report.speedup > 1
    assert 0.5 <= report.measured_ratio / report.predicted_ratio <= 2.0
    paths = write_runtime_outputs(report, str(tmp_path / "runtime.csv"))
    for key in ("table", "summary", "plot"):
        assert open(paths[key]).read()


def test_perturbed_subspace_hits_target():
    rng = np.random.Generator(np.random.Philox(key=[101, 0]))
    m, s = 100, 3
    x = orc.separated_frequencies(rng, s, 8 * np.pi / m)
    q, _ = np.linalg.qr(fourier_matrix(m, x))
    exact = Subspace(m=m, s=s, basis=q)
    target = 0.007
    sub, measured = perturbed_subspace(exact, rng, target)
    assert measured == pytest.approx(target, rel=1e-6)
    assert sine_theta(exact, sub) == pytest.approx(measured, abs=1e-10)


def test_generate_instance_properties():
    a = generate_instance(7, seed=42)
    b = generate_instance(7, seed=42)
    assert np.array_equal(a.frequencies, b.frequencies)
    assert a.theta == b.theta
    assert a.m in (100, 200, 500)
    assert min_separation(a.frequencies) >= 8 * np.pi / a.m
    assert 0 < a.theta <= 0.01
    assert len(a.minima) == a.s


def test_check_instance_zero_theta_matches_truth():
    """With an exact subspace the located minima coincide with the truth."""
    sig = default_signal()
    m = 150
    ref = clean_reference(sig, m)
    handle = LandscapeHandle(ref.subspace)
    minima = np.array([locate_minimum(handle, xj, np.pi / (3 * m))
                       for xj in sig.frequencies])
    assert np.max(np.abs(minima - sig.frequencies)) < 1e-9
    inst = LandscapeInstance(index=0, m=m, s=3, frequencies=sig.frequencies,
                             theta=0.0, subspace=ref.subspace, minima=minima)
    assert check_instance(inst, grid_points=500) == []


def test_check_instance_negative_control():
    """A deliberate separation violation reports which clause breaks first."""
    m, s = 100, 2
    x = np.array([1.0, 1.0 + 2 * np.pi / m])  # half the guaranteed separation
    q, _ = np.linalg.qr(fourier_matrix(m, x))
    sub = Subspace(m=m, s=s, basis=q)
    handle = LandscapeHandle(sub)
    minima = np.array([locate_minimum(handle, xj, np.pi / (3 * m)) for xj in x])
    inst = LandscapeInstance(index=0, m=m, s=s, frequencies=x, theta=0.0,
                             subspace=sub, minima=minima)
    violations = check_instance(inst, grid_points=1000)
    assert violations
    first = violations[0]
    assert first.clause
    assert first.detail
    print(f"separation negative control: first breaking clause = {first.clause}")


def test_landscape_sweep_small():
    report = landscape_sweep(6, seed=1)
    assert report.count == 6
    assert len(report.instances) == 6
    assert report.ok, report.violations
