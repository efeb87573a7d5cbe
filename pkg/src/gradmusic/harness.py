"""Monte Carlo experiments: error-rate slopes, runtime comparison, and the
landscape invariant sweep.

Everything here is deterministic given the master seed: trials draw noise
through counter-based streams keyed by (seed, m-index, trial), so any single
trial can be reproduced in isolation, and aggregation is order-independent.
"""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import EstimationError
from .estimator import (
    EstimatorConfig,
    GradientTermination,
    LandscapeHandle,
    classical_music,
    find_clusters,
    full_pipeline,
    make_grid,
    threshold_accept,
    uniform_grid,
)
from .landscape import locate_minimum
from .noise import GaussianDiagonal, NoiseModel, draw
from .signal import (
    SampleVector,
    SignalParams,
    TWO_PI,
    fourier_matrix,
    matching_distance,
    min_separation,
    synthesize,
    torus_distance,
)
from .subspace import Subspace, operator_norm, sine_theta, toeplitz, top_spectrum

# Absolute slack applied when checking certified strict inequalities in
# floating point (scaled by the natural size of each quantity).
_CHECK_SLACK = 1e-9

# Certified landscape constants (3-significant-digit displayed values).
CURVATURE_LOWER = 0.0271
CURVATURE_UPPER = 0.269
SLOPE_LOWER = 0.0306
SLOPE_CAP = 0.292
FAR_FLOOR = 0.529
INNER_RADIUS_SCALE = np.pi / 3.0       # I_j radius = pi/(3m)
BASIN_RADIUS_SCALE = 4.0 * np.pi / 3.0  # B_j radius = 4pi/(3m)


def default_signal() -> SignalParams:
    """The fixed three-spike signal used by all benchmark experiments.

    Positions are absolute so the separation (1.5 rad) clears 8pi/m for
    every m >= 17; amplitudes have unit modulus and fixed phases.
    """
    return SignalParams(
        frequencies=np.array([0.5, 2.0, 4.0]),
        amplitudes=np.exp(1j * np.array([0.0, 2.1, 4.3])),
    )


def log_spaced_m(m_min: int = 100, m_max: int = 3162, count: int = 5) -> tuple:
    """Log-uniformly spaced integer bandwidths, endpoints included."""
    if not (1 <= m_min < m_max and count >= 2):
        raise ValueError("need 1 <= m_min < m_max and count >= 2")
    vals = np.unique(np.round(np.logspace(math.log10(m_min),
                                          math.log10(m_max),
                                          count)).astype(int))
    return tuple(int(v) for v in vals)


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo experiment: a fixed signal, a noise model, a list of
    bandwidths, and the trial/percentile/seed protocol."""

    noise: NoiseModel
    m_values: tuple
    trials: int = 50
    percentile: float = 90.0
    seed: int = 0
    signal: SignalParams = field(default_factory=default_signal)
    config: EstimatorConfig | None = None

    def __post_init__(self):
        ms = tuple(int(m) for m in self.m_values)
        if len(ms) == 0 or any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError("m values must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.percentile <= 100.0:
            raise ValueError("percentile must lie in (0, 100]")
        object.__setattr__(self, "m_values", ms)

    def config_for(self, m: int) -> EstimatorConfig:
        """Per-m estimator configuration.

        The default stops each descent once |q'| drops below 0.01 (i.e.
        epsilon = 0.01/m), with the standard iteration window [31, 300].
        """
        if self.config is not None:
            return self.config
        return EstimatorConfig(
            policy=GradientTermination(epsilon=0.01 / m, n_min=31, n_max=300)
        )


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of a single trial; failures carry a stage, not error values."""

    m: int
    trial: int
    freq_error: float | None
    amp_error: float | None
    s_hat: int | None
    s_hat_correct: bool | None
    theta: float | None
    rho: float | None
    seconds_total: float
    seconds_svd: float
    seconds_gradient: float
    seconds_amplitudes: float
    coarse_evals: int | None
    gradient_evals: int | None
    iterations_max: int | None
    auto_n: int | None
    flagged_any: bool | None
    failed: bool
    failure_stage: str | None

    def __post_init__(self):
        if not self.failed:
            if self.freq_error is None or self.amp_error is None:
                raise ValueError("successful trials must carry both errors")
            if self.freq_error < 0 or self.amp_error < 0:
                raise ValueError("errors must be nonnegative")
        else:
            if self.freq_error is not None or self.amp_error is not None:
                raise ValueError("failed trials must not carry error values")


@dataclass(frozen=True)
class CleanReference:
    """Noiseless diagnostics for one (signal, m): exact subspace and gap."""

    subspace: Subspace
    sigma_s: float
    clean: SampleVector


def clean_reference(params: SignalParams, m: int) -> CleanReference:
    y = synthesize(params, m)
    phi = fourier_matrix(m, params.frequencies)
    q, _ = np.linalg.qr(phi)
    sub = Subspace(m=m, s=params.s, basis=q)
    sigma_s = float(top_spectrum(toeplitz(y), params.s).values[-1])
    return CleanReference(subspace=sub, sigma_s=sigma_s, clean=y)


def _noise_stream(m_index: int, trial: int) -> int:
    return (m_index << 32) | trial


def run_trial(spec: ExperimentSpec, m: int, m_index: int, trial: int,
              reference: CleanReference | None = None) -> TrialRecord:
    """One seeded trial: synthesize, corrupt, estimate, diagnose."""
    ref = reference if reference is not None else clean_reference(spec.signal, m)
    eta = draw(spec.noise, m, spec.seed, _noise_stream(m_index, trial))
    noisy = SampleVector(m=m, values=ref.clean.values + eta.values)
    rho = 2.0 * operator_norm(toeplitz(eta)) / ref.sigma_s

    start = time.perf_counter()
    try:
        result = full_pipeline(noisy, config=spec.config_for(m))
    except EstimationError as err:
        total = time.perf_counter() - start
        return TrialRecord(
            m=m, trial=trial, freq_error=None, amp_error=None,
            s_hat=None, s_hat_correct=None, theta=None, rho=rho,
            seconds_total=total, seconds_svd=0.0, seconds_gradient=0.0,
            seconds_amplitudes=0.0, coarse_evals=None, gradient_evals=None,
            iterations_max=None, auto_n=None, flagged_any=None,
            failed=True, failure_stage=err.stage or "unknown",
        )
    total = time.perf_counter() - start

    stages = result.stage_seconds
    sec_svd = stages.get("svd", 0.0) + stages.get("subspace", 0.0)
    common = dict(
        m=m, trial=trial, s_hat=result.s_hat,
        seconds_total=total, seconds_svd=sec_svd,
        seconds_gradient=stages.get("gradient", 0.0),
        seconds_amplitudes=stages.get("amplitudes", 0.0),
        coarse_evals=result.coarse_evals, gradient_evals=result.gradient_evals,
        iterations_max=max(result.iterations) if result.iterations else 0,
        auto_n=result.auto_iterations, flagged_any=any(result.flagged),
        rho=rho,
    )
    if result.s_hat != spec.signal.s:
        return TrialRecord(freq_error=None, amp_error=None, s_hat_correct=False,
                           theta=None, failed=True, failure_stage="detection",
                           **common)
    theta = sine_theta(ref.subspace, result.subspace)
    perm, freq_error = matching_distance(spec.signal.frequencies,
                                         result.frequencies)
    amp_error = float(np.max(np.abs(spec.signal.amplitudes
                                    - result.amplitudes[perm])))
    return TrialRecord(freq_error=float(freq_error), amp_error=amp_error,
                       s_hat_correct=True, theta=float(theta),
                       failed=False, failure_stage=None, **common)


def nearest_rank(values, pct: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    vals = np.sort(np.asarray(values, dtype=float))
    if len(vals) == 0:
        raise ValueError("percentile of an empty sample")
    if not 0.0 < pct <= 100.0:
        raise ValueError("percentile must lie in (0, 100]")
    rank = max(1, math.ceil(pct / 100.0 * len(vals)))
    return float(vals[rank - 1])


@dataclass(frozen=True)
class MSummary:
    m: int
    trials: int
    successes: int
    freq_percentile: float | None
    amp_percentile: float | None


def summarize(records, m_values, percentile: float) -> tuple:
    out = []
    for m in m_values:
        group = [r for r in records if r.m == m]
        ok = [r for r in group if not r.failed]
        out.append(MSummary(
            m=m, trials=len(group), successes=len(ok),
            freq_percentile=nearest_rank([r.freq_error for r in ok], percentile)
            if ok else None,
            amp_percentile=nearest_rank([r.amp_error for r in ok], percentile)
            if ok else None,
        ))
    return tuple(out)


def fit_slope(summaries, which: str) -> float | None:
    """Least-squares slope of log(error) against log(m).

    Returns None when fewer than two usable points exist (missing
    percentiles, or errors at the float noise floor as in noiseless runs).
    """
    ms, errs = [], []
    for row in summaries:
        e = getattr(row, which)
        if e is not None and e > 1e-10:
            ms.append(row.m)
            errs.append(e)
    if len(ms) < 2:
        return None
    coef = np.polyfit(np.log(np.asarray(ms, dtype=float)),
                      np.log(np.asarray(errs, dtype=float)), 1)
    return float(coef[0])


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    records: tuple
    summaries: tuple
    freq_slope: float | None
    amp_slope: float | None


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """All trials of an :class:`ExperimentSpec`, summarized per m with
    fitted log-log slopes.

    Individual trial failures are recorded, never fatal.  Identical
    (spec, seed) inputs give identical records.
    """
    refs = {m: clean_reference(spec.signal, m) for m in spec.m_values}
    jobs = [(mi, m, t)
            for mi, m in enumerate(spec.m_values)
            for t in range(spec.trials)]

    def one(job):
        mi, m, t = job
        return run_trial(spec, m, mi, t, refs[m])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = tuple(pool.map(one, jobs))
    else:
        records = tuple(one(j) for j in jobs)
    summaries = summarize(records, spec.m_values, spec.percentile)
    return ExperimentResult(
        spec=spec, records=records, summaries=summaries,
        freq_slope=fit_slope(summaries, "freq_percentile"),
        amp_slope=fit_slope(summaries, "amp_percentile"),
    )


@dataclass(frozen=True)
class SlopeMatrixResult:
    """Per-r experiment results for the error-rate benchmark."""

    sigma: float
    results: dict

    def slope_rows(self):
        for r, res in self.results.items():
            yield r, res.freq_slope, res.amp_slope


def run_slope_matrix(sigma: float = 0.1, r_values=(-0.25, 0.0, 0.25),
                     m_values=None, trials: int = 50, percentile: float = 90.0,
                     seed: int = 0, threads: int = 1,
                     signal: SignalParams | None = None) -> SlopeMatrixResult:
    """The error-rate experiment: one run per covariance exponent r.

    Expected slopes are r - 3/2 for frequencies and r - 1/2 for amplitudes.
    """
    ms = tuple(m_values) if m_values is not None else log_spaced_m()
    results = {}
    for r in r_values:
        spec = ExperimentSpec(
            noise=GaussianDiagonal(sigma=sigma, r=float(r)),
            m_values=ms, trials=trials, percentile=percentile, seed=seed,
            signal=signal if signal is not None else default_signal(),
        )
        results[float(r)] = run_experiment(spec, threads=threads)
    return SlopeMatrixResult(sigma=sigma, results=results)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


_RECORD_COLUMNS = (
    "m", "trial", "freq_error", "amp_error", "s_hat", "s_hat_correct",
    "theta", "rho", "seconds_total", "seconds_svd", "seconds_gradient",
    "seconds_amplitudes", "coarse_evals", "gradient_evals", "iterations_max",
    "auto_n", "flagged_any", "failed", "failure_stage",
)


def write_slope_outputs(matrix: SlopeMatrixResult, results_path: str) -> dict:
    """Write per-trial rows, the per-(r, m) summary, and a plotting script.

    Returns the paths written, keyed 'results', 'summary', 'plot'.
    """
    out_dir = os.path.dirname(os.path.abspath(results_path))
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "summary.csv")
    plot_path = os.path.join(out_dir, "plot_slopes.py")

    with open(results_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("r",) + _RECORD_COLUMNS)
        for r, res in matrix.results.items():
            for rec in res.records:
                w.writerow([_fmt(r)] + [_fmt(getattr(rec, c))
                                        for c in _RECORD_COLUMNS])

    with open(summary_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["r", "m", "trials", "successes", "freq_percentile",
                    "amp_percentile", "freq_slope", "amp_slope"])
        for r, res in matrix.results.items():
            for row in res.summaries:
                w.writerow([_fmt(r), row.m, row.trials, row.successes,
                            _fmt(row.freq_percentile),
                            _fmt(row.amp_percentile),
                            _fmt(res.freq_slope), _fmt(res.amp_slope)])

    with open(plot_path, "w") as f:
        f.write(_SLOPE_PLOT_SCRIPT)
    return {"results": results_path, "summary": summary_path,
            "plot": plot_path}


_SLOPE_PLOT_SCRIPT = '''\
"""Render the error-rate benchmark from summary.csv (same directory)."""
import csv
import os
from collections import defaultdict

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(here, "summary.csv"))))
fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
for ax, col, title in ((axes[0], "freq_percentile", "frequency error"),
                       (axes[1], "amp_percentile", "amplitude error")):
    series = defaultdict(list)
    slopes = {}
    for row in rows:
        if row[col]:
            series[row["r"]].append((int(row["m"]), float(row[col])))
        key = "freq_slope" if col == "freq_percentile" else "amp_slope"
        if row[key]:
            slopes[row["r"]] = float(row[key])
    for r, pts in sorted(series.items()):
        pts.sort()
        label = f"r={r}"
        if r in slopes:
            label += f" (slope {slopes[r]:+.2f})"
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=label)
    ax.set_xlabel("m")
    ax.set_ylabel(f"90th pct {title}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
fig.tight_layout()
out = os.path.join(here, "slopes.png")
fig.savefig(out, dpi=150)
print(f"wrote {out}")
'''


# ---------------------------------------------------------------------------
# runtime benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuntimeRow:
    trial: int
    seconds_svd: float
    seconds_gradient: float
    seconds_classical: float
    coarse_evals: int
    gradient_evals: int
    classical_evals: int
    agreement: float | None


@dataclass(frozen=True)
class RuntimeReport:
    m: int
    sigma: float
    trials: int
    classical_spacing: float
    rows: tuple
    worst_svd: float
    worst_gradient: float
    worst_classical: float
    speedup: float
    measured_ratio: float
    predicted_ratio: float


def runtime_benchmark(m: int = 1000, sigma: float = 0.01, trials: int = 10,
                      seed: int = 0, classical_spacing: float | None = None,
                      signal: SignalParams | None = None) -> RuntimeReport:
    """Wall-time comparison of the gradient and classical searches.

    Both methods share the SVD stage and subspace; the classical grid
    spacing defaults to 0.1 * sigma * m^{-3/2}.  Reported times are
    worst-case over trials; the eval-counter ratio is compared against the
    pure grid-size prediction.
    """
    params = signal if signal is not None else default_signal()
    spacing = classical_spacing if classical_spacing is not None \
        else 0.1 * sigma * m ** -1.5
    fine = uniform_grid(spacing)
    spec = ExperimentSpec(noise=GaussianDiagonal(sigma=sigma, r=0.0),
                          m_values=(m,), trials=trials, seed=seed,
                          signal=params)
    ref = clean_reference(params, m)
    rows = []
    for trial in range(trials):
        eta = draw(spec.noise, m, seed, _noise_stream(0, trial))
        noisy = SampleVector(m=m, values=ref.clean.values + eta.values)
        result = full_pipeline(noisy, config=spec.config_for(m))
        t0 = time.perf_counter()
        classical = classical_music(result.subspace, result.s_hat, fine)
        sec_classical = time.perf_counter() - t0
        agreement = None
        if result.s_hat == len(result.frequencies) \
                and len(classical.frequencies) == len(result.frequencies):
            _, agreement = matching_distance(result.frequencies,
                                             classical.frequencies)
            agreement = float(agreement)
        stages = result.stage_seconds
        rows.append(RuntimeRow(
            trial=trial,
            seconds_svd=stages.get("svd", 0.0) + stages.get("subspace", 0.0),
            seconds_gradient=stages.get("gradient", 0.0),
            seconds_classical=sec_classical,
            coarse_evals=result.coarse_evals,
            gradient_evals=result.gradient_evals,
            classical_evals=classical.evaluations,
            agreement=agreement,
        ))
    worst_grad = max(r.seconds_gradient for r in rows)
    worst_cls = max(r.seconds_classical for r in rows)
    measured = float(np.mean([r.classical_evals
                              / (r.coarse_evals + r.gradient_evals)
                              for r in rows]))
    predicted = float(np.mean([r.classical_evals / r.coarse_evals
                               for r in rows]))
    return RuntimeReport(
        m=m, sigma=sigma, trials=trials, classical_spacing=fine.spacing,
        rows=tuple(rows),
        worst_svd=max(r.seconds_svd for r in rows),
        worst_gradient=worst_grad,
        worst_classical=worst_cls,
        speedup=worst_cls / worst_grad if worst_grad > 0 else math.inf,
        measured_ratio=measured,
        predicted_ratio=predicted,
    )


def write_runtime_outputs(report: RuntimeReport, table_path: str) -> dict:
    """Write the per-trial timing table, aggregate summary, and plot script."""
    out_dir = os.path.dirname(os.path.abspath(table_path))
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "runtime_summary.csv")
    plot_path = os.path.join(out_dir, "plot_runtime.py")
    with open(table_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["trial", "seconds_svd", "seconds_gradient",
                    "seconds_classical", "coarse_evals", "gradient_evals",
                    "classical_evals", "agreement"])
        for r in report.rows:
            w.writerow([r.trial, _fmt(r.seconds_svd), _fmt(r.seconds_gradient),
                        _fmt(r.seconds_classical), r.coarse_evals,
                        r.gradient_evals, r.classical_evals,
                        _fmt(r.agreement)])
    with open(summary_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["m", "sigma", "trials", "classical_spacing", "worst_svd",
                    "worst_gradient", "worst_classical", "speedup",
                    "measured_ratio", "predicted_ratio"])
        w.writerow([report.m, _fmt(report.sigma), report.trials,
                    _fmt(report.classical_spacing), _fmt(report.worst_svd),
                    _fmt(report.worst_gradient), _fmt(report.worst_classical),
                    _fmt(report.speedup), _fmt(report.measured_ratio),
                    _fmt(report.predicted_ratio)])
    with open(plot_path, "w") as f:
        f.write(_RUNTIME_PLOT_SCRIPT)
    return {"table": table_path, "summary": summary_path, "plot": plot_path}


_RUNTIME_PLOT_SCRIPT = '''\
"""Render the runtime comparison from the timing table (same directory)."""
import csv
import glob
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
candidates = [p for p in glob.glob(os.path.join(here, "*.csv"))
              if "summary" not in os.path.basename(p)]
rows = list(csv.DictReader(open(sorted(candidates)[0])))
trials = [int(r["trial"]) for r in rows]
fig, ax = plt.subplots(figsize=(7, 4.5))
for key, label in (("seconds_svd", "SVD stage"),
                   ("seconds_gradient", "gradient search"),
                   ("seconds_classical", "classical search")):
    ax.semilogy(trials, [float(r[key]) for r in rows], "o-", label=label)
ax.set_xlabel("trial")
ax.set_ylabel("wall time (s)")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
out = os.path.join(here, "runtime.png")
fig.savefig(out, dpi=150)
print(f"wrote {out}")
'''


# ---------------------------------------------------------------------------
# landscape invariant sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LandscapeInstance:
    """A randomized (subspace, frequencies) pair with measured distance."""

    index: int
    m: int
    s: int
    frequencies: np.ndarray
    theta: float
    subspace: Subspace
    minima: np.ndarray


@dataclass(frozen=True)
class Violation:
    instance_index: int
    m: int
    s: int
    theta: float
    clause: str
    detail: str


@dataclass(frozen=True)
class SweepReport:
    count: int
    violations: tuple
    instances: tuple  # (index, m, s, theta) rows

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0


def _fast_sine(A: np.ndarray, B: np.ndarray) -> float:
    """max principal-angle sine via the cheap residual factor (m x s SVD)."""
    return float(scipy.linalg.svdvals(B - A @ (A.conj().T @ B))[0])


def _random_frequencies(rng: np.random.Generator, s: int,
                        min_sep: float) -> np.ndarray:
    for _ in range(10000):
        x = np.sort(rng.uniform(0.0, TWO_PI, s))
        if s == 1 or min_separation(x) >= min_sep:
            return x
    raise RuntimeError("separation rejection sampling did not terminate")


def _orth(mat: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(mat)
    return q


def perturbed_subspace(exact: Subspace, rng: np.random.Generator,
                       theta_target: float) -> tuple:
    """Rotate ``exact`` to a measured sine-theta distance near the target.

    A random complex direction is mixed in with a bisected weight until the
    measured distance lands within 2% of the target (which must be < 1).
    Returns (subspace, measured_theta).
    """
    if not 0.0 < theta_target < 1.0:
        raise ValueError("theta target must lie in (0, 1)")
    A = exact.basis
    m, s = A.shape
    G = rng.standard_normal((m, s)) + 1j * rng.standard_normal((m, s))
    G /= np.linalg.norm(G, 2)

    def measure(delta):
        return _fast_sine(A, _orth(A + delta * G))

    lo, hi = 0.0, theta_target
    while measure(hi) < theta_target and hi < 1e6:
        hi *= 4.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if measure(mid) < theta_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    delta = 0.5 * (lo + hi)
    basis = _orth(A + delta * G)
    theta = _fast_sine(A, basis)
    return Subspace(m=m, s=s, basis=basis), float(theta)


def generate_instance(index: int, seed: int = 0, m_choices=(100, 200, 500),
                      s_choices=(2, 3, 4, 5), theta_max: float = 0.01,
                      separation_factor: float = 8.0) -> LandscapeInstance:
    """One randomized landscape instance, reproducible from (seed, index).

    Frequencies are rejection-sampled to separation >= separation_factor *
    pi / m; the subspace is the exact Fourier frame rotated to a measured
    distance in [0.3, 0.95] * theta_max (or exactly the frame when
    theta_max == 0).
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, index]))
    m = int(rng.choice(np.asarray(m_choices, dtype=int)))
    s = int(rng.choice(np.asarray(s_choices, dtype=int)))
    freqs = _random_frequencies(rng, s, separation_factor * np.pi / m)
    exact = Subspace(m=m, s=s, basis=_orth(fourier_matrix(m, freqs)))
    if theta_max > 0:
        target = theta_max * rng.uniform(0.3, 0.95)
        sub, theta = perturbed_subspace(exact, rng, target)
    else:
        sub, theta = exact, 0.0
    handle = LandscapeHandle(sub)
    minima = np.array([locate_minimum(handle, x, INNER_RADIUS_SCALE / m)
                       for x in freqs])
    return LandscapeInstance(index=index, m=m, s=s, frequencies=freqs,
                             theta=theta, subspace=sub, minima=minima)


def check_instance(inst: LandscapeInstance, grid_points: int = 1000,
                   alpha: float = FAR_FLOOR) -> list:
    """Verify the landscape clauses (a)-(f) and the cluster lemma.

    Returns a list of :class:`Violation` (empty when the instance passes),
    in the clause order (a), (c), (b), (d)/(f), (e), cluster.
    """
    m, s, theta = inst.m, inst.s, inst.theta
    handle = LandscapeHandle(inst.subspace)
    inner = INNER_RADIUS_SCALE / m
    basin = BASIN_RADIUS_SCALE / m
    out: list[Violation] = []

    def viol(clause, detail):
        out.append(Violation(instance_index=inst.index, m=m, s=s, theta=theta,
                             clause=clause, detail=detail))

    # (a) each perturbed minimum stays within 7 theta / m of its frequency
    for j, (x, xt) in enumerate(zip(inst.frequencies, inst.minima)):
        d = torus_distance(xt, x)
        if d > 7.0 * theta / m + 1e-9:
            viol("a-minimum-drift", f"j={j}: |xt-x|={d:.3e} > 7*theta/m")

    # (c) value ordering at the critical pair
    for j, (x, xt) in enumerate(zip(inst.frequencies, inst.minima)):
        qx = handle.value(x)
        qt = handle.value(xt)
        if qt > qx + 1e-12:
            viol("c-minimum-value", f"j={j}: q(xt)={qt:.3e} > q(x)={qx:.3e}")
        if qx > theta ** 2 * (1 + 1e-9) + 1e-15:
            viol("c-value-bound", f"j={j}: q(x)={qx:.3e} > theta^2")

    offsets = np.linspace(inner, basin, grid_points)
    inner_offsets = np.linspace(-inner, inner, grid_points)
    for j, xt in enumerate(inst.minima):
        # (b) two-sided curvature on the inner window
        qpp = handle.second(xt + inner_offsets)
        if np.min(qpp) < (CURVATURE_LOWER - _CHECK_SLACK) * m ** 2:
            viol("b-curvature-lower",
                 f"j={j}: min q''={np.min(qpp):.6g} < {CURVATURE_LOWER}*m^2")
        if np.max(qpp) > (CURVATURE_UPPER + _CHECK_SLACK) * m ** 2:
            viol("b-curvature-upper",
                 f"j={j}: max q''={np.max(qpp):.6g} > {CURVATURE_UPPER}*m^2")
        # (d) + (f) one-sided slope bounds on both annuli
        g_right = handle.grad(xt + offsets)
        g_left = handle.grad(xt - offsets)
        if np.min(g_right) < (SLOPE_LOWER - _CHECK_SLACK) * m:
            viol("d-slope-right",
                 f"j={j}: min q'={np.min(g_right):.6g} < {SLOPE_LOWER}*m")
        if np.max(g_left) > -(SLOPE_LOWER - _CHECK_SLACK) * m:
            viol("d-slope-left",
                 f"j={j}: max q'={np.max(g_left):.6g} > -{SLOPE_LOWER}*m")
        cap = (SLOPE_CAP + _CHECK_SLACK) * m ** 2 * offsets
        if np.any(g_right > cap):
            viol("f-slope-cap-right", f"j={j}: q' exceeds {SLOPE_CAP}*m^2*(t-xt)")
        if np.any(g_left < -cap):
            viol("f-slope-cap-left", f"j={j}: q' below -{SLOPE_CAP}*m^2*(xt-t)")

    # (e) far-field floor outside the union of basins
    count = max(8192, 16 * m)
    tgrid = TWO_PI * np.arange(count) / count
    q = handle.values_uniform(0.0, TWO_PI / count, count)
    dmin = np.min(np.abs((tgrid[:, None] - inst.minima[None, :] + np.pi)
                         % TWO_PI - np.pi), axis=1)
    far = dmin > basin
    if np.any(far) and np.min(q[far]) < FAR_FLOOR - _CHECK_SLACK:
        viol("e-far-floor",
             f"min far-field q={np.min(q[far]):.6g} < {FAR_FLOOR}")

    # cluster lemma on the pipeline grid
    grid = make_grid(m)
    accepted = threshold_accept(handle, grid, alpha)
    if accepted.size == 0:
        viol("cluster-empty", "no accepted grid points at alpha")
        return out
    pts = grid.points[accepted]
    dists = np.abs((pts[:, None] - inst.minima[None, :] + np.pi)
                   % TWO_PI - np.pi)
    nearest = np.argmin(dists, axis=1)
    if np.any(np.min(dists, axis=1) > basin):
        viol("cluster-accepted-outside",
             "an accepted point lies outside every basin")
    for j in range(s):
        if not np.any(dists[:, j] <= basin):
            viol("cluster-window-empty", f"basin {j} holds no accepted point")
    clusters = find_clusters(accepted, grid)
    if len(clusters) != s:
        viol("cluster-count", f"found {len(clusters)} clusters, expected {s}")
    else:
        pos = {int(i): k for k, i in enumerate(accepted)}
        for c_idx, cluster in enumerate(clusters.clusters):
            owners = {int(nearest[pos[i]]) for i in cluster}
            if len(owners) != 1:
                viol("cluster-split",
                     f"cluster {c_idx} spans basins {sorted(owners)}")
    return out


def landscape_sweep(count: int, seed: int = 0, m_choices=(100, 200, 500),
                    s_choices=(2, 3, 4, 5), theta_max: float = 0.01,
                    separation_factor: float = 8.0,
                    grid_points: int = 1000) -> SweepReport:
    """Randomized verification of the landscape theorem and cluster lemma.

    Zero violations are expected whenever separation_factor >= 8 and
    theta_max <= 0.01; any violation carries the instance index for exact
    reproduction via :func:`generate_instance`.
    """
    violations: list[Violation] = []
    rows = []
    for i in range(count):
        inst = generate_instance(i, seed=seed, m_choices=m_choices,
                                 s_choices=s_choices, theta_max=theta_max,
                                 separation_factor=separation_factor)
        rows.append((i, inst.m, inst.s, inst.theta))
        violations.extend(check_instance(inst, grid_points=grid_points))
    return SweepReport(count=count, violations=tuple(violations),
                       instances=tuple(rows))
