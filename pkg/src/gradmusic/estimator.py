"""Frequency estimation: gradient descent on the landscape, and the
classical grid-search baseline.

The gradient estimator thresholds the landscape on a coarse grid, groups
accepted points into clusters (one per frequency under the separation and
subspace-accuracy hypotheses), and refines each cluster representative by
gradient descent.  The full pipeline composes sparsity detection, the
Toeplitz subspace estimator, the gradient refinement, and amplitude
recovery.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .amplitude import quadratic_amplitudes
from .errors import (
    ClusterCountError,
    EstimationError,
    MinimaDeficitError,
    NoSignalError,
    NumericalInstabilityError,
)
from .landscape import LandscapeHandle
from .signal import TWO_PI, SampleVector, wrap
from .subspace import (
    SingularSpectrum,
    Subspace,
    adaptive_spectrum,
    toeplitz,
    toeplitz_estimator,
    top_spectrum,
)

# Step sizes above this multiple of 1/m^2 violate the 2/(mu + L) ceiling of
# the descent analysis.
STEP_CEILING_SCALE = 6.754

# Iteration cap used when the spectral-gap plug-in estimate is zero
# (noiseless data); the refinement error is far below float noise there.
AUTO_ITERATION_CAP = 300


@dataclass(frozen=True)
class FixedIterations:
    """Run exactly n descent steps per cluster.

    ``n=None`` requests the automatic choice n = max(31, ceil(6 log(15 /
    theta_hat))) from the spectral-gap plug-in theta_hat, resolved by the
    pipeline (which has the singular values at hand).
    """

    n: int | None = None

    def __post_init__(self):
        if self.n is not None and self.n < 31:
            raise ValueError("fixed iteration count must be at least 31")


@dataclass(frozen=True)
class GradientTermination:
    """Stop at the first k in [n_min, n_max] with |q'(t_k)| <= epsilon * m.

    If no iterate qualifies, the descent stops at n_max and the result is
    flagged.
    """

    epsilon: float
    n_min: int = 31
    n_max: int = 300

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.n_min < 31:
            raise ValueError("n_min must be at least 31")
        if self.n_max < self.n_min:
            raise ValueError("n_max must be >= n_min")


@dataclass(frozen=True)
class EstimatorConfig:
    """Pipeline knobs with their prescribed defaults.

    ``grid_spacing`` and ``step`` default to 1/(2m) and 6/m^2 once m is
    known; ``alpha`` must stay within the certified far-field floor and the
    step below the curvature ceiling 6.754/m^2.
    """

    gamma: float = 0.0525
    alpha: float = 0.529
    grid_spacing: float | None = None
    step: float | None = None
    policy: FixedIterations | GradientTermination = field(
        default_factory=FixedIterations
    )

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie strictly between 0 and 1")
        if not 0.0 < self.alpha <= 0.529:
            raise ValueError("alpha must lie in (0, 0.529]")
        if self.grid_spacing is not None and self.grid_spacing <= 0:
            raise ValueError("grid_spacing must be positive")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")

    def resolved_spacing(self, m: int) -> float:
        return self.grid_spacing if self.grid_spacing is not None else 1.0 / (2 * m)

    def resolved_step(self, m: int) -> float:
        h = self.step if self.step is not None else 6.0 / m ** 2
        ceiling = STEP_CEILING_SCALE / m ** 2
        if h > ceiling * (1 + 1e-12):
            raise ValueError(
                f"step {h:.3e} exceeds the stability ceiling {ceiling:.3e}"
            )
        return h


@dataclass(frozen=True)
class Grid:
    """Finite grid on the torus with its exact covering radius (mesh)."""

    points: np.ndarray
    mesh: float
    spacing: float | None = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 1 or len(p) == 0:
            raise ValueError("grid needs at least one point")
        object.__setattr__(self, "points", p)

    @property
    def count(self) -> int:
        return len(self.points)


def make_grid(m: int, target_mesh: float | None = None) -> Grid:
    """Uniform grid whose covering radius meets ``target_mesh``.

    The default target is 1/(4m), i.e. spacing 1/(2m) — safe whether the
    initialization requirement is read as a bound on the spacing or on the
    covering radius.
    """
    if m < 1:
        raise ValueError("m must be positive")
    target = target_mesh if target_mesh is not None else 1.0 / (4 * m)
    if target <= 0:
        raise ValueError("target mesh must be positive")
    n = max(1, math.ceil(np.pi / target))
    spacing = TWO_PI / n
    points = spacing * np.arange(n)
    return Grid(points=points, mesh=spacing / 2.0, spacing=spacing)


@dataclass(frozen=True)
class UniformGrid:
    """Uniform circular grid described implicitly (never materialized).

    Suitable for the very fine grids of the classical search, where the
    point array itself would not fit in memory.
    """

    start: float
    spacing: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("grid needs at least one point")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def mesh(self) -> float:
        return self.spacing / 2.0


def uniform_grid(spacing_target: float) -> UniformGrid:
    """Full-circle uniform grid with spacing at most ``spacing_target``."""
    if spacing_target <= 0:
        raise ValueError("spacing must be positive")
    n = max(1, math.ceil(TWO_PI / spacing_target))
    return UniformGrid(start=0.0, spacing=TWO_PI / n, count=n)


def grid_from_points(points) -> Grid:
    """Grid from arbitrary sorted torus points; mesh recomputed exactly."""
    p = np.sort(wrap(np.atleast_1d(np.asarray(points, dtype=float))))
    if len(p) == 1:
        return Grid(points=p, mesh=np.pi, spacing=None)
    gaps = np.diff(p)
    seam = TWO_PI - (p[-1] - p[0])
    mesh = float(max(gaps.max(), seam)) / 2.0
    return Grid(points=p, mesh=mesh, spacing=None)


def threshold_accept(handle: LandscapeHandle, grid: Grid, alpha: float) -> np.ndarray:
    """Indices of grid points with q(u) < alpha."""
    if grid.spacing is not None:
        q = handle.values_uniform(float(grid.points[0]), grid.spacing, grid.count)
    else:
        q = handle.value(grid.points)
    return np.nonzero(q < alpha)[0]


@dataclass(frozen=True)
class ClusterSet:
    """Disjoint runs of accepted grid indices in circular order."""

    clusters: tuple
    representatives: tuple

    def __len__(self) -> int:
        return len(self.clusters)

    def representative_points(self, grid: Grid) -> np.ndarray:
        return grid.points[np.asarray(self.representatives, dtype=int)]


def find_clusters(accepted: np.ndarray, grid: Grid) -> ClusterSet:
    """Group accepted indices into maximal runs of consecutive grid points.

    Runs touching both sides of the 0/2pi seam are merged.  The
    representative is the median element of each run in circular order,
    ties toward the lower index.
    """
    accepted = np.asarray(accepted, dtype=int)
    if accepted.size == 0:
        raise NoSignalError("no grid point fell below the acceptance threshold")
    n = grid.count
    breaks = np.nonzero(np.diff(accepted) > 1)[0]
    runs = np.split(accepted, breaks + 1)
    if len(runs) > 1 and accepted[0] == 0 and accepted[-1] == n - 1:
        # circular order: the tail run precedes the head run across the seam
        runs = [np.concatenate([runs[-1], runs[0]])] + runs[1:-1]
    clusters = tuple(tuple(int(i) for i in run) for run in runs)
    reps = tuple(run[(len(run) - 1) // 2] for run in clusters)
    return ClusterSet(clusters=clusters, representatives=reps)


@dataclass(frozen=True)
class DescentResult:
    position: float
    iterations: int
    gradient_evals: int
    flagged: bool


def descend(handle: LandscapeHandle, t0: float,
            config: EstimatorConfig) -> DescentResult:
    """Gradient descent t_{k+1} = t_k - h q'(t_k) from t0, on the torus."""
    m = handle.m
    h = config.resolved_step(m)
    policy = config.policy
    t = float(wrap(t0))
    evals = 0

    if isinstance(policy, FixedIterations):
        if policy.n is None:
            raise ValueError(
                "automatic iteration count needs the singular spectrum; "
                "resolve the policy first (full_pipeline does) or set n"
            )
        for _ in range(policy.n):
            g = handle.grad(t)
            evals += 1
            if not np.isfinite(g):
                raise NumericalInstabilityError(
                    f"gradient became non-finite at t={t:.6f}"
                )
            t = float(wrap(t - h * g))
        return DescentResult(position=t, iterations=policy.n,
                             gradient_evals=evals, flagged=False)

    threshold = policy.epsilon * m
    k = 0
    while True:
        g = handle.grad(t)
        evals += 1
        if not np.isfinite(g):
            raise NumericalInstabilityError(
                f"gradient became non-finite at t={t:.6f}"
            )
        if k >= policy.n_min and abs(g) <= threshold:
            return DescentResult(position=t, iterations=k,
                                 gradient_evals=evals, flagged=False)
        if k >= policy.n_max:
            return DescentResult(position=t, iterations=k,
                                 gradient_evals=evals, flagged=True)
        t = float(wrap(t - h * g))
        k += 1


@dataclass(frozen=True)
class GradientMusicResult:
    frequencies: np.ndarray
    iterations: tuple
    flagged: tuple
    coarse_evals: int
    gradient_evals: int


def gradient_music(subspace: Subspace, config: EstimatorConfig | None = None
                   ) -> GradientMusicResult:
    """Coarse-grid initialization plus per-cluster gradient refinement.

    Raises :class:`ClusterCountError` when the accepted grid points do not
    form exactly s clusters (a hypothesis violation the caller may handle
    by adjusting alpha or reporting the trial as failed).
    """
    config = config or EstimatorConfig()
    m = subspace.m
    handle = LandscapeHandle(subspace)
    spacing = config.resolved_spacing(m)
    grid = make_grid(m, target_mesh=spacing / 2.0)
    accepted = threshold_accept(handle, grid, config.alpha)
    if accepted.size == 0:
        raise NoSignalError("no grid point fell below the acceptance threshold")
    clusters = find_clusters(accepted, grid)
    if len(clusters) != subspace.s:
        raise ClusterCountError(found=len(clusters), expected=subspace.s)
    starts = clusters.representative_points(grid)
    results = [descend(handle, t0, config) for t0 in starts]
    freqs = np.array([r.position for r in results])
    order = np.argsort(freqs)
    return GradientMusicResult(
        frequencies=freqs[order],
        iterations=tuple(results[i].iterations for i in order),
        flagged=tuple(results[i].flagged for i in order),
        coarse_evals=grid.count,
        gradient_evals=sum(r.gradient_evals for r in results),
    )


@dataclass(frozen=True)
class ClassicalMusicResult:
    frequencies: np.ndarray
    evaluations: int
    minima_found: int


def _uniform_strict_minima(handle: LandscapeHandle, t0: float, spacing: float,
                           count: int, chunk: int = 1 << 21):
    """Strict discrete local minima of q on a uniform circular grid.

    Streams the grid in chunks so very fine grids never materialize in
    memory; returns (indices, values) with circular neighbor comparisons at
    the seam.
    """
    idx_out = []
    val_out = []
    carry = np.empty(0)
    head = None
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        qc = handle.values_uniform(t0 + spacing * start, spacing, stop - start)
        if head is None:
            head = qc[: min(2, len(qc))].copy()
        ext = np.concatenate([carry, qc])
        base = start - len(carry)
        if len(ext) >= 3:
            inner = (ext[1:-1] < ext[:-2]) & (ext[1:-1] < ext[2:])
            hits = np.nonzero(inner)[0] + 1
            idx_out.extend((base + hits).tolist())
            val_out.extend(ext[hits].tolist())
        carry = ext[-2:] if len(ext) >= 2 else ext
    # seam: indices 0 and count-1 (carry holds q[count-2], q[count-1])
    if count >= 3 and head is not None and len(head) >= 2 and len(carry) >= 2:
        q_last2, q_last1 = carry[-2], carry[-1]
        if head[0] < head[1] and head[0] < q_last1:
            idx_out.append(0)
            val_out.append(head[0])
        if q_last1 < q_last2 and q_last1 < head[0]:
            idx_out.append(count - 1)
            val_out.append(q_last1)
    return np.asarray(idx_out, dtype=int), np.asarray(val_out, dtype=float)


def classical_music(subspace: Subspace, s: int,
                    grid: Grid | UniformGrid) -> ClassicalMusicResult:
    """The s strict discrete local minima of q with smallest values.

    Neighbors are circular; raises :class:`MinimaDeficitError` when fewer
    than s strict local minima exist on the grid.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    handle = LandscapeHandle(subspace)
    n = grid.count
    if n < 3:
        raise ValueError("classical search needs at least three grid points")
    if isinstance(grid, UniformGrid):
        idx, vals = _uniform_strict_minima(handle, grid.start, grid.spacing, n)
        positions = wrap(grid.start + grid.spacing * idx)
    elif grid.spacing is not None:
        idx, vals = _uniform_strict_minima(handle, float(grid.points[0]),
                                           grid.spacing, n)
        positions = wrap(grid.points[0] + grid.spacing * idx)
    else:
        q = handle.value(grid.points)
        prev_q = np.roll(q, 1)
        next_q = np.roll(q, -1)
        mask = (q < prev_q) & (q < next_q)
        idx = np.nonzero(mask)[0]
        vals = q[idx]
        positions = grid.points[idx]
    if len(idx) < s:
        raise MinimaDeficitError(found=len(idx), expected=s)
    order = np.argsort(vals, kind="stable")[:s]
    freqs = np.sort(wrap(positions[order]))
    return ClassicalMusicResult(frequencies=freqs, evaluations=n,
                                minima_found=len(idx))


@dataclass(frozen=True)
class EstimationResult:
    """Pipeline output: (s_hat, frequencies, amplitudes) plus diagnostics."""

    s_hat: int
    frequencies: np.ndarray
    amplitudes: np.ndarray
    iterations: tuple
    flagged: tuple
    singular_values: np.ndarray
    subspace: Subspace
    theta_plugin: float | None
    auto_iterations: int | None
    coarse_evals: int
    gradient_evals: int
    stage_seconds: dict


def _auto_iteration_count(sigma_s: float, sigma_next: float) -> int:
    theta_hat = sigma_next / sigma_s if sigma_s > 0 else 0.0
    if theta_hat <= 0.0:
        return AUTO_ITERATION_CAP
    return max(31, math.ceil(6.0 * math.log(15.0 / theta_hat)))


def full_pipeline(samples: SampleVector, config: EstimatorConfig | None = None,
                  known_s: int | None = None) -> EstimationResult:
    """Sparsity detection, subspace estimation, gradient refinement, and
    amplitude recovery, with stage-labeled failures and eval counters."""
    config = config or EstimatorConfig()
    m = samples.m
    stage_seconds: dict[str, float] = {}

    def run_stage(name, fn):
        start = time.perf_counter()
        try:
            out = fn()
        except EstimationError as err:
            if err.stage is None:
                err.stage = name
            raise
        finally:
            stage_seconds[name] = time.perf_counter() - start
        return out

    T = toeplitz(samples)

    def svd_stage():
        if known_s is not None:
            if not 1 <= known_s < m:
                raise ValueError("known_s must satisfy 1 <= s < m")
            spec = top_spectrum(T, min(known_s + 1, m))
            return spec, known_s
        spec = adaptive_spectrum(T, config.gamma)
        from .subspace import detect_sparsity
        return spec, detect_sparsity(spec, config.gamma)

    spectrum, s_hat = run_stage("svd", svd_stage)
    subspace = run_stage("subspace",
                         lambda: toeplitz_estimator(T, s_hat, spectrum))

    theta_plugin = None
    auto_n = None
    policy = config.policy
    if isinstance(policy, FixedIterations) and policy.n is None:
        sigma_s = float(spectrum.values[s_hat - 1])
        sigma_next = float(spectrum.values[s_hat]) \
            if len(spectrum.values) > s_hat else 0.0
        theta_plugin = sigma_next / sigma_s if sigma_s > 0 else None
        auto_n = _auto_iteration_count(sigma_s, sigma_next)
        config = replace(config, policy=FixedIterations(n=auto_n))

    gm = run_stage("gradient", lambda: gradient_music(subspace, config))
    amplitudes = run_stage("amplitudes",
                           lambda: quadratic_amplitudes(gm.frequencies, T))

    return EstimationResult(
        s_hat=s_hat,
        frequencies=gm.frequencies,
        amplitudes=amplitudes,
        iterations=gm.iterations,
        flagged=gm.flagged,
        singular_values=spectrum.values,
        subspace=subspace,
        theta_plugin=theta_plugin,
        auto_iterations=auto_n,
        coarse_evals=gm.coarse_evals,
        gradient_evals=gm.gradient_evals,
        stage_seconds=stage_seconds,
    )
