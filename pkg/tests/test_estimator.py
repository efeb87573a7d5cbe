"""Grid construction, clustering, descent, and both MUSIC estimators."""

import numpy as np
import pytest

import _oracles as orc
from gradmusic.errors import (
    ClusterCountError,
    DegenerateDataError,
    MinimaDeficitError,
    NoSignalError,
)
from gradmusic.estimator import (
    EstimatorConfig,
    FixedIterations,
    Grid,
    GradientTermination,
    UniformGrid,
    _auto_iteration_count,
    _uniform_strict_minima,
    classical_music,
    descend,
    find_clusters,
    full_pipeline,
    grid_from_points,
    gradient_music,
    make_grid,
    threshold_accept,
    uniform_grid,
)
from gradmusic.landscape import LandscapeHandle, steering
from gradmusic.noise import GaussianDiagonal, draw
from gradmusic.signal import (
    SampleVector,
    SignalParams,
    fourier_matrix,
    matching_distance,
    synthesize,
    torus_distance,
)
from gradmusic.subspace import Subspace

TWO_PI = 2.0 * np.pi


def exact_subspace(m, freqs):
    q, _ = np.linalg.qr(fourier_matrix(m, np.asarray(freqs, dtype=float)))
    return Subspace(m=m, s=len(freqs), basis=q)


def singleton_handle(m, x1):
    basis = steering(m, x1).reshape(m, 1)
    return LandscapeHandle(Subspace(m=m, s=1, basis=basis))


def test_config_defaults_and_validation():
    cfg = EstimatorConfig()
    assert cfg.gamma == pytest.approx(0.0525)
    assert cfg.alpha == pytest.approx(0.529)
    m = 100
    assert cfg.resolved_spacing(m) == pytest.approx(1.0 / (2 * m))
    assert cfg.resolved_step(m) == pytest.approx(6.0 / m ** 2)
    with pytest.raises(ValueError):
        EstimatorConfig(alpha=0.6)  # above the far-field floor
    with pytest.raises(ValueError):
        EstimatorConfig(step=6.8 / m ** 2).resolved_step(m)  # above ceiling
    with pytest.raises(ValueError):
        FixedIterations(30)  # below the minimum count
    with pytest.raises(ValueError):
        GradientTermination(epsilon=0.01, n_min=31, n_max=30)


def test_make_grid_reference_point():
    grid = make_grid(100, 1.0 / 200.0)
    assert grid.count == 629
    assert grid.mesh <= 0.005
    assert grid.mesh == pytest.approx(grid.spacing / 2.0)


def test_make_grid_mesh_matches_brute_force():
    grid = make_grid(50, 1.0 / 100.0)
    brute = orc.covering_radius(grid.points)
    # finite probe grid can only undershoot, by at most one probe spacing
    assert brute <= grid.mesh + 1e-12
    assert grid.mesh - brute <= TWO_PI / 200001


def test_uniform_grid_count():
    g = uniform_grid(0.01)
    assert g.count == int(np.ceil(TWO_PI / 0.01))
    assert g.mesh <= 0.005 + 1e-12


def test_grid_from_points_nonuniform():
    pts = np.array([0.0, 0.5, 1.0, 3.0, 5.0])
    grid = grid_from_points(pts)
    brute = orc.covering_radius(pts)
    assert brute <= grid.mesh + 1e-12
    assert grid.mesh - brute <= TWO_PI / 200001


def test_threshold_accept_matches_brute_scan():
    rng = np.random.Generator(np.random.Philox(key=[71, 0]))
    m = 100
    x = orc.separated_frequencies(rng, 3, 8 * np.pi / m)
    handle = LandscapeHandle(exact_subspace(m, x))
    grid = make_grid(m, 1.0 / (4 * m))
    accepted = threshold_accept(handle, grid, 0.529)
    brute = np.nonzero(np.array([handle.value(t) for t in grid.points]) < 0.529)[0]
    assert np.array_equal(accepted, brute)
    # points at the true frequencies are accepted, far-field points rejected
    vals = np.array([handle.value(t) for t in grid.points])
    far = np.array([min(torus_distance(t, xj) for xj in x) for t in grid.points])
    assert np.all(vals[far > 4 * np.pi / (3 * m)] >= 0.529)


def test_find_clusters_single_arc():
    grid = make_grid(100, 1.0 / 400.0)
    accepted = np.array([10, 11, 12, 13, 14])
    cs = find_clusters(accepted, grid)
    assert len(cs.clusters) == 1
    assert cs.representatives[0] == 12


def test_find_clusters_seam_merge():
    grid = Grid(points=np.linspace(0, TWO_PI, 100, endpoint=False),
                mesh=np.pi / 100, spacing=TWO_PI / 100)
    accepted = np.array([0, 1, 2, 97, 98, 99])
    cs = find_clusters(accepted, grid)
    assert len(cs.clusters) == 1
    assert cs.representatives[0] == 99  # median of the wrapped run 97..102


def test_find_clusters_empty():
    grid = make_grid(100, 1.0 / 400.0)
    with pytest.raises(NoSignalError):
        find_clusters(np.array([], dtype=int), grid)


def test_descend_exponential_contraction():
    m, x1 = 200, 1.3
    h = singleton_handle(m, x1)
    t0 = x1 + 0.9 * np.pi / (3 * m)
    for n in (31, 60, 100):
        res = descend(h, t0, EstimatorConfig(policy=FixedIterations(n)))
        assert res.iterations == n
        assert res.gradient_evals == n
        assert not res.flagged
        assert orc.wrap_dist(res.position, x1) <= np.pi * 0.839 ** n / (3 * m)


def test_descend_fixed_point_at_minimum():
    m, x1 = 150, 4.0
    h = singleton_handle(m, x1)
    res = descend(h, x1, EstimatorConfig(policy=FixedIterations(50)))
    assert orc.wrap_dist(res.position, x1) < 1e-13


def test_descend_stays_in_basin_and_enters_window():
    """From anywhere in the basin, 31 steps land inside the convexity window."""
    m, x1 = 120, 2.0
    h = singleton_handle(m, x1)
    for frac in (-0.99, -0.5, 0.4, 0.99):
        t0 = x1 + frac * 4 * np.pi / (3 * m)
        res = descend(h, t0, EstimatorConfig(policy=FixedIterations(31)))
        assert orc.wrap_dist(res.position, x1) <= np.pi / (3 * m)


def test_descend_termination_policy():
    m, x1 = 200, 0.7
    h = singleton_handle(m, x1)
    eps = 1e-4
    cfg = EstimatorConfig(policy=GradientTermination(epsilon=eps, n_min=31, n_max=300))
    res = descend(h, x1 + 0.8 * np.pi / (3 * m), cfg)
    assert not res.flagged
    assert 31 <= res.iterations <= 300
    assert res.gradient_evals == res.iterations + 1
    assert orc.wrap_dist(res.position, x1) <= 37 * eps / m


def test_descend_flags_at_iteration_ceiling():
    m, x1 = 200, 0.7
    h = singleton_handle(m, x1)
    cfg = EstimatorConfig(policy=GradientTermination(epsilon=1e-300, n_min=31,
                                                     n_max=33))
    res = descend(h, x1 + 0.5 * np.pi / (3 * m), cfg)
    assert res.flagged
    assert res.iterations == 33


def test_descend_unresolved_auto_policy():
    h = singleton_handle(50, 1.0)
    with pytest.raises(ValueError):
        descend(h, 1.0, EstimatorConfig(policy=FixedIterations(None)))


def test_gradient_music_exact_subspace():
    rng = np.random.Generator(np.random.Philox(key=[72, 0]))
    m, s = 200, 3
    x = orc.separated_frequencies(rng, s, 8 * np.pi / m)
    sub = exact_subspace(m, x)
    res = gradient_music(sub, EstimatorConfig(policy=FixedIterations(200)))
    _, err = matching_distance(x, res.frequencies)
    assert err <= 1e-8
    assert res.coarse_evals == make_grid(m, 1.0 / (4 * m)).count
    assert res.gradient_evals == s * 200


def test_gradient_music_right_unitary_invariance():
    rng = np.random.Generator(np.random.Philox(key=[73, 0]))
    m, s = 150, 3
    x = orc.separated_frequencies(rng, s, 8 * np.pi / m)
    sub = exact_subspace(m, x)
    mix, _ = np.linalg.qr(rng.normal(size=(s, s)) + 1j * rng.normal(size=(s, s)))
    mixed = Subspace(m=m, s=s, basis=sub.basis @ mix)
    cfg = EstimatorConfig(policy=FixedIterations(100))
    a = gradient_music(sub, cfg).frequencies
    b = gradient_music(mixed, cfg).frequencies
    assert np.max(np.abs(a - b)) < 1e-12


def test_gradient_music_rotation_equivariance():
    """Shifting every frequency by delta shifts every estimate by delta."""
    rng = np.random.Generator(np.random.Philox(key=[74, 0]))
    m, s = 150, 3
    x = orc.separated_frequencies(rng, s, 8 * np.pi / m)
    delta = 0.83
    cfg = EstimatorConfig(policy=FixedIterations(200))
    base = gradient_music(exact_subspace(m, x), cfg).frequencies
    shifted = gradient_music(
        exact_subspace(m, np.mod(x + delta, TWO_PI)), cfg).frequencies
    _, err = matching_distance(np.mod(base + delta, TWO_PI), shifted)
    assert err <= 2e-8


def test_gradient_music_cluster_count_mismatch():
    """A balanced superposition of two steering vectors dips below the
    acceptance threshold near both spikes, so a 1-dimensional subspace
    produces two clusters."""
    m = 100
    w = steering(m, 1.0) + steering(m, 3.0)
    w = (w / np.linalg.norm(w)).reshape(m, 1)
    sub = Subspace(m=m, s=1, basis=w)
    with pytest.raises(ClusterCountError) as info:
        gradient_music(sub, EstimatorConfig(policy=FixedIterations(50)))
    assert info.value.found == 2
    assert info.value.expected == 1


def test_gradient_music_noisy_three_spikes():
    """White noise at unit variance still yields one cluster per spike."""
    m = 256
    x = np.array([4 * np.pi / m, 20 * np.pi / m, np.pi])
    y = synthesize(SignalParams(x, np.ones(3)), m)
    eta = draw(GaussianDiagonal(sigma=1.0), m, seed=77, stream=1)
    noisy = SampleVector(m=m, values=y.values + eta.values)
    from gradmusic.subspace import toeplitz, toeplitz_estimator
    sub = toeplitz_estimator(toeplitz(noisy), 3)
    res = gradient_music(sub, EstimatorConfig(policy=FixedIterations(60)))
    assert len(res.frequencies) == 3


def test_classical_music_singleton_on_grid():
    m, x1 = 100, 1.0
    handle_sub = Subspace(m=m, s=1, basis=steering(m, x1).reshape(m, 1))
    n = 1000
    pts = np.mod(x1 + TWO_PI * np.arange(n) / n, TWO_PI)  # grid contains x1
    res = classical_music(handle_sub, 1, grid_from_points(pts))
    assert orc.wrap_dist(res.frequencies[0], x1) < 1e-12
    assert res.evaluations == n


def test_classical_music_wrap_around_minimum():
    m = 100
    x1 = 0.0  # minimum sits at grid index 0; neighbors wrap across the seam
    sub = Subspace(m=m, s=1, basis=steering(m, x1).reshape(m, 1))
    res = classical_music(sub, 1, uniform_grid(1.0 / (2 * m)))
    assert orc.wrap_dist(res.frequencies[0], x1) < 1e-8


def test_classical_music_minima_deficit():
    m = 60
    x = np.array([1.0, 3.0])
    sub = exact_subspace(m, x)
    tiny = grid_from_points(np.array([0.0, 2.0, 4.0]))
    with pytest.raises(MinimaDeficitError):
        classical_music(sub, 2, tiny)


def test_classical_music_grid_types_agree():
    rng = np.random.Generator(np.random.Philox(key=[75, 0]))
    m, s = 80, 3
    x = orc.separated_frequencies(rng, s, 8 * np.pi / m)
    sub = exact_subspace(m, x)
    ug = uniform_grid(1.0 / (2 * m))
    pts = np.mod(ug.start + ug.spacing * np.arange(ug.count), TWO_PI)
    a = classical_music(sub, s, ug).frequencies
    b = classical_music(sub, s, grid_from_points(pts)).frequencies
    assert np.max(np.abs(a - b)) < 1e-12


def test_streaming_minima_match_oracle():
    """Chunked strict-minima scan equals the in-memory circular comparison."""
    rng = np.random.Generator(np.random.Philox(key=[76, 0]))
    m, s = 40, 2
    z = rng.normal(size=(m, s)) + 1j * rng.normal(size=(m, s))
    q, _ = np.linalg.qr(z)
    handle = LandscapeHandle(Subspace(m=m, s=s, basis=q))
    count = 4999
    spacing = TWO_PI / count
    idx, vals = _uniform_strict_minima(handle, 0.0, spacing, count, chunk=1000)
    dense = handle.values_uniform(0.0, spacing, count)
    want = orc.strict_local_minima_circular(dense)
    assert np.array_equal(idx, want)
    assert np.allclose(vals, dense[want], atol=1e-12)


def test_auto_iteration_count():
    assert _auto_iteration_count(1.0, 0.0) == 300  # no gap estimate: cap
    assert _auto_iteration_count(1.0, 0.01) == max(31, int(np.ceil(6 * np.log(1500))))
    assert _auto_iteration_count(1.0, 0.9) == 31


def test_full_pipeline_noiseless_three_spikes():
    params = SignalParams([0.5, 2.0, 4.0],
                          np.exp(1j * np.array([0.0, 2.1, 4.3])))
    m = 200
    y = synthesize(params, m)
    res = full_pipeline(y, EstimatorConfig(policy=FixedIterations(200)))
    assert res.s_hat == 3
    _, freq_err = matching_distance(params.frequencies, res.frequencies)
    assert freq_err <= 1e-8
    perm, _ = matching_distance(params.frequencies, res.frequencies)
    amp_err = np.max(np.abs(params.amplitudes - res.amplitudes[list(perm)]))
    assert amp_err <= 1e-8
    assert res.coarse_evals > 0
    assert set(res.stage_seconds) >= {"svd", "subspace", "gradient", "amplitudes"}


def test_full_pipeline_zero_data_is_degenerate():
    y = SampleVector(m=100, values=np.zeros(199, dtype=complex))
    with pytest.raises(DegenerateDataError):
        full_pipeline(y, EstimatorConfig(policy=FixedIterations(50)))


def test_full_pipeline_auto_iterations_resolved():
    params = SignalParams([0.5, 2.0, 4.0],
                          np.exp(1j * np.array([0.0, 2.1, 4.3])))
    m = 200
    y = synthesize(params, m)
    eta = draw(GaussianDiagonal(sigma=0.05), m, seed=770)
    noisy = SampleVector(m=m, values=y.values + eta.values)
    res = full_pipeline(noisy, EstimatorConfig(policy=FixedIterations(None)))
    assert res.auto_iterations is not None
    assert res.auto_iterations >= 31
    assert res.theta_plugin is not None
    want = _auto_iteration_count(res.singular_values[res.s_hat - 1],
                                 res.singular_values[res.s_hat])
    assert res.auto_iterations == want


def test_full_pipeline_known_s_skips_detection():
    params = SignalParams([0.5, 2.0, 4.0],
                          np.exp(1j * np.array([0.0, 2.1, 4.3])))
    y = synthesize(params, 150)
    res = full_pipeline(y, EstimatorConfig(policy=FixedIterations(100)), known_s=3)
    assert res.s_hat == 3
    _, err = matching_distance(params.frequencies, res.frequencies)
    assert err <= 1e-8
