import numpy as np
import pytest
from scipy.stats import chisquare

from qbohm.dynamics import evolve_oracle, polar_decompose
from qbohm.fields import ScalarField, field_from_function, grid_1d, grid_2d
from qbohm.states import gaussian_complex
from qbohm.trajectories import (
    SnapshotVelocity,
    StaticPhaseVelocity,
    endpoint_histogram,
    expected_bin_probabilities,
    integrate_trajectories,
    loop_integral,
    sample_from_density,
    velocity_at,
)
from qbohm.units import Units


def test_velocity_linear_action_exact():
    g = grid_1d(-8.0, 8.0, 256)
    S = ScalarField(g, 1.7 * g.axis(0), units="action")
    assert velocity_at(S, 0.3)[0] == pytest.approx(1.7, abs=1e-13)
    v = velocity_at(S, np.array([[0.1], [2.0], [-3.3]]))
    assert np.allclose(v, 1.7, atol=1e-12)
    assert velocity_at(S, 0.3, Units(mass=2.0))[0] == pytest.approx(0.85, abs=1e-13)


def test_velocity_constant_action_zero():
    g = grid_1d(-8.0, 8.0, 256)
    S = ScalarField(g, np.full(256, 5.0), units="action")
    assert velocity_at(S, 1.0)[0] == 0.0


def test_velocity_vortex_phase():
    g = grid_2d(((-2.0, 2.0), (-2.0, 2.0)), (512, 512))
    X, Y = g.meshgrid()
    S = ScalarField(g, np.arctan2(Y, X), units="action")
    v = velocity_at(S, np.array([1.0, 0.0]))
    assert abs(v[0]) <= 1e-3
    assert v[1] == pytest.approx(1.0, abs=1e-3)


def test_velocity_linear_in_action():
    g = grid_1d(-8.0, 8.0, 256)
    x = g.axis(0)
    s1 = ScalarField(g, np.sin(0.5 * x))
    s2 = ScalarField(g, 0.2 * x**2)
    a, b = 1.3, -0.7
    combo = ScalarField(g, a * s1.values + b * s2.values)
    pts = np.array([[0.5], [1.5], [-2.0]])
    lhs = velocity_at(combo, pts)
    rhs = a * velocity_at(s1, pts) + b * velocity_at(s2, pts)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-13)


def test_stationary_state_trajectories_constant():
    g = grid_1d(-8.0, 8.0, 256)
    S = ScalarField(g, np.full(256, 2.0), units="action")
    provider = StaticPhaseVelocity(S)
    seeds = np.array([[-1.0], [0.3], [2.2]])
    bundle = integrate_trajectories(provider, seeds, 0.0, 1.0, 0.01, g.extents)
    assert np.array_equal(bundle.paths[:, -1, :], seeds)
    assert not bundle.exited.any()


def test_plane_wave_trajectory_exact():
    g = grid_1d(-8.0, 8.0, 256)
    k = 1.4
    S = ScalarField(g, k * g.axis(0), units="action")
    provider = StaticPhaseVelocity(S)
    bundle = integrate_trajectories(provider, np.array([[0.0]]), 0.0, 1.0, 0.01, g.extents)
    assert bundle.paths[0, -1, 0] == pytest.approx(k, abs=1e-10)


def _free_gaussian_provider(g, t_final, n_snap=40):
    V = ScalarField(g, np.zeros(g.shape), units="energy")
    psi = gaussian_complex(g, sigma=1.0)
    snaps = [psi]
    per = 10
    dt = t_final / (n_snap * per)
    st = psi
    for _ in range(n_snap):
        st = evolve_oracle(st, V, dt, per)
        snaps.append(st)
    return SnapshotVelocity.from_wavefunctions(snaps), snaps


def test_free_gaussian_trajectory_hits_sqrt2():
    g = grid_1d(-8.0, 8.0, 512)
    provider, _ = _free_gaussian_provider(g, 2.0)
    bundle = integrate_trajectories(provider, np.array([[1.0]]), 0.0, 2.0, 0.01, g.extents)
    assert bundle.paths[0, -1, 0] == pytest.approx(np.sqrt(2.0), abs=1e-2)


def test_no_crossing_free_gaussian():
    g = grid_1d(-8.0, 8.0, 512)
    provider, snaps = _free_gaussian_provider(g, 1.0)
    dec0 = polar_decompose(snaps[0])
    seeds = np.sort(sample_from_density(dec0.R, 400, seed=21)[:, 0])[:, None]
    bundle = integrate_trajectories(provider, seeds, 0.0, 1.0, 0.01, g.extents)
    assert np.all(np.diff(bundle.paths[:, :, 0], axis=0) > 0)


def test_equivariance_free_gaussian():
    g = grid_1d(-8.0, 8.0, 512)
    provider, snaps = _free_gaussian_provider(g, 1.0)
    dec0 = polar_decompose(snaps[0])
    seeds = sample_from_density(dec0.R, 800, seed=4)
    bundle = integrate_trajectories(provider, seeds, 0.0, 1.0, 0.01, g.extents)
    hist = endpoint_histogram(bundle, 40)
    dec1 = polar_decompose(snaps[-1])
    probs = expected_bin_probabilities(dec1.R, hist.bin_edges)
    n = int(bundle.completed.sum())
    expected = probs * n
    sel = expected >= 5
    obs = np.concatenate([hist.counts[sel], [hist.counts[~sel].sum()]])
    exp = np.concatenate([expected[sel], [expected[~sel].sum()]])
    _, p = chisquare(obs, exp * obs.sum() / exp.sum())
    assert p >= 0.01


def test_exit_flagging():
    g = grid_1d(-2.0, 2.0, 64)
    # outward flow: v = x
    S = field_from_function(g, lambda x: 0.5 * x**2)
    provider = StaticPhaseVelocity(S)
    seeds = np.array([[0.0], [1.5], [-1.8]])
    bundle = integrate_trajectories(provider, seeds, 0.0, 2.0, 0.01, g.extents)
    assert not bundle.exited[0]
    assert bundle.exited[1] and bundle.exited[2]
    assert np.isfinite(bundle.exit_times[1])
    # frozen at the last inside position
    assert abs(bundle.paths[1, -1, 0]) <= 2.0


def test_histogram_requires_completed_paths():
    g = grid_1d(-2.0, 2.0, 64)
    S = ScalarField(g, np.zeros(64))
    provider = StaticPhaseVelocity(S)
    bundle = integrate_trajectories(provider, np.zeros((50, 1)), 0.0, 0.1, 0.01, g.extents)
    with pytest.raises(ValueError):
        endpoint_histogram(bundle, 10)


def test_histogram_single_bin_for_identical_seeds():
    g = grid_1d(-2.0, 2.0, 64)
    S = ScalarField(g, np.zeros(64))
    provider = StaticPhaseVelocity(S)
    bundle = integrate_trajectories(provider, np.full((150, 1), 0.31), 0.0, 0.1, 0.01, g.extents)
    hist = endpoint_histogram(bundle, 16)
    assert np.count_nonzero(hist.counts) == 1
    assert hist.counts.sum() == 150


def test_bundle_csv_columns():
    g = grid_1d(-2.0, 2.0, 64)
    S = ScalarField(g, np.zeros(64))
    provider = StaticPhaseVelocity(S)
    bundle = integrate_trajectories(provider, np.array([[0.1]]), 0.0, 0.05, 0.01, g.extents)
    lines = bundle.to_csv().splitlines()
    assert lines[0] == "seed_index,t,x"
    assert lines[1].startswith("0,0,")


# --- loop integrals ----------------------------------------------------------


def _circle(center, radius, n):
    th = np.linspace(0.0, 2 * np.pi, n + 1)
    return np.stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=-1)


def test_loop_integral_grid_field_vanishes():
    g = grid_2d(((-2.0, 2.0), (-2.0, 2.0)), (256, 256))
    X, Y = g.meshgrid()
    S = ScalarField(g, np.sin(X) * np.exp(-0.3 * Y**2) + 0.4 * X * Y, units="action")
    grad_max = max(
        np.max(np.abs(np.cos(X) * np.exp(-0.3 * Y**2) + 0.4 * Y)),
        np.max(np.abs(-0.6 * Y * np.sin(X) * np.exp(-0.3 * Y**2) + 0.4 * X)),
    )
    rng = np.random.default_rng(17)
    for _ in range(20):
        c = rng.uniform(-0.8, 0.8, size=2)
        r = rng.uniform(0.2, 1.0)
        n = max(int(np.ceil(2 * np.pi * r / (1.5 * g.spacing[0]))), 64)
        curve = _circle(c, r, n)
        res = loop_integral(S, curve)
        length = 2 * np.pi * r
        assert abs(res.value) <= 1e-6 * length * grad_max


def test_loop_integral_vortex_quantum():
    grad_fn = lambda p: np.stack(
        [-p[:, 1] / (p[:, 0] ** 2 + p[:, 1] ** 2), p[:, 0] / (p[:, 0] ** 2 + p[:, 1] ** 2)],
        axis=-1,
    )
    res = loop_integral(grad_fn, _circle((0.0, 0.0), 1.0, 256))
    h = 2 * np.pi
    assert res.value == pytest.approx(h, rel=1e-3)
    assert res.n_est == pytest.approx(1.0, rel=1e-3)


def test_loop_integral_vortex_non_enclosing():
    grad_fn = lambda p: np.stack(
        [-p[:, 1] / (p[:, 0] ** 2 + p[:, 1] ** 2), p[:, 0] / (p[:, 0] ** 2 + p[:, 1] ** 2)],
        axis=-1,
    )
    res = loop_integral(grad_fn, _circle((1.2, 0.0), 0.3, 256))
    assert abs(res.value) <= 1e-6


def test_loop_integral_requires_closed_curve():
    g = grid_2d(((-2.0, 2.0), (-2.0, 2.0)), (64, 64))
    S = ScalarField(g, np.zeros(g.shape))
    open_curve = np.array([[0.0, 0.0], [0.05, 0.0], [0.05, 0.05]])
    with pytest.raises(ValueError):
        loop_integral(S, open_curve)


def test_loop_integral_segment_length_precondition():
    g = grid_2d(((-2.0, 2.0), (-2.0, 2.0)), (64, 64))
    S = ScalarField(g, np.zeros(g.shape))
    coarse = _circle((0.0, 0.0), 1.0, 8)  # segments far exceed 2h
    with pytest.raises(ValueError):
        loop_integral(S, coarse)


def test_loop_integral_masked_region_error():
    g = grid_2d(((-2.0, 2.0), (-2.0, 2.0)), (256, 256))
    S = ScalarField(g, np.zeros(g.shape))
    mask = np.ones(g.shape, dtype=bool)
    mask[120:136, 120:136] = False
    curve = _circle((0.0, 0.0), 0.1, 64)  # passes through the masked block
    with pytest.raises(ValueError):
        loop_integral(S, curve, mask=mask)


# --- sampling ----------------------------------------------------------------


def test_sampling_deterministic_and_distributed():
    g = grid_1d(-8.0, 8.0, 512)
    R = polar_decompose(gaussian_complex(g, sigma=1.0)).R
    a = sample_from_density(R, 500, seed=9)
    b = sample_from_density(R, 500, seed=9)
    assert np.array_equal(a, b)
    big = sample_from_density(R, 4000, seed=10)[:, 0]
    edges = np.linspace(-8, 8, 33)
    counts, _ = np.histogram(big, bins=edges)
    probs = expected_bin_probabilities(R, edges)
    expected = probs * len(big)
    sel = expected >= 5
    obs = np.concatenate([counts[sel], [counts[~sel].sum()]])
    exp = np.concatenate([expected[sel], [expected[~sel].sum()]])
    _, p = chisquare(obs, exp * obs.sum() / exp.sum())
    assert p >= 0.01
