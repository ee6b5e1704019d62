import numpy as np
import pytest

from qbohm.dynamics import (
    ComplexFieldState,
    PolarState,
    density_second_moment,
    evolve_oracle,
    evolve_polar,
    polar_decompose,
    polar_stability_bound,
    step_polar,
)
from qbohm.eigensolve import schrodinger_oracle
from qbohm.exceptions import NodeBreakdownError
from qbohm.fields import (
    ScalarField,
    field_from_function,
    gradient,
    grid_1d,
    grid_2d,
    integrate,
)
from qbohm.states import (
    complex_from_polar,
    gaussian_complex,
    gaussian_polar,
    ground_state_polar,
    two_gaussian_complex,
)
from qbohm.units import Units


def _free_512():
    g = grid_1d(-8.0, 8.0, 512)
    return ScalarField(g, np.zeros(512), units="energy")


def _harmonic(grid):
    return field_from_function(grid, lambda x: 0.5 * x**2, units="energy")


# --- polar stepping ---------------------------------------------------------


def test_eigenstate_is_fixed_point():
    g = grid_1d(-5.5, 5.5, 512)
    V = _harmonic(g)
    st = ground_state_polar(V)
    lam = schrodinger_oracle(V, 1).eigenvalues[0]
    dt = 0.9 * polar_stability_bound(g)
    nxt = step_polar(st, V, dt)
    assert np.max(np.abs(nxt.R.values - st.R.values)) <= 1e-6
    ds = nxt.S.values - st.S.values
    assert np.max(ds) - np.min(ds) <= 1e-6  # uniform in space
    assert np.mean(ds) == pytest.approx(-lam * dt, rel=1e-6)
    assert np.mean(ds) == pytest.approx(-0.5 * dt, abs=1e-6)


def test_plane_wave_action_advance():
    g = grid_1d(-8.0, 8.0, 512)
    V = _free_512()
    k = 1.1
    R = ScalarField(g, np.full(512, (16.0) ** -0.5))
    S = ScalarField(g, k * g.axis(0), units="action")
    st = PolarState(R, S, 0.0)
    dt = 0.5 * polar_stability_bound(g)
    nxt = step_polar(st, V, dt)
    interior = slice(2, -2)
    ds = (nxt.S.values - st.S.values)[interior]
    assert np.allclose(ds, -0.5 * k**2 * dt, atol=1e-12)
    assert np.max(np.abs(nxt.R.values - st.R.values)[interior]) <= 1e-12


def test_step_polar_rejects_oversized_dt():
    g = grid_1d(-8.0, 8.0, 512)
    st = gaussian_polar(g, sigma=1.0)
    with pytest.raises(ValueError):
        step_polar(st, _free_512(), 2.0 * polar_stability_bound(g))


def test_step_polar_rejects_nodal_states():
    g = grid_1d(-8.0, 8.0, 512)
    x = g.axis(0)
    nodal = ScalarField(g, x * np.exp(-0.5 * x**2))
    st = PolarState(nodal, ScalarField(g, np.zeros(512)), 0.0)
    with pytest.raises(NodeBreakdownError):
        step_polar(st, _free_512(), 0.5 * polar_stability_bound(g))


def test_free_gaussian_spreading_width():
    g = grid_1d(-8.0, 8.0, 512)
    st = gaussian_polar(g, sigma=1.0)
    bound = polar_stability_bound(g)
    steps = int(np.ceil(1.0 / bound))
    fin, diag = evolve_polar(st, _free_512(), 1.0 / steps, steps)
    width = np.sqrt(density_second_moment(fin.R))
    assert width == pytest.approx(np.sqrt(1.25), rel=1e-2)
    assert diag["total_drift"] <= 1e-6  # per unit time (t_final = 1)
    assert diag["boundary_density_max"] < 1e-12


def test_polar_norm_conserved():
    g = grid_1d(-8.0, 8.0, 512)
    st = gaussian_polar(g, sigma=1.0)
    dt = 0.9 * polar_stability_bound(g)
    fin, diag = evolve_polar(st, _free_512(), dt, 200)
    assert integrate(fin.R * fin.R) == pytest.approx(1.0, abs=1e-12)


def test_galilean_boost_shifts_flux_linearly():
    g = grid_1d(-8.0, 8.0, 512)
    st = gaussian_polar(g, sigma=1.0)
    p = 0.8
    boosted = ScalarField(g, st.S.values + p * g.axis(0))
    dS1 = gradient(st.S).components[0].values
    dS2 = gradient(boosted).components[0].values
    flux_shift = st.R.values**2 * (dS2 - dS1)
    assert np.allclose(flux_shift, p * st.R.values**2, rtol=1e-12, atol=1e-15)


# --- wavefunction oracle ----------------------------------------------------


def test_oracle_zero_steps_identity():
    g = grid_1d(-8.0, 8.0, 256)
    psi = gaussian_complex(g, sigma=1.0)
    out = evolve_oracle(psi, _harmonic(g), 0.01, 0)
    assert out is psi


def test_oracle_eigenstate_modulus_and_phase():
    g = grid_1d(-10.0, 10.0, 512)
    V = _harmonic(g)
    spec = schrodinger_oracle(V, 1)
    lam = spec.eigenvalues[0]
    psi0 = ComplexFieldState(g, spec.eigenvectors[0].values.astype(complex), 0.0)
    dt, steps = 1e-3, 1000
    psi1 = evolve_oracle(psi0, V, dt, steps)
    assert np.max(np.abs(np.abs(psi1.psi) - np.abs(psi0.psi))) <= 1e-8
    interior = np.abs(psi0.psi) > 1e-6
    phase = np.angle(psi1.psi[interior] / psi0.psi[interior])
    assert np.allclose(phase, -lam * dt * steps, atol=1e-4)


def test_oracle_norm_conservation():
    g = grid_1d(-8.0, 8.0, 512)
    psi = gaussian_complex(g, sigma=1.0, momentum=0.5)
    out = evolve_oracle(psi, _free_512(), 5e-4, 2000)
    assert abs(out.norm() - 1.0) <= 1e-10


def test_oracle_gaussian_width_law():
    g = grid_1d(-10.0, 10.0, 512)
    V = ScalarField(g, np.zeros(512), units="energy")
    psi = gaussian_complex(g, sigma=1.0)
    out = evolve_oracle(psi, V, 5e-4, 2000)
    dec = polar_decompose(out)
    width = np.sqrt(density_second_moment(dec.R))
    assert width == pytest.approx(np.sqrt(1.25), rel=5e-3)


def test_oracle_2d_norm_and_separability():
    g = grid_2d(((-8.0, 8.0), (-8.0, 8.0)), (96, 96))
    V = ScalarField(g, np.zeros(g.shape), units="energy")
    psi = gaussian_complex(g, sigma=(1.0, 1.2), momentum=(0.5, -0.3))
    out = evolve_oracle(psi, V, 1e-3, 400)
    assert abs(out.norm() - 1.0) <= 1e-10
    # free evolution of a product state stays a product: density factorizes
    rho = np.abs(out.psi) ** 2
    mx = rho.sum(axis=1)
    my = rho.sum(axis=0)
    outer = np.outer(mx, my) / rho.sum()
    assert np.max(np.abs(outer - rho)) <= 1e-6 * np.max(rho)


# --- polar decomposition ----------------------------------------------------


def test_polar_decompose_plane_wave():
    g = grid_1d(-8.0, 8.0, 512)
    k = 0.9
    polar = gaussian_polar(g, sigma=1.5, momentum=k)
    psi = complex_from_polar(polar)
    dec = polar_decompose(psi)
    sel = dec.mask
    assert np.max(np.abs(dec.R.values[sel] - polar.R.values[sel])) <= 1e-12
    grad_s = gradient(dec.S).components[0].values
    inner = sel & (np.abs(g.axis(0)) < 6.0)
    assert np.allclose(grad_s[inner], k, atol=1e-6)


def test_polar_decompose_real_positive_zero_action():
    g = grid_1d(-8.0, 8.0, 256)
    psi = gaussian_complex(g, sigma=1.0)
    dec = polar_decompose(psi)
    assert np.max(np.abs(dec.S.values)) == 0.0
    assert not dec.disconnected


def test_polar_decompose_anchor_range():
    g = grid_1d(-8.0, 8.0, 256)
    base = gaussian_complex(g, sigma=1.0)
    for phase in (0.3, 2.0, -1.0, 3.9):
        psi = ComplexFieldState(g, base.psi * np.exp(1j * phase), 0.0)
        dec = polar_decompose(psi)
        ci = g.center_index()
        assert 0.0 <= dec.S.values[ci] < 2 * np.pi
        assert dec.S.values[ci] == pytest.approx(phase % (2 * np.pi), abs=1e-12)


def test_polar_decompose_disconnected_components_flagged():
    g = grid_1d(-20.0, 20.0, 1024)
    x = g.axis(0)
    psi_vals = np.exp(-((x - 12.0) ** 2)) + np.exp(-((x + 12.0) ** 2)) * np.exp(1j * 1.0)
    psi = ComplexFieldState(g, psi_vals, 0.0)
    with pytest.raises(ValueError):
        polar_decompose(psi)  # center sits in the masked gap
    psi_vals = psi_vals + np.exp(-(x**2))
    dec = polar_decompose(ComplexFieldState(g, psi_vals, 0.0))
    assert dec.disconnected
    assert dec.n_components == 3
    assert np.all(np.isfinite(dec.S.values))


def test_polar_decompose_2d_smooth_phase():
    g = grid_2d(((-6.0, 6.0), (-6.0, 6.0)), (96, 96))
    polar = gaussian_polar(g, sigma=1.2, momentum=(0.7, -0.4))
    psi = complex_from_polar(polar)
    dec = polar_decompose(psi)
    sel = dec.mask
    gx = gradient(dec.S).components[0].values
    gy = gradient(dec.S).components[1].values
    inner = sel.copy()
    inner[:3, :] = inner[-3:, :] = inner[:, :3] = inner[:, -3:] = False
    assert np.allclose(gx[inner], 0.7, atol=1e-5)
    assert np.allclose(gy[inner], -0.4, atol=1e-5)


# --- cross-validation and convergence ---------------------------------------


def test_polar_matches_oracle_short_horizon():
    g = grid_1d(-8.0, 8.0, 512)
    V = _free_512()
    polar0 = gaussian_polar(g, sigma=1.0)
    bound = polar_stability_bound(g)
    steps = int(np.ceil(0.25 / bound))
    polar1, _ = evolve_polar(polar0, V, 0.25 / steps, steps)
    psi1 = evolve_oracle(complex_from_polar(polar0), V, 2.5e-4, 1000)
    dec = polar_decompose(psi1)
    x = g.axis(0)
    sel = np.abs(x) <= 6.4
    assert np.max(np.abs(polar1.R.values[sel] - dec.R.values[sel])) <= 1e-2 * np.max(dec.R.values)
    gp = gradient(polar1.S).components[0].values
    go = gradient(dec.S).components[0].values
    assert np.max(np.abs(gp[sel] - go[sel])) <= 1e-2 * max(np.max(np.abs(go)), 1.0)


def test_polar_self_convergence_order_at_least_one():
    # time-step refinement against a fine-dt reference on a coarse grid
    g = grid_1d(-8.0, 8.0, 128)
    V = ScalarField(g, np.zeros(128), units="energy")
    st = gaussian_polar(g, sigma=1.0, momentum=0.6)
    bound = polar_stability_bound(g)
    t_final = 0.5
    errors = []
    base_steps = int(np.ceil(t_final / (0.9 * bound)))
    ref_steps = base_steps * 8
    ref, _ = evolve_polar(st, V, t_final / ref_steps, ref_steps)
    for mult in (1, 2):
        n = base_steps * mult
        fin, _ = evolve_polar(st, V, t_final / n, n)
        errors.append(np.max(np.abs(fin.R.values - ref.R.values)))
    order = np.log2(errors[0] / errors[1])
    assert order >= 1.0


def test_polar_2d_short_evolution():
    g = grid_2d(((-6.0, 6.0), (-6.0, 6.0)), (96, 96))
    V = ScalarField(g, np.zeros(g.shape), units="energy")
    st = gaussian_polar(g, sigma=1.2)
    bound = polar_stability_bound(g)
    fin, diag = evolve_polar(st, V, 0.9 * bound, 50)
    assert integrate(fin.R * fin.R) == pytest.approx(1.0, abs=1e-12)
    assert diag["max_step_drift"] <= 1e-9


def test_two_gaussian_state_is_nodal_for_polar():
    g = grid_1d(-12.0, 12.0, 512)
    psi = two_gaussian_complex(g, separation=6.0, sigma=1.0)
    dec = polar_decompose(psi)
    st = PolarState(dec.R, dec.S, 0.0)
    with pytest.raises(NodeBreakdownError):
        step_polar(st, ScalarField(g, np.zeros(512), units="energy"),
                   0.5 * polar_stability_bound(g))
