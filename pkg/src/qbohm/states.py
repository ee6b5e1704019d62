"""Named initial states for dynamics and trajectory scenarios."""

from __future__ import annotations

import numpy as np

from .dynamics import ComplexFieldState, PolarState
from .eigensolve import schrodinger_oracle
from .fields import Grid, ScalarField, constant_field, normalize_density, quadrature_weights
from .units import Units


def _normalize_complex(grid: Grid, psi: np.ndarray) -> np.ndarray:
    norm = float(np.sum(np.abs(psi) ** 2 * quadrature_weights(grid)))
    return psi / np.sqrt(norm)


def gaussian_polar(
    grid: Grid,
    sigma=1.0,
    center=None,
    momentum=None,
    t: float = 0.0,
) -> PolarState:
    """Node-free Gaussian density of the given width(s), with linear action.

    sigma is the density standard deviation: R ~ exp(-(x-c)^2 / (4 sigma^2)).
    """
    dim = grid.dim
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (dim,))
    center = grid.center if center is None else np.broadcast_to(np.asarray(center, float), (dim,))
    momentum = np.zeros(dim) if momentum is None else np.broadcast_to(np.asarray(momentum, float), (dim,))
    mesh = grid.meshgrid()
    r = np.ones(grid.shape)
    s = np.zeros(grid.shape)
    for x, sg, c, k in zip(mesh, sigma, center, momentum):
        r = r * np.exp(-((x - c) ** 2) / (4.0 * sg * sg))
        s = s + k * x
    R = normalize_density(ScalarField(grid, r))
    return PolarState(R=R, S=ScalarField(grid, s, units="action"), t=t)


def gaussian_complex(
    grid: Grid,
    sigma=1.0,
    center=None,
    momentum=None,
    units: Units = Units(),
    t: float = 0.0,
) -> ComplexFieldState:
    """Complex counterpart of gaussian_polar: psi = R exp(i S / hbar), S = k.x."""
    polar = gaussian_polar(grid, sigma, center, momentum, t)
    psi = polar.R.values * np.exp(1j * polar.S.values / units.hbar)
    return ComplexFieldState(grid, _normalize_complex(grid, psi), t)


def two_gaussian_complex(
    grid: Grid,
    separation: float = 6.0,
    sigma: float = 1.0,
    relative_phase: float = 0.0,
    momentum: float = 0.0,
    t: float = 0.0,
) -> ComplexFieldState:
    """1D superposition of two displaced Gaussian packets."""
    if grid.dim != 1:
        raise ValueError("two_gaussian_complex is a 1D state")
    x = grid.axis(0)
    c = grid.center[0]
    g1 = np.exp(-((x - c - 0.5 * separation) ** 2) / (4.0 * sigma * sigma))
    g2 = np.exp(-((x - c + 0.5 * separation) ** 2) / (4.0 * sigma * sigma))
    psi = (g1 + np.exp(1j * relative_phase) * g2) * np.exp(1j * momentum * x)
    return ComplexFieldState(grid, _normalize_complex(grid, psi), t)


def two_slit_complex(
    grid: Grid,
    separation: float = 6.0,
    sigma_x: float = 0.8,
    sigma_y: float = 1.2,
    center_y: float = -5.0,
    momentum_y: float = 4.0,
    momentum_x: float = 2.0,
    relative_phase: float = 0.0,
    t: float = 0.0,
) -> ComplexFieldState:
    """Two coherent beams launched along +y: the double-slit configuration.

    psi(x, y) = [g(x-d/2) e^{-i k_x x} + e^{i phi} g(x+d/2) e^{+i k_x x}]
                * h(y - y0) e^{i k_y y},
    an exactly separable product of a two-Gaussian x-factor and a moving
    packet y-factor, so the interference fringes are vertical stripes.
    With momentum_x > 0 the beams converge and fully overlap at
    t = separation / (2 momentum_x / m); equal envelopes there give true
    interference zeros across the whole pattern.
    """
    if grid.dim != 2:
        raise ValueError("two_slit_complex is a 2D state")
    x, y = grid.meshgrid()
    cx = grid.center[0]
    a = 0.5 * separation
    g1 = np.exp(-((x - cx - a) ** 2) / (4.0 * sigma_x * sigma_x) - 1j * momentum_x * x)
    g2 = np.exp(-((x - cx + a) ** 2) / (4.0 * sigma_x * sigma_x) + 1j * momentum_x * x)
    envelope_y = np.exp(-((y - center_y) ** 2) / (4.0 * sigma_y * sigma_y))
    psi = (g1 + np.exp(1j * relative_phase) * g2) * envelope_y * np.exp(1j * momentum_y * y)
    return ComplexFieldState(grid, _normalize_complex(grid, psi), t)


def ground_state_polar(V: ScalarField, units: Units = Units(), t: float = 0.0) -> PolarState:
    """Stationary ground state of the discrete Hamiltonian, with S = 0."""
    spec = schrodinger_oracle(V, 1, units)
    R = spec.eigenvectors[0]
    return PolarState(R=R, S=constant_field(V.grid, 0.0, units="action"), t=t)


def complex_from_polar(state: PolarState, units: Units = Units()) -> ComplexFieldState:
    psi = state.R.values * np.exp(1j * state.S.values / units.hbar)
    return ComplexFieldState(state.grid, psi, state.t)
