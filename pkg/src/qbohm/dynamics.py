"""Time evolution: polar variables and an independent wavefunction oracle.

``step_polar`` advances the coupled amplitude/action system

    dS/dt = -[(grad S)^2/2m + V + Q(R)],   d(R^2)/dt = -div(R^2 grad S / m)

for node-free states with one classic fourth-order explicit step (forward
Euler sits outside the stability region of the system's purely oscillatory
linearization; the fourth-order region covers it with the documented step
bound). ``evolve_oracle`` integrates the equivalent complex field with an
unconditionally stable time-centered scheme whose update factors are
exactly unitary, and ``polar_decompose`` converts back, so the two
integrators can be cross-validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.ndimage import label as nd_label

from .exceptions import NodeBreakdownError
from .fields import (
    Grid,
    ScalarField,
    first_derivative,
    integrate,
    laplacian,
    quadrature_weights,
    require_same_grid,
)
from .units import Units

# min |R| below this fraction of max |R| counts as a node
NODE_RTOL = 1e-8
# renormalize when the density integral drifts past this
DRIFT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PolarState:
    """Amplitude/action pair at one instant. norm_drift records how far
    the density integral had strayed before the renormalization that
    produced this state."""

    R: ScalarField
    S: ScalarField
    t: float
    norm_drift: float = 0.0

    def __post_init__(self):
        require_same_grid(self.R, self.S)

    @property
    def grid(self) -> Grid:
        return self.R.grid


@dataclass(frozen=True, eq=False)
class ComplexFieldState:
    """Complex field (stored as one complex array) on a grid."""

    grid: Grid
    psi: np.ndarray
    t: float

    def __post_init__(self):
        arr = np.array(self.psi, dtype=complex).reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "psi", arr)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2 * quadrature_weights(self.grid)))


def polar_stability_bound(grid: Grid, units: Units = Units()) -> float:
    """Largest admissible polar step: 0.2 h^2 m / hbar."""
    return 0.2 * min(grid.spacing) ** 2 * units.mass / units.hbar


def _interior(grid: Grid):
    return np.s_[1:-1] if grid.dim == 1 else np.s_[1:-1, 1:-1]


def _check_node_free(vals: np.ndarray, grid: Grid):
    """Node detection over the interior; the boundary ring is Dirichlet-pinned."""
    mx = float(np.max(np.abs(vals)))
    mn = float(np.min(vals[_interior(grid)]))
    if mn < NODE_RTOL * mx:
        raise NodeBreakdownError(
            f"amplitude min/max = {mn / mx if mx else 0.0:.2e} fell below {NODE_RTOL:.0e}; "
            "use the wavefunction-evolution path for nodal states"
        )


def _copy_boundary_from_interior(vals: np.ndarray, grid: Grid):
    if grid.dim == 1:
        vals[0] = vals[1]
        vals[-1] = vals[-2]
    else:
        vals[0, :] = vals[1, :]
        vals[-1, :] = vals[-2, :]
        vals[:, 0] = vals[:, 1]
        vals[:, -1] = vals[:, -2]


def _polar_rhs(Rv: np.ndarray, Sv: np.ndarray, grid: Grid, Vv: np.ndarray, units: Units):
    _check_node_free(Rv, grid)
    h = grid.spacing
    coef = units.hbar**2 / (2.0 * units.mass)
    lap = laplacian(ScalarField(grid, Rv)).values
    q = np.zeros(grid.shape)
    np.divide(-coef * lap, Rv, out=q, where=np.abs(Rv) > 0)
    grad_s = [first_derivative(Sv, h[a], axis=a) for a in range(grid.dim)]
    kinetic = sum(g * g for g in grad_s) / (2.0 * units.mass)
    s_dot = -(kinetic + Vv + q)
    rho_dot = np.zeros(grid.shape)
    R2 = Rv * Rv
    for a, g in enumerate(grad_s):
        rho_dot -= first_derivative(R2 * g / units.mass, h[a], axis=a)
    r_dot = np.zeros(grid.shape)
    np.divide(rho_dot, 2.0 * Rv, out=r_dot, where=np.abs(Rv) > 0)
    # Dirichlet ring: amplitude pinned; the action follows its interior
    # neighbor (no density lives there to constrain it)
    if grid.dim == 1:
        r_dot[0] = r_dot[-1] = 0.0
    else:
        r_dot[0, :] = r_dot[-1, :] = 0.0
        r_dot[:, 0] = r_dot[:, -1] = 0.0
    _copy_boundary_from_interior(s_dot, grid)
    return r_dot, s_dot


def step_polar(
    state: PolarState, V: ScalarField, dt: float, units: Units = Units()
) -> PolarState:
    """One explicit fourth-order step of the polar system."""
    require_same_grid(state.R, V)
    grid = state.grid
    bound = polar_stability_bound(grid, units)
    if dt > bound * (1.0 + 1e-12):
        raise ValueError(f"dt={dt:.3e} exceeds the stability bound {bound:.3e}")
    _check_node_free(state.R.values, grid)

    Vv = V.values
    r0, s0 = state.R.values, state.S.values
    k1r, k1s = _polar_rhs(r0, s0, grid, Vv, units)
    k2r, k2s = _polar_rhs(r0 + 0.5 * dt * k1r, s0 + 0.5 * dt * k1s, grid, Vv, units)
    k3r, k3s = _polar_rhs(r0 + 0.5 * dt * k2r, s0 + 0.5 * dt * k2s, grid, Vv, units)
    k4r, k4s = _polar_rhs(r0 + dt * k3r, s0 + dt * k3s, grid, Vv, units)
    r1 = r0 + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    s1 = s0 + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)

    _check_node_free(r1, grid)
    norm = float(np.sum(r1 * r1 * quadrature_weights(grid)))
    drift = abs(norm - 1.0)
    if drift > DRIFT_TOL:
        r1 = r1 / math.sqrt(norm)
    return PolarState(
        R=state.R.with_values(r1),
        S=state.S.with_values(s1),
        t=state.t + dt,
        norm_drift=drift,
    )


def evolve_polar(
    state: PolarState,
    V: ScalarField,
    dt: float,
    steps: int,
    units: Units = Units(),
    snapshot_times: tuple[float, ...] = (),
):
    """Repeated polar steps. Returns (final_state, diagnostics).

    Diagnostics: accumulated |density drift|, the worst single-step drift,
    the boundary density maximum seen, and any requested snapshots
    (states at the first step time reaching each snapshot time).
    """
    diag = {"total_drift": 0.0, "max_step_drift": 0.0, "steps": steps, "boundary_density_max": 0.0}
    snapshots: list[PolarState] = []
    wanted = sorted(snapshot_times)
    for _ in range(steps):
        state = step_polar(state, V, dt, units)
        diag["total_drift"] += state.norm_drift
        diag["max_step_drift"] = max(diag["max_step_drift"], state.norm_drift)
        diag["boundary_density_max"] = max(
            diag["boundary_density_max"], _boundary_density(state.R)
        )
        while wanted and state.t >= wanted[0] - 1e-12:
            snapshots.append(state)
            wanted.pop(0)
    return state, {**diag, "snapshots": snapshots}


def _boundary_density(R: ScalarField) -> float:
    v = R.values
    if R.grid.dim == 1:
        edge = max(abs(v[0]), abs(v[-1]))
    else:
        edge = max(
            float(np.max(np.abs(v[0, :]))),
            float(np.max(np.abs(v[-1, :]))),
            float(np.max(np.abs(v[:, 0]))),
            float(np.max(np.abs(v[:, -1]))),
        )
    return edge**2


# ---------------------------------------------------------------------------
# wavefunction oracle (time-centered, unitary update factors)


def _cayley_banded(n: int, h: float, vhalf: np.ndarray, a: float, coef: float):
    """Banded LHS (I + i a H) and tridiagonal parts of (I - i a H) along one axis.

    H = -coef d^2/dx^2 + diag(vhalf) on interior points, Dirichlet ends.
    """
    ni = n - 2
    main = 2.0 * coef / h**2 + vhalf
    off = -coef / h**2
    ab = np.zeros((3, ni), dtype=complex)
    ab[0, 1:] = 1j * a * off
    ab[1, :] = 1.0 + 1j * a * main
    ab[2, :-1] = 1j * a * off
    return ab, (1.0 - 1j * a * main, -1j * a * off)


def _cayley_sweep_1d(psi_int: np.ndarray, ab, rhs_parts) -> np.ndarray:
    main, off = rhs_parts
    rhs = main * psi_int
    rhs[1:] += off * psi_int[:-1]
    rhs[:-1] += off * psi_int[1:]
    return solve_banded((1, 1), ab, rhs)


def evolve_oracle(
    state: ComplexFieldState,
    V: ScalarField,
    dt: float,
    steps: int,
    units: Units = Units(),
) -> ComplexFieldState:
    """Advance the complex field ``steps`` times by ``dt``.

    1D: Crank-Nicolson with a tridiagonal solve. 2D: Strang-split Cayley
    sweeps (x half-step, y full step, x half-step) with the potential
    shared evenly between the two axes. Every factor is a Cayley transform
    of a Hermitian operator, so the update is exactly unitary and the norm
    is conserved to round-off.
    """
    require_same_grid(ScalarField(state.grid, np.zeros(state.grid.shape)), V)
    if steps == 0:
        return state
    grid = state.grid
    coef = units.hbar**2 / (2.0 * units.mass)
    psi = state.psi.copy()

    if grid.dim == 1:
        n = grid.points[0]
        a = dt / (2.0 * units.hbar)
        ab, rhs_parts = _cayley_banded(n, grid.spacing[0], V.values[1:-1], a, coef)
        for _ in range(steps):
            psi[0] = psi[-1] = 0.0
            psi[1:-1] = _cayley_sweep_1d(psi[1:-1], ab, rhs_parts)
        return ComplexFieldState(grid, psi, state.t + steps * dt)

    nx, ny = grid.points
    hx, hy = grid.spacing
    vhalf = 0.5 * V.values[1:-1, 1:-1]
    a_half = dt / (4.0 * units.hbar)
    a_full = dt / (2.0 * units.hbar)

    def make_sweep(axis: int, a: float):
        # Returns block -> block after one Cayley sweep along `axis`. When
        # the potential does not vary transverse to the sweep, one banded
        # system serves every line at once.
        n, h = (nx, hx) if axis == 0 else (ny, hy)
        lines = vhalf if axis == 0 else vhalf.T
        uniform = bool(np.all(lines == lines[:, :1]))
        if uniform:
            ab, rhs_parts = _cayley_banded(n, h, lines[:, 0], a, coef)

            def sweep(block: np.ndarray) -> np.ndarray:
                work = block if axis == 0 else block.T
                main, off = rhs_parts
                rhs = main[:, None] * work
                rhs[1:, :] += off * work[:-1, :]
                rhs[:-1, :] += off * work[1:, :]
                out = solve_banded((1, 1), ab, rhs)
                return out if axis == 0 else out.T

            return sweep

        systems = [_cayley_banded(n, h, lines[:, j], a, coef) for j in range(lines.shape[1])]

        def sweep(block: np.ndarray) -> np.ndarray:
            work = block if axis == 0 else block.T
            out = np.empty_like(work)
            for j, (ab, rhs_parts) in enumerate(systems):
                out[:, j] = _cayley_sweep_1d(work[:, j], ab, rhs_parts)
            return out if axis == 0 else out.T

        return sweep

    sweep_x_half = make_sweep(0, a_half)
    sweep_y_full = make_sweep(1, a_full)

    for _ in range(steps):
        psi[0, :] = psi[-1, :] = 0.0
        psi[:, 0] = psi[:, -1] = 0.0
        block = psi[1:-1, 1:-1]
        block = sweep_x_half(block)
        block = sweep_y_full(block)
        block = sweep_x_half(block)
        psi[1:-1, 1:-1] = block
    return ComplexFieldState(grid, psi, state.t + steps * dt)


# ---------------------------------------------------------------------------
# polar decomposition


@dataclass(frozen=True, eq=False)
class PolarDecomposition:
    """R = |psi| and unwrapped action S, with a validity mask.

    Where |psi| falls below threshold the phase is meaningless: S is
    zero-filled there and ``mask`` is False. If the valid set splits into
    several connected components, each component carries an independent
    anchor and ``disconnected`` is set.
    """

    R: ScalarField
    S: ScalarField
    t: float
    mask: np.ndarray
    n_components: int
    disconnected: bool

    def to_polar_state(self) -> PolarState:
        return PolarState(self.R, self.S, self.t)


def polar_decompose(
    state: ComplexFieldState, units: Units = Units(), threshold: float = 1e-10
) -> PolarDecomposition:
    """Split psi into amplitude and action, anchored at the domain center.

    The action at the center lies in [0, 2 pi hbar); the phase is unwrapped
    along a deterministic sweep from the center (1D: outward along the
    axis; 2D: along the center row, then along each column).
    """
    grid = state.grid
    amp = np.abs(state.psi)
    mx = float(np.max(amp))
    valid = amp > threshold * mx
    ci = grid.center_index()
    if not valid[ci]:
        raise ValueError("field magnitude at the domain center is below threshold")

    phi = np.angle(state.psi)
    if grid.dim == 1:
        c = ci[0]
        unwrapped = np.empty_like(phi)
        unwrapped[c:] = np.unwrap(phi[c:])
        unwrapped[: c + 1] = np.unwrap(phi[: c + 1][::-1])[::-1]
    else:
        cx, cy = ci
        row = np.empty_like(phi[cx])
        row[cy:] = np.unwrap(phi[cx, cy:])
        row[: cy + 1] = np.unwrap(phi[cx, : cy + 1][::-1])[::-1]
        unwrapped = np.empty_like(phi)
        down = np.unwrap(np.vstack([row[None, :], phi[cx + 1 :, :]]), axis=0)
        up = np.unwrap(np.vstack([row[None, :], phi[:cx, :][::-1, :]]), axis=0)
        unwrapped[cx:, :] = down
        unwrapped[:cx, :] = up[1:, :][::-1, :]

    anchor = math.atan2(math.sin(phi[ci]), math.cos(phi[ci])) % (2.0 * math.pi)
    s_vals = units.hbar * (unwrapped - unwrapped[ci] + anchor)

    labels, n_comp = nd_label(valid)
    disconnected = n_comp > 1
    if disconnected:
        center_label = labels[ci]
        two_pi_h = 2.0 * math.pi * units.hbar
        for comp in range(1, n_comp + 1):
            if comp == center_label:
                continue
            sel = labels == comp
            first = s_vals[sel].flat[0]
            s_vals = np.where(sel, s_vals - first + (first % two_pi_h), s_vals)
    s_vals = np.where(valid, s_vals, 0.0)

    return PolarDecomposition(
        R=ScalarField(grid, amp),
        S=ScalarField(grid, s_vals, units="action"),
        t=state.t,
        mask=valid,
        n_components=int(n_comp),
        disconnected=disconnected,
    )


def density_second_moment(R: ScalarField, axis: int = 0) -> float:
    """Variance of the density R^2 along one axis (Gaussian width estimator)."""
    grid = R.grid
    x = grid.meshgrid()[axis]
    rho = R.values**2
    w = quadrature_weights(grid)
    total = float(np.sum(rho * w))
    mean = float(np.sum(x * rho * w)) / total
    return float(np.sum((x - mean) ** 2 * rho * w)) / total
