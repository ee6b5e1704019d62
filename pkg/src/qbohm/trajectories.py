"""Pilot-wave particle trajectories, loop integrals, and endpoint statistics.

Particles follow dx/dt = grad S / m. Velocities come from precomputed
gradient grids, (bi)linearly interpolated in space and, for time-dependent
flows, linearly interpolated between snapshots; paths are advanced with
the classic fourth-order explicit rule, vectorized over the whole seed
ensemble and keyed by seed index, so bundles are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ComplexFieldState, PolarState
from .fields import Grid, ScalarField, first_derivative, gradient
from .units import Units

# |psi|^2 floor (relative to max) for wavefunction-based velocities
VELOCITY_DENSITY_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# interpolation


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[-1] != dim:
        if dim == 1 and pts.shape[0] == 1:
            pts = pts.reshape(-1, 1)
        else:
            raise ValueError(f"positions must have {dim} coordinates")
    return pts


def _cell_coords(grid: Grid, pts: np.ndarray):
    """Cell indices and fractional offsets for each point; errors outside."""
    idx = []
    frac = []
    for a in range(grid.dim):
        lo, hi = grid.extents[a]
        h = grid.spacing[a]
        xa = pts[:, a]
        if np.any(xa < lo - 1e-12 * (hi - lo)) or np.any(xa > hi + 1e-12 * (hi - lo)):
            raise ValueError("position outside the grid domain")
        u = np.clip((xa - lo) / h, 0.0, grid.points[a] - 1.0)
        i = np.minimum(u.astype(int), grid.points[a] - 2)
        idx.append(i)
        frac.append(u - i)
    return idx, frac


def interpolate_values(grid: Grid, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """(Bi)linear interpolation of a grid array at an (N, dim) point set."""
    idx, frac = _cell_coords(grid, pts)
    if grid.dim == 1:
        i, t = idx[0], frac[0]
        return (1.0 - t) * values[i] + t * values[i + 1]
    i, j = idx
    tx, ty = frac
    v00 = values[i, j]
    v10 = values[i + 1, j]
    v01 = values[i, j + 1]
    v11 = values[i + 1, j + 1]
    return (
        (1.0 - tx) * (1.0 - ty) * v00
        + tx * (1.0 - ty) * v10
        + (1.0 - tx) * ty * v01
        + tx * ty * v11
    )


def velocity_at(S: ScalarField, x, units: Units = Units()) -> np.ndarray:
    """grad S / m at position(s) x, via interpolation of the gradient grid.

    Accepts a single position (scalar in 1D, length-2 vector in 2D) or an
    (N, dim) batch; returns matching shape. Exactly linear in S.
    """
    grid = S.grid
    xarr = np.asarray(x, dtype=float)
    single = xarr.ndim == 0 or (grid.dim == 2 and xarr.shape == (2,))
    pts = _as_points(xarr, grid.dim)
    comps = gradient(S).components
    out = np.stack(
        [interpolate_values(grid, c.values, pts) for c in comps], axis=-1
    ) / units.mass
    return out[0] if single else out


# ---------------------------------------------------------------------------
# velocity providers


class StaticPhaseVelocity:
    """Time-independent flow from one action field."""

    def __init__(self, S: ScalarField, units: Units = Units()):
        self.grid = S.grid
        self.units = units
        self._comps = [c.values for c in gradient(S).components]

    def __call__(self, pts: np.ndarray, t: float) -> np.ndarray:
        return (
            np.stack([interpolate_values(self.grid, c, pts) for c in self._comps], axis=-1)
            / self.units.mass
        )


class SnapshotVelocity:
    """Velocity grids at sample times, interpolated linearly in time."""

    def __init__(self, times, velocity_grids, grid: Grid, units: Units = Units()):
        self.times = np.asarray(times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        self.grids = velocity_grids  # list over time of [comp arrays]
        self.grid = grid
        self.units = units

    @classmethod
    def from_polar_states(cls, states: list[PolarState], units: Units = Units()):
        grid = states[0].grid
        vels = []
        for st in states:
            comps = [c.values / units.mass for c in gradient(st.S).components]
            vels.append(comps)
        return cls([st.t for st in states], vels, grid, units)

    @classmethod
    def from_wavefunctions(cls, states: list[ComplexFieldState], units: Units = Units()):
        """Guidance velocity (hbar/m) Im(grad psi / psi), floored near nodes."""
        grid = states[0].grid
        vels = []
        for st in states:
            dens = np.abs(st.psi) ** 2
            floor = VELOCITY_DENSITY_FLOOR * float(np.max(dens))
            dens = np.maximum(dens, floor)
            comps = []
            for a in range(grid.dim):
                dpsi = first_derivative(st.psi.real, grid.spacing[a], axis=a) + 1j * first_derivative(
                    st.psi.imag, grid.spacing[a], axis=a
                )
                j_a = (units.hbar / units.mass) * np.imag(np.conjugate(st.psi) * dpsi)
                comps.append(j_a / dens)
            vels.append(comps)
        return cls([st.t for st in states], vels, grid, units)

    def __call__(self, pts: np.ndarray, t: float) -> np.ndarray:
        times = self.times
        if t <= times[0]:
            lo = hi = 0
            w = 0.0
        elif t >= times[-1]:
            lo = hi = len(times) - 1
            w = 0.0
        else:
            hi = int(np.searchsorted(times, t))
            lo = hi - 1
            w = (t - times[lo]) / (times[hi] - times[lo])
        out = []
        for a in range(self.grid.dim):
            va = interpolate_values(self.grid, self.grids[lo][a], pts)
            if w > 0.0:
                va = (1.0 - w) * va + w * interpolate_values(self.grid, self.grids[hi][a], pts)
            out.append(va)
        return np.stack(out, axis=-1)


# ---------------------------------------------------------------------------
# trajectory integration


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """Paths for an ensemble of seeds at shared sample times.

    Exited paths are frozen at their last inside position and flagged with
    their exit time; everything is keyed by seed index.
    """

    seeds: np.ndarray  # (N, dim)
    times: np.ndarray  # (T,)
    paths: np.ndarray  # (N, T, dim)
    exited: np.ndarray  # (N,) bool
    exit_times: np.ndarray  # (N,) float, nan when completed
    domain: tuple[tuple[float, float], ...]
    dt: float
    interpolation: str = "linear"

    @property
    def n_paths(self) -> int:
        return self.seeds.shape[0]

    @property
    def completed(self) -> np.ndarray:
        return ~self.exited

    def endpoints(self) -> np.ndarray:
        return self.paths[:, -1, :]

    def to_csv(self) -> str:
        dim = self.seeds.shape[1]
        header = "seed_index,t,x" + (",y" if dim == 2 else "")
        lines = [header]
        for i in range(self.n_paths):
            for k, t in enumerate(self.times):
                coords = ",".join("%.17g" % c for c in self.paths[i, k])
                lines.append(f"{i},{'%.17g' % t},{coords}")
        return "\n".join(lines) + "\n"


def integrate_trajectories(
    provider,
    seeds,
    t0: float,
    t1: float,
    dt: float,
    domain: tuple[tuple[float, float], ...],
    sample_every: int = 1,
) -> TrajectoryBundle:
    """Advance dx/dt = v(x, t) for every seed with fourth-order steps.

    ``provider`` maps (positions, t) to velocities. Paths leaving the
    domain stop and are flagged; the rest integrate to t1.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    dim = len(domain)
    pts = _as_points(np.asarray(seeds, dtype=float), dim).copy()
    n = pts.shape[0]
    n_steps = int(round((t1 - t0) / dt))
    if abs(t0 + n_steps * dt - t1) > 1e-9 * max(1.0, abs(t1)):
        n_steps = int(math.ceil((t1 - t0) / dt))

    lo = np.array([d[0] for d in domain])
    hi = np.array([d[1] for d in domain])

    def inside(p):
        return np.all((p >= lo) & (p <= hi), axis=-1)

    alive = inside(pts)
    exited = ~alive
    exit_times = np.full(n, np.nan)
    exit_times[exited] = t0

    times = [t0]
    snapshots = [pts.copy()]

    def vel(p, t):
        # clip for evaluation so frozen/edge points never leave the provider domain
        return provider(np.clip(p, lo, hi), t)

    t = t0
    for step in range(1, n_steps + 1):
        k1 = vel(pts, t)
        k2 = vel(pts + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = vel(pts + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = vel(pts + dt * k3, t + dt)
        proposal = pts + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + step * dt
        ok = inside(proposal)
        move = alive & ok
        pts[move] = proposal[move]
        newly_out = alive & ~ok
        if np.any(newly_out):
            exited |= newly_out
            exit_times[newly_out] = t
            alive &= ~newly_out
        if step % sample_every == 0 or step == n_steps:
            times.append(t)
            snapshots.append(pts.copy())

    return TrajectoryBundle(
        seeds=_as_points(np.asarray(seeds, dtype=float), dim),
        times=np.asarray(times),
        paths=np.stack(snapshots, axis=1),
        exited=exited,
        exit_times=exit_times,
        domain=tuple(domain),
        dt=dt,
    )


# ---------------------------------------------------------------------------
# loop integrals


@dataclass(frozen=True, eq=False)
class LoopResult:
    """Closed-curve integral of grad S . dl and the winding estimate."""

    curve: np.ndarray
    value: float
    n_est: float


def loop_integral(phase, curve, units: Units = Units(), mask: np.ndarray | None = None) -> LoopResult:
    """Composite midpoint circulation of grad S around a closed polyline.

    ``phase`` is either a grid ScalarField (single-valued by construction;
    the tangential derivative at each segment midpoint is the symmetric
    difference of the interpolated field at the segment ends, so the sum
    telescopes) or a callable pts -> grad S values for analytic, possibly
    multi-valued phases. The winding estimate value/h is reported, never
    enforced.
    """
    pts = np.atleast_2d(np.asarray(curve, dtype=float))
    if not np.allclose(pts[0], pts[-1]):
        raise ValueError("curve must be closed (first point = last point)")
    a = pts[:-1]
    b = pts[1:]
    if isinstance(phase, ScalarField):
        grid = phase.grid
        seg_len = np.sqrt(np.sum((b - a) ** 2, axis=-1))
        if np.any(seg_len > 2.0 * max(grid.spacing) + 1e-12):
            raise ValueError("segment lengths must stay at or below twice the grid spacing")
        if mask is not None:
            valid = interpolate_values(grid, mask.astype(float), np.vstack([a, b]))
            if np.any(valid < 1.0 - 1e-12):
                raise ValueError("curve passes through a masked phase region")
        sa = interpolate_values(grid, phase.values, a)
        sb = interpolate_values(grid, phase.values, b)
        value = float(np.sum(sb - sa))
    else:
        mid = 0.5 * (a + b)
        grads = np.asarray(phase(mid))
        value = float(np.sum(grads * (b - a)))
    return LoopResult(curve=pts, value=value, n_est=value / units.planck)


# ---------------------------------------------------------------------------
# seeding and endpoint statistics


def _cell_masses(R: ScalarField) -> np.ndarray:
    """Per-cell trapezoidal masses of the density R^2."""
    rho = R.values**2
    grid = R.grid
    if grid.dim == 1:
        return 0.5 * (rho[1:] + rho[:-1]) * grid.spacing[0]
    hx, hy = grid.spacing
    corners = rho[:-1, :-1] + rho[1:, :-1] + rho[:-1, 1:] + rho[1:, 1:]
    return 0.25 * corners * hx * hy


def sample_from_density(R: ScalarField, n: int, seed: int) -> np.ndarray:
    """Draw n positions distributed as R^2 by seeded inverse-CDF sampling.

    Cells are chosen by inverting the cumulative cell-mass distribution;
    positions are uniform within the selected cell.
    """
    grid = R.grid
    rng = np.random.default_rng(seed)
    masses = _cell_masses(R).ravel()
    cdf = np.cumsum(masses)
    cdf /= cdf[-1]
    u = rng.random(n)
    cells = np.searchsorted(cdf, u)
    jitter = rng.random((n, grid.dim))
    if grid.dim == 1:
        lo, _ = grid.extents[0]
        h = grid.spacing[0]
        return (lo + (cells + jitter[:, 0]) * h).reshape(n, 1)
    ny_cells = grid.points[1] - 1
    ix = cells // ny_cells
    iy = cells % ny_cells
    out = np.empty((n, 2))
    out[:, 0] = grid.extents[0][0] + (ix + jitter[:, 0]) * grid.spacing[0]
    out[:, 1] = grid.extents[1][0] + (iy + jitter[:, 1]) * grid.spacing[1]
    return out


@dataclass(frozen=True, eq=False)
class EndpointHistogram:
    bin_edges: np.ndarray
    centers: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    def to_csv(self) -> str:
        lines = ["bin_center,density"]
        for c, d in zip(self.centers, self.density):
            lines.append(f"{'%.17g' % c},{'%.17g' % d}")
        return "\n".join(lines) + "\n"


def endpoint_histogram(bundle: TrajectoryBundle, bins: int, axis: int = 0) -> EndpointHistogram:
    """Normalized histogram of completed-path endpoints along one axis."""
    done = bundle.completed
    n_done = int(np.count_nonzero(done))
    if n_done < 100:
        raise ValueError(f"need at least 100 completed paths, got {n_done}")
    coords = bundle.endpoints()[done, axis]
    lo, hi = bundle.domain[axis]
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(coords, bins=edges)
    width = edges[1] - edges[0]
    density = counts / (n_done * width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return EndpointHistogram(bin_edges=edges, centers=centers, counts=counts, density=density)


def expected_bin_probabilities(R: ScalarField, edges: np.ndarray, axis: int = 0) -> np.ndarray:
    """Bin probabilities of the density R^2, marginalized onto one axis.

    Uses the same per-cell trapezoidal masses as sample_from_density, with
    cells split across bin boundaries in proportion to overlap.
    """
    grid = R.grid
    masses = _cell_masses(R)
    if grid.dim == 2:
        masses = masses.sum(axis=1 - axis)
    masses = masses / masses.sum()
    lo = grid.extents[axis][0]
    h = grid.spacing[axis]
    n_cells = grid.points[axis] - 1
    cell_lo = lo + np.arange(n_cells) * h
    probs = np.zeros(len(edges) - 1)
    for b in range(len(edges) - 1):
        left, right = edges[b], edges[b + 1]
        overlap = np.clip(np.minimum(right, cell_lo + h) - np.maximum(left, cell_lo), 0.0, h)
        probs[b] = float(np.sum(masses * (overlap / h)))
    return probs
