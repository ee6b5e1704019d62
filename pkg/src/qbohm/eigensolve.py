"""Constrained energy minimization and an independent eigensolver oracle.

The total ensemble energy

    E[R] = integral of R^2 { (grad S)^2/2m + V + Q(R) }   with  integral R^2 = 1

is minimized over R by projected gradient descent (imaginary-time
relaxation): R <- R - tau (H R - lambda R), renormalizing each step, with
lambda the running Rayleigh quotient. For the Laplacian-ratio potential
the quantum term is the integrated-by-parts form +|A| * integral |grad R|^2,
realized as a forward-difference square sum; for boundary-pinned fields
this is exactly the quadratic form of the discrete Dirichlet Hamiltonian,
so the minimizer, the Rayleigh functional, and the oracle below all refer
to one and the same discrete operator.

``schrodinger_oracle`` diagonalizes that operator directly (dense
tridiagonal in 1D, sparse five-point in 2D) through an entirely separate
assembly and solver path, giving an independent check on the minimizer.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .exceptions import StepSizeError, UnsupportedAnsatzError
from .fields import (
    Grid,
    ScalarField,
    gradient,
    inner,
    integrate,
    quadrature_weights,
    require_same_grid,
)
from .qpotential import AnsatzExponents, eval_ansatz
from .units import Units

log = logging.getLogger(__name__)

BOHMIAN_TRIPLE = (-1, 0, 1)
CONSTANT_TRIPLE = (0, 0, 0)


def _axis_weights(grid: Grid, axis: int) -> np.ndarray:
    h = grid.spacing[axis]
    w = np.full(grid.points[axis], h)
    w[0] = w[-1] = 0.5 * h
    return w


def dirichlet_kinetic_energy(R: ScalarField, units: Units = Units()) -> float:
    """(hbar^2/2m) * integral |grad R|^2 as a forward-difference square sum.

    Equals the quadratic form <R, -(hbar^2/2m) lap R> of the Dirichlet
    stencil exactly (up to round-off) whenever R vanishes on the boundary.
    """
    grid = R.grid
    total = 0.0
    for a in range(grid.dim):
        d = np.diff(R.values, axis=a)
        if grid.dim == 1:
            s = float(np.sum(d * d)) / grid.spacing[a]
        else:
            other = 1 - a
            w = _axis_weights(grid, other)
            shape = [1, 1]
            shape[other] = grid.points[other]
            s = float(np.sum(d * d * w.reshape(shape))) / grid.spacing[a]
        total += s
    return units.hbar**2 / (2.0 * units.mass) * total


def _flow_energy(R: ScalarField, S: ScalarField | None, units: Units) -> float:
    if S is None:
        return 0.0
    require_same_grid(R, S)
    g2 = gradient(S).magnitude().values ** 2
    return float(np.sum(R.values**2 * g2 * quadrature_weights(R.grid))) / (2.0 * units.mass)


def rayleigh_lambda(
    R: ScalarField,
    S: ScalarField | None,
    V: ScalarField,
    e: AnsatzExponents,
    units: Units = Units(),
) -> float:
    """Energy functional integral R^2 {(grad S)^2/2m + V + Q(R)}.

    R is renormalized internally (with a log warning) if integral R^2
    strays from one by more than 1e-8. The quantum term uses the
    integrated-by-parts form for the Laplacian-ratio ansatz, the exact
    constant for the constant ansatz, and the pointwise masked evaluation
    otherwise.
    """
    require_same_grid(R, V)
    norm = float(np.sum(R.values**2 * quadrature_weights(R.grid)))
    if abs(norm - 1.0) > 1e-8:
        log.warning("rayleigh_lambda: renormalizing input (integral R^2 = %.3e)", norm)
        R = R.with_values(R.values / np.sqrt(norm))
    flow = _flow_energy(R, S, units)
    external = inner(R, V * R)
    if e.triple == BOHMIAN_TRIPLE:
        quantum = -e.A / (units.hbar**2 / (2.0 * units.mass)) * dirichlet_kinetic_energy(R, units)
    elif e.triple == CONSTANT_TRIPLE:
        quantum = e.A
    else:
        q = eval_ansatz(R, e).q
        quantum = inner(R, q * R)
    return flow + external + quantum


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for minimize_energy; None means the documented default."""

    tau: float | None = None
    tol_grad: float = 1e-8
    max_iter: int = 50000
    S: ScalarField | None = None
    initial: ScalarField | None = None
    divergence_window: int = 100
    max_step_halvings: int = 3
    track_lambda: bool = False


@dataclass(frozen=True, eq=False)
class EnergyReport:
    """Minimizer output: normalized field, multiplier, energy breakdown."""

    R_opt: ScalarField
    lam: float
    breakdown: dict
    iterations: int
    converged: bool
    grad_norm: float
    lam_history: tuple[float, ...] | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "lambda": self.lam,
                "breakdown": self.breakdown,
                "iterations": self.iterations,
                "converged": self.converged,
                "grad_norm": self.grad_norm,
            },
            indent=2,
            sort_keys=True,
        )


def _pin_boundary(vals: np.ndarray, grid: Grid):
    if grid.dim == 1:
        vals[0] = vals[-1] = 0.0
    else:
        vals[0, :] = vals[-1, :] = 0.0
        vals[:, 0] = vals[:, -1] = 0.0


def _apply_dirichlet_h(vals: np.ndarray, grid: Grid, veff: np.ndarray, kappa: float) -> np.ndarray:
    """H R = -kappa lap R + Veff R with homogeneous Dirichlet boundary."""
    out = np.zeros_like(vals)
    if grid.dim == 1:
        h2 = grid.spacing[0] ** 2
        out[1:-1] = -kappa * (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / h2
        out[1:-1] += veff[1:-1] * vals[1:-1]
    else:
        hx2 = grid.spacing[0] ** 2
        hy2 = grid.spacing[1] ** 2
        core = np.s_[1:-1, 1:-1]
        out[core] = -kappa * (
            (vals[2:, 1:-1] - 2.0 * vals[core] + vals[:-2, 1:-1]) / hx2
            + (vals[1:-1, 2:] - 2.0 * vals[core] + vals[1:-1, :-2]) / hy2
        )
        out[core] += veff[core] * vals[core]
    return out


def _default_initial(grid: Grid) -> np.ndarray:
    mesh = grid.meshgrid()
    vals = np.ones(grid.shape)
    for x, (lo, hi), c in zip(mesh, grid.extents, grid.center):
        vals = vals * np.exp(-(((x - c) / (0.15 * (hi - lo))) ** 2))
    return vals


def minimize_energy(
    V: ScalarField,
    e: AnsatzExponents,
    opts: SolverOptions = SolverOptions(),
    units: Units = Units(),
) -> EnergyReport:
    """Minimize the constrained energy functional over normalized R.

    Supports the Laplacian-ratio ansatz (with A < 0, the bound-from-below
    case) and the constant ansatz (degenerate classical limit, no
    derivative coupling). The sign convention of the minimizer output:
    the value at the domain center is nonnegative, ties broken toward the
    lower-index extremum of |R|.
    """
    grid = V.grid
    if e.triple == BOHMIAN_TRIPLE:
        if e.A >= 0:
            raise UnsupportedAnsatzError(
                "Laplacian-ratio minimization needs a negative coefficient A"
            )
        kappa = -e.A
    elif e.triple == CONSTANT_TRIPLE:
        kappa = 0.0
    else:
        raise UnsupportedAnsatzError(f"no minimizer for ansatz {e}")

    veff = V.values.copy()
    if opts.S is not None:
        require_same_grid(V, opts.S)
        veff = veff + gradient(opts.S).magnitude().values ** 2 / (2.0 * units.mass)
    if e.triple == CONSTANT_TRIPLE:
        veff = veff + e.A

    w = quadrature_weights(grid)
    if opts.initial is not None:
        require_same_grid(V, opts.initial)
        vals = opts.initial.values.copy()
    else:
        vals = _default_initial(grid)
    _pin_boundary(vals, grid)
    vals /= np.sqrt(np.sum(vals**2 * w))
    vals0 = vals.copy()

    if opts.tau is not None:
        tau = opts.tau
    elif kappa > 0:
        # the per-axis stability budget shrinks with the number of axes
        tau = 0.4 * min(grid.spacing) ** 2 * units.mass / (units.hbar**2 * grid.dim)
    else:
        span = float(np.max(veff) - np.min(veff))
        tau = 1.0 / span if span > 0 else 1.0

    lam_prev = np.inf
    rising = 0
    halvings = 0
    gnorm = np.inf
    converged = False
    iterations = 0
    history: list[float] = []
    for iterations in range(1, opts.max_iter + 1):
        hv = _apply_dirichlet_h(vals, grid, veff, kappa)
        lam = float(np.sum(vals * hv * w))
        if opts.track_lambda:
            history.append(lam)
        resid = hv - lam * vals
        gnorm = 2.0 * float(np.sqrt(np.sum(resid**2 * w)))
        if gnorm <= opts.tol_grad:
            converged = True
            break
        diverging = not np.isfinite(lam)
        if lam > lam_prev:
            rising += 1
            diverging = diverging or rising >= opts.divergence_window
        else:
            rising = 0
        if diverging:
            if halvings >= opts.max_step_halvings:
                raise StepSizeError(
                    f"energy relaxation diverged at tau={tau:.3e}; retry with a smaller step"
                )
            tau *= 0.5
            halvings += 1
            rising = 0
            if not np.all(np.isfinite(vals)):
                vals = vals0.copy()
            lam_prev = np.inf
            continue
        lam_prev = lam
        vals = vals - tau * resid
        _pin_boundary(vals, grid)
        vals /= np.sqrt(np.sum(vals**2 * w))

    # sign convention: nonnegative at the domain center
    ci = grid.center_index()
    cval = vals[ci]
    if cval == 0.0:
        ext = np.unravel_index(int(np.argmax(np.abs(vals))), vals.shape)
        cval = vals[ext]
    if cval < 0:
        vals = -vals

    R_opt = ScalarField(grid, vals)
    flow = _flow_energy(R_opt, opts.S, units)
    external = inner(R_opt, V * R_opt)
    if e.triple == BOHMIAN_TRIPLE:
        quantum = (kappa / (units.hbar**2 / (2.0 * units.mass))) * dirichlet_kinetic_energy(
            R_opt, units
        )
    else:
        quantum = e.A
    lam_final = flow + external + quantum
    return EnergyReport(
        R_opt=R_opt,
        lam=lam_final,
        breakdown={"kinetic_flow": flow, "external": external, "quantum": quantum},
        iterations=iterations,
        converged=converged,
        grad_norm=gnorm,
        lam_history=tuple(history) if opts.track_lambda else None,
    )


@dataclass(frozen=True, eq=False)
class OracleSpectrum:
    """Leading eigenpairs of the discrete Dirichlet Hamiltonian."""

    eigenvalues: np.ndarray
    eigenvectors: tuple[ScalarField, ...]


def schrodinger_oracle(V: ScalarField, k: int, units: Units = Units()) -> OracleSpectrum:
    """First k eigenpairs of -(hbar^2/2m) lap + V with Dirichlet boundaries.

    Assembled and solved independently of minimize_energy: dense symmetric
    tridiagonal eigendecomposition in 1D, sparse five-point Lanczos in 2D.
    Eigenvectors are embedded on the full grid (zero boundary), normalized
    under the trapezoidal quadrature, nonnegative at the domain center.
    """
    grid = V.grid
    n_interior = int(np.prod([n - 2 for n in grid.points]))
    if k < 1 or k > n_interior:
        raise ValueError(f"k must be in [1, {n_interior}], got {k}")
    coef = units.hbar**2 / (2.0 * units.mass)

    if grid.dim == 1:
        h = grid.spacing[0]
        vint = V.values[1:-1]
        diag = 2.0 * coef / h**2 + vint
        off = np.full(len(vint) - 1, -coef / h**2)
        evals, evecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
        embedded = []
        for i in range(k):
            full = np.zeros(grid.shape)
            full[1:-1] = evecs[:, i]
            embedded.append(full)
    else:
        nx, ny = grid.points
        hx, hy = grid.spacing

        def lap1(n, h):
            main = np.full(n - 2, -2.0 / h**2)
            offd = np.full(n - 3, 1.0 / h**2)
            return sp.diags([offd, main, offd], [-1, 0, 1])

        ix = sp.identity(nx - 2)
        iy = sp.identity(ny - 2)
        lap = sp.kron(lap1(nx, hx), iy) + sp.kron(ix, lap1(ny, hy))
        ham = (-coef * lap + sp.diags(V.values[1:-1, 1:-1].ravel())).tocsc()
        v0 = np.ones(ham.shape[0])
        evals, evecs = eigsh(ham, k=k, which="SA", v0=v0)
        order = np.argsort(evals)
        evals = evals[order]
        evecs = evecs[:, order]
        embedded = []
        for i in range(k):
            full = np.zeros(grid.shape)
            full[1:-1, 1:-1] = evecs[:, i].reshape(nx - 2, ny - 2)
            embedded.append(full)

    fields = []
    ci = grid.center_index()
    for full in embedded:
        f = ScalarField(grid, full)
        norm = integrate(f * f)
        vals = full / np.sqrt(norm)
        cval = vals[ci]
        if cval == 0.0:
            ext = np.unravel_index(int(np.argmax(np.abs(vals))), vals.shape)
            cval = vals[ext]
        if cval < 0:
            vals = -vals
        fields.append(ScalarField(grid, vals))
    return OracleSpectrum(eigenvalues=np.asarray(evals, dtype=float), eigenvectors=tuple(fields))
