"""Candidate quantum potentials of power-law form.

A candidate is Q = A * R**m * |grad R|**n * (lap R)**p with integer
exponents. Integer powers keep negative bases well defined; points where a
negatively-powered base (numerically) vanishes are masked rather than
raising, since amplitude nodes are physically meaningful.

Special cases: (0,0,0) is the constant potential Q = A, and (-1,0,1) is
the Laplacian-ratio form Q = A * lap(R) / R familiar from pilot-wave
dynamics (with A = -hbar**2/2m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import FullySingularError
from .fields import ScalarField, VectorField, gradient, laplacian

# Relative threshold below which a base entering a negative power counts as
# singular: |base| < SINGULAR_RTOL * max|base|.
SINGULAR_RTOL = 1e-10


@dataclass(frozen=True)
class AnsatzExponents:
    """Exponent triple (m, n, p) and coefficient A of a candidate potential."""

    m: int
    n: int
    p: int
    A: float
    allow_zero_coefficient: bool = False

    def __post_init__(self):
        for name in ("m", "n", "p"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"exponent {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not np.isfinite(self.A):
            raise ValueError("coefficient A must be finite")
        if self.A == 0.0 and not self.allow_zero_coefficient:
            raise ValueError("coefficient A must be nonzero (pass allow_zero_coefficient=True for the trivial zero potential)")

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.m, self.n, self.p)

    def __str__(self):
        return f"(m={self.m}, n={self.n}, p={self.p}, A={self.A})"


def bohmian_ansatz(A: float = -0.5) -> AnsatzExponents:
    return AnsatzExponents(-1, 0, 1, A)


def constant_ansatz(A: float) -> AnsatzExponents:
    return AnsatzExponents(0, 0, 0, A, allow_zero_coefficient=(A == 0.0))


@dataclass(frozen=True, eq=False)
class QEvaluation:
    """Potential values plus a per-point validity mask.

    ``q`` is zero-filled at masked points so the field stays finite;
    consumers that care must consult ``mask`` (True = valid).
    """

    q: ScalarField
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool).reshape(self.q.grid.shape)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def masked_fraction(self) -> float:
        return 1.0 - float(np.count_nonzero(self.mask)) / self.mask.size

    def to_csv(self) -> str:
        """Field CSV followed by the validity mask (0/1) in the same layout."""
        from .fields import field_to_csv

        lines = [field_to_csv(self.q).rstrip("\n"), "# mask"]
        if self.q.grid.dim == 1:
            lines.extend(str(int(v)) for v in self.mask)
        else:
            lines.extend(",".join(str(int(v)) for v in row) for row in self.mask)
        return "\n".join(lines) + "\n"


def qevaluation_from_csv(text: str) -> QEvaluation:
    """Inverse of QEvaluation.to_csv."""
    from .fields import field_from_csv

    head, _, mask_part = text.partition("# mask")
    q = field_from_csv(head, units="energy")
    rows = [ln for ln in mask_part.splitlines() if ln.strip()]
    if q.grid.dim == 1:
        mask = np.array([int(ln) for ln in rows], dtype=bool)
    else:
        mask = np.array([[int(tok) for tok in ln.split(",")] for ln in rows], dtype=bool)
    return QEvaluation(q, mask)


def _power_factor(base: np.ndarray, k: int):
    """base**k with masking where a negative power meets a vanishing base.

    Returns (factor, valid). 0**0 is taken as 1. Masked entries of the
    factor are set to 1 so downstream products stay finite.
    """
    valid = np.ones(base.shape, dtype=bool)
    if k == 0:
        return np.ones_like(base), valid
    if k > 0:
        return base**k, valid
    scale = float(np.max(np.abs(base)))
    valid = np.abs(base) > SINGULAR_RTOL * scale if scale > 0 else np.zeros_like(valid)
    factor = np.ones_like(base)
    np.power(base, k, out=factor, where=valid)
    return factor, valid


def eval_bohmian(R: ScalarField, A: float) -> QEvaluation:
    """Q = A * lap(R) / R, masked where |R| is negligible relative to max|R|."""
    lap = laplacian(R).values
    scale = float(np.max(np.abs(R.values)))
    valid = np.abs(R.values) > SINGULAR_RTOL * scale if scale > 0 else np.zeros(R.grid.shape, bool)
    if not valid.any():
        raise FullySingularError("amplitude field is numerically zero everywhere")
    q = np.zeros(R.grid.shape)
    np.divide(A * lap, R.values, out=q, where=valid)
    return QEvaluation(ScalarField(R.grid, q, units="energy"), valid)


def eval_ansatz(R: ScalarField, e: AnsatzExponents) -> QEvaluation:
    """Q = A * R**m * |grad R|**n * (lap R)**p with singular points masked."""
    grad_mag = gradient(R).magnitude().values
    lap = laplacian(R).values
    fR, vR = _power_factor(R.values, e.m)
    fG, vG = _power_factor(grad_mag, e.n)
    fL, vL = _power_factor(lap, e.p)
    valid = vR & vG & vL
    if not valid.any():
        raise FullySingularError(f"ansatz {e} is singular at every grid point")
    q = np.where(valid, e.A * fR * fG * fL, 0.0)
    return QEvaluation(ScalarField(R.grid, q, units="energy"), valid)


@dataclass(frozen=True, eq=False)
class AnsatzPartials:
    """Closed-form partial derivatives of the ansatz w.r.t. its arguments.

    dq_dr        : dQ/dR            = m Q / R
    dq_dgrad[i]  : dQ/d(d_i R)      = n Q (d_i R) / |grad R|**2
    dq_dhess[i][j]: dQ/d(d_i d_j R) = p Q delta_ij / lap(R)

    evaluated stably as explicit power products. One combined mask covers
    all three families.
    """

    dq_dr: ScalarField
    dq_dgrad: VectorField
    dq_dhess: tuple[tuple[ScalarField, ...], ...]
    mask: np.ndarray


def ansatz_partials(R: ScalarField, e: AnsatzExponents) -> AnsatzPartials:
    grid = R.grid
    grad = gradient(R)
    grad_vals = [c.values for c in grad.components]
    grad_mag = grad.magnitude().values
    lap = laplacian(R).values

    # dQ/dR = A m R^(m-1) |g|^n L^p
    if e.m == 0:
        dr = np.zeros(grid.shape)
        vr = np.ones(grid.shape, bool)
    else:
        fR, v1 = _power_factor(R.values, e.m - 1)
        fG, v2 = _power_factor(grad_mag, e.n)
        fL, v3 = _power_factor(lap, e.p)
        vr = v1 & v2 & v3
        dr = np.where(vr, e.A * e.m * fR * fG * fL, 0.0)

    # dQ/d(d_i R) = A n R^m |g|^(n-2) L^p * g_i
    if e.n == 0:
        dg = [np.zeros(grid.shape) for _ in range(grid.dim)]
        vg = np.ones(grid.shape, bool)
    else:
        fR, v1 = _power_factor(R.values, e.m)
        fG, v2 = _power_factor(grad_mag, e.n - 2)
        fL, v3 = _power_factor(lap, e.p)
        vg = v1 & v2 & v3
        base = e.A * e.n * fR * fG * fL
        dg = [np.where(vg, base * g, 0.0) for g in grad_vals]

    # dQ/d(d_i d_j R) = A p R^m |g|^n L^(p-1) delta_ij
    if e.p == 0:
        dh_diag = np.zeros(grid.shape)
        vh = np.ones(grid.shape, bool)
    else:
        fR, v1 = _power_factor(R.values, e.m)
        fG, v2 = _power_factor(grad_mag, e.n)
        fL, v3 = _power_factor(lap, e.p - 1)
        vh = v1 & v2 & v3
        dh_diag = np.where(vh, e.A * e.p * fR * fG * fL, 0.0)

    valid = vr & vg & vh
    if not valid.any():
        raise FullySingularError(f"partials of {e} are singular at every grid point")

    zero = np.zeros(grid.shape)
    hess = tuple(
        tuple(
            ScalarField(grid, dh_diag if i == j else zero)
            for j in range(grid.dim)
        )
        for i in range(grid.dim)
    )
    return AnsatzPartials(
        dq_dr=ScalarField(grid, dr),
        dq_dgrad=VectorField(grid, tuple(ScalarField(grid, d) for d in dg)),
        dq_dhess=hess,
        mask=valid,
    )
