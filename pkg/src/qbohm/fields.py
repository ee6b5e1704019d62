"""Uniform-grid scalar/vector fields with finite-difference calculus.

Fields live on uniform tensor grids in 1D or 2D. Derivatives use
second-order stencils (central in the interior, one-sided at the
boundary); integration is the tensor-product trapezoidal rule. All field
objects are immutable: every operation returns a new field, so values can
be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateGridError, GridMismatchError, ZeroDensityError

# Densities below this are treated as identically zero when normalizing.
ZERO_DENSITY_TOL = 1e-30


@dataclass(frozen=True)
class Grid:
    """Uniform grid descriptor: per-axis (min, max) extents and point counts.

    Coordinates along axis ``a`` are exactly ``min + i * h`` with
    ``h = (max - min) / (points - 1)``, so a grid is reproducible
    bit-for-bit from this descriptor.
    """

    extents: tuple[tuple[float, float], ...]
    points: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.extents) <= 2:
            raise ValueError(f"grid must be 1D or 2D, got dim={len(self.extents)}")
        if len(self.points) != len(self.extents):
            raise ValueError("points and extents must have one entry per axis")
        object.__setattr__(self, "extents", tuple((float(a), float(b)) for a, b in self.extents))
        object.__setattr__(self, "points", tuple(int(n) for n in self.points))
        for (lo, hi), n in zip(self.extents, self.points):
            if n < 2:
                raise ValueError(f"axis needs at least 2 points, got {n}")
            if not hi > lo:
                raise ValueError(f"axis extent must satisfy max > min, got ({lo}, {hi})")

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.points))

    def axis(self, a: int) -> np.ndarray:
        """Coordinates along axis ``a``: exactly min + i*h."""
        lo, _ = self.extents[a]
        h = self.spacing[a]
        return lo + np.arange(self.points[a]) * h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis(a) for a in range(self.dim)), indexing="ij"))

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in self.extents)

    def center_index(self) -> tuple[int, ...]:
        """Grid point nearest the domain midpoint."""
        return tuple(
            int(round((c - lo) / h))
            for c, (lo, _), h in zip(self.center, self.extents, self.spacing)
        )


def grid_1d(lo: float, hi: float, n: int) -> Grid:
    return Grid(extents=((lo, hi),), points=(n,))


def grid_2d(extents, points) -> Grid:
    return Grid(extents=tuple(extents), points=tuple(points))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values sampled on a grid, with a free-form units tag."""

    grid: Grid
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def with_values(self, values: np.ndarray, units: str | None = None) -> "ScalarField":
        return ScalarField(self.grid, values, self.units if units is None else units)

    def __add__(self, other):
        return self.with_values(self.values + _raw(other, self.grid))

    def __sub__(self, other):
        return self.with_values(self.values - _raw(other, self.grid))

    def __mul__(self, other):
        return self.with_values(self.values * _raw(other, self.grid))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """One scalar component per spatial axis, all on a shared grid."""

    grid: Grid
    components: tuple[ScalarField, ...]

    def __post_init__(self):
        if len(self.components) != self.grid.dim:
            raise ValueError("need one component per axis")
        for c in self.components:
            if c.grid != self.grid:
                raise GridMismatchError("vector components must share the grid")
        object.__setattr__(self, "components", tuple(self.components))

    def magnitude(self) -> ScalarField:
        sq = sum(c.values**2 for c in self.components)
        return ScalarField(self.grid, np.sqrt(sq))


def _raw(x, grid: Grid):
    if isinstance(x, ScalarField):
        if x.grid != grid:
            raise GridMismatchError("fields must share a grid")
        return x.values
    return x


def constant_field(grid: Grid, value: float, units: str = "") -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)), units)


def field_from_function(grid: Grid, fn, units: str = "") -> ScalarField:
    """Sample ``fn(x)`` (1D) or ``fn(x, y)`` (2D) on the grid."""
    return ScalarField(grid, fn(*grid.meshgrid()), units)


def require_same_grid(*fs):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise GridMismatchError("fields must share a grid")
    return g


# ---------------------------------------------------------------------------
# stencils


def _check_axis_points(grid: Grid, minimum: int = 3):
    for n in grid.points:
        if n < minimum:
            raise DegenerateGridError(
                f"axis with {n} points cannot support the stencil (need >= {minimum})"
            )


def first_derivative(values: np.ndarray, h: float, axis: int, accuracy: int = 2) -> np.ndarray:
    """Differentiate along one axis.

    accuracy=2: central interior, one-sided second order at the edges
    (this is what the public ``gradient`` uses).
    accuracy=4: five-point central interior, falling back to the
    second-order formulas within two cells of the boundary. Used by the
    variational-condition evaluator, whose outer derivatives must sit
    below the second-order truncation floor of the Laplacian.
    """
    if values.shape[axis] < 3:
        raise DegenerateGridError("need >= 3 points along axis for first derivative")
    if accuracy == 2:
        return np.gradient(values, h, axis=axis, edge_order=2)
    if accuracy != 4:
        raise ValueError("accuracy must be 2 or 4")
    if values.shape[axis] < 5:
        return np.gradient(values, h, axis=axis, edge_order=2)
    f = np.moveaxis(values, axis, 0)
    out = np.empty_like(f)
    out[2:-2] = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    out[1] = (f[2] - f[0]) / (2.0 * h)
    out[-2] = (f[-1] - f[-3]) / (2.0 * h)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def second_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Three-point second derivative; one-sided second order at the edges."""
    n = values.shape[axis]
    if n < 3:
        raise DegenerateGridError("need >= 3 points along axis for second derivative")
    f = np.moveaxis(values, axis, 0)
    out = np.empty_like(f)
    inv_h2 = 1.0 / (h * h)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) * inv_h2
    if n >= 4:
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv_h2
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) * inv_h2
    else:
        # with exactly 3 points the centered value is the best available
        out[0] = out[1]
        out[-1] = out[1]
    return np.moveaxis(out, 0, axis)


def gradient(f: ScalarField) -> VectorField:
    """Second-order gradient of a scalar field."""
    _check_axis_points(f.grid)
    comps = tuple(
        ScalarField(f.grid, first_derivative(f.values, f.grid.spacing[a], axis=a))
        for a in range(f.grid.dim)
    )
    return VectorField(f.grid, comps)


def laplacian(f: ScalarField) -> ScalarField:
    """Sum of per-axis three-point second derivatives (5-point stencil in 2D)."""
    _check_axis_points(f.grid)
    total = np.zeros(f.grid.shape)
    for a in range(f.grid.dim):
        total += second_derivative(f.values, f.grid.spacing[a], axis=a)
    return ScalarField(f.grid, total)


def divergence(v: VectorField, accuracy: int = 2) -> ScalarField:
    total = np.zeros(v.grid.shape)
    for a, c in enumerate(v.components):
        total += first_derivative(c.values, v.grid.spacing[a], axis=a, accuracy=accuracy)
    return ScalarField(v.grid, total)


# ---------------------------------------------------------------------------
# quadrature


def quadrature_weights(grid: Grid) -> np.ndarray:
    """Tensor-product trapezoidal weights, shaped like the grid."""
    per_axis = []
    for h, n in zip(grid.spacing, grid.points):
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        per_axis.append(w)
    if grid.dim == 1:
        return per_axis[0]
    return np.outer(per_axis[0], per_axis[1])


def integrate(f: ScalarField) -> float:
    """Trapezoidal integral over the grid (deterministic summation order)."""
    return float(np.sum(f.values * quadrature_weights(f.grid)))


def inner(f: ScalarField, g: ScalarField) -> float:
    require_same_grid(f, g)
    return float(np.sum(f.values * g.values * quadrature_weights(f.grid)))


def normalize_density(R: ScalarField) -> ScalarField:
    """Scale R so that the trapezoidal integral of R**2 equals one.

    The sign pattern of R is preserved; negative lobes are allowed.
    """
    total = float(np.sum(R.values**2 * quadrature_weights(R.grid)))
    if not np.isfinite(total) or total <= ZERO_DENSITY_TOL:
        raise ZeroDensityError(f"density integral {total!r} too small to normalize")
    return R.with_values(R.values / np.sqrt(total))


# ---------------------------------------------------------------------------
# CSV serialization
#
# Header: `# grid: dim=<d> axis0=<min>,<max>,<n> [axis1=...]`, then one value
# per line (1D) or one row-major line per axis-0 index (2D). %.17g keeps the
# round trip lossless for float64.

_FMT = "%.17g"


def _grid_header(grid: Grid) -> str:
    parts = [f"# grid: dim={grid.dim}"]
    for a, ((lo, hi), n) in enumerate(zip(grid.extents, grid.points)):
        parts.append(f"axis{a}={_FMT % lo},{_FMT % hi},{n}")
    return " ".join(parts)


def field_to_csv(f: ScalarField) -> str:
    lines = [_grid_header(f.grid)]
    if f.grid.dim == 1:
        lines.extend(_FMT % v for v in f.values)
    else:
        lines.extend(",".join(_FMT % v for v in row) for row in f.values)
    return "\n".join(lines) + "\n"


def parse_grid_header(line: str) -> Grid:
    if not line.startswith("# grid:"):
        raise ValueError(f"missing grid header, got {line!r}")
    tokens = line[len("# grid:") :].split()
    kv = dict(tok.split("=", 1) for tok in tokens)
    dim = int(kv["dim"])
    extents, points = [], []
    for a in range(dim):
        lo, hi, n = kv[f"axis{a}"].split(",")
        extents.append((float(lo), float(hi)))
        points.append(int(n))
    return Grid(tuple(extents), tuple(points))


def field_from_csv(text: str, units: str = "") -> ScalarField:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    grid = parse_grid_header(lines[0])
    rows = [ln for ln in lines[1:] if not ln.startswith("#")]
    if grid.dim == 1:
        values = np.array([float(ln) for ln in rows])
    else:
        values = np.array([[float(tok) for tok in ln.split(",")] for ln in rows])
    return ScalarField(grid, values, units)


def write_field(path, f: ScalarField):
    with open(path, "w") as fh:
        fh.write(field_to_csv(f))


def read_field(path, units: str = "") -> ScalarField:
    with open(path) as fh:
        return field_from_csv(fh.read(), units)
