"""Named external-potential families."""

from __future__ import annotations

import numpy as np

from .exceptions import GridMismatchError
from .fields import Grid, ScalarField, read_field
from .units import Units


def harmonic(grid: Grid, omega: float = 1.0, center=None, units: Units = Units()) -> ScalarField:
    """V = (m omega^2 / 2) |x - c|^2."""
    mesh = grid.meshgrid()
    center = grid.center if center is None else np.broadcast_to(np.asarray(center, float), (grid.dim,))
    r2 = np.zeros(grid.shape)
    for x, c in zip(mesh, center):
        r2 = r2 + (x - c) ** 2
    return ScalarField(grid, 0.5 * units.mass * omega**2 * r2, units="energy")


def free(grid: Grid) -> ScalarField:
    """V = 0 everywhere (an infinite well when paired with Dirichlet walls)."""
    return ScalarField(grid, np.zeros(grid.shape), units="energy")


well = free  # the box walls come from the Dirichlet boundary, not from V


def make_potential(grid: Grid, descriptor: dict, units: Units = Units()) -> ScalarField:
    """Build a potential from a config descriptor.

    Families: harmonic | well | free | two-gaussian-slits (free space; the
    slits live in the initial state). A {"file": path} descriptor loads a
    field CSV, which must match the scenario grid.
    """
    if "file" in descriptor:
        f = read_field(descriptor["file"], units="energy")
        if f.grid != grid:
            raise GridMismatchError("potential file grid does not match the scenario grid")
        return f
    family = descriptor.get("family")
    if family == "harmonic":
        return harmonic(grid, omega=descriptor.get("omega", 1.0), center=descriptor.get("center"), units=units)
    if family in ("well", "free", "two-gaussian-slits"):
        return free(grid)
    raise ValueError(f"unknown potential family {family!r}")
