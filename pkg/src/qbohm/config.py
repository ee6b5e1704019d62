"""Scenario configuration: schema validation with full error collection.

A scenario is one JSON document with a versioned ``schema`` field. The
validator collects every problem (it never stops at the first), injects
documented defaults, and echoes the effective configuration so a run can
be reproduced exactly from its summary.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

from .exceptions import ConfigError
from .fields import Grid
from .qpotential import AnsatzExponents
from .units import Units

SCHEMA_VERSION = 1

KINDS = ("exponent-scan", "eigensolve", "dynamics", "trajectories", "condition-check")

POTENTIAL_FAMILIES = ("harmonic", "well", "free", "two-gaussian-slits")

INITIAL_FAMILIES = ("gaussian", "ground-state", "two-gaussian", "two-slit")

SOLVER_DEFAULTS: dict[str, dict] = {
    "exponent-scan": {
        "bounds": [[-2, 2], [-2, 2], [-2, 2]],
        "probes": 10,
        "tol": 1e-3,
        "margin": 3,
    },
    "eigensolve": {
        "tol_grad": 1e-8,
        "max_iter": 50000,
        "tau": None,
        "oracle_k": 1,
        "lambda_target": None,
        "lambda_tol": None,
    },
    "dynamics": {
        "t_final": 1.0,
        "dt": None,
        "snapshots": 5,
        "integrator": "both",
        "initial": {"family": "gaussian", "sigma": 1.0, "momentum": 0.0},
    },
    "trajectories": {
        "t0": 0.0,
        "t1": 1.0,
        "dt": 0.01,
        "n_paths": 2000,
        "bins": 40,
        "snapshot_dt": 0.025,
        "initial": {"family": "gaussian", "sigma": 1.0, "momentum": 0.0},
        "check_equivariance": True,
        "check_minima": False,
        "minima_bins": 480,
    },
    "condition-check": {
        "margin": 3,
        "tol": 1e-3,
        "probe": None,
    },
}

DEFAULT_GRIDS: dict[str, dict] = {
    "exponent-scan": {"dim": 1, "min": -10.0, "max": 10.0, "points": 512},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: typed core objects plus the effective raw echo."""

    kind: str
    grid: Grid
    potential: dict
    ansatz: AnsatzExponents | None
    units: Units
    seed: int
    solver: dict
    output_dir: str | None
    effective: dict = field(repr=False, default_factory=dict)
    warnings: tuple[str, ...] = ()


def _as_list(v, dim):
    if isinstance(v, (int, float)):
        return [v] * dim
    return list(v)


def _validate_grid(raw, errors) -> Grid | None:
    if raw is None:
        errors.append("grid: required section missing")
        return None
    if not isinstance(raw, dict):
        errors.append("grid: must be an object")
        return None
    dim = raw.get("dim", 1)
    if dim not in (1, 2):
        errors.append("grid.dim must be 1 or 2")
        return None
    ok = True
    for key in ("min", "max", "points"):
        if key not in raw:
            errors.append(f"grid.{key}: required field missing")
            ok = False
    if not ok:
        return None
    try:
        mins = _as_list(raw["min"], dim)
        maxs = _as_list(raw["max"], dim)
        points = _as_list(raw["points"], dim)
    except TypeError:
        errors.append("grid.min/max/points must be numbers or per-axis lists")
        return None
    if not (len(mins) == len(maxs) == len(points) == dim):
        errors.append("grid.min/max/points must have one entry per axis")
        return None
    for a in range(dim):
        if not isinstance(points[a], int) or points[a] < 8:
            errors.append(f"grid.points must be integers >= 8 (axis {a})")
        if not maxs[a] > mins[a]:
            errors.append(f"grid.max must exceed grid.min (axis {a})")
    if any(e.startswith("grid.") for e in errors):
        return None
    return Grid(tuple((float(lo), float(hi)) for lo, hi in zip(mins, maxs)), tuple(points))


def _validate_units(raw, errors) -> Units | None:
    raw = raw if raw is not None else {}
    if not isinstance(raw, dict):
        errors.append("units: must be an object")
        return None
    hbar = raw.get("hbar", 1.0)
    mass = raw.get("mass", 1.0)
    bad = False
    if not isinstance(hbar, (int, float)) or hbar <= 0:
        errors.append("units.hbar must be positive")
        bad = True
    if not isinstance(mass, (int, float)) or mass <= 0:
        errors.append("units.mass must be positive")
        bad = True
    return None if bad else Units(hbar=float(hbar), mass=float(mass))


def _validate_ansatz(raw, errors, required: bool) -> AnsatzExponents | None:
    if raw is None:
        if required:
            errors.append("ansatz: required section missing")
        return None
    if not isinstance(raw, dict):
        errors.append("ansatz: must be an object")
        return None
    out = {}
    for key in ("m", "n", "p"):
        v = raw.get(key)
        if not isinstance(v, int):
            errors.append(f"ansatz.{key} must be an integer")
        else:
            out[key] = v
    A = raw.get("A")
    if not isinstance(A, (int, float)) or A == 0:
        errors.append("ansatz.A must be a nonzero number")
    if len(out) == 3 and isinstance(A, (int, float)) and A != 0:
        return AnsatzExponents(out["m"], out["n"], out["p"], float(A))
    return None


def _validate_potential(raw, errors) -> dict | None:
    if raw is None:
        errors.append("potential: required section missing")
        return None
    if not isinstance(raw, dict):
        errors.append("potential: must be an object")
        return None
    if "file" in raw:
        return dict(raw)
    family = raw.get("family")
    if family not in POTENTIAL_FAMILIES:
        errors.append(
            f"potential.family must be one of {', '.join(POTENTIAL_FAMILIES)} (or provide potential.file)"
        )
        return None
    return dict(raw)


def validate_config(raw: dict | str) -> ScenarioConfig:
    """Validate a raw config (dict or JSON text), collecting all errors.

    Raises ConfigError with the full error list; on success returns the
    typed config with defaults injected, their echo in ``effective``, and
    any non-fatal warnings.
    """
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])

    errors: list[str] = []
    warnings: list[str] = []
    raw = copy.deepcopy(raw)

    schema = raw.get("schema")
    if schema is None:
        warnings.append(f"schema field missing; assuming {SCHEMA_VERSION}")
        raw["schema"] = SCHEMA_VERSION
    elif schema != SCHEMA_VERSION:
        errors.append(f"schema: unsupported version {schema!r} (this build reads {SCHEMA_VERSION})")

    kind = raw.get("kind")
    if kind not in KINDS:
        errors.append(f"kind must be one of: {', '.join(KINDS)}")
        raise ConfigError(errors)

    grid_raw = raw.get("grid", copy.deepcopy(DEFAULT_GRIDS.get(kind)))
    grid = _validate_grid(grid_raw, errors)

    needs_potential = kind in ("eigensolve", "dynamics", "trajectories")
    potential = None
    if raw.get("potential") is not None or needs_potential:
        potential = _validate_potential(raw.get("potential"), errors)
    elif kind == "exponent-scan" or kind == "condition-check":
        potential = None

    needs_ansatz = kind in ("eigensolve", "condition-check")
    ansatz = _validate_ansatz(raw.get("ansatz"), errors, required=needs_ansatz)

    units = _validate_units(raw.get("units"), errors)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        errors.append("seed must be an integer")
        seed = 0
    uses_randomness = kind in ("exponent-scan", "trajectories")
    if uses_randomness and "seed" not in raw:
        warnings.append("seed not given for a randomized scenario; defaulting to 0")

    solver = copy.deepcopy(SOLVER_DEFAULTS[kind])
    solver_raw = raw.get("solver", {})
    if not isinstance(solver_raw, dict):
        errors.append("solver: must be an object")
        solver_raw = {}
    for key, value in solver_raw.items():
        if key not in solver:
            warnings.append(f"solver.{key}: unknown option for kind {kind}, kept verbatim")
        solver[key] = value

    if kind == "exponent-scan":
        b = solver.get("bounds")
        ok_shape = (
            isinstance(b, list)
            and len(b) == 3
            and all(isinstance(r, list) and len(r) == 2 and all(isinstance(v, int) for v in r) for r in b)
        )
        if not ok_shape:
            errors.append("solver.bounds must be three [lo, hi] integer pairs")
        else:
            if any(r[0] > r[1] for r in b):
                errors.append("solver.bounds ranges must satisfy lo <= hi")
            elif any(r[0] > -2 or r[1] < 2 for r in b):
                warnings.append("solver.bounds narrower than [-2,2]^3: scan is non-exhaustive")
        probes = solver.get("probes")
        if not isinstance(probes, int) or probes < 3:
            errors.append("solver.probes must be an integer >= 3")

    if kind in ("dynamics", "trajectories"):
        init = solver.get("initial")
        if not isinstance(init, dict) or init.get("family") not in INITIAL_FAMILIES:
            errors.append(
                f"solver.initial.family must be one of {', '.join(INITIAL_FAMILIES)}"
            )

    output_dir = raw.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        errors.append("output_dir must be a string path")

    if errors:
        raise ConfigError(errors)

    effective = {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "grid": grid_raw,
        "potential": potential,
        "ansatz": raw.get("ansatz"),
        "units": {"hbar": units.hbar, "mass": units.mass},
        "seed": seed,
        "solver": solver,
        "output_dir": output_dir,
    }
    return ScenarioConfig(
        kind=kind,
        grid=grid,
        potential=potential or {"family": "free"},
        ansatz=ansatz,
        units=units,
        seed=seed,
        solver=solver,
        output_dir=output_dir,
        effective=effective,
        warnings=tuple(warnings),
    )
