"""Scenario execution: dispatch, output files, machine-readable summary.

Every run writes its artifacts plus ``summary.json`` into one output
directory. Summaries list each configured check with its measured value,
every emitted file with a content hash, and the effective (default-
injected) configuration, so identical configs reproduce byte-identical
outputs. Wall time is reported on the console only, to keep the files
deterministic.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import chisquare

from .condition import ProbeDescriptor, condition_residual, exponent_scan, random_probe
from .config import ScenarioConfig
from .dynamics import (
    ComplexFieldState,
    PolarState,
    evolve_oracle,
    evolve_polar,
    polar_decompose,
    polar_stability_bound,
)
from .eigensolve import SolverOptions, minimize_energy, schrodinger_oracle
from .exceptions import QbohmError
from .fields import ScalarField, field_to_csv, quadrature_weights as _quad_weights
from .potentials import make_potential
from .qpotential import eval_ansatz
from .states import (
    complex_from_polar,
    gaussian_complex,
    gaussian_polar,
    ground_state_polar,
    two_gaussian_complex,
    two_slit_complex,
)
from .trajectories import (
    SnapshotVelocity,
    endpoint_histogram,
    expected_bin_probabilities,
    integrate_trajectories,
    sample_from_density,
)

ADMISSIBLE_TRIPLES = ((-1, 0, 1), (0, 0, 0))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: str
    requirement: str

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))


@dataclass
class RunSummary:
    kind: str
    checks: list[CheckResult] = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    effective_config: dict = field(default_factory=dict)
    config_warnings: tuple[str, ...] = ()
    failure: str | None = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failure is None and all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "passed": self.passed,
            "failure": self.failure,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "measured": c.measured,
                    "requirement": c.requirement,
                }
                for c in self.checks
            ],
            "outputs": self.outputs,
            "config_warnings": list(self.config_warnings),
            "effective_config": self.effective_config,
        }
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


class _OutputWriter:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.hashes: dict[str, str] = {}
        out_dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        path = self.out_dir / name
        data = text.encode()
        path.write_bytes(data)
        self.hashes[name] = hashlib.sha256(data).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.6g" % x
    return str(x)


# ---------------------------------------------------------------------------
# initial states


def _build_states(config: ScenarioConfig, V: ScalarField):
    """(polar_state_or_None, complex_state) for the configured initial family."""
    init = config.solver["initial"]
    family = init["family"]
    grid = config.grid
    if family == "gaussian":
        polar = gaussian_polar(
            grid,
            sigma=init.get("sigma", 1.0),
            center=init.get("center"),
            momentum=init.get("momentum", 0.0),
        )
        return polar, complex_from_polar(polar, config.units)
    if family == "ground-state":
        polar = ground_state_polar(V, config.units)
        return polar, complex_from_polar(polar, config.units)
    if family == "two-gaussian":
        cplx = two_gaussian_complex(
            grid,
            separation=init.get("separation", 6.0),
            sigma=init.get("sigma", 1.0),
            relative_phase=init.get("relative_phase", 0.0),
            momentum=init.get("momentum", 0.0),
        )
        return None, cplx
    if family == "two-slit":
        cplx = two_slit_complex(
            grid,
            separation=init.get("separation", 6.0),
            sigma_x=init.get("sigma_x", 0.8),
            sigma_y=init.get("sigma_y", 1.2),
            center_y=init.get("center_y", -5.0),
            momentum_y=init.get("momentum_y", 4.0),
            momentum_x=init.get("momentum_x", 2.0),
            relative_phase=init.get("relative_phase", 0.0),
        )
        return None, cplx
    raise QbohmError(f"unknown initial family {family!r}")


# ---------------------------------------------------------------------------
# scenario pipelines


def _run_exponent_scan(config: ScenarioConfig, out: _OutputWriter, summary: RunSummary):
    s = config.solver
    bounds = tuple(tuple(r) for r in s["bounds"])
    report = exponent_scan(
        bounds=bounds,
        probes=s["probes"],
        seed=config.seed,
        grid=config.grid,
        tol=s["tol"],
        margin=s["margin"],
    )
    out.write("scan.csv", report.to_csv())
    out.write("scan_summary.json", report.to_json() + "\n")
    expected = s.get("expected_solutions")
    if expected is None:
        expected = [
            list(t)
            for t in sorted(
                t
                for t in ADMISSIBLE_TRIPLES
                if all(lo <= v <= hi for v, (lo, hi) in zip(t, bounds))
            )
        ]
    got = [list(t) for t in report.solutions]
    summary.checks.append(
        CheckResult(
            name="solution_set",
            passed=got == expected,
            measured=json.dumps(got),
            requirement=f"classified solutions == {json.dumps(expected)} at tol {s['tol']:g}",
        )
    )


def _run_eigensolve(config: ScenarioConfig, out: _OutputWriter, summary: RunSummary):
    s = config.solver
    V = make_potential(config.grid, config.potential, config.units)
    opts = SolverOptions(tau=s["tau"], tol_grad=s["tol_grad"], max_iter=s["max_iter"])
    rep = minimize_energy(V, config.ansatz, opts, config.units)
    out.write("energy_report.json", rep.to_json() + "\n")
    out.write("R_opt.csv", field_to_csv(rep.R_opt))
    summary.checks.append(
        CheckResult(
            name="converged",
            passed=rep.converged,
            measured=f"grad_norm={rep.grad_norm:.3e} after {rep.iterations} iterations",
            requirement=f"projected gradient norm <= {s['tol_grad']:g}",
        )
    )

    k = s["oracle_k"]
    spectrum = schrodinger_oracle(V, k, config.units)
    lines = ["index,eigenvalue"]
    lines += [f"{i},{'%.17g' % ev}" for i, ev in enumerate(spectrum.eigenvalues)]
    out.write("oracle_eigenvalues.csv", "\n".join(lines) + "\n")

    canonical = abs(config.ansatz.A - config.units.bohm_coefficient) <= 1e-12 * abs(
        config.units.bohm_coefficient
    )
    if config.ansatz.triple == (-1, 0, 1) and canonical:
        ev0 = float(spectrum.eigenvalues[0])
        err = abs(rep.lam - ev0)
        tol = 1e-6 * max(1.0, abs(ev0))
        summary.checks.append(
            CheckResult(
                name="oracle_agreement",
                passed=err <= tol,
                measured=f"|lambda - eig0| = {err:.3e}",
                requirement=f"<= {tol:.3e}",
            )
        )
    if s["lambda_target"] is not None:
        tol = s["lambda_tol"] if s["lambda_tol"] is not None else 1e-3
        err = abs(rep.lam - s["lambda_target"])
        summary.checks.append(
            CheckResult(
                name="lambda_target",
                passed=err <= tol,
                measured=f"lambda = {rep.lam:.9g}",
                requirement=f"|lambda - {s['lambda_target']:g}| <= {tol:g}",
            )
        )


def _snapshot_name(prefix: str, k: int) -> str:
    return f"{prefix}_{k:04d}.csv"


def _run_dynamics(config: ScenarioConfig, out: _OutputWriter, summary: RunSummary):
    s = config.solver
    V = make_potential(config.grid, config.potential, config.units)
    polar0, cplx0 = _build_states(config, V)
    t_final = float(s["t_final"])
    n_snap = int(s["snapshots"])
    snap_times = [t_final * (k + 1) / n_snap for k in range(n_snap)]
    integrator = s["integrator"]
    manifest: dict = {"snapshot_times": snap_times, "integrators": integrator}

    run_polar = integrator in ("polar", "both")
    run_oracle = integrator in ("oracle", "both")
    polar_states: list[PolarState] = []
    oracle_states: list = []

    if run_polar:
        if polar0 is None:
            raise QbohmError(
                f"initial family {s['initial']['family']!r} is nodal; polar stepping refuses it"
            )
        bound = polar_stability_bound(config.grid, config.units)
        dt = s["dt"] if s["dt"] else 0.9 * bound
        steps = int(math.ceil(t_final / dt))
        dt = t_final / steps
        final, diag = evolve_polar(polar0, V, dt, steps, config.units, snapshot_times=tuple(snap_times))
        polar_states = diag["snapshots"]
        if len(polar_states) < len(snap_times):
            polar_states.append(final)
        norms = []
        for k, st in enumerate(polar_states):
            out.write(_snapshot_name("polar_R", k), field_to_csv(st.R))
            out.write(_snapshot_name("polar_S", k), field_to_csv(st.S))
            norms.append(float(np.sum(st.R.values**2 * _quad_weights(config.grid))))
        manifest["polar"] = {
            "dt": dt,
            "steps": steps,
            "total_drift": diag["total_drift"],
            "max_step_drift": diag["max_step_drift"],
            "boundary_density_max": diag["boundary_density_max"],
            "norms": norms,
        }
        drift_rate = diag["total_drift"] / max(t_final, 1e-300)
        summary.checks.append(
            CheckResult(
                name="polar_norm_drift",
                passed=drift_rate <= 1e-6,
                measured=f"{drift_rate:.3e} per unit time",
                requirement="<= 1e-6 per unit time",
            )
        )
        summary.checks.append(
            CheckResult(
                name="boundary_density",
                passed=diag["boundary_density_max"] < 1e-12,
                measured=f"{diag['boundary_density_max']:.3e}",
                requirement="< 1e-12 (domain truncation stays invisible)",
            )
        )

    if run_oracle:
        dt_oracle = s["dt"] if s["dt"] else t_final / (200 * n_snap)
        st = cplx0
        norms = []
        for k, t_target in enumerate(snap_times):
            steps = max(1, int(round((t_target - st.t) / dt_oracle)))
            st = evolve_oracle(st, V, (t_target - st.t) / steps, steps, config.units)
            oracle_states.append(st)
            norms.append(st.norm())
            dec = polar_decompose(st, config.units)
            out.write(_snapshot_name("oracle_R", k), field_to_csv(dec.R))
            out.write(_snapshot_name("oracle_S", k), field_to_csv(dec.S))
        drift = max(abs(n - 1.0) for n in norms)
        manifest["oracle"] = {"dt": dt_oracle, "norms": norms}
        summary.checks.append(
            CheckResult(
                name="oracle_norm_drift",
                passed=drift <= 1e-10,
                measured=f"{drift:.3e}",
                requirement="<= 1e-10",
            )
        )

    if run_polar and run_oracle:
        last_p = polar_states[-1]
        dec = polar_decompose(oracle_states[-1], config.units)
        sel = _central_selector(config.grid, 0.8)
        diff = float(np.max(np.abs(last_p.R.values[sel] - dec.R.values[sel])))
        tol = 1e-2 * float(np.max(dec.R.values))
        summary.checks.append(
            CheckResult(
                name="polar_oracle_agreement",
                passed=diff <= tol,
                measured=f"sup|dR| = {diff:.3e} on central 80%",
                requirement=f"<= {tol:.3e} (1e-2 of max R)",
            )
        )

    out.write("manifest.json", json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")


def _central_selector(grid, fraction: float):
    sels = []
    for a in range(grid.dim):
        lo, hi = grid.extents[a]
        c = 0.5 * (lo + hi)
        half = 0.5 * fraction * (hi - lo)
        x = grid.axis(a)
        sels.append((x >= c - half) & (x <= c + half))
    if grid.dim == 1:
        return sels[0]
    return np.outer(sels[0], sels[1])


def _merged_chisquare(counts: np.ndarray, expected: np.ndarray):
    """Chi-square with low-expectation bins pooled (classic >= 5 rule)."""
    sel = expected >= 5.0
    if not np.any(sel):
        return float("nan"), 0.0
    obs = np.concatenate([counts[sel], [counts[~sel].sum()]])
    exp = np.concatenate([expected[sel], [expected[~sel].sum()]])
    exp = exp * obs.sum() / exp.sum()
    stat, p = chisquare(obs, exp)
    return float(stat), float(p)


def _run_trajectories(config: ScenarioConfig, out: _OutputWriter, summary: RunSummary):
    s = config.solver
    V = make_potential(config.grid, config.potential, config.units)
    _, cplx0 = _build_states(config, V)
    t0, t1 = float(s["t0"]), float(s["t1"])
    snap_dt = float(s["snapshot_dt"])
    n_snap = max(1, int(round((t1 - t0) / snap_dt)))
    oracle_dt = snap_dt / 5.0

    snaps = [cplx0]
    st = cplx0
    for _ in range(n_snap):
        st = evolve_oracle(st, V, oracle_dt, 5, config.units)
        snaps.append(st)
    provider = SnapshotVelocity.from_wavefunctions(snaps, config.units)

    dec0 = polar_decompose(cplx0, config.units)
    seeds = sample_from_density(dec0.R, int(s["n_paths"]), config.seed)
    bundle = integrate_trajectories(
        provider, seeds, t0, t1, float(s["dt"]), config.grid.extents
    )
    out.write("trajectories.csv", bundle.to_csv())
    hist = endpoint_histogram(bundle, int(s["bins"]), axis=0)
    out.write("histogram.csv", hist.to_csv())

    n_exited = int(bundle.exited.sum())
    summary.checks.append(
        CheckResult(
            name="paths_completed",
            passed=(bundle.n_paths - n_exited) >= 100,
            measured=f"{bundle.n_paths - n_exited} of {bundle.n_paths}",
            requirement=">= 100 completed paths",
        )
    )

    dec1 = polar_decompose(snaps[-1], config.units)
    if s["check_equivariance"]:
        probs = expected_bin_probabilities(dec1.R, hist.bin_edges, axis=0)
        n_done = int(bundle.completed.sum())
        _, p = _merged_chisquare(hist.counts, probs * n_done)
        summary.checks.append(
            CheckResult(
                name="equivariance",
                passed=p >= 0.01,
                measured=f"chi-square p = {p:.4f}",
                requirement=">= 0.01",
            )
        )

    if config.grid.dim == 1:
        order = np.argsort(bundle.seeds[:, 0])
        xs = bundle.paths[order, :, 0]
        ordered = bool(np.all(np.diff(xs, axis=0) > 0))
        summary.checks.append(
            CheckResult(
                name="no_crossing",
                passed=ordered,
                measured="ordered seeds stayed ordered" if ordered else "order violated",
                requirement="1D flows never cross",
            )
        )

    if s["check_minima"]:
        m_bins = int(s["minima_bins"])
        lo, hi = config.grid.extents[0]
        edges = np.linspace(lo, hi, m_bins + 1)
        probs = expected_bin_probabilities(dec1.R, edges, axis=0)
        deepest = _deepest_minima_bins(probs, n_wanted=3)
        done = bundle.completed
        coords = bundle.endpoints()[done, 0]
        counts, _ = np.histogram(coords, bins=edges)
        worst = int(np.max(counts[deepest])) if deepest else 0
        per2000 = worst * 2000.0 / max(int(done.sum()), 1)
        summary.checks.append(
            CheckResult(
                name="dark_fringe_exclusion",
                passed=per2000 <= 1.0,
                measured=f"max endpoints in 3 deepest minima bins = {worst} of {int(done.sum())}",
                requirement="<= 1 path per 2000",
            )
        )


def _deepest_minima_bins(probs: np.ndarray, n_wanted: int = 3, shoulder_bins: int = 8):
    """Local minima of the expected profile, ranked by depth.

    A dark fringe must sit between bright ones: a candidate minimum only
    qualifies if the profile within ``shoulder_bins`` reaches at least 5%
    of the global peak.
    """
    pmax = float(np.max(probs))
    found = []
    for b in range(1, len(probs) - 1):
        if probs[b] < probs[b - 1] and probs[b] < probs[b + 1]:
            lo = max(0, b - shoulder_bins)
            hi = min(len(probs), b + shoulder_bins + 1)
            if float(np.max(probs[lo:hi])) >= 0.05 * pmax:
                found.append((float(probs[b]), b))
    found.sort()
    return [b for _, b in found[:n_wanted]]


def _run_condition_check(config: ScenarioConfig, out: _OutputWriter, summary: RunSummary):
    s = config.solver
    probe = s["probe"]
    if probe is not None:
        desc = ProbeDescriptor(
            amplitudes=tuple(probe["amplitudes"]),
            centers=tuple(probe["centers"]),
            widths=tuple(probe["widths"]),
        )
    else:
        rng = np.random.default_rng(config.seed)
        desc = random_probe(rng, config.grid)
    R = desc.sample(config.grid)
    res = condition_residual(R, config.ansatz, margin=s["margin"])
    q = eval_ansatz(R, config.ansatz)
    out.write("probe_field.csv", field_to_csv(R))
    out.write("residual.csv", field_to_csv(res.residual))
    payload = {
        "ansatz": {"m": config.ansatz.m, "n": config.ansatz.n, "p": config.ansatz.p, "A": config.ansatz.A},
        "norm_sup": res.norm_sup,
        "norm_l2": res.norm_l2,
        "term_scale": res.term_scale,
        "valid_fraction": res.valid_fraction,
        "masked_fraction": q.masked_fraction,
        "probe": {"amplitudes": list(desc.amplitudes), "centers": list(desc.centers), "widths": list(desc.widths)},
    }
    out.write("condition.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    admissible = config.ansatz.triple in ADMISSIBLE_TRIPLES
    ok = (res.norm_sup <= s["tol"]) == admissible
    summary.checks.append(
        CheckResult(
            name="condition_classification",
            passed=ok,
            measured=f"normalized sup residual = {res.norm_sup:.3e}",
            requirement=(
                f"<= {s['tol']:g} (admissible form)" if admissible else f"> {s['tol']:g} (inadmissible form)"
            ),
        )
    )


_PIPELINES = {
    "exponent-scan": _run_exponent_scan,
    "eigensolve": _run_eigensolve,
    "dynamics": _run_dynamics,
    "trajectories": _run_trajectories,
    "condition-check": _run_condition_check,
}


def run_scenario(config: ScenarioConfig, out_dir: str | Path | None = None) -> RunSummary:
    """Execute one scenario, writing outputs and summary.json to out_dir."""
    target = Path(out_dir) if out_dir is not None else Path(config.output_dir or "out")
    writer = _OutputWriter(target)
    summary = RunSummary(
        kind=config.kind,
        effective_config=config.effective,
        config_warnings=config.warnings,
    )
    started = time.perf_counter()
    try:
        _PIPELINES[config.kind](config, writer, summary)
    except QbohmError as exc:
        summary.failure = f"{type(exc).__name__}: {exc}"
    summary.wall_time = time.perf_counter() - started
    summary.outputs = dict(sorted(writer.hashes.items()))
    writer.write("summary.json", summary.to_json() + "\n")
    return summary
