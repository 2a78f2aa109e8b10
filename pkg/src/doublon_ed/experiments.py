"""Named experiment pipelines and their serializable results.

Every experiment consumes one validated ExperimentConfig and produces a
ResultBundle written as `result.json` (byte-identical across re-runs of
the same config) plus per-state density grids as CSV. Wall-clock timings
go to a separate `timings.json` so the determinism contract on
result.json holds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import serialize
from .basis import FockBasis, enumerate_basis
from .effective import analytic_edge, build_H_1D, build_H_eff, compare_spectra
from .errors import ConfigError, NoGapError
from .hamiltonian import assemble, assemble_twist_family, dump_matrix
from .model import (OPEN, PERIODIC, TWISTED, DisorderRealization, LatticeSpec, ModelParams,
                    build_lattice, sample_disorder)
from .observables import (IN_GAP_CORNER, IN_GAP_EDGE, Thresholds, classify, count_corner_modes,
                          density_m, density_n, fit_scaling, grid_to_csv, patch_fraction)
from .solvers import EigenSolution, eig_dense, eig_targeted
from .topology import GapWindow, gap_window, winding_from_family

SCHEMA_VERSION = 1

EXPERIMENTS = ("spectrum", "densities", "winding", "scaling", "effective_compare",
               "edge_analytic", "disorder_ensemble", "potential_sweep", "three_body",
               "null_tests")

_SWEEP_AXES = ("J", "t", "P", "U", "V", "W")


def _take(block: dict, field_name: str, allowed: dict, where: str) -> dict:
    """Strict field extraction: unknown keys are rejected."""
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)} in {where}")
    out = {}
    for key, (required, conv) in allowed.items():
        if key in block:
            try:
                out[key] = conv(block[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {where}.{key}: {exc}")
        elif required:
            raise ConfigError(f"missing required field {where}.{key}")
    return out


@dataclass(frozen=True)
class SolverOptions:
    mode: str = "dense"
    sigma: complex = 0.0
    k: int = 16
    dense_cap: int | None = None


@dataclass(frozen=True)
class DisorderSpec:
    W: float
    seed: int
    per_bond: bool = False
    pair_half: bool = False


@dataclass(eq=False)
class ExperimentConfig:
    experiment: str
    params: ModelParams
    lattice: LatticeSpec
    disorder: DisorderSpec | None = None
    solver: SolverOptions = SolverOptions()
    thresholds: Thresholds = Thresholds()
    options: dict = field(default_factory=dict)
    output_dir: str | None = None
    raw: dict = field(default_factory=dict)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document (strict: unknown fields are errors)."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    top = _take(doc, "", {
        "schema_version": (True, int), "experiment": (True, str), "lattice": (True, dict),
        "params": (True, dict), "disorder": (False, dict), "solver": (False, dict),
        "thresholds": (False, dict), "options": (False, dict), "output_dir": (False, str),
    }, "config")
    if top["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {top['schema_version']}")
    if top["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {top['experiment']!r}; pick one of {EXPERIMENTS}")

    lat = _take(doc["lattice"], "", {
        "Lx": (True, int), "Ly": (True, int), "bc_x": (True, str), "bc_y": (True, str),
        "twist": (False, float),
    }, "lattice")
    twist = lat.get("twist", 0.0)
    lattice = build_lattice(lat["Lx"], lat["Ly"], lat["bc_x"], lat["bc_y"],
                            twist_x=twist if lat["bc_x"] == TWISTED else 0.0,
                            twist_y=twist if lat["bc_y"] == TWISTED else 0.0)

    par = _take(doc["params"], "", {
        "J": (True, float), "t": (True, float), "P": (True, float), "U": (True, float),
        "V": (False, float), "N": (True, int), "v_mode": (False, str),
    }, "params")
    params = ModelParams(J=par["J"], t=par["t"], P=par["P"], U=par["U"],
                         V=par.get("V", 0.0), N=par["N"], v_mode=par.get("v_mode", "pair"))

    disorder = None
    if "disorder" in doc:
        dis = _take(doc["disorder"], "", {
            "W": (True, float), "seed": (True, int), "per_bond": (False, bool),
            "pair_half": (False, bool),
        }, "disorder")
        disorder = DisorderSpec(dis["W"], dis["seed"], dis.get("per_bond", False),
                                dis.get("pair_half", False))

    solver = SolverOptions()
    if "solver" in doc:
        sv = _take(doc["solver"], "", {
            "mode": (False, str), "sigma": (False, lambda v: complex(v[0], v[1])),
            "k": (False, int), "dense_cap": (False, int),
        }, "solver")
        solver = SolverOptions(sv.get("mode", "dense"), sv.get("sigma", 0.0),
                               sv.get("k", 16), sv.get("dense_cap"))
        if solver.mode not in ("dense", "targeted"):
            raise ConfigError(f"solver.mode must be dense or targeted, got {solver.mode!r}")

    thresholds = Thresholds()
    if "thresholds" in doc:
        th = _take(doc["thresholds"], "", {
            "theta_d": (False, float), "theta_w": (False, float), "xi": (False, float),
        }, "thresholds")
        thresholds = Thresholds(th.get("theta_d", 0.5), th.get("theta_w", 0.25),
                                th.get("xi", 1.0))

    return ExperimentConfig(top["experiment"], params, lattice, disorder, solver, thresholds,
                            doc.get("options", {}), top.get("output_dir"), raw=doc)


@dataclass(eq=False)
class ResultBundle:
    experiment: str
    config: dict
    data: dict
    spectra: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    records: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def json_payload(self) -> dict:
        return serialize.to_jsonable({
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "config": self.config,
            "spectra": self.spectra,
            "residuals": self.residuals,
            "records": self.records,
            "data": self.data,
        })


class _Timer:
    def __init__(self):
        self.stages = {}

    def stage(self, name):
        timer = self

        class _Ctx:
            def __enter__(self_inner):
                self_inner.t0 = time.perf_counter()

            def __exit__(self_inner, *exc):
                timer.stages[name] = timer.stages.get(name, 0.0) + time.perf_counter() - self_inner.t0

        return _Ctx()


def _solve(H, solver: SolverOptions) -> EigenSolution:
    if solver.mode == "targeted":
        return eig_targeted(H, solver.sigma, solver.k)
    return eig_dense(H, cap=solver.dense_cap)


def _realize(cfg: ExperimentConfig, lattice=None, seed=None) -> DisorderRealization | None:
    if cfg.disorder is None:
        return None
    lat = lattice if lattice is not None else cfg.lattice
    return sample_disorder(lat, cfg.disorder.W, cfg.disorder.seed if seed is None else seed,
                           per_bond=cfg.disorder.per_bond)


def _reference_lattice(lattice: LatticeSpec) -> LatticeSpec:
    """Clean fully periodic reference for the gap window; even column count."""
    Lx = lattice.L_x if lattice.L_x % 2 == 0 else lattice.L_x - 1
    return build_lattice(max(Lx, 2), lattice.L_y, PERIODIC, PERIODIC)


def _gap_or_none(params, lattice, thresholds, cache=None):
    ref = _reference_lattice(lattice)
    key = (params.J, params.t, params.P, params.U, params.N, ref.L_x, ref.L_y)
    if cache is not None and key in cache:
        return cache[key]
    clean = ModelParams(J=params.J, t=params.t, P=params.P, U=params.U, V=0.0, N=params.N)
    try:
        basis = enumerate_basis(ref.n_sites, params.N)
        gap = gap_window(clean, ref, basis=basis, thresholds=thresholds)
    except NoGapError:
        gap = None
    if cache is not None:
        cache[key] = gap
    return gap


def _records_payload(records) -> list:
    return [{
        "index": r.index, "E": complex(r.energy), "residual": r.residual,
        "doublon_weight": r.doublon_weight, "corner_weight": r.corner_weight,
        "ipr": r.ipr, "class": r.label,
    } for r in records]


def _spectrum_payload(solution: EigenSolution):
    return ([complex(E) for E in solution.eigenvalues], [float(r) for r in solution.residuals])


def _gap_payload(gap: GapWindow | None):
    if gap is None:
        return None
    return {"re_lo": gap.re_lo, "re_hi": gap.re_hi, "im_lo": gap.im_lo, "im_hi": gap.im_hi}


def _write_grids(out_dir, tag, solution, basis, lattice, indices, files):
    for idx in indices:
        for kind, fn in (("n", density_n), ("m", density_m)):
            grid = fn(solution.right_vectors[:, idx], basis, lattice)
            name = f"{tag}state_{idx:04d}_{kind}.csv"
            grid_to_csv(grid, Path(out_dir) / name)
            files.append(name)


def _pipeline(cfg, timer, lattice=None, params=None, seed=None, gap_cache=None):
    """Shared solve + classify stage. Returns (solution, records, gap, basis, lattice)."""
    lattice = lattice or cfg.lattice
    params = params or cfg.params
    with timer.stage("basis"):
        basis = enumerate_basis(lattice.n_sites, params.N)
    with timer.stage("assemble"):
        H = assemble(params, lattice, basis, _realize(cfg, lattice, seed),
                     pair_disorder_half=cfg.disorder.pair_half if cfg.disorder else False)
    with timer.stage("solve"):
        solution = _solve(H, cfg.solver)
    with timer.stage("gap_window"):
        gap = _gap_or_none(params, lattice, cfg.thresholds, gap_cache) if params.N == 2 else None
    with timer.stage("classify"):
        records = classify(solution, basis, lattice, gap, cfg.thresholds) if params.N == 2 else []
    return solution, records, gap, basis, lattice


def run_spectrum(cfg, out_dir, timer):
    solution, records, gap, basis, lattice = _pipeline(cfg, timer)
    spectra, residuals = _spectrum_payload(solution)
    counts = {}
    for r in records:
        counts[r.label] = counts.get(r.label, 0) + 1
    return ResultBundle(cfg.experiment, cfg.raw, {
        "gap_window": _gap_payload(gap), "class_counts": counts,
    }, spectra, residuals, _records_payload(records))


def run_densities(cfg, out_dir, timer):
    solution, records, gap, basis, lattice = _pipeline(cfg, timer)
    spectra, residuals = _spectrum_payload(solution)
    indices = cfg.options.get("state_indices")
    if indices is None:
        indices = [r.index for r in records if r.label in (IN_GAP_CORNER, IN_GAP_EDGE)]
    files = []
    with timer.stage("grids"):
        _write_grids(out_dir, "", solution, basis, lattice, indices, files)
    return ResultBundle(cfg.experiment, cfg.raw, {
        "gap_window": _gap_payload(gap), "grid_files": files, "grid_states": list(indices),
    }, spectra, residuals, _records_payload(records))


def run_winding(cfg, out_dir, timer):
    """Winding at the in-gap reference of the y-periodic companion run."""
    lattice = cfg.lattice
    if lattice.bc_x != OPEN:
        raise ConfigError("winding experiment expects an open x boundary")
    companion = lattice.with_boundary(bc_y=PERIODIC)
    solution, records, gap, basis, _ = _pipeline(cfg, timer, lattice=companion)
    in_gap = [r for r in records if r.label in (IN_GAP_CORNER, IN_GAP_EDGE)]
    opts = dict(cfg.options)
    if "E_ref" in opts:
        E_ref = complex(opts["E_ref"][0], opts["E_ref"][1])
    elif in_gap:
        E_ref = complex(np.mean([r.energy for r in in_gap]))
    else:
        raise ConfigError("no in-gap states found and no explicit options.E_ref given")
    n_phi = int(opts.get("n_phi", 64))
    with timer.stage("winding"):
        family = assemble_twist_family(cfg.params, lattice.with_boundary(bc_y=TWISTED),
                                       basis, _realize(cfg))
        result = winding_from_family(family, E_ref, n_phi=n_phi)
        far = winding_from_family(family, complex(opts.get("far_scale", 100.0)), n_phi=n_phi)
    spectra, residuals = _spectrum_payload(solution)
    return ResultBundle(cfg.experiment, cfg.raw, {
        "gap_window": _gap_payload(gap),
        "winding": {"E_ref": E_ref, "W": result.W, "phi_grid": result.phi_grid,
                    "max_step_phase": result.max_step_phase, "refined": result.refined},
        "winding_far": {"E_ref": far.E_ref, "W": far.W},
        "n_in_gap": len(in_gap),
    }, spectra, residuals, _records_payload(records))


def run_scaling(cfg, out_dir, timer):
    L_y_values = [int(v) for v in cfg.options.get("Ly_values", (4, 6, 8, 10))]
    counts = []
    gap_cache = {}
    for Ly in L_y_values:
        lat = build_lattice(cfg.lattice.L_x, Ly, OPEN, OPEN)
        _, records, _, _, _ = _pipeline(cfg, timer, lattice=lat, gap_cache=gap_cache)
        counts.append(count_corner_modes(records))
    fit = fit_scaling(L_y_values, counts)
    return ResultBundle(cfg.experiment, cfg.raw, {
        "L_y_values": fit.L_y_values, "counts": fit.counts,
        "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
    })


def run_effective_compare(cfg, out_dir, timer):
    solution, records, gap, basis, lattice = _pipeline(cfg, timer)
    with timer.stage("effective"):
        eff = eig_dense(build_H_eff(cfg.params, lattice))
        report = compare_spectra(solution, basis, eff, cfg.thresholds.theta_d)
    spectra, residuals = _spectrum_payload(solution)
    return ResultBundle(cfg.experiment, cfg.raw, {
        "n_full": report.n_full, "n_eff": report.n_eff,
        "max_abs_delta": report.max_abs, "mean_abs_delta": report.mean_abs,
        "effective_spectrum": [complex(E) for E in eff.eigenvalues],
    }, spectra, residuals, _records_payload(records))


def run_edge_analytic(cfg, out_dir, timer):
    L_chain = int(cfg.options.get("L_chain", 41))
    with timer.stage("edge"):
        sol = analytic_edge(cfg.params, L_chain)
        evals, evecs = np.linalg.eigh(build_H_1D(cfg.params, L_chain))
        edge_weight = (np.abs(evecs[-4:, :]) ** 2).sum(axis=0)
        localized = [float(E) for E in evals[edge_weight > 0.5]]
    return ResultBundle(cfg.experiment, cfg.raw, {
        "eps_plus": sol.eps_plus, "eps_minus": sol.eps_minus,
        "zeta2_plus": sol.zeta2_plus, "zeta2_minus": sol.zeta2_minus,
        "exists_minus": sol.exists_minus, "J0": sol.J0, "L_chain": L_chain,
        "chain_localized_eigenvalues": localized,
        "beta": [float(b) for b in sol.beta],
    })


def run_disorder_ensemble(cfg, out_dir, timer):
    if cfg.disorder is None:
        raise ConfigError("disorder_ensemble requires a disorder block")
    n_seeds = int(cfg.options.get("n_seeds", 10))
    seeds = [cfg.disorder.seed + i for i in range(n_seeds)]
    gap_cache = {}
    clean_cfg = ExperimentConfig(cfg.experiment, cfg.params, cfg.lattice, None, cfg.solver,
                                 cfg.thresholds, cfg.options, cfg.output_dir, cfg.raw)
    _, clean_records, gap, _, _ = _pipeline(clean_cfg, timer, gap_cache=gap_cache)
    clean_count = count_corner_modes(clean_records)
    per_seed = []
    for seed in seeds:
        _, records, _, _, _ = _pipeline(cfg, timer, seed=seed, gap_cache=gap_cache)
        per_seed.append({"seed": seed, "n_corner": count_corner_modes(records),
                         "min_corner_weight": min((r.corner_weight for r in records
                                                   if r.label == IN_GAP_CORNER), default=0.0)})
    counts = [p["n_corner"] for p in per_seed]
    return ResultBundle(cfg.experiment, cfg.raw, {
        "gap_window": _gap_payload(gap), "clean_count": clean_count, "per_seed": per_seed,
        "count_min": min(counts), "count_median": float(np.median(counts)),
        "count_max": max(counts),
    })


def run_potential_sweep(cfg, out_dir, timer):
    j0 = cfg.params.J ** 2 / cfg.params.U if cfg.params.U else 0.0
    values = cfg.options.get("V_values")
    if values is None:
        values = list(np.linspace(0.0, 2.0 * j0, 5))
    gap_cache = {}
    points = []
    for V in values:
        pv = ModelParams(J=cfg.params.J, t=cfg.params.t, P=cfg.params.P, U=cfg.params.U,
                         V=float(V), N=cfg.params.N, v_mode=cfg.params.v_mode)
        _, records, gap, _, _ = _pipeline(cfg, timer, params=pv, gap_cache=gap_cache)
        in_gap = [r for r in records if r.label in (IN_GAP_CORNER, IN_GAP_EDGE)]
        points.append({
            "V": float(V), "n_corner": count_corner_modes(records),
            "in_gap_re": [float(r.energy.real) for r in in_gap],
            "min_corner_weight": min((r.corner_weight for r in in_gap), default=0.0),
        })
    return ResultBundle(cfg.experiment, cfg.raw, {
        "V_values": [float(v) for v in values], "points": points,
        "gap_window": _gap_payload(_gap_or_none(cfg.params, cfg.lattice, cfg.thresholds,
                                                gap_cache)),
    })


def run_three_body(cfg, out_dir, timer):
    if cfg.params.N != 3:
        raise ConfigError("three_body experiment requires params.N == 3")
    with timer.stage("basis"):
        basis = enumerate_basis(cfg.lattice.n_sites, 3)
    with timer.stage("assemble"):
        H = assemble(cfg.params, cfg.lattice, basis, _realize(cfg))
    with timer.stage("solve"):
        solution = _solve(H, cfg.solver)
    with timer.stage("cluster"):
        P2 = np.abs(solution.right_vectors) ** 2
        bound_weight = (basis.m_values().T @ P2).sum(axis=0) / 6.0
        deep = np.nonzero(bound_weight > 0.8)[0]
        clusters = []
        if deep.size:
            order = deep[np.argsort(solution.eigenvalues[deep].real)]
            re = solution.eigenvalues[order].real
            gaps = np.diff(re)
            spread = float(re[-1] - re[0])
            # split only at dominant gaps; a bare median splits degenerate pairs
            floor = max(5 * float(np.median(gaps)) if gaps.size else 0.0, 0.1 * spread)
            split_at = np.nonzero(gaps > floor)[0] if floor > 0 else []
            for chunk in np.split(np.arange(order.size), np.asarray(split_at) + 1):
                idx = order[chunk]
                fractions = [patch_fraction(density_n(solution.right_vectors[:, i], basis,
                                                      cfg.lattice), cfg.lattice) for i in idx]
                clusters.append({
                    "indices": [int(i) for i in idx],
                    "re_lo": float(solution.eigenvalues[idx].real.min()),
                    "re_hi": float(solution.eigenvalues[idx].real.max()),
                    "patch_fraction_min": float(min(fractions)),
                    "patch_fraction_max": float(max(fractions)),
                })
    files = []
    corner_clusters = [c for c in clusters if c["patch_fraction_min"] >= 0.5]
    with timer.stage("grids"):
        if corner_clusters:
            _write_grids(out_dir, "", solution, basis, cfg.lattice,
                         corner_clusters[0]["indices"][:2], files)
    spectra, residuals = _spectrum_payload(solution)
    return ResultBundle(cfg.experiment, cfg.raw, {
        "n_bound": int(deep.size), "clusters": clusters,
        "n_corner_clusters": len(corner_clusters), "grid_files": files,
    }, spectra, residuals)


def run_null_tests(cfg, out_dir, timer):
    variants = {
        "U_zero": ModelParams(J=cfg.params.J, t=cfg.params.t, P=cfg.params.P, U=0.0,
                              V=cfg.params.V, N=cfg.params.N),
        "P_zero": ModelParams(J=cfg.params.J, t=cfg.params.t, P=0.0, U=cfg.params.U,
                              V=cfg.params.V, N=cfg.params.N),
    }
    out = {}
    gap_cache = {}
    for tag, pv in variants.items():
        solution, records, gap, _, _ = _pipeline(cfg, timer, params=pv, gap_cache=gap_cache)
        out[tag] = {
            "gap_window": _gap_payload(gap),
            "max_corner_weight": max(r.corner_weight for r in records),
            "n_corner": count_corner_modes(records),
        }
    return ResultBundle(cfg.experiment, cfg.raw, out)


_RUNNERS = {
    "spectrum": run_spectrum,
    "densities": run_densities,
    "winding": run_winding,
    "scaling": run_scaling,
    "effective_compare": run_effective_compare,
    "edge_analytic": run_edge_analytic,
    "disorder_ensemble": run_disorder_ensemble,
    "potential_sweep": run_potential_sweep,
    "three_body": run_three_body,
    "null_tests": run_null_tests,
}


def run(cfg: ExperimentConfig, out_dir, *, dump_matrix_file: bool = False) -> ResultBundle:
    """Execute one experiment, writing result.json, grids, and timings."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = _Timer()
    t0 = time.perf_counter()
    bundle = _RUNNERS[cfg.experiment](cfg, out_dir, timer)
    timer.stages["total"] = time.perf_counter() - t0
    bundle.timings = dict(timer.stages)
    if dump_matrix_file:
        basis = enumerate_basis(cfg.lattice.n_sites, cfg.params.N)
        H = assemble(cfg.params, cfg.lattice, basis, _realize(cfg),
                     pair_disorder_half=cfg.disorder.pair_half if cfg.disorder else False)
        dump_matrix(H, out_dir / "matrix.coo")
    serialize.write_json(out_dir / "result.json", bundle.json_payload())
    serialize.write_json(out_dir / "timings.json",
                         {k: round(v, 6) for k, v in bundle.timings.items()})
    return bundle


def sweep(cfg: ExperimentConfig, axis: str, values, out_dir, *, max_workers: int = 1):
    """Run the config's experiment once per value of a scalar model parameter.

    Results are merged in input order; each point gets its own subdirectory.
    """
    if axis not in _SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {_SWEEP_AXES}, got {axis!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for v in values:
        doc = {k: (dict(val) if isinstance(val, dict) else val) for k, val in cfg.raw.items()}
        if axis == "W":
            if "disorder" not in doc:
                raise ConfigError("sweeping W requires a disorder block in the config")
            doc["disorder"]["W"] = float(v)
        else:
            doc["params"][axis] = float(v)
        jobs.append((parse_config(doc), out_dir / f"sweep_{axis}_{v:g}"))
    bundles = []
    if max_workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor  # noqa: PLC0415

        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(run, job_cfg, job_dir) for job_cfg, job_dir in jobs]
            bundles = [f.result() for f in futures]
    else:
        bundles = [run(job_cfg, job_dir) for job_cfg, job_dir in jobs]
    index = {"axis": axis, "values": [float(v) for v in values],
             "directories": [str(d.name) for _, d in jobs]}
    serialize.write_json(out_dir / "sweep_index.json", index)
    return bundles
