"""Experiment runner: ``peribond run|validate|list-catalog``.

``run`` executes the scenario described by a JSON config and writes a CSV
table per experiment plus ``summary.json``.  Outputs are deterministic for a
fixed (config, seed): randomized checks draw from a counter-based generator
keyed by the seed, sweep points are computed independently and assembled in
config order, and number formatting is fixed.  Exit codes: 0 all contracts
pass, 1 contract failure, 2 parse error, 3 validation error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ConfigError, ScenarioConfig, parse_config, validate_config
from .constructions import (LaminateSpec, laminate_energy_decay, laminate_field,
                            rigidity_reconstruct, sawtooth_energy)
from .density import compute_bounds
from .energy import build_pairs, energy_Fn, gradient_Fn
from .grids import Grid, VectorField, box_grid, field_from_function, full_mask
from .kernels import (KernelSequence, box_kernel, box_sequence, make_fractional,
                      make_rescaled)
from .materials import CATALOG_TAGS, catalog_potential, power_potential, quartic_potential
from .solver import (DirichletProblem, SolverSettings, linearization_experiment,
                     localization_experiment, minimize_multistart)

EXIT_OK, EXIT_CONTRACT, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3, 4


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(c) for c in row) + "\n")


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=stream))


def _grid_from_config(cfg: ScenarioConfig) -> tuple[Grid, float]:
    dom = cfg.block("domain")
    g = box_grid(int(dom["dim"]), float(dom["lo"]), float(dom["hi"]),
                 int(dom["n_cells"]))
    return g, float(dom.get("collar", 0.0))


def _kernel_from_config(cfg: ScenarioConfig, dim: int):
    kern = cfg.block("kernel")
    if kern["family"] == "box":
        return make_rescaled(box_kernel(dim), float(kern["delta"]))
    return make_fractional(dim, float(kern["s"]), float(kern["p"]))


def _potential_from_config(cfg: ScenarioConfig):
    pot = cfg.block("potential", {"profile": "power", "p": 2.0})
    if pot.get("profile", "power") == "quartic":
        return quartic_potential()
    return power_potential(float(pot["p"]), float(pot.get("scale", 1.0)))


def _matrix(entries, note="matrix") -> np.ndarray:
    a = np.asarray(entries, dtype=float)
    d = int(round(len(a) ** 0.5))
    if d * d != len(a):
        raise ValueError(f"{note} must have d*d entries")
    return a.reshape(d, d)


def _map_indexed(fn, items, threads: int):
    """Apply fn over items, optionally threaded, preserving order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# experiment implementations: each returns (csv_name, columns, rows, summary,
# contracts) with contracts a dict name -> bool
# ---------------------------------------------------------------------------

def _run_sawtooth(cfg: ScenarioConfig, threads: int):
    blk = cfg.block("sawtooth")
    r = sawtooth_energy(int(blk["N"]), float(blk["delta"]),
                        float(blk["h"]) if blk.get("h") else None)
    tol = max(0.01, 10.0 * r.h / r.delta)
    contracts = {}
    if r.in_closed_form_regime:
        contracts["closed_form_match"] = r.rel_error <= tol
    rows = [[r.N, r.delta, r.h, r.value, r.expected, r.rel_error,
             r.in_closed_form_regime]]
    cols = ["N", "delta", "h", "value", "expected", "rel_error", "regime"]
    return "sawtooth.csv", cols, rows, {"value": r.value, "expected": r.expected}, contracts


def _run_density(cfg: ScenarioConfig, threads: int):
    blk = cfg.block("density")
    phi = _potential_from_config(cfg)
    m = float(cfg.block("strain_m", 1))
    order = int(blk.get("order", 128))
    with_lam = bool(blk.get("laminate_search", True))

    def one(entries):
        F = _matrix(entries, "density.matrices entry")
        return compute_bounds(F, phi, m, order=order,
                              with_laminate=with_lam and F.shape[0] == 2)

    bounds = _map_indexed(one, blk["matrices"], threads)
    rows, ordering_ok = [], True
    for b in bounds:
        d = b.F.shape[0]
        rows.append(list(b.F.ravel()) + list(b.sigma)
                    + [b.lower, b.tilde, b.laminate_upper, b.in_zero_set])
        ordering_ok &= (-1e-12 <= b.lower <= b.laminate_upper + 1e-9
                        and b.laminate_upper <= b.tilde + 1e-9)
    d = bounds[0].F.shape[0]
    cols = ([f"F{i}{j}" for i in range(d) for j in range(d)]
            + [f"sigma{i + 1}" for i in range(d)]
            + ["lower", "tilde", "laminate_upper", "zero_set"])
    return "density.csv", cols, rows, {"count": len(rows)}, {"bound_ordering": ordering_ok}


def _run_laminate(cfg: ScenarioConfig, threads: int):
    blk = cfg.block("laminate")
    phi = _potential_from_config(cfg) if cfg.block("potential") else power_potential(2.0)
    m = float(cfg.block("strain_m", 1))
    rows_data = laminate_energy_decay(blk["lam"], blk["n_values"], phi, m)
    rows = [[r.n, r.k, r.energy] for r in rows_data]
    e = [r.energy for r in rows_data]
    contracts = {"finite_nonnegative": all(np.isfinite(x) and x >= 0 for x in e),
                 "net_decay": e[-1] <= e[0] + 1e-12}
    return "laminate.csv", ["n", "k", "energy"], rows, {"energies": e}, contracts


def _run_rigidity(cfg: ScenarioConfig, threads: int):
    blk = cfg.block("rigidity", {})
    trials = int(blk.get("trials", 5))
    res = int(blk.get("resolution", 64))
    grid = box_grid(2, -1.0, 1.0, res)
    rng = _rng(cfg.seed, stream=1)
    rows, ok = [], True
    for t in range(trials):
        th = rng.uniform(0.0, 2.0 * np.pi)
        refl = rng.integers(0, 2)
        U = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        if refl:
            U = U @ np.diag([1.0, -1.0])
        b = rng.uniform(-2.0, 2.0, 2)
        v = VectorField(grid, grid.nodes() @ U.T + b)
        rec = rigidity_reconstruct(v, 0.5)
        rows.append([t, th, bool(refl), rec.orthogonality_defect, rec.residual])
        ok &= rec.orthogonality_defect <= 1e-12 and rec.residual <= 1e-12
    cols = ["trial", "angle", "reflection", "orthogonality_defect", "residual"]
    return "rigidity.csv", cols, rows, {"trials": trials}, {"exact_reconstruction": ok}


def _run_energy(cfg: ScenarioConfig, threads: int):
    grid, _ = _grid_from_config(cfg)
    kernel = _kernel_from_config(cfg, grid.dim)
    phi = _potential_from_config(cfg)
    m = float(cfg.block("strain_m", 1))
    F = np.eye(grid.dim)
    v = VectorField(grid, grid.nodes() @ F.T)
    rep = energy_Fn(v, full_mask(grid), kernel, phi, m)
    rows = [[rep.value, rep.pair_count, rep.h]]
    contracts = {"identity_zero_energy": abs(rep.value) <= 1e-12}
    return "energy.csv", ["value", "pair_count", "h"], rows, rep.__dict__, contracts


def _run_minimize(cfg: ScenarioConfig, threads: int):
    grid, collar = _grid_from_config(cfg)
    kernel = _kernel_from_config(cfg, grid.dim)
    phi = _potential_from_config(cfg)
    m = float(cfg.block("strain_m", 1))
    blk = cfg.block("minimize")
    F = _matrix(blk["datum"], "minimize.datum")
    mask = full_mask(grid, collar if collar > 0 else 2 * kernel.support_radius)
    g = VectorField(grid, grid.nodes() @ F.T)
    settings = SolverSettings(max_iters=int(blk.get("max_iters", 50_000)))
    prob = DirichletProblem(mask, g, kernel, phi, m, settings)
    res = minimize_multistart(prob, seed=cfg.seed)
    affine = energy_Fn(g, mask, kernel, phi, m).value
    rows = [[i, e] for i, e in enumerate(res.energy_trace)]
    summary = {"energy": float(res.energy_trace[-1]), "affine_energy": affine,
               "iterations": res.iterations, "converged": bool(res.converged),
               "grad_norm": res.grad_norm}
    contracts = {"descent": bool(np.all(np.diff(res.energy_trace) <= 1e-12)),
                 "no_worse_than_datum": res.energy_trace[-1] <= affine + 1e-12}
    return "minimize.csv", ["iteration", "energy"], rows, summary, contracts


def _run_linearize(cfg: ScenarioConfig, threads: int):
    grid, _ = _grid_from_config(cfg)
    blk = cfg.block("linearize")
    mp_blk = dict(cfg.block("micropotential"))
    w = catalog_potential(mp_blk.pop("tag"), **mp_blk)
    m = float(cfg.block("strain_m", 1))
    radius = float(blk.get("support_radius", 4.0 * float(np.mean(grid.h))))
    if blk.get("field", "quadratic") == "quadratic":
        u = field_from_function(grid, lambda x: x**2)
    else:
        u = field_from_function(grid, lambda x: np.sin(np.pi * x))
    tab = linearization_experiment(u, w, m, blk["eps"], support_radius=radius)
    rows = [[r.eps, r.E_eps, tab.E0, r.abs_err] for r in tab.rows if not r.flagged]
    contracts = {"rate_in_window": tab.slope is not None and 0.8 <= tab.slope <= 1.3}
    summary = {"E0": tab.E0, "slope": tab.slope}
    return "linearize.csv", ["eps", "E_eps", "E0", "abs_err"], rows, summary, contracts


def _run_localize(cfg: ScenarioConfig, threads: int):
    grid, collar = _grid_from_config(cfg)
    blk = cfg.block("localize")
    phi = _potential_from_config(cfg)
    m = float(cfg.block("strain_m", 1))
    F = _matrix(blk["datum"], "localize.datum")
    law = (lambda n: 1.0 / n) if blk.get("delta_law", "1/n") == "1/n" else (lambda n: 1.0 / n**2)
    base = int(blk.get("base_cells", grid.n_cells[0]))
    seq = box_sequence(grid.dim, law)
    dom = cfg.block("domain")
    lo, hi = float(dom["lo"]), float(dom["hi"])

    def grid_law(n):
        cells = int(min(512, max(base, np.ceil(4.0 / (law(n) / (hi - lo))))))
        return box_grid(grid.dim, lo, hi, cells)

    rows_data = localization_experiment(F, phi, m, seq, blk["n_values"], grid_law,
                                        collar_width=collar if collar > 0 else 0.1,
                                        seed=cfg.seed)
    rows = [[r.n, r.energy, r.lp_dist_prev, r.lower_int, r.tilde_int]
            for r in rows_data]
    last = rows_data[-1]
    tol = 0.1 * max(1.0, abs(last.tilde_int))
    contracts = {"bracketed": last.lower_int - tol <= last.energy <= last.tilde_int + tol}
    cols = ["n", "energy", "lp_dist_prev", "lower_int", "tilde_int"]
    return "localize.csv", cols, rows, {"terminal_energy": last.energy}, contracts


def _run_checks(cfg: ScenarioConfig, threads: int):
    """Randomized invariant battery, reproducible from the seed."""
    rng = _rng(cfg.seed, stream=2)
    phi = power_potential(2.0)
    results = {}
    # kernel masses
    masses = [make_rescaled(box_kernel(d), 0.25).mass() for d in (1, 2, 3)]
    masses += [make_fractional(2, 0.5, 2.0).mass()]
    results["kernel_mass_unit"] = bool(max(abs(m - 1.0) for m in masses) < 1e-6)
    # zero set vs lower bound
    from .density import density_lower, zero_set_predicate
    from .grids import sphere_quadrature
    q = sphere_quadrature(2, 256)
    agree = True
    for _ in range(25):
        s = rng.uniform(0.5, 1.5, 2)
        U, _r = np.linalg.qr(rng.standard_normal((2, 2)))
        V, _r = np.linalg.qr(rng.standard_normal((2, 2)))
        F = U @ np.diag(s) @ V.T
        agree &= zero_set_predicate(F) == (density_lower(F, phi, 1.0, q) < 1e-10)
    results["zero_set_matches_lower_bound"] = bool(agree)
    # analytic gradient vs finite differences (one random field)
    grid = box_grid(2, 0.0, 1.0, 12)
    kernel = make_rescaled(box_kernel(2), 0.3)
    vals = grid.nodes() + 0.05 * rng.standard_normal((grid.n_nodes, 2))
    v = VectorField(grid, vals)
    mask = full_mask(grid)
    pairs = build_pairs(grid, mask, kernel.support_radius)
    g_an = gradient_Fn(v, mask, kernel, phi, 1.0, pairs=pairs).values
    k = int(rng.integers(0, grid.n_nodes))
    step = 1e-6
    fd = np.zeros(2)
    for c in range(2):
        vp, vm_ = vals.copy(), vals.copy()
        vp[k, c] += step
        vm_[k, c] -= step
        ep = energy_Fn(VectorField(grid, vp), mask, kernel, phi, 1.0, pairs=pairs).value
        em = energy_Fn(VectorField(grid, vm_), mask, kernel, phi, 1.0, pairs=pairs).value
        fd[c] = (ep - em) / (2 * step)
    rel = np.linalg.norm(g_an[k] - fd) / max(np.linalg.norm(fd), 1e-30)
    results["gradient_matches_finite_differences"] = bool(rel < 1e-5)
    rows = [[name, ok] for name, ok in sorted(results.items())]
    return "checks.csv", ["check", "passed"], rows, results, dict(results)


_RUNNERS = {
    "sawtooth": _run_sawtooth,
    "density": _run_density,
    "laminate": _run_laminate,
    "rigidity": _run_rigidity,
    "energy": _run_energy,
    "minimize": _run_minimize,
    "linearize": _run_linearize,
    "localize": _run_localize,
    "checks": _run_checks,
}


def _error_json(out_dir: Path | None, kind: str, detail) -> None:
    payload = json.dumps({"error": kind, "detail": detail}, sort_keys=True)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(payload + "\n")
    print(payload, file=sys.stderr)


def cmd_run(args) -> int:
    out_dir = Path(args.out) if args.out else None
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        _error_json(out_dir, exc.kind, exc.problems)
        return EXIT_PARSE
    if args.seed is not None:
        cfg = ScenarioConfig(cfg.experiment, args.seed,
                             {**cfg.raw, "seed": args.seed})
    try:
        validate_config(cfg)
    except ConfigError as exc:
        _error_json(out_dir, exc.kind, exc.problems)
        return EXIT_VALIDATION

    if out_dir is None:
        out_dir = Path(args.config).with_suffix("") .parent / "out"
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        csv_name, cols, rows, summary, contracts = _RUNNERS[cfg.experiment](cfg, args.threads)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _error_json(out_dir, "numerical", str(exc))
        return EXIT_NUMERICAL
    _write_csv(out_dir / csv_name, cols, rows)
    passed = all(contracts.values())
    payload = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "version": __version__,
        "contracts": {k: bool(v) for k, v in sorted(contracts.items())},
        "passed": passed,
        "summary": json.loads(json.dumps(summary, default=_fmt)),
        "artifacts": [csv_name],
    }
    (out_dir / "summary.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"{cfg.experiment}: {'pass' if passed else 'FAIL'} -> {out_dir}")
    return EXIT_OK if passed else EXIT_CONTRACT


def cmd_validate(args) -> int:
    try:
        cfg = parse_config(args.config)
        validate_config(cfg)
    except ConfigError as exc:
        _error_json(None, exc.kind, exc.problems)
        return EXIT_PARSE if exc.kind == "parse" else EXIT_VALIDATION
    print(f"valid: experiment={cfg.experiment}")
    return EXIT_OK


def cmd_list_catalog(args) -> int:
    print("experiments:")
    for e in EXPERIMENTS:
        print(f"  {e}")
    print("kernel families:")
    for fam in ("box", "fractional"):
        print(f"  {fam}")
    print("potential profiles:")
    for prof in ("power", "quartic"):
        print(f"  {prof}")
    print("micro-potential catalog:")
    for tag in sorted(CATALOG_TAGS):
        print(f"  {tag}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="peribond",
                                description="nonlocal bond-energy experiments")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override config seed")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for independent sweep points")
    run.set_defaults(func=cmd_run)
    val = sub.add_parser("validate", help="validate a scenario config")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)
    cat = sub.add_parser("list-catalog", help="list experiments and catalogs")
    cat.set_defaults(func=cmd_list_catalog)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
