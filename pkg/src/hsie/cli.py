"""
Batch driver: ``hsie <task> --config <path> [--out <dir>] [--threads k]``.

Every run writes ``summary.json``, ``convergence.csv``, ``field.csv`` and
``config.resolved.json`` into the output directory.  Exit status is 0 on
success, 1 for a solver/geometry error (``error.json`` describes it) and 2
for an invalid configuration.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
import tempfile
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import HSIEError

log = logging.getLogger("hsie")

TASKS = ("solve1d", "scatter", "resonance", "dtn_test", "convergence")

DEFAULTS = {
    "strategy": "trapezoids_normal_bisector",
    "fe_order": 4,
    "refinements": 0,
    "n_want": 1,
    "tol": 1e-10,
    "continuation": True,
    "resolvent_pad": 0,
}


class ConfigError(Exception):
    """Invalid or inconsistent configuration (exit status 2)."""


# --------------------------------------------------------------------------
# configuration


def _schema():
    text = (resources.files("hsie") / "data" / "config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _complex(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _encode(z):
    z = complex(z)
    return [z.real, z.imag]


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return cfg


def resolve_config(cfg: dict, task: str) -> dict:
    """Validate against the schema, check task requirements and fill defaults."""
    import jsonschema

    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    if "task" in cfg and cfg["task"] != task:
        raise ConfigError(f"config is for task {cfg['task']!r}, command line says {task!r}")
    out = dict(DEFAULTS)
    out.update(cfg)
    out["task"] = task
    problem = out.get("problem", "scatter") if task == "convergence" else task
    out["problem"] = problem
    if "N_sweep" in out:
        ns = out["N_sweep"]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("N_sweep must be strictly increasing")
    elif "N" in out:
        out["N_sweep"] = [out["N"]]
    else:
        raise ConfigError("one of N or N_sweep is required")
    if task == "convergence" and len(out["N_sweep"]) < 2:
        raise ConfigError("convergence needs an N_sweep with at least two entries")
    need = {"solve1d": ["kappa"], "scatter": ["mesh", "kappa", "incoming"],
            "resonance": ["mesh"], "dtn_test": ["kappa"]}[problem]
    missing = [k for k in need if k not in out]
    if missing:
        raise ConfigError(f"task {task} ({problem}) requires {missing}")
    if problem == "resonance" and not ("shift_kappa" in out or "shift_omega" in out):
        raise ConfigError("resonance requires shift_kappa or shift_omega")
    if "shift_omega" in out and "length_unit_m" not in out:
        raise ConfigError("shift_omega requires length_unit_m")
    if out.get("strategy") == "trapezoids_reference_point" and "p0" not in out:
        raise ConfigError("trapezoids_reference_point requires p0")
    if problem == "solve1d":
        d = {"a": 1.0, "g": 1.0, "n_cells": 20, "n_breaks": [], "n_values": [1.0], "left_bc": "neumann"}
        d.update(out.get("one_d", {}))
        out["one_d"] = d
    if problem == "dtn_test":
        d = {"edge_length": float(np.pi), "modes": [1, 5]}
        d.update(out.get("dtn", {}))
        out["dtn"] = d
    if "reference" not in out:
        analytic = problem in ("solve1d", "dtn_test") or (
            problem == "scatter" and out["mesh"] == "builtin:straight_waveguide")
        out["reference"] = "analytic" if analytic else "finest"
    if problem == "scatter":
        inc = {"type": "slab_mode", "a": 0.0365, "n1": 1.45, "n2": 3.4, "parity": "even", "branch": 0,
               "x_origin": 0.0, "y_center": 0.0}
        inc.update(out["incoming"])
        out["incoming"] = inc
    return out


# --------------------------------------------------------------------------
# output


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv(header_lines, columns, rows) -> str:
    out = [f"# {h}" for h in header_lines]
    out.append(",".join(columns))
    out += [",".join(_num(v) for v in r) for r in rows]
    return "\n".join(out) + "\n"


CONV_COLUMNS = ("N", "dofs_total", "dofs_radial", "rel_error", "wall_seconds")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def fitted_ratio(ns, errs, floor_factor: float = 10.0):
    """Least-squares geometric ratio of ``errs`` over ``ns`` before the floor.

    Points with error below ``floor_factor`` times the smallest positive error
    are dropped; ``None`` when fewer than two points remain.
    """
    ns = np.asarray(ns, float)
    errs = np.asarray(errs, float)
    pos = errs > 0
    if pos.sum() < 2:
        return None
    keep = pos & (errs > floor_factor * errs[pos].min())
    if keep.sum() < 2:
        return None
    slope = np.polyfit(ns[keep], np.log(errs[keep]), 1)[0]
    return float(np.exp(slope))


# --------------------------------------------------------------------------
# tasks


def _mesh(cfg):
    from .mesh import load_mesh
    from .setups import microcavity_mesh, straight_waveguide_mesh, bundled_microcavity

    name = cfg["mesh"]
    opts = cfg.get("mesh_options", {})
    if name == "builtin:straight_waveguide":
        return straight_waveguide_mesh(**opts)
    if name == "builtin:microcavity":
        return microcavity_mesh(**opts) if opts else bundled_microcavity()
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"mesh file {name} not found")
    return load_mesh(path)


def _space(cfg, timings):
    from .fem import FeSpace
    from .mesh import refine_uniform

    t0 = time.perf_counter()
    mesh = _mesh(cfg)
    if cfg["refinements"]:
        mesh = refine_uniform(mesh, cfg["refinements"])
    space = FeSpace(mesh, cfg["fe_order"])
    timings["mesh"] = time.perf_counter() - t0
    return space


def _system(cfg, space, N, timings):
    from .assembly import assemble_global
    from .hardy import HardyParams
    from .mesh import build_segmentation

    t0 = time.perf_counter()
    hp = HardyParams(_complex(cfg["kappa0"]), N)
    segs = build_segmentation(space.mesh, cfg["strategy"], p0=cfg.get("p0"))
    system = assemble_global(space, segs, hp=hp, resolvent_pad=cfg["resolvent_pad"])
    timings["assembly"] = timings.get("assembly", 0.0) + time.perf_counter() - t0
    return system


def _fe_norm_matrix(space):
    from .fem import assemble_interior

    K, M = assemble_interior(space, {m: 1.0 for m in space.mesh.materials})
    return (K + M).tocsr()


def _energy(A, d):
    return float(np.sqrt(abs(np.vdot(d, A @ d))))


def task_solve1d(cfg):
    from .hardy import HardyParams
    from .solver1d import Problem1D, exact_u0, solve_scattering_1d

    d = cfg["one_d"]
    kappa = _complex(cfg["kappa"])
    analytic = (cfg["reference"] == "analytic" and not d["n_breaks"]
                and all(v == 1.0 for v in d["n_values"]) and d["left_bc"] == "neumann")
    timings, rows, sols = {}, [], []
    for N in cfg["N_sweep"]:
        t0 = time.perf_counter()
        prob = Problem1D(a=d["a"], kappa=kappa, g=_complex(d["g"]), fe_order=cfg["fe_order"],
                         n_cells=d["n_cells"], hardy=HardyParams(_complex(cfg["kappa0"]), N),
                         n_breaks=tuple(d["n_breaks"]), n_values=tuple(d["n_values"]), left_bc=d["left_bc"])
        sol = solve_scattering_1d(prob)
        sols.append((N, prob, sol, time.perf_counter() - t0))
    timings["solve"] = sum(s[3] for s in sols)
    ref = exact_u0(sols[-1][1]) if analytic else sols[-1][2].u0
    results = []
    for N, prob, sol, wall in sols:
        err = abs(sol.u0 - ref) / abs(ref)
        n_tot = len(sol.interior_coeffs) + len(sol.hardy_coeffs)
        rows.append((N, n_tot, N + 1, err, wall))
        results.append({"N": N, "u0": sol.u0, "rel_error": err})
    last = sols[-1][2]
    field = (("r", "re", "im"), [(r, v.real, v.imag) for r, v in zip(last.nodes, last.interior_coeffs)])
    summary = {"results": results, "reference_u0": ref,
               "reference": "analytic" if analytic else f"finest N={cfg['N_sweep'][-1]}"}
    return summary, rows, field, timings


def _incoming_field(cfg):
    from .waveguide import ModeField, solve_slab_mode

    inc = cfg["incoming"]
    kappa = _complex(cfg["kappa"])
    if kappa.imag != 0:
        raise ConfigError("slab-mode incoming fields need a real kappa")
    mode = solve_slab_mode(kappa.real, inc["a"], inc["n1"], inc["n2"], inc["parity"], inc["branch"])
    return mode, ModeField(mode, inc["x_origin"], inc["y_center"])


def task_scatter(cfg):
    from .assembly import apply_incoming, incoming_from_field
    from .fem import h1_error
    from .solvers import factorize, lu_solve

    timings = {}
    kappa = _complex(cfg["kappa"])
    mode, fld = _incoming_field(cfg)
    space = _space(cfg, timings)
    sols = []
    for N in cfg["N_sweep"]:
        t0 = time.perf_counter()
        system = _system(cfg, space, N, timings)
        rhs = apply_incoming(system, incoming_from_field(system, fld), kappa)
        A = system.operator(kappa)
        t1 = time.perf_counter()
        lu = factorize(A)
        t2 = time.perf_counter()
        x = lu_solve(A, rhs, tol=1e-10, lu=lu)
        t3 = time.perf_counter()
        timings["factorization"] = timings.get("factorization", 0.0) + t2 - t1
        timings["solve"] = timings.get("solve", 0.0) + t3 - t2
        sols.append((N, system, x, t3 - t0))
    nfe = space.n_dofs
    results, rows = [], []
    if cfg["reference"] == "analytic":
        # exact only when the incoming mode is the full solution (no obstacle)
        ref_label = "analytic incoming field (relative H1 error on the interior)"
        errs = [h1_error(space, x[:nfe], fld, fld.gradient) for _, _, x, _ in sols]
        errs = [e / n for e, n in errs]
    else:
        ref_label = f"finest N={cfg['N_sweep'][-1]} (relative H1 difference on the interior)"
        A = _fe_norm_matrix(space)
        xr = sols[-1][2][:nfe]
        errs = [_energy(A, x[:nfe] - xr) / _energy(A, xr) for _, _, x, _ in sols]
    for (N, system, x, wall), err in zip(sols, errs):
        rows.append((N, system.n_dofs, N + 1, err, wall))
        results.append({"N": N, "dofs": system.dofmap.counts(), "rel_error": err})
    x = sols[-1][2]
    V = space.mesh.vertices
    field = (("x", "y", "re", "im"), [(a, b, v.real, v.imag) for (a, b), v in zip(V, x[:len(V)])])
    summary = {"results": results, "reference": ref_label, "kappa": kappa,
               "mode": {"kappa_x": mode.kappa_x, "parity": mode.parity, "branch": mode.branch}}
    return summary, rows, field, timings


def task_resonance(cfg):
    from .setups import SPEED_OF_LIGHT
    from .solvers import shift_invert_eigs

    timings = {}
    unit = cfg.get("length_unit_m")
    if "shift_kappa" in cfg:
        shift_k = _complex(cfg["shift_kappa"])
    else:
        shift_k = _complex(cfg["shift_omega"]) / SPEED_OF_LIGHT * unit
    space = _space(cfg, timings)
    sols = []
    sigma = shift_k**2
    for N in cfg["N_sweep"]:
        t0 = time.perf_counter()
        system = _system(cfg, space, N, timings)
        res = shift_invert_eigs(system.S, system.M, sigma, n_want=cfg["n_want"], tol=cfg["tol"])
        timings["factorization"] = timings.get("factorization", 0.0) + res.extra["factorization_seconds"]
        timings["eigensolve"] = timings.get("eigensolve", 0.0) + res.extra["arnoldi_seconds"]
        sols.append((N, system, res, time.perf_counter() - t0))
        if cfg["continuation"]:
            # track the pair found so far; spurious pairs move with N
            sigma = res.eigenvalues[0]
    ref = sols[-1][2].eigenvalues[0]
    rows, results = [], []
    for N, system, res, wall in sols:
        lam = res.eigenvalues[0]
        err = abs(lam - ref) / abs(ref)
        rows.append((N, system.n_dofs, N + 1, err, wall))
        entry = {"N": N, "kappa_sq": list(res.eigenvalues), "kappa": [np.sqrt(l) for l in res.eigenvalues],
                 "residuals": list(res.residuals), "iterations": res.iterations, "rel_error": err,
                 "dofs": system.dofmap.counts()}
        if unit:
            entry["omega"] = [np.sqrt(l) * SPEED_OF_LIGHT / unit for l in res.eigenvalues]
        results.append(entry)
    x = sols[-1][2].eigenvectors[:, 0]
    V = space.mesh.vertices
    field = (("x", "y", "re", "im"), [(a, b, v.real, v.imag) for (a, b), v in zip(V, x[:len(V)])])
    summary = {"results": results, "reference": f"finest N={cfg['N_sweep'][-1]} eigenvalue",
               "shift_kappa": shift_k, "length_unit_m": unit}
    return summary, rows, field, timings


def task_dtn(cfg):
    from .exterior import strip_dtn_values

    d = cfg["dtn"]
    kappa = _complex(cfg["kappa"])
    timings, rows, results = {}, [], []
    finest = None
    if cfg["reference"] == "finest":
        finest = strip_dtn_values(kappa, _complex(cfg["kappa0"]), cfg["N_sweep"][-1], cfg["fe_order"],
                                  d["edge_length"], d["modes"])[1]
    for N in cfg["N_sweep"]:
        t0 = time.perf_counter()
        mu, val, exact = strip_dtn_values(kappa, _complex(cfg["kappa0"]), N, cfg["fe_order"],
                                          d["edge_length"], d["modes"])
        wall = time.perf_counter() - t0
        ref = exact if finest is None else finest
        err = float(np.max(np.abs(val - ref) / np.abs(ref)))
        n_tot = (N + 2) * (cfg["fe_order"] + 1)
        rows.append((N, n_tot, N + 1, err, wall))
        results.append({"N": N, "mu": mu, "schur": val, "exact": exact, "rel_error": err})
    timings["solve"] = sum(r[4] for r in rows)
    last = results[-1]
    field = (("mu", "re", "im"), [(m, v.real, v.imag) for m, v in zip(last["mu"], last["schur"])])
    summary = {"results": results, "reference": "-i sqrt(kappa^2 - mu)" if finest is None else "finest N"}
    return summary, rows, field, timings


RUNNERS = {"solve1d": task_solve1d, "scatter": task_scatter, "resonance": task_resonance, "dtn_test": task_dtn}


def run(task: str, cfg: dict, out_dir, threads: int | None = None) -> int:
    """Run one task; returns the process exit status."""
    out_dir = Path(out_dir)
    try:
        cfg = resolve_config(cfg, task)
    except ConfigError as exc:
        _report(out_dir, {"error": "config_error", "type": "ConfigError", "message": str(exc)})
        return 2
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(out_dir / "config.resolved.json", json.dumps(_jsonable(cfg), indent=2, sort_keys=True) + "\n")
    from threadpoolctl import threadpool_limits

    t0 = time.perf_counter()
    try:
        with threadpool_limits(limits=threads) if threads else contextlib.nullcontext():
            summary, rows, field, timings = RUNNERS[cfg["problem"]](cfg)
    except (ConfigError, ValueError) as exc:
        # parameter validation in the library raises ValueError
        _report(out_dir, {"error": "config_error", "type": "ConfigError", "message": str(exc)})
        return 2
    except HSIEError as exc:
        _report(out_dir, exc.to_dict())
        return 1
    timings["total"] = time.perf_counter() - t0
    summary["geometric_ratio"] = fitted_ratio([r[0] for r in rows], [r[3] for r in rows])
    summary.update({"task": task, "problem": cfg["problem"], "timings": timings, "threads": threads})
    header = [f"task: {task}", f"problem: {cfg['problem']}", f"reference: {summary['reference']}",
              "dofs_radial: Hardy coefficients per ray (N + 1)"]
    _atomic_write(out_dir / "convergence.csv", _csv(header, CONV_COLUMNS, rows))
    _atomic_write(out_dir / "field.csv", _csv([f"task: {task}", "solution samples (interior vertices, 1D nodes or DtN modes)"],
                                              field[0], field[1]))
    _atomic_write(out_dir / "summary.json", json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return 0


def _report(out_dir: Path, err: dict):
    text = json.dumps(_jsonable(err), sort_keys=True)
    print(text, file=sys.stderr)
    with contextlib.suppress(OSError):
        out_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(out_dir / "error.json", text + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hsie", description="Hardy space infinite element solvers")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=None, help="output directory (default: output_dir or ./hsie-out)")
    parser.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    env = os.environ.get("HSIE_THREADS")
    if env:
        try:
            threads = int(env)
        except ValueError:
            print(json.dumps({"error": "config_error", "type": "ConfigError", "message": f"HSIE_THREADS={env!r} is not an integer"}),
                  file=sys.stderr)
            return 2
    if threads is not None and threads < 1:
        print(json.dumps({"error": "config_error", "type": "ConfigError", "message": "threads must be >= 1"}), file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(json.dumps({"error": "config_error", "type": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return 2
    out = args.out or cfg.get("output_dir") or "hsie-out"
    return run(args.task, cfg, out, threads)


if __name__ == "__main__":
    sys.exit(main())
