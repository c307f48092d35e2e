"""Batch command line: one JSON config in, JSON/CSV artifacts out.

Usage::

    kahler-john --config run.json --out results/ [--threads N] [--seed-override S]

Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 a solve
finished without a passing certificate.
"""

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, barriers, schemas
from ._linalg import hermitian_from_json, hermitize, su_basis, su_matrix
from .fiber import (DiscGrid, MinimizerFamily, constant_family, gluing_check,
                    holomorphic_family, max_holomorphic_family, psh_check_product,
                    section10_eval, section10_family, sweep, write_sweep_outputs)
from .moment import certificate, contact_set, uniqueness_check
from .potentials import energy, geodesic_between, geodesic_point, hcma_residual, log_quadratic
from .projective import normalize
from .solver import SolverOptions, aligned_relative_error, solve

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_UNCERTIFIED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated run configuration with defaults filled in."""

    command: str
    n: int = 1
    problem: str = "min"
    barrier: dict | None = None
    grid: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    matrix: dict | None = None
    shift: float = 0.0
    points: list | None = None
    gamma: dict | None = None
    tolerance: float | None = None
    family: object = None
    radius: float = 0.9
    step: float = 0.05
    psh_stride: int = 4
    spectrum: list | None = None
    samples: int = 8
    seed: int = 0
    base_dir: str | None = None

    @property
    def m(self):
        return self.n + 1

    def solver_options(self):
        return SolverOptions(n=self.n, resolution=self.grid.get("resolution", 64),
                             count=self.grid.get("count", 4096), seed=self.grid.get("seed", self.seed),
                             **self.solver)


def parse_config(text, base_dir=None):
    """Parse and validate a JSON config.

    Raises
    ------
    ConfigError
        With a message naming the offending key.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    errs = schemas.errors(doc, "config")
    if errs:
        path, msg = errs[0]
        key = path or (msg.split("'")[1] if "'" in msg else "<root>")
        raise ConfigError(f"config key '{key}': {msg}")
    cfg = RunConfig(base_dir=base_dir, **doc)
    _semantic_checks(cfg)
    return cfg


def _semantic_checks(cfg):
    need = {"solve": "barrier", "sweep": "family", "uniqueness": "spectrum"}
    key = need.get(cfg.command)
    if key and getattr(cfg, key) is None:
        raise ConfigError(f"config key '{key}': required for command {cfg.command!r}")
    if cfg.command == "certify" and cfg.points is None and (cfg.matrix is None or cfg.barrier is None):
        raise ConfigError("config key 'points': certify needs 'points' or both 'matrix' and 'barrier'")
    if cfg.command == "counterexample" and cfg.n != 1:
        raise ConfigError("config key 'n': counterexample lives on P¹ (n = 1)")
    if cfg.barrier and cfg.barrier.get("kind") == "section10" and cfg.n != 1:
        raise ConfigError("config key 'n': section10 barrier needs n = 1")
    if cfg.barrier and cfg.barrier.get("kind") == "samples":
        p = Path(cfg.barrier.get("file", ""))
        if cfg.base_dir and not p.is_absolute():
            p = Path(cfg.base_dir) / p
        if not p.is_file():
            raise ConfigError(f"config key 'barrier.file': no such file {str(p)!r}")
    for key in ("matrix", "gamma"):
        M = getattr(cfg, key)
        if M is not None and np.asarray(M["re"]).shape != (cfg.m, cfg.m):
            raise ConfigError(f"config key '{key}': expected a {cfg.m}x{cfg.m} matrix")
    if cfg.spectrum is not None and cfg.command == "uniqueness" and len(cfg.spectrum) != cfg.m:
        raise ConfigError(f"config key 'spectrum': expected {cfg.m} entries for n = {cfg.n}")


def _dump(path, doc):
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
    return path.name


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return x


def _family(cfg):
    f = cfg.family
    if isinstance(f, str):
        f = {"kind": f}
    kind = f["kind"]
    if kind == "section10":
        return section10_family()
    if kind == "constant":
        return constant_family(f.get("c", 0.0), cfg.m)
    if kind == "holomorphic_family":
        return holomorphic_family(hermitian_from_json(_cm(f["T0"])), hermitian_from_json(_cm(f["T1"])))
    pairs = [(hermitian_from_json(_cm(p["T0"])), hermitian_from_json(_cm(p["T1"]))) for p in f["pairs"]]
    return max_holomorphic_family(pairs)


def _cm(doc):
    return {"re": doc["re"], "im": doc.get("im", np.zeros_like(doc["re"]).tolist())}


# -- commands --------------------------------------------------------------

def cmd_solve(cfg, out, threads):
    v0 = barriers.from_spec(cfg.barrier, cfg.m, cfg.base_dir)
    rep = solve(cfg.problem, v0, cfg.solver_options())
    arts = [_dump(out / "report.json", rep.to_json())]
    (out / "trace.csv").write_text(rep.trace_csv())
    arts.append("trace.csv")
    return (EXIT_OK if rep.certified else EXIT_UNCERTIFIED), arts


def cmd_certify(cfg, out, threads):
    tol = cfg.tolerance or 1e-6
    if cfg.points is not None:
        P = np.asarray(cfg.points, dtype=float)
        X = P[..., 0] + 1j * P[..., 1]
        gamma = None if cfg.gamma is None else hermitian_from_json(_cm(cfg.gamma))
        cert = certificate(X, gamma, tol=tol)
    else:
        opts = cfg.solver_options()
        grid = opts.grid()
        v0 = barriers.from_spec(cfg.barrier, cfg.m, cfg.base_dir)
        grid = v0.grid or grid
        A = hermitize(hermitian_from_json(_cm(cfg.matrix)))
        u = log_quadratic(A, grid.points) + cfg.shift
        v = v0.values(grid)
        idx = contact_set(u, v, grid, cfg.problem, opts.eps_rel)
        w, V = np.linalg.eigh(A)
        cert = certificate(grid.points[idx], (V * np.sqrt(w)) @ V.conj().T, tol=tol, indices=idx)
    arts = [_dump(out / "certificate.json", cert.to_json())]
    return (EXIT_OK if cert.passed else EXIT_UNCERTIFIED), arts


def cmd_sweep(cfg, out, threads):
    fam = _family(cfg)
    rep = sweep(fam, DiscGrid(cfg.radius, cfg.step), cfg.solver_options(), threads=threads)
    write_sweep_outputs(rep, out)
    arts = ["sweep.json", "chi.csv", "laplacian.csv", "bridge.csv"]
    return (EXIT_OK if not rep.uncertified else EXIT_UNCERTIFIED), arts


PSH_POINTS = np.array([[0, 1], [1, 0], [1, 1], [1, 2], [1, 0.5j], [2, 1j]], dtype=complex)


def counterexample_pipeline(radius=0.9, step=0.05, stride=4, opts=None, threads=1, seed=0):
    """Full glued-barrier pipeline; returns ``(summary, sweep_report, psh_rows)``."""
    opts = opts or SolverOptions()
    disc = DiscGrid(radius, step)
    rep = sweep(section10_family(), disc, opts, threads=threads)
    r2 = np.abs(disc.z) ** 2
    chi_err = float(np.abs(rep.chi - r2 / 2).max())
    A_err = max(aligned_relative_error(r.matrix, np.diag([np.exp(2 * a), np.exp(-a)]))
                for r, a in zip(rep.reports, r2))
    logr_err = float(np.nanmax(np.abs(np.log(rep.contact_radius) - 1.5 * r2)))
    _, _, (lap_min, lap_z) = rep.laplacian()

    mf = MinimizerFamily(section10_family(), opts)
    for z, r in zip(disc.z, rep.reports):
        mf._cache[complex(z)] = r
    sub = [n for n in range(len(disc)) if disc.i[n] % stride == 0 and disc.j[n] % stride == 0]
    psh_rows = []
    for n in sub:
        z = complex(disc.z[n])
        res = psh_check_product(mf, [(z, x) for x in PSH_POINTS])
        psh_rows.append((n, res["min_eig"]))
    full = psh_check_product(mf, [(complex(disc.z[n]), np.array([0, 1.0])) for n in sub])

    rng = np.random.default_rng(seed)
    d0 = []
    u0 = lambda z, X: section10_eval("u0", z, X)
    for n in sub:
        z = complex(disc.z[n])
        for f in (0.0, 0.25, 0.5, 0.9):
            xi = np.sqrt(f * 2 * np.exp(3 * abs(z) ** 2)) * np.exp(2j * np.pi * rng.uniform())
            d0.append((z, np.array([1.0, xi])))
    d0_res = psh_check_product(u0, d0)
    glue = gluing_check(seed=seed)
    summary = {
        "disc": {"radius": radius, "step": step, "count": len(disc), "psh_stride": stride},
        "chi_max_error": chi_err,
        "laplacian_min": lap_min,
        "laplacian_min_at": [lap_z.real, lap_z.imag],
        "psh_min_eig": full["min_eig"],
        "psh_min_eig_at": {"z": [full["z"].real, full["z"].imag],
                           "x": [[c.real, c.imag] for c in full["x"]]},
        "psh_min_eig_D0": d0_res["min_eig"],
        "gluing": glue,
        "matrix_max_rel_error": float(A_err),
        "log_radius_max_error": logr_err,
        "uncertified": len(rep.uncertified),
    }
    summary["passed"] = bool(A_err <= 1e-3 and logr_err <= 0.02 and chi_err <= 2e-3
                             and lap_min >= -5e-3 and full["min_eig"] <= -0.5
                             and d0_res["min_eig"] >= 1e-3 and glue["max_residual"] <= 1e-8
                             and not rep.uncertified)
    return summary, rep, psh_rows


def cmd_counterexample(cfg, out, threads):
    summary, rep, psh_rows = counterexample_pipeline(cfg.radius, cfg.step, cfg.psh_stride,
                                                     cfg.solver_options(), threads, cfg.seed)
    write_sweep_outputs(rep, out)
    idx = [n for n, _ in psh_rows]
    (out / "psh_min_eig.csv").write_text(rep.csv_map([v for _, v in psh_rows], idx))
    arts = ["sweep.json", "chi.csv", "laplacian.csv", "bridge.csv", "psh_min_eig.csv",
            _dump(out / "summary.json", summary)]
    if summary["uncertified"]:
        return EXIT_UNCERTIFIED, arts
    return EXIT_OK, arts


def geodesic_checks(n=1, samples=8, seed=0, step=2e-4):
    """Homogeneous Monge-Ampère residuals along group orbits and energy linearity.

    ``step`` is the finite-difference step of the Levi forms; the residual of
    an exact solution decays like ``step**2``.
    """
    rng = np.random.default_rng(seed)
    m = n + 1
    basis = su_basis(m)
    cases = []
    for _ in range(samples):
        g = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        Z = su_matrix(rng.normal(size=basis.shape[0]), basis)
        pts = [(complex(*(0.3 * rng.normal(size=2))), normalize(rng.normal(size=m) + 1j * rng.normal(size=m)))
               for _ in range(4)]
        cases.append({"residual": hcma_residual(g, Z, pts, step=step)})
    x = normalize(np.ones(m))
    pert = hcma_residual(np.eye(m), np.zeros((m, m)), [(0.0, x)], step=step,
                         extra=lambda s, X: np.abs(s) ** 2 * np.abs(X[..., 1]) ** 2)
    dev = 0.0
    for _ in range(samples):
        G0 = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        G1 = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        A0, A1 = G0.conj().T @ G0, G1.conj().T @ G1
        H = geodesic_between(A0, A1)
        e0, e1 = energy(A0), energy(A1)
        for t in (0.0, 1 / 3, 2 / 3, 1.0):
            dev = max(dev, abs(energy(geodesic_point(A0, H, t)) - ((1 - t) * e0 + t * e1)))
    res = max(c["residual"] for c in cases)
    return {"n": n, "seed": seed, "cases": cases, "max_residual": res, "perturbed_residual": pert,
            "energy_linearity_max_deviation": dev,
            "passed": bool(res <= 1e-4 and pert >= 1e-2 and dev <= 1e-10)}


def cmd_geodesic(cfg, out, threads):
    doc = geodesic_checks(cfg.n, cfg.samples, cfg.seed)
    return (EXIT_OK if doc["passed"] else EXIT_RUNTIME), [_dump(out / "hcma_residual.json", doc)]


def cmd_uniqueness(cfg, out, threads):
    rep = uniqueness_check(cfg.spectrum, seed=cfg.seed)
    return EXIT_OK, [_dump(out / "uniqueness.json", rep.to_json())]


COMMANDS = {"solve": cmd_solve, "certify": cmd_certify, "sweep": cmd_sweep,
            "counterexample": cmd_counterexample, "geodesic-check": cmd_geodesic,
            "uniqueness": cmd_uniqueness}


def _versions():
    import scipy
    from importlib.metadata import version

    return {"kahler_john": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "jsonschema": version("jsonschema")}


def run(cfg, out, threads=1, config_text=""):
    """Execute ``cfg`` writing artifacts to ``out``; returns the exit code."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        code, arts = COMMANDS[cfg.command](cfg, out, threads)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code, arts = EXIT_RUNTIME, []
    manifest = {
        "package": "kahler_john",
        "versions": _versions(),
        "command": cfg.command,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "seeds": {"seed": cfg.seed, "grid_seed": cfg.grid.get("seed", cfg.seed)},
        "tolerances": {"cert_tol": cfg.solver.get("cert_tol", 1e-6),
                       "eps_rel": cfg.solver.get("eps_rel", 1e-4)},
        "threads": threads,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": time.perf_counter() - t0,
        "exit_code": code,
        "artifacts": arts,
    }
    _dump(out / "manifest.json", manifest)
    if code == EXIT_UNCERTIFIED:
        print("warning: finished without a passing certificate", file=sys.stderr)
    return code


def main(argv=None):
    ap = argparse.ArgumentParser(prog="kahler-john", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--seed-override", type=int, default=None)
    args = ap.parse_args(argv)
    try:
        path = Path(args.config)
        text = path.read_text()
        cfg = parse_config(text, base_dir=str(path.parent))
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed_override is not None:
        cfg.seed = args.seed_override
        cfg.grid = dict(cfg.grid, seed=args.seed_override)
    return run(cfg, args.out, max(1, args.threads), text)


if __name__ == "__main__":
    sys.exit(main())
