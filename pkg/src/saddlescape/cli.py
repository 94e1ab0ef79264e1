"""Command line entry point.

    saddlescape simulate  run.cfg   --out DIR [--seed-snapshots K]
    saddlescape converge  study.cfg --out DIR
    saddlescape spectrum  RUN_DIR   [--k 2] [--out DIR]
    saddlescape residual  RUN_DIR   [--out DIR]

Every command writes deterministic CSV files and a ``summary.json``. Failures
print a one-line JSON error record on stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunSpec, dump_run, load_run, load_study
from .diagnostics import (
    gradient_ceiling,
    increment_identity,
    norm_drift,
    overlap_identity,
    write_field_csv,
    write_residual_csv,
)
from .dynamics import build_operators, run
from .errors import ConfigurationError, SaddlescapeError, StepError
from .harness import config_hash, run_convergence_studies
from .model import get_model
from .spectral import hessian_pencil, smallest_eigs

log = logging.getLogger("saddlescape")

EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_OTHER = 1


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _write_diagnostics_csv(path: Path, result) -> None:
    d = result.diagnostics
    names = ["vstar_norm", "overlap", "increment_identity", "grad_u_sq", "grad_v_sq", "u_sup"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "t"] + names)
        for i in range(len(d["vstar_norm"])):
            n = i + 1
            w.writerow([n, f"{n * result.config.tau:.6e}"] + [f"{d[k][i]:.16e}" for k in names])


def _spectrum(U, mesh, model_name, k, mass=None, stiffness=None):
    A, Mm = hessian_pencil(U, mesh, get_model(model_name), mass, stiffness)
    return smallest_eigs(A, Mm, k)


def cmd_simulate(config_path, out_dir, seed_snapshots: int | None = None) -> int:
    spec = load_run(config_path)
    cfg = spec.config
    if seed_snapshots is not None:
        if seed_snapshots < 0:
            raise ConfigurationError("--seed-snapshots cadence must be >= 0")
        cfg = cfg.with_(snapshot_every=seed_snapshots)
        spec = RunSpec(cfg, spec.eigenvalues, spec.meta)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.cfg").write_text(dump_run(spec))

    t0 = time.perf_counter()
    ops = build_operators(cfg)
    result = run(cfg, ops=ops)
    mesh, final = result.mesh, result.final

    write_field_csv(out / "initial_state.csv", mesh, {"U": result.initial.U, "V": result.initial.V})
    write_field_csv(out / "final_state.csv", mesh, {"U": final.U, "V": final.V})
    sup = write_residual_csv(out / "residual.csv", final.U, mesh, ops.model)
    _write_diagnostics_csv(out / "diagnostics.csv", result)
    if result.snapshots:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for n, (U, V) in sorted(result.snapshots.items()):
            write_field_csv(snap_dir / f"step_{n:07d}.csv", mesh, {"U": U, "V": V})

    summary = {
        "config_hash": config_hash(cfg),
        "final_residual_sup": sup,
        "norm_drift_max": norm_drift(result),
        "overlap_max_dev": overlap_identity(result),
        "increment_identity_max": increment_identity(result),
        "gradient_ceiling": gradient_ceiling(result),
        "steps": cfg.N,
        "T": cfg.T,
        "config": asdict(cfg),
        "meta": spec.meta,
        "downscaled": bool(spec.meta.get("downscaled", False)),
        "version": __version__,
    }
    if spec.eigenvalues > 0:
        rep = _spectrum(final.U, mesh, cfg.model, spec.eigenvalues, ops.mass, ops.stiffness)
        summary.update(eigenvalues=list(rep.eigenvalues), index=rep.index, eigen_method=rep.method)
    summary["wallclock_s"] = time.perf_counter() - t0
    _write_json(out / "summary.json", summary)
    log.info("simulate: ||F||_inf = %.3e, drift = %.3e", sup, summary["norm_drift_max"])
    return 0


def _load_run_output(run_dir):
    from .mesh import build_mesh

    run_dir = Path(run_dir)
    cfg_path = run_dir / "run.cfg"
    state_path = run_dir / "final_state.csv"
    if not cfg_path.exists() or not state_path.exists():
        raise ConfigurationError(f"{run_dir} is not a simulate output directory (needs run.cfg and final_state.csv)")
    spec = load_run(cfg_path)
    mesh = build_mesh(spec.config.dim, spec.config.M)
    data = np.loadtxt(state_path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != mesh.n_interior:
        raise ConfigurationError(f"final_state.csv has {data.shape[0]} rows, mesh expects {mesh.n_interior}")
    U = data[:, mesh.dim]
    return spec, mesh, U


def cmd_spectrum(run_dir, k: int = 2, out_dir=None) -> int:
    spec, mesh, U = _load_run_output(run_dir)
    out = Path(out_dir or run_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rep = _spectrum(U, mesh, spec.config.model, k)
    with open(out / "spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "eigenvalue", "residual"])
        for i, (lam, res) in enumerate(zip(rep.eigenvalues, rep.residuals), start=1):
            w.writerow([i, f"{lam:.16e}", f"{res:.6e}"])
    payload = {
        "config_hash": config_hash(spec.config),
        "eigenvalues": list(rep.eigenvalues),
        "index": rep.index,
        "index_tol": rep.tol,
        "method": rep.method,
        "wallclock_s": time.perf_counter() - t0,
    }
    _write_json(out / "spectrum.json", payload)
    print(f"eigenvalues: {', '.join(f'{x:.6g}' for x in rep.eigenvalues)}  index: {rep.index}")
    return 0


def cmd_residual(run_dir, out_dir=None) -> int:
    spec, mesh, U = _load_run_output(run_dir)
    out = Path(out_dir or run_dir)
    out.mkdir(parents=True, exist_ok=True)
    sup = write_residual_csv(out / "residual.csv", U, mesh, get_model(spec.config.model))
    _write_json(out / "residual.json", {"config_hash": config_hash(spec.config), "final_residual_sup": sup})
    print(f"||F||_inf = {sup:.6e}")
    return 0


def cmd_converge(config_path, out_dir) -> int:
    studies, meta = load_study(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "study.cfg").write_text(Path(config_path).read_text())
    t0 = time.perf_counter()
    last = [-1]

    def progress(n, total):
        pct = (100 * n) // max(total, 1)
        if pct >= last[0] + 10:
            last[0] = pct
            log.info("reference step %d/%d", n, total)

    tables = run_convergence_studies(studies, progress)
    summary = {
        "config_hash": hashlib.sha256(
            json.dumps([asdict(s) for s in studies], sort_keys=True, default=str).encode()
        ).hexdigest()[:16],
        "meta": meta,
        "downscaled": str(meta.get("downscaled", "false")).lower() in ("1", "true", "yes", "on"),
        "tables": {},
    }
    for t in tables:
        t.to_csv(out / f"table-{t.kind}.csv")
        summary["tables"][t.kind] = {
            "rows": [asdict(r) for r in t.rows],
            "metadata": t.metadata,
        }
        print(t.format())
    summary["wallclock_s"] = time.perf_counter() - t0
    _write_json(out / "summary.json", summary)
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="saddlescape", description="Index-1 saddle dynamics for semilinear problems.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one configuration")
    s.add_argument("config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed-snapshots", "--snapshots", dest="snapshots", type=int, default=None,
                   metavar="CADENCE", help="store (U, V) every CADENCE steps")

    c = sub.add_parser("converge", help="run a refinement study")
    c.add_argument("config")
    c.add_argument("--out", required=True)

    e = sub.add_parser("spectrum", help="smallest Hessian eigenvalues of a finished run")
    e.add_argument("run_dir")
    e.add_argument("--k", type=int, default=2)
    e.add_argument("--out", default=None)

    r = sub.add_parser("residual", help="finite-difference residual of a finished run")
    r.add_argument("run_dir")
    r.add_argument("--out", default=None)
    return p


def _report(exc: BaseException, code: int) -> int:
    record = {"status": "error", "category": getattr(exc, "category", type(exc).__name__), "message": str(exc)}
    if getattr(exc, "keys", None):
        record["keys"] = list(exc.keys)
    if isinstance(exc, StepError):
        record["step"] = exc.step
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.snapshots)
        if args.command == "converge":
            return cmd_converge(args.config, args.out)
        if args.command == "spectrum":
            return cmd_spectrum(args.run_dir, args.k, args.out)
        return cmd_residual(args.run_dir, args.out)
    except ConfigurationError as exc:
        return _report(exc, EXIT_CONFIG)
    except SaddlescapeError as exc:
        return _report(exc, EXIT_RUNTIME)
    except (OSError, ValueError) as exc:
        return _report(exc, EXIT_OTHER)


if __name__ == "__main__":
    sys.exit(main())
