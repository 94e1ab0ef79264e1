"""Reference runs, discrete L2 errors and refinement studies.

Errors follow ``Err(w) = max_n ||w_ref(t_n) - w_h^n||`` measured with the
coarse mass matrix on the coarse nodes. The reference is evaluated as a P1
function at the coarse nodes, which reduces to plain restriction when the
meshes are nested.

A study advances the reference and every ladder member in lockstep, so the
reference trajectory never has to be stored.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assembly import assemble_mass
from .dynamics import RunConfig, RunResult, build_operators, iterate, run
from .errors import ConfigurationError, StepError
from .mesh import Mesh

__all__ = [
    "StudyConfig",
    "ConvergenceRow",
    "ConvergenceTable",
    "config_hash",
    "reference_solution",
    "restrict_reference",
    "error_norms",
    "run_convergence_study",
    "run_convergence_studies",
    "rates",
]

log = logging.getLogger(__name__)


def config_hash(config) -> str:
    payload = json.dumps(asdict(config), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _step_ratio(coarse_tau: float, fine_tau: float) -> int:
    ratio = coarse_tau / fine_tau
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise ConfigurationError(f"tau={coarse_tau:g} is not an integer multiple of reference tau={fine_tau:g}")
    return k


def reference_solution(config: RunConfig, snapshot_steps=None, cache_dir=None) -> RunResult:
    """High-resolution run keeping ``(U, V)`` at ``snapshot_steps`` (default: all).

    With ``cache_dir`` the snapshots are stored under a content hash of the
    configuration and the requested steps, and reused when present.
    """
    steps = sorted(range(config.N + 1) if snapshot_steps is None else set(snapshot_steps))
    if steps and (steps[0] < 0 or steps[-1] > config.N):
        raise ConfigurationError("reference snapshot steps outside 0..N")
    path = None
    if cache_dir is not None:
        key = hashlib.sha256((config_hash(config) + repr(steps)).encode()).hexdigest()[:16]
        path = Path(cache_dir) / f"reference-{key}.npz"
        if path.exists():
            return _load_reference(config, path)
    result = run(config, snapshot_steps=steps)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(
            path,
            steps=np.array(sorted(result.snapshots), dtype=int),
            U=np.array([result.snapshots[n][0] for n in sorted(result.snapshots)]),
            V=np.array([result.snapshots[n][1] for n in sorted(result.snapshots)]),
            **{f"diag_{k}": v for k, v in result.diagnostics.items()},
        )
    return result


def _load_reference(config: RunConfig, path: Path) -> RunResult:
    from .dynamics import SchemeState
    from .mesh import build_mesh

    data = np.load(path)
    steps = data["steps"]
    snaps = {int(n): (data["U"][i], data["V"][i]) for i, n in enumerate(steps)}
    diag = {k[5:]: data[k] for k in data.files if k.startswith("diag_")}
    last = int(steps[-1])
    norm = float(diag["vstar_norm"][-1]) if diag["vstar_norm"].size else 1.0
    final = SchemeState(last, snaps[last][0], snaps[last][1], snaps[last][1] * norm, norm)
    first = int(steps[0])
    initial = SchemeState(first, snaps[first][0], snaps[first][1], snaps[first][1], 1.0)
    return RunResult(config, build_mesh(config.dim, config.M), initial, final, diag, snaps)


def restrict_reference(ref_mesh: Mesh, values: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Reference interior values seen at the interior nodes of ``mesh``."""
    if ref_mesh.dim != mesh.dim:
        raise ConfigurationError("reference and run meshes differ in dimension")
    if ref_mesh.M < mesh.M:
        raise ConfigurationError(f"reference mesh M={ref_mesh.M} is coarser than M={mesh.M}")
    full = ref_mesh.to_full(values)
    if ref_mesh.M % mesh.M == 0:
        stride = ref_mesh.M // mesh.M
        grid = full.reshape(ref_mesh.grid_shape)[(slice(None, None, stride),) * mesh.dim]
        return grid.ravel()[mesh.interior_ids]
    return ref_mesh.evaluate(full, mesh.interior_nodes)


def _state_errors(mass, mesh, U, V, ref_mesh, Uref, Vref) -> tuple[float, float]:
    eu = U - restrict_reference(ref_mesh, Uref, mesh)
    ev = V - restrict_reference(ref_mesh, Vref, mesh)
    return math.sqrt(max(float(eu @ (mass @ eu)), 0.0)), math.sqrt(max(float(ev @ (mass @ ev)), 0.0))


def error_norms(result: RunResult, ref: RunResult) -> tuple[float, float]:
    """``(Err(u), Err(v))`` over the steps ``n >= 1`` stored in ``result``."""
    k = _step_ratio(result.config.tau, ref.config.tau) if result.config.tau > 0 else 1
    mass = assemble_mass(result.mesh)
    err_u = err_v = 0.0
    for n, (U, V) in sorted(result.snapshots.items()):
        if n == 0:
            continue
        if n * k not in ref.snapshots:
            raise ConfigurationError(f"reference has no snapshot at t={n * result.config.tau:g}")
        Uref, Vref = ref.snapshots[n * k]
        eu, ev = _state_errors(mass, result.mesh, U, V, ref.mesh, Uref, Vref)
        err_u, err_v = max(err_u, eu), max(err_v, ev)
    return err_u, err_v


@dataclass(frozen=True)
class StudyConfig:
    kind: str = "temporal"
    model: str = "quartic"
    u0: str = "sin"
    v0: str = "sin"
    dim: int = 1
    T: float = 5.0
    beta: float = 1.0
    gamma: float = 1.0
    ref_tau: float = 1e-4
    ref_M: int = 10000
    taus: tuple = (1.6e-2, 8e-3, 4e-3, 2e-3)
    Ms: tuple = (200, 400, 800, 1600)

    def __post_init__(self):
        if self.kind not in ("temporal", "spatial"):
            raise ConfigurationError(f"study kind must be 'temporal' or 'spatial', got {self.kind!r}")

    def reference_config(self) -> RunConfig:
        return RunConfig.from_final_time(
            self.T, self.ref_tau, dim=self.dim, M=self.ref_M, beta=self.beta, gamma=self.gamma,
            model=self.model, u0=self.u0, v0=self.v0,
        )

    def member_configs(self) -> list[RunConfig]:
        base = dict(dim=self.dim, beta=self.beta, gamma=self.gamma, model=self.model, u0=self.u0, v0=self.v0)
        if self.kind == "temporal":
            out = []
            for tau in self.taus:
                if not tau > self.ref_tau:
                    raise ConfigurationError(f"study tau={tau:g} is not coarser than the reference")
                _step_ratio(tau, self.ref_tau)
                # floor: 1.6e-2 does not divide T=5, the last level then sits at 4.992
                N = int(math.floor(self.T / tau + 1e-9))
                out.append(RunConfig(M=self.ref_M, tau=tau, N=N, **base))
            return out
        for M in self.Ms:
            if not M < self.ref_M:
                raise ConfigurationError(f"study M={M} is not coarser than the reference")
        return [RunConfig(M=M, tau=self.ref_tau, N=self.reference_config().N, **base) for M in self.Ms]


@dataclass
class ConvergenceRow:
    param: float
    label: str
    err_u: float
    err_v: float
    rate_u: float | None = None
    rate_v: float | None = None


@dataclass
class ConvergenceTable:
    kind: str
    rows: list[ConvergenceRow]
    metadata: dict = field(default_factory=dict)

    @property
    def err_u(self) -> np.ndarray:
        return np.array([r.err_u for r in self.rows])

    @property
    def err_v(self) -> np.ndarray:
        return np.array([r.err_v for r in self.rows])

    def to_csv(self, path) -> None:
        head = "tau" if self.kind == "temporal" else "h"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([head, "Err(u)", "rate", "Err(v)", "rate"])
            for r in self.rows:
                w.writerow([
                    r.label,
                    f"{r.err_u:.6e}",
                    "" if r.rate_u is None else f"{r.rate_u:.6e}",
                    f"{r.err_v:.6e}",
                    "" if r.rate_v is None else f"{r.rate_v:.6e}",
                ])

    def format(self) -> str:
        head = "tau" if self.kind == "temporal" else "h"
        lines = [f"{head:>10} {'Err(u)':>10} {'rate':>6} {'Err(v)':>10} {'rate':>6}"]
        for r in self.rows:
            ru = "" if r.rate_u is None else f"{r.rate_u:.2f}"
            rv = "" if r.rate_v is None else f"{r.rate_v:.2f}"
            lines.append(f"{r.label:>10} {r.err_u:10.2e} {ru:>6} {r.err_v:10.2e} {rv:>6}")
        return "\n".join(lines)


def rates(errors) -> list[float | None]:
    """``log2`` of successive error ratios; ``None`` for the first row."""
    errors = list(errors)
    return [None] + [math.log2(a / b) if a > 0 and b > 0 else float("nan") for a, b in zip(errors, errors[1:])]


def _label(kind, cfg: RunConfig) -> str:
    return f"{cfg.tau:g}" if kind == "temporal" else f"pi/{cfg.M}"


class _Member:
    def __init__(self, cfg: RunConfig, ref_tau: float):
        self.cfg = cfg
        self.ratio = _step_ratio(cfg.tau, ref_tau)
        self.ops = build_operators(cfg)
        self.states = iterate(cfg, self.ops)
        self.state = next(self.states)
        self.err_u = self.err_v = 0.0
        self.failure = None

    def done(self) -> bool:
        return self.failure is not None or self.state.n >= self.cfg.N


def run_convergence_study(study: StudyConfig, progress=None) -> ConvergenceTable:
    return run_convergence_studies([study], progress)[0]


def run_convergence_studies(studies, progress=None) -> list[ConvergenceTable]:
    """Several ladders against one shared reference pass (same reference config required)."""
    studies = list(studies)
    if not studies:
        return []
    ref_cfg = studies[0].reference_config()
    if any(s.reference_config() != ref_cfg for s in studies[1:]):
        raise ConfigurationError("studies sharing a reference must agree on its configuration")
    ladders = [[_Member(cfg, s.ref_tau) for cfg in s.member_configs()] for s in studies]
    members = [m for ladder in ladders for m in ladder]
    ref_ops = build_operators(ref_cfg)
    for ref_state in iterate(ref_cfg, ref_ops):
        n = ref_state.n
        if progress is not None:
            progress(n, ref_cfg.N)
        if n == 0:
            continue
        for m in members:
            if m.done() or n % m.ratio:
                continue
            try:
                m.state = next(m.states)
            except StepError as exc:
                # a diverging member is reported as an infinite error, the rest of the ladder continues
                log.warning("study member tau=%g M=%d failed: %s", m.cfg.tau, m.cfg.M, exc)
                m.failure = {"step": exc.step, "category": exc.category, "message": str(exc)}
                m.err_u = m.err_v = math.inf
                continue
            assert m.state.n * m.ratio == n
            eu, ev = _state_errors(
                m.ops.mass, m.ops.mesh, m.state.U, m.state.V, ref_ops.mesh, ref_state.U, ref_state.V
            )
            m.err_u, m.err_v = max(m.err_u, eu), max(m.err_v, ev)
    return [_table(s, ladder, ref_cfg) for s, ladder in zip(studies, ladders)]


def _table(study: StudyConfig, members, ref_cfg: RunConfig) -> ConvergenceTable:
    ru = rates(m.err_u for m in members)
    rv = rates(m.err_v for m in members)
    rows = [
        ConvergenceRow(m.cfg.tau if study.kind == "temporal" else m.cfg.h, _label(study.kind, m.cfg),
                       m.err_u, m.err_v, a, b)
        for m, a, b in zip(members, ru, rv)
    ]
    meta = {
        "kind": study.kind,
        "model": study.model,
        "u0": study.u0,
        "v0": study.v0,
        "dim": study.dim,
        "reference": {"tau": study.ref_tau, "M": study.ref_M, "T": ref_cfg.T},
        "fixed": {"M": study.ref_M} if study.kind == "temporal" else {"tau": study.ref_tau},
        "final_times": [m.cfg.T for m in members],
        "failures": {_label(study.kind, m.cfg): m.failure for m in members if m.failure},
    }
    return ConvergenceTable(study.kind, rows, meta)
