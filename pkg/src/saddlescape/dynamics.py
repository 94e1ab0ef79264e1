"""Fully-discrete index-1 saddle dynamics.

One step advances ``(U, V)`` from level ``n-1`` to ``n``:

    (M/beta + tau K - 2 tau (M V)(K V)^T) U^n = M U/beta + tau (M F - 2 (F.MV) M V)
    (M/gamma + tau K - tau (M V)(K V)^T) V*  = M V/gamma + tau (M G - (G.MV) M V)
    V^n = V* / ||V*||

with ``F = f(U)`` and ``G = f'(U) V`` evaluated at nodes and everything on the
right lagged at ``n-1``. Both systems are constant SPD operators plus a
rank-one coupling, so each step costs a handful of triangular solves.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator

import numpy as np

from .assembly import assemble_mass, assemble_stiffness, assemble_weighted_mass, elliptic_projection, l2_norm
from .errors import (
    BlowUpError,
    ConfigurationError,
    IdentityViolationError,
    SaddlescapeError,
    StepError,
)
from .linsolve import Factorization, factorize, solve_rank_one
from .mesh import Mesh, build_mesh
from .model import ProblemModel, eval_f, eval_fprime, get_initial, get_model, initial_fields, normalize

__all__ = [
    "RunConfig",
    "SchemeState",
    "Operators",
    "RunResult",
    "build_operators",
    "initial_state",
    "step_u",
    "step_v",
    "retract",
    "advance",
    "iterate",
    "run",
]

log = logging.getLogger(__name__)

QUADRATURES = ("nodal", "inconsistent")


@dataclass(frozen=True)
class RunConfig:
    dim: int = 1
    M: int = 200
    tau: float = 1e-3
    N: int = 5000
    beta: float = 1.0
    gamma: float = 1.0
    model: str = "quartic"
    u0: str = "sin"
    v0: str = "sin"
    snapshot_every: int = 0
    quadrature: str = "nodal"
    normalize_v0: bool = True
    overlap_tol: float = 1e-8
    blowup_threshold: float = 1e6

    def __post_init__(self):
        bad = []
        if self.dim not in (1, 2):
            bad.append("dim")
        if int(self.M) != self.M or self.M < 2:
            bad.append("M")
        if not self.tau >= 0 or not np.isfinite(self.tau):
            bad.append("tau")
        if int(self.N) != self.N or self.N < 0:
            bad.append("N")
        if not (self.beta > 0 and self.gamma > 0):
            bad.append("beta/gamma")
        if self.quadrature not in QUADRATURES:
            bad.append("quadrature")
        if bad:
            raise ConfigurationError(f"invalid run configuration fields: {', '.join(bad)}")
        get_model(self.model)
        get_initial(self.u0, self.dim)
        get_initial(self.v0, self.dim)

    @classmethod
    def from_final_time(cls, T: float, tau: float, **kw) -> "RunConfig":
        N = int(round(T / tau))
        if abs(N * tau - T) > 1e-9 * max(1.0, T):
            raise ConfigurationError(f"T={T} is not an integer multiple of tau={tau}")
        return cls(tau=tau, N=N, **kw)

    @property
    def T(self) -> float:
        return self.N * self.tau

    @property
    def h(self) -> float:
        return np.pi / self.M

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class SchemeState:
    n: int
    U: np.ndarray
    V: np.ndarray
    Vstar: np.ndarray
    vstar_norm: float


class Operators:
    """Mesh, assembled operators and lazily built step factorizations."""

    def __init__(self, mesh: Mesh, model: ProblemModel, tau: float, beta: float = 1.0, gamma: float = 1.0):
        self.mesh = mesh
        self.model = model
        self.tau = tau
        self.beta = beta
        self.gamma = gamma
        self.mass = assemble_mass(mesh)
        self.stiffness = assemble_stiffness(mesh)
        self._factors: dict[float, Factorization] = {}

    def factor(self, inv_relax: float) -> Factorization:
        """Factorization of ``inv_relax * M + tau K``; shared when beta == gamma."""
        if inv_relax not in self._factors:
            self._factors[inv_relax] = factorize(inv_relax * self.mass + self.tau * self.stiffness)
        return self._factors[inv_relax]

    @property
    def factorizations(self) -> dict[float, Factorization]:
        return dict(self._factors)

    @cached_property
    def fprime_boundary(self) -> float:
        return float(eval_fprime(self.model, 0.0))


def build_operators(config: RunConfig, mesh: Mesh | None = None) -> Operators:
    mesh = build_mesh(config.dim, config.M) if mesh is None else mesh
    return Operators(mesh, get_model(config.model), config.tau, config.beta, config.gamma)


def initial_state(config: RunConfig, ops: Operators) -> SchemeState:
    u0, v0 = get_initial(config.u0, config.dim), get_initial(config.v0, config.dim)
    if config.normalize_v0:
        U0, V0 = initial_fields(u0, v0, ops.mesh, ops.mass, ops.stiffness)
    else:
        U0 = elliptic_projection(u0, ops.mesh, ops.stiffness)
        V0 = elliptic_projection(v0, ops.mesh, ops.stiffness)
    return SchemeState(0, U0, V0, V0.copy(), l2_norm(ops.mass, V0))


def step_u(state: SchemeState, ops: Operators, config: RunConfig) -> np.ndarray:
    tau = config.tau
    U, V = state.U, state.V
    MV = ops.mass @ V
    KV = ops.stiffness @ V
    F = eval_f(ops.model, U)
    rhs = (ops.mass @ U) / config.beta + tau * (ops.mass @ F - 2.0 * float(F @ MV) * MV)
    return solve_rank_one(ops.factor(1.0 / config.beta), MV, KV, -2.0 * tau, rhs)


def _projection_term(G, V, MV, U, ops, config):
    """``(f'(u) v, v)``; the inconsistent variant exists to show the overlap identity depends on it."""
    if config.quadrature == "nodal":
        return float(G @ MV)
    w = ops.mesh.to_full(eval_fprime(ops.model, U), ops.fprime_boundary)
    return float(V @ (assemble_weighted_mass(ops.mesh, w) @ V))


def step_v(state: SchemeState, ops: Operators, config: RunConfig) -> np.ndarray:
    tau = config.tau
    U, V = state.U, state.V
    MV = ops.mass @ V
    KV = ops.stiffness @ V
    G = eval_fprime(ops.model, U) * V
    rhs = MV / config.gamma + tau * (ops.mass @ G - _projection_term(G, V, MV, U, ops, config) * MV)
    return solve_rank_one(ops.factor(1.0 / config.gamma), MV, KV, -tau, rhs)


def retract(Vstar: np.ndarray, mass) -> tuple[np.ndarray, float]:
    return normalize(Vstar, mass)


@dataclass
class StepDiagnostics:
    """Per-step monitors, one entry per completed step ``n = 1..N``."""

    vstar_norm: list = field(default_factory=list)
    overlap: list = field(default_factory=list)
    increment_identity: list = field(default_factory=list)
    grad_u_sq: list = field(default_factory=list)
    grad_v_sq: list = field(default_factory=list)
    u_sup: list = field(default_factory=list)

    def record(self, prev: SchemeState, new: SchemeState, ops: Operators):
        MVprev = ops.mass @ prev.V
        d = new.Vstar - prev.V
        self.vstar_norm.append(new.vstar_norm)
        self.overlap.append(float(new.Vstar @ MVprev))
        self.increment_identity.append(float(d @ (ops.mass @ d)) - (new.vstar_norm**2 - 1.0))
        self.grad_u_sq.append(float(new.U @ (ops.stiffness @ new.U)))
        self.grad_v_sq.append(float(new.V @ (ops.stiffness @ new.V)))
        self.u_sup.append(float(np.max(np.abs(new.U), initial=0.0)))

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(v, dtype=float) for k, v in self.__dict__.items()}


def advance(state: SchemeState, ops: Operators, config: RunConfig) -> SchemeState:
    """One full step: u-update with the lagged direction, v*-update, retraction."""
    U = step_u(state, ops, config)
    Vstar = step_v(state, ops, config)
    if not np.all(np.isfinite(U)) or np.max(np.abs(U), initial=0.0) > config.blowup_threshold:
        raise BlowUpError(f"|U|_inf exceeded {config.blowup_threshold:g}")
    V, norm = retract(Vstar, ops.mass)
    if config.quadrature == "nodal":
        dev = abs(float(Vstar @ (ops.mass @ state.V)) - 1.0)
        if dev > config.overlap_tol:
            raise IdentityViolationError(f"(V*, V_prev) deviates from 1 by {dev:.3e}")
    return SchemeState(state.n + 1, U, V, Vstar, norm)


def iterate(config: RunConfig, ops: Operators | None = None, state: SchemeState | None = None) -> Iterator[SchemeState]:
    """Yield the states ``n = 0..N`` in order."""
    ops = build_operators(config) if ops is None else ops
    state = initial_state(config, ops) if state is None else state
    yield state
    while state.n < config.N:
        try:
            state = advance(state, ops, config)
        except SaddlescapeError as exc:
            raise StepError(state.n + 1, exc) from exc
        yield state


@dataclass
class RunResult:
    config: RunConfig
    mesh: Mesh
    initial: SchemeState
    final: SchemeState
    diagnostics: dict[str, np.ndarray]
    snapshots: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    factorizations: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array(sorted(self.snapshots)) * self.config.tau


def run(config: RunConfig, snapshot_steps=None, ops: Operators | None = None) -> RunResult:
    """Run all ``N`` steps, recording diagnostics every step.

    Snapshots ``(U, V)`` are kept at multiples of ``config.snapshot_every``
    and at any step listed in ``snapshot_steps``.
    """
    ops = build_operators(config) if ops is None else ops
    wanted = set(snapshot_steps or ())
    every = config.snapshot_every
    diag = StepDiagnostics()
    snaps = {}
    prev = initial = None
    for state in iterate(config, ops):
        if prev is None:
            initial = state
        else:
            diag.record(prev, state, ops)
        if state.n in wanted or (every and state.n % every == 0):
            snaps[state.n] = (state.U, state.V)
        prev = state
    log.debug("run finished: %d steps on %dD mesh M=%d", config.N, config.dim, config.M)
    return RunResult(config, ops.mesh, initial, prev, diag.as_arrays(), snaps, len(ops.factorizations))
