"""Closed registries of nonlinearities and initial data."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import elliptic_projection, l2_norm
from .errors import BlowUpError, ConfigurationError, DegenerateDirectionError
from .mesh import Mesh

__all__ = [
    "ProblemModel",
    "InitialData",
    "MODELS",
    "INITIAL_CONDITIONS",
    "get_model",
    "get_initial",
    "eval_f",
    "eval_fprime",
    "initial_fields",
    "normalize",
]


@dataclass(frozen=True)
class ProblemModel:
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]
    label: str = ""


MODELS: dict[str, ProblemModel] = {
    m.name: m
    for m in (
        ProblemModel("quartic", lambda s: s**4 - 10.0 * s**2, lambda s: 4.0 * s**3 - 20.0 * s, "u^4 - 10u^2"),
        ProblemModel("cubic", lambda s: s**3, lambda s: 3.0 * s**2, "u^3"),
        ProblemModel("quintic", lambda s: s**5, lambda s: 5.0 * s**4, "u^5"),
        # heat flow; test-only
        ProblemModel("zero", lambda s: 0.0 * s, lambda s: 0.0 * s, "0"),
    )
}


@dataclass(frozen=True)
class InitialData:
    name: str
    dim: int
    func: Callable[..., np.ndarray]
    label: str = ""

    def __call__(self, *x):
        return self.func(*x)


def _sqrt_bump(x):
    return 0.5 * np.sqrt(np.maximum(x, 0.0)) * (np.pi - x)


INITIAL_CONDITIONS: dict[str, InitialData] = {
    d.name: d
    for d in (
        InitialData("sin", 1, lambda x: np.sin(x), "sin x"),
        InitialData("sqrt_bump", 1, _sqrt_bump, "0.5 sqrt(x)(pi - x)"),
        InitialData("sin_1_3_5", 1, lambda x: np.sin(x) + 3 * np.sin(3 * x) + np.sin(5 * x),
                    "sin x + 3 sin 3x + sin 5x"),
        InitialData("neg_sin_2_4_6", 1, lambda x: -np.sin(2 * x) - 4 * np.sin(4 * x) - np.sin(6 * x),
                    "-sin 2x - 4 sin 4x - sin 6x"),
        InitialData("sin_sin", 2, lambda x1, x2: np.sin(x1) * np.sin(x2), "sin x1 sin x2"),
        InitialData("tan_sin4", 2, lambda x1, x2: x1 * (np.pi - x2) * np.tan((x1 - np.pi) / 4) * np.sin(4 * x2),
                    "x1 (pi - x2) tan((x1 - pi)/4) sin 4x2"),
        InitialData("zero", 1, lambda *x: 0.0 * x[0], "0"),
        InitialData("zero2", 2, lambda *x: 0.0 * x[0], "0"),
    )
}


def get_model(name: str) -> ProblemModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ConfigurationError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def get_initial(name: str, dim: int | None = None) -> InitialData:
    try:
        data = INITIAL_CONDITIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown initial condition {name!r}; choose from {sorted(INITIAL_CONDITIONS)}"
        ) from None
    if dim is not None and data.dim != dim:
        raise ConfigurationError(f"initial condition {name!r} is {data.dim}D, mesh is {dim}D")
    return data


def _checked(values, what):
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise BlowUpError(f"non-finite {what}; the state has left any bounded region")
    return values


def eval_f(model: ProblemModel, s):
    with np.errstate(over="ignore", invalid="ignore"):
        return _checked(model.f(np.asarray(s, dtype=float)), f"f({model.name})")


def eval_fprime(model: ProblemModel, s):
    with np.errstate(over="ignore", invalid="ignore"):
        return _checked(model.fprime(np.asarray(s, dtype=float)), f"f'({model.name})")


def normalize(V: np.ndarray, mass) -> tuple[np.ndarray, float]:
    norm = l2_norm(mass, V)
    if not norm > 1e-12:
        raise DegenerateDirectionError(f"direction has L2 norm {norm:.3e}, cannot normalize")
    return V / norm, norm


def initial_fields(u0, v0, mesh: Mesh, mass, stiffness) -> tuple[np.ndarray, np.ndarray]:
    """Projected initial state ``(P u0, P v0 / ||P v0||)``."""
    U0 = elliptic_projection(u0, mesh, stiffness)
    V0, _ = normalize(elliptic_projection(v0, mesh, stiffness), mass)
    return U0, V0
