"""INI-style run and study configuration files.

A run file::

    [mesh]
    dim = 1
    M = 5000

    [time]
    tau = 1e-3
    T = 5            ; or N = 5000

    [dynamics]
    beta = 1
    gamma = 1

    [problem]
    model = quartic
    u0 = sin
    v0 = sin

    [output]         ; optional
    snapshot_every = 0
    eigenvalues = 2

    [meta]           ; optional, copied into the summary
    label = Example 1(a)
    downscaled = false

A study file replaces ``[mesh]``/``[time]`` with a ``[study]`` section (see
``load_study``).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import RunConfig
from .errors import ConfigParseError, ConfigurationError
from .harness import StudyConfig

__all__ = ["RunSpec", "load_run", "parse_run", "dump_run", "load_study", "parse_study"]

@dataclass
class RunSpec:
    config: RunConfig
    eigenvalues: int = 0
    meta: dict = field(default_factory=dict)


def _parser(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(f"malformed config: {exc}") from exc
    return cp


class _Reader:
    def __init__(self, cp):
        self.cp = cp
        self.missing = []
        self.invalid = []

    def get(self, section, key, conv=str, default=...):
        if not self.cp.has_option(section, key):
            if default is ...:
                self.missing.append(key)
            return None if default is ... else default
        raw = self.cp.get(section, key).strip()
        try:
            return conv(raw)
        except (TypeError, ValueError):
            self.invalid.append(key)
            return None

    def check(self):
        if self.missing or self.invalid:
            parts = []
            if self.missing:
                parts.append("missing keys: " + ", ".join(self.missing))
            if self.invalid:
                parts.append("invalid values for: " + ", ".join(self.invalid))
            raise ConfigParseError("; ".join(parts), self.missing + self.invalid)


def _int(raw):
    val = float(raw)
    if val != int(val):
        raise ValueError(raw)
    return int(val)


def _bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _floats(raw):
    return tuple(float(x) for x in raw.replace(",", " ").split())


def _ints(raw):
    return tuple(_int(x) for x in raw.replace(",", " ").split())


def parse_run(text: str) -> RunSpec:
    cp = _parser(text)
    r = _Reader(cp)
    dim = r.get("mesh", "dim", _int)
    M = r.get("mesh", "M", _int)
    tau = r.get("time", "tau", float)
    N = r.get("time", "N", _int, None)
    T = r.get("time", "T", float, None)
    if N is None and T is None and "N" not in r.invalid and "T" not in r.invalid:
        r.missing.append("N or T")
    beta = r.get("dynamics", "beta", float)
    gamma = r.get("dynamics", "gamma", float)
    model = r.get("problem", "model")
    u0 = r.get("problem", "u0")
    v0 = r.get("problem", "v0")
    snapshot_every = r.get("output", "snapshot_every", _int, 0)
    eigenvalues = r.get("output", "eigenvalues", _int, 0)
    quadrature = r.get("dynamics", "quadrature", str, "nodal")
    normalize_v0 = r.get("dynamics", "normalize_v0", _bool, True)
    r.check()
    if N is None:
        N = int(round(T / tau))
        if abs(N * tau - T) > 1e-9 * max(1.0, T):
            raise ConfigParseError(f"T={T} is not an integer multiple of tau={tau}", ["T", "tau"])
    elif T is not None and abs(N * tau - T) > 1e-9 * max(1.0, T):
        raise ConfigParseError(f"N*tau={N * tau} contradicts T={T}", ["N", "T"])
    meta = dict(cp.items("meta")) if cp.has_section("meta") else {}
    if "downscaled" in meta:
        meta["downscaled"] = _bool(meta["downscaled"])
    try:
        cfg = RunConfig(
            dim=dim, M=M, tau=tau, N=N, beta=beta, gamma=gamma, model=model, u0=u0, v0=v0,
            snapshot_every=snapshot_every, quadrature=quadrature, normalize_v0=normalize_v0,
        )
    except ConfigurationError as exc:
        raise ConfigParseError(str(exc)) from exc
    return RunSpec(cfg, eigenvalues, meta)


def load_run(path) -> RunSpec:
    return parse_run(Path(path).read_text())


def dump_run(spec: RunSpec) -> str:
    """Canonical text form; ``parse_run(dump_run(s))`` reproduces ``s``."""
    c = spec.config
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["mesh"] = {"dim": str(c.dim), "M": str(c.M)}
    cp["time"] = {"tau": repr(c.tau), "N": str(c.N)}
    cp["dynamics"] = {"beta": repr(c.beta), "gamma": repr(c.gamma), "quadrature": c.quadrature,
                      "normalize_v0": str(c.normalize_v0).lower()}
    cp["problem"] = {"model": c.model, "u0": c.u0, "v0": c.v0}
    cp["output"] = {"snapshot_every": str(c.snapshot_every), "eigenvalues": str(spec.eigenvalues)}
    if spec.meta:
        cp["meta"] = {k: (str(v).lower() if isinstance(v, bool) else str(v)) for k, v in spec.meta.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_study(text: str) -> tuple[list[StudyConfig], dict]:
    """Studies declared in ``[study]``; ``kind = both`` yields temporal and spatial."""
    cp = _parser(text)
    r = _Reader(cp)
    kind = r.get("study", "kind")
    T = r.get("study", "T", float, 5.0)
    ref_tau = r.get("study", "ref_tau", float)
    ref_M = r.get("study", "ref_M", _int)
    taus = r.get("study", "taus", _floats, None)
    Ms = r.get("study", "Ms", _ints, None)
    model = r.get("problem", "model")
    u0 = r.get("problem", "u0")
    v0 = r.get("problem", "v0")
    dim = r.get("problem", "dim", _int, 1)
    beta = r.get("dynamics", "beta", float, 1.0)
    gamma = r.get("dynamics", "gamma", float, 1.0)
    r.check()
    kinds = ("temporal", "spatial") if kind == "both" else (kind,)
    need = {"temporal": ("taus", taus), "spatial": ("Ms", Ms)}
    missing = [need[k][0] for k in kinds if k in need and need[k][1] is None]
    if missing:
        raise ConfigParseError("missing keys: " + ", ".join(missing), missing)
    studies = []
    for k in kinds:
        kw = dict(kind=k, model=model, u0=u0, v0=v0, dim=dim, T=T, beta=beta, gamma=gamma,
                  ref_tau=ref_tau, ref_M=ref_M)
        if k == "temporal":
            kw["taus"] = taus
        elif k == "spatial":
            kw["Ms"] = Ms
        try:
            studies.append(StudyConfig(**kw))
        except ConfigurationError as exc:
            raise ConfigParseError(str(exc), ["kind"]) from exc
    meta = dict(cp.items("meta")) if cp.has_section("meta") else {}
    return studies, meta


def load_study(path):
    return parse_study(Path(path).read_text())
