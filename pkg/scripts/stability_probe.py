"""Why the coarsest temporal row diverges.

Early in Example 1(a) the iterate is close to a state where the direction
update is nearly a scalar recursion. Freezing U and V, the v-step applied to
a perturbation along V is multiplied by ``(1 - tau p) / (1 - tau g)`` with
``p = (f'(u) v, v)`` and ``g = ||grad v||^2``. Once ``p`` is large the factor
drops below -1 for ``tau > 2 / (p + g)`` and the step alternates and grows.

This script tracks ``p``, ``g`` and the implied step limit along a fine run
and then runs the scheme at the requested steps to show where it breaks.

    python3 scripts/stability_probe.py [--M 2000]
"""
import argparse

import numpy as np

from saddlescape.dynamics import RunConfig, build_operators, iterate
from saddlescape.errors import StepError
from saddlescape.model import eval_fprime


def frozen_limits(M: int, T: float = 1.0, tau: float = 1e-3):
    cfg = RunConfig.from_final_time(T, tau, M=M)
    ops = build_operators(cfg)
    rows = []
    for s in iterate(cfg, ops):
        if s.n % 50:
            continue
        G = eval_fprime(ops.model, s.U) * s.V
        p = float(G @ (ops.mass @ s.V))
        g = float(s.V @ (ops.stiffness @ s.V))
        rows.append((s.n * tau, p, g, 2.0 / (p + g) if p + g > 0 else np.inf))
    return rows


def try_steps(M: int, taus):
    for tau in taus:
        cfg = RunConfig(M=M, tau=tau, N=int(np.floor(5.0 / tau + 1e-9)))
        try:
            for s in iterate(cfg):
                pass
            print(f"tau={tau:g}: completed {cfg.N} steps, max|U| {np.abs(s.U).max():.3f}")
        except StepError as exc:
            print(f"tau={tau:g}: {exc.category} at step {exc.step} (t={exc.step * tau:.3f})")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--M", type=int, default=2000)
    args = ap.parse_args()
    limits = frozen_limits(args.M)
    print(f"{'t':>6} {'p':>10} {'g':>10} {'2/(p+g)':>10}")
    for t, p, g, lim in limits:
        print(f"{t:6.2f} {p:10.3f} {g:10.3f} {lim:10.5f}")
    print(f"smallest frozen step limit: {min(r[3] for r in limits):.5f}")
    try_steps(args.M, (1.6e-2, 1.2e-2, 1e-2, 8e-3))
