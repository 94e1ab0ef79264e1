"""Where in time the temporal error of Example 1 is made.

Runs a reference and one coarse step side by side on a moderate mesh and
prints ``||u_ref(t_n) - u^n||`` and the same for v at a few times, together
with ``||u||``. The maximum sits in the early transient, which is what sets
the size of Err(u) and Err(v).

    python3 scripts/error_profile.py [--M 1000] [--tau 4e-3] [--u0 sin]
"""
import argparse
import math

from saddlescape.dynamics import RunConfig, build_operators, iterate
from saddlescape.harness import _step_ratio


def profile(M: int, tau: float, ref_tau: float, u0: str, T: float):
    ref_cfg = RunConfig.from_final_time(T, ref_tau, M=M, u0=u0)
    cfg = RunConfig.from_final_time(T, tau, M=M, u0=u0)
    k = _step_ratio(tau, ref_tau)
    ops = build_operators(cfg)
    coarse = iterate(cfg, ops)
    state = next(coarse)
    Mm = ops.mass
    out = []
    for ref in iterate(ref_cfg):
        if ref.n == 0 or ref.n % k:
            continue
        state = next(coarse)
        eu, ev = ref.U - state.U, ref.V - state.V
        out.append((ref.n * ref_tau, math.sqrt(eu @ (Mm @ eu)), math.sqrt(ev @ (Mm @ ev)), math.sqrt(ref.U @ (Mm @ ref.U))))
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--M", type=int, default=1000)
    ap.add_argument("--tau", type=float, default=4e-3)
    ap.add_argument("--ref-tau", type=float, default=1e-4)
    ap.add_argument("--u0", default="sin")
    ap.add_argument("--T", type=float, default=2.0)
    args = ap.parse_args()
    rows = profile(args.M, args.tau, args.ref_tau, args.u0, args.T)
    every = max(1, len(rows) // 25)
    print(f"{'t':>7} {'e_u':>10} {'e_v':>10} {'||u||':>8}")
    for r in rows[::every]:
        print(f"{r[0]:7.3f} {r[1]:10.3e} {r[2]:10.3e} {r[3]:8.3f}")
    peak = max(rows, key=lambda r: r[1])
    print(f"max e_u {peak[1]:.3e} at t={peak[0]:.3f}; max e_v {max(r[2] for r in rows):.3e}")
