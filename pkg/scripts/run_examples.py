"""Run the shipped single-run experiments and print their headline numbers.

    python3 scripts/run_examples.py               # Example 1 (a)-(d) and Example 2 (a), (b)
    python3 scripts/run_examples.py example1a     # any subset of config names

Outputs land in results/<config>/ as written by ``saddlescape simulate``.
"""
import json
import sys
from pathlib import Path

from saddlescape.cli import main

ROOT = Path(__file__).resolve().parents[1]
DEFAULT = ["example1a", "example1b", "example1c", "example1d", "example2a", "example2b"]


def run_one(name: str) -> dict:
    out = ROOT / "results" / name
    code = main(["simulate", str(ROOT / "configs" / f"{name}.cfg"), "--out", str(out)])
    if code:
        raise SystemExit(code)
    return json.loads((out / "summary.json").read_text())


if __name__ == "__main__":
    names = sys.argv[1:] or DEFAULT
    print(f"{'config':<16} {'||F||_inf':>10} {'lambda_1':>10} {'lambda_2':>10} {'index':>5} {'drift':>9} {'seconds':>8}")
    for name in names:
        s = run_one(name)
        lam = s.get("eigenvalues", [float("nan")] * 2)
        print(f"{name:<16} {s['final_residual_sup']:10.3e} {lam[0]:10.4f} {lam[1]:10.4f} "
              f"{s.get('index', -1):5d} {s['norm_drift_max']:9.2e} {s['wallclock_s']:8.1f}")
