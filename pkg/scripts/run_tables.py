"""Refinement studies for the two accuracy tables.

    python3 scripts/run_tables.py            # table1 and table2, both ladders each
    python3 scripts/run_tables.py table1

Each table config runs its temporal and spatial ladders against one shared
reference pass (about four minutes per table on one core). CSVs go to
results/<config>/table-{temporal,spatial}.csv.
"""
import sys
from pathlib import Path

from saddlescape.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    for name in sys.argv[1:] or ["table1", "table2"]:
        print(f"== {name}")
        code = main(["converge", str(ROOT / "configs" / f"{name}.cfg"), "--out", str(ROOT / "results" / name)])
        if code:
            raise SystemExit(code)
