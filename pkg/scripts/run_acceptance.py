"""Run the acceptance criteria outside pytest and print one line per criterion.

    python scripts/run_acceptance.py            # all thirteen
    python scripts/run_acceptance.py 1 4 10     # a subset (13 needs all of 1-12)
"""
from __future__ import annotations

import runpy
import sys
from pathlib import Path

if __name__ == "__main__":
    target = Path(__file__).resolve().parents[1] / "tests" / "test_acceptance.py"
    sys.path.insert(0, str(target.parent))
    sys.argv = [str(target)] + sys.argv[1:]
    runpy.run_path(str(target), run_name="__main__")
