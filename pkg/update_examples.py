"""Regenerate the checked-in golden result tables.

Run `python update_examples.py` from the repository root to rebuild the CSV
files in the ``golden`` directory, including the CPMG-4 closed-form audit.
"""
from __future__ import annotations

from pathlib import Path

from example_runs import EXAMPLE_RUNS, GOLDEN_DIR


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    for example in EXAMPLE_RUNS:
        path = GOLDEN_DIR / example.filename
        path.write_text(example.render(), encoding="utf-8")
        print(f"Wrote {path.relative_to(Path.cwd())}")


if __name__ == "__main__":
    main()
