#!/usr/bin/env python3
"""Run every recipe in recipes/ through the CLI and print the derived scalars.

Envelopes (and CSV projections) land in out/recipes/.  Exit status is
non-zero if any recipe fails.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from ringlink.cli import main as cli_main

REPO = Path(__file__).resolve().parent.parent
RECIPES = sorted((REPO / "recipes").glob("*.json"))
OUT_DIR = REPO / "out" / "recipes"


def run() -> int:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    failures = 0
    for recipe in RECIPES:
        out = OUT_DIR / f"{recipe.stem}_envelope.json"
        status = cli_main(["run", "--config", str(recipe), "--out", str(out), "--csv"])
        if status != 0:
            print(f"{recipe.name}: FAILED (exit {status})")
            failures += 1
            continue
        envelope = json.loads(out.read_text())
        derived = ", ".join(f"{k}={_fmt(v)}" for k, v in envelope["derived"].items())
        print(f"{recipe.name} [{envelope['experiment']}]: {derived or 'no derived scalars'}")
    return 1 if failures else 0


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


if __name__ == "__main__":
    sys.exit(run())
