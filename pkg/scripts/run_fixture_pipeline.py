#!/usr/bin/env python3
"""End-to-end demo: run every pipeline stage over the bundled fixture corpus.

Builds the dataset under --data-dir (default ./data-demo) with the offline
deterministic judges, prints per-stage summaries, and leaves reports and plots
under <data-dir>/reports. Start the review service afterwards with:

    ipocorpus serve --data-dir data-demo
"""
from __future__ import annotations

import argparse
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]

STAGES = (
    ["fetch", "--from-dir", str(REPO / "fixtures" / "corpus")],
    ["parse"],
    ["extract-sections"],
    ["validate"],
    ["extract-images"],
    ["classify-images"],
    ["verify-charts"],
    ["extract-features"],
    ["rate-charts"],
    ["stats", "--plots"],
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default="data-demo", type=Path)
    args = parser.parse_args()

    for stage in STAGES:
        command = [sys.executable, "-m", "ipocorpus.cli", stage[0], "--data-dir", str(args.data_dir), *stage[1:]]
        print(f"$ ipocorpus {' '.join(stage)}")
        result = subprocess.run(command, cwd=REPO)
        if result.returncode != 0:
            return result.returncode
    print(f"\nreports: {args.data_dir}/reports")
    print(f"review service: ipocorpus serve --data-dir {args.data_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
