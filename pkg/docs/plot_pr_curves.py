#!/usr/bin/env python3

"""Plot the precision-recall curves written by train-xg and train-scorer.

Usage: python docs/plot_pr_curves.py out/ [--output pr_curves.png]
Needs the `plots` extra (matplotlib).
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd
from loguru import logger

CURVES = {
    "xg_pr_curve.csv": ("xG model", "#2196F3"),
    "scorer_pr_curve.csv": ("Goal-scoring predictor", "#FF9800"),
}


def plot_curves(out_dir: Path, output: Path):
    fig, ax = plt.subplots(figsize=(7, 6))
    plotted = 0
    for filename, (label, color) in CURVES.items():
        path = out_dir / filename
        if not path.is_file():
            logger.warning(f"   ✗ {path} not found, skipping")
            continue
        curve = pd.read_csv(path)
        ax.plot(curve["recall"], curve["precision"], label=label, color=color, linewidth=2)
        plotted += 1

    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.05)
    ax.set_title("Precision-recall curves")
    ax.grid(alpha=0.3)
    if plotted:
        ax.legend(loc="upper right")

    fig.tight_layout()
    fig.savefig(output, dpi=150)
    logger.success(f"✅ {plotted} curve(s) saved to {output}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=Path, help="pipeline output directory")
    parser.add_argument("--output", type=Path, default=Path("pr_curves.png"))
    args = parser.parse_args()
    plot_curves(args.out_dir, args.output)


if __name__ == "__main__":
    main()
