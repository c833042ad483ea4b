"""Write fig2/fig3/fig4a/fig4b CSVs and, if matplotlib is present, PNG plots next to them."""

import argparse
import sys
from pathlib import Path

import numpy as np

from densecode.cli import main


def load(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    cols = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",")
    return cols, data


def plot(out: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for name, logx in (("fig2", False), ("fig3", False), ("fig4a", True), ("fig4b", True)):
        cols, data = load(out / f"{name}.csv")
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for j, c in enumerate(cols[1:], 1):
            ax.plot(data[:, 0], data[:, j], label=c)
        if logx:
            ax.set_xscale("log")
        if name in ("fig2", "fig3"):
            ax.set_xlim(0, 1.5)
        ax.set_xlabel(cols[0])
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out / f"{name}.png", dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("figures"))
    ap.add_argument("--units", choices=("nats", "bits"), default="nats")
    args = ap.parse_args()
    code = main(["figures", "--out", str(args.out), "--units", args.units])
    if code == 0:
        try:
            plot(args.out)
        except ImportError:
            print("matplotlib not available; CSVs only", file=sys.stderr)
    sys.exit(code)
