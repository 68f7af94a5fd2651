"""Figure 1: the d_max(alpha) curve with the 4.03 reference line.

Usage: python fig_dmax.py <dmax_scan.csv> <output.png>
"""

import sys

import matplotlib.pyplot as plt

from common import REFERENCE_LEVEL, read_table, save, warn_empty


def render(csv_path, out_path) -> None:
    cols = read_table(csv_path, ["alpha", "d_max"])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    pairs = [(a, v) for a, v in zip(cols["alpha"], cols["d_max"]) if v >= 0]
    if pairs:
        alphas, values = zip(*sorted(pairs))
        ax.plot(alphas, values, color="black", marker="o", markersize=3, label="d_max(alpha)")
    else:
        warn_empty(csv_path)
    ax.axhline(REFERENCE_LEVEL, color="grey", linestyle=":", linewidth=1,
               label=f"d = {REFERENCE_LEVEL}")
    ax.set_xlabel("selection exponent alpha")
    ax.set_ylabel("largest feasible mean degree d_max")
    ax.legend(loc="lower right")
    save(fig, out_path)


if __name__ == "__main__":
    render(sys.argv[1], sys.argv[2])
