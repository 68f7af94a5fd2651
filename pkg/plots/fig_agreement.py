"""Figure 3: mean agreement against n on log-log axes with the -1/2 guide.

Usage: python fig_agreement.py <agreement_scan.csv> <output.png>
"""

import sys
from collections import defaultdict

import matplotlib.pyplot as plt

from common import GUIDE_SLOPE, read_table, save, warn_empty


def render(csv_path, out_path) -> None:
    cols = read_table(csv_path, ["n", "agreement"])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    by_n = defaultdict(list)
    for n, a in zip(cols["n"], cols["agreement"]):
        by_n[int(n)].append(a)
    if by_n:
        ns = sorted(by_n)
        means = [sum(by_n[n]) / len(by_n[n]) for n in ns]
        ax.plot(ns, means, color="tab:blue", marker="o", label="mean agreement")
        # guide line with slope -1/2 anchored at the first point
        guide = [means[0] * (n / ns[0]) ** GUIDE_SLOPE for n in ns]
        ax.plot(ns, guide, color="orange", linestyle=":", label="slope -1/2 guide")
    else:
        warn_empty(csv_path)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("agreement with the planted colouring")
    ax.legend()
    save(fig, out_path)


if __name__ == "__main__":
    render(sys.argv[1], sys.argv[2])
