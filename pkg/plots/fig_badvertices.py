"""Figure 4: per-run bad-vertex histogram plus the zero-bad fraction.

Usage: python fig_badvertices.py <bad_vertices.csv> <summary.json> <output.png>
"""

import sys

import matplotlib.pyplot as plt

from common import read_report, read_table, save, warn_empty


def render(csv_path, summary_json, out_path) -> None:
    cols = read_table(csv_path, ["seed", "bad"])
    summary = read_report(summary_json, ["mean_bad", "frac_zero_bad"])
    fig, (left, right) = plt.subplots(1, 2, figsize=(10.4, 4.2))
    bads = [int(b) for b in cols["bad"]]
    if bads:
        left.hist(bads, bins=range(0, max(bads) + 2), color="tab:blue",
                  edgecolor="white", align="left")
    else:
        warn_empty(csv_path)
    left.set_xlabel("bad vertices per run")
    left.set_ylabel("runs")

    frac = summary["frac_zero_bad"]
    mean = summary["mean_bad"]
    bars = [frac if frac is not None else 0.0]
    right.bar(["zero-bad fraction"], bars, color="tab:green")
    right.set_ylim(0, 1)
    label = "no data" if mean is None else f"mean bad = {mean:.2f}"
    right.annotate(label, xy=(0.5, 0.9), xycoords="axes fraction", ha="center")
    save(fig, out_path)


if __name__ == "__main__":
    render(sys.argv[1], sys.argv[2], sys.argv[3])
