"""Shared plumbing for the figure scripts.

The scripts are renderers only: they read the CSV/JSON files the
experiment harness writes and put the numbers on axes.  Nothing here
recomputes any quantity.  Rendering is deterministic: fixed styles, no
timestamps embedded in the output files.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GUIDE_SLOPE = -0.5  # reference gradient for the agreement scaling figure
REFERENCE_LEVEL = 4.03  # horizontal guide for the d_max figure

SAVEFIG_KW = {"dpi": 150, "metadata": {"Date": None}}
plt.rcParams["svg.hashsalt"] = "sbm3color-figures"


@dataclass
class FigureSpec:
    figure_id: int
    inputs: dict  # name -> path
    output: Path
    styles: dict = field(default_factory=dict)


class SchemaError(SystemExit):
    def __init__(self, path, missing):
        super().__init__(f"{path}: missing required column(s) {missing}")


def read_table(path, required: list[str]) -> dict[str, list[float]]:
    """CSV with one '#' comment line and a header row -> column dict.

    Exits non-zero naming the missing column on schema mismatch; an empty
    table (header only) is returned as empty columns.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    if not rows:
        raise SchemaError(path, required)
    header = rows[0].split(",")
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(path, missing)
    cols: dict[str, list[float]] = {c: [] for c in header}
    for ln in rows[1:]:
        for c, val in zip(header, ln.split(",")):
            cols[c].append(float(val))
    return {c: cols[c] for c in required}


def read_report(path, required: list[str]) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = [k for k in required if k not in payload]
    if missing:
        raise SchemaError(path, missing)
    return payload


def save(fig, output) -> None:
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, **SAVEFIG_KW)
    if output.suffix != ".svg":  # vector twin alongside the raster file
        fig.savefig(output.with_suffix(".svg"), metadata={"Date": None})
    plt.close(fig)


def warn_empty(path) -> None:
    print(f"warning: {path} has no data rows; rendering empty axes", file=sys.stderr)
