"""Drive all four figure scripts against a results directory.

Usage: python make_figures.py <results_dir> <figures_dir>

Expected inputs in <results_dir> (produced by the CLI):
    dmax_scan.csv
    lambda_ode.csv, lambda_emp.csv, assumption_report.json
    agreement_scan.csv
    bad_vertices.csv, bad_vertices_summary.json
"""

import sys
from pathlib import Path

import fig_agreement
import fig_badvertices
import fig_dmax
import fig_lambda


def main(results_dir: str, figures_dir: str) -> int:
    res = Path(results_dir)
    out = Path(figures_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig_dmax.render(res / "dmax_scan.csv", out / "fig1_dmax.png")
    fig_lambda.render(
        res / "lambda_ode.csv", res / "lambda_emp.csv",
        res / "assumption_report.json", out / "fig2_lambda.png",
    )
    fig_agreement.render(res / "agreement_scan.csv", out / "fig3_agreement.png")
    fig_badvertices.render(
        res / "bad_vertices.csv", res / "bad_vertices_summary.json",
        out / "fig4_badvertices.png",
    )
    print(f"wrote 4 figures (png + svg) to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
