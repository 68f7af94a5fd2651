"""Figure 2: numerical lambda/gamma curves against the empirical averages,
with the t* marker and a zoom on the lambda peak.

Usage: python fig_lambda.py <ode.csv> <empirical.csv> <report.json> <output.png>
"""

import sys

import matplotlib.pyplot as plt

from common import read_report, read_table, save, warn_empty


def render(ode_csv, emp_csv, report_json, out_path) -> None:
    ode = read_table(ode_csv, ["t", "lambda", "gamma"])
    emp = read_table(emp_csv, ["t", "lambda_emp", "gamma_emp"])
    report = read_report(report_json, ["t_star"])
    fig, (ax, zoom) = plt.subplots(1, 2, figsize=(11.0, 4.2))
    if not ode["t"]:
        warn_empty(ode_csv)
    ax.plot(ode["t"], ode["lambda"], color="black", label="lambda (numerical)")
    ax.plot(emp["t"], emp["lambda_emp"], color="orange", linestyle=":",
            label="lambda (runs)")
    ax.plot(ode["t"], ode["gamma"], color="magenta", label="gamma (numerical)")
    ax.plot(emp["t"], emp["gamma_emp"], color="blue", linestyle=":",
            label="gamma (runs)")
    if report["t_star"] is not None:
        for panel in (ax, zoom):
            panel.axvline(report["t_star"], color="grey", linestyle="--", linewidth=1)
    ax.set_xlabel("t")
    ax.legend(loc="upper right", fontsize=8)

    if ode["t"]:
        peak = max(range(len(ode["t"])), key=lambda j: ode["lambda"][j])
        t_pk = ode["t"][peak]
        width = max(ode["t"][-1] * 0.08, 1e-6)
        zoom.plot(ode["t"], ode["lambda"], color="black")
        zoom.plot(emp["t"], emp["lambda_emp"], color="orange", linestyle=":")
        zoom.set_xlim(t_pk - width, t_pk + width)
        lo = min(ode["lambda"][peak] - 0.05, 1.0)
        zoom.set_ylim(lo, max(1.005, ode["lambda"][peak] + 0.01))
        zoom.axhline(1.0, color="grey", linewidth=0.8)
    zoom.set_xlabel("t (peak zoom)")
    save(fig, out_path)


if __name__ == "__main__":
    render(sys.argv[1], sys.argv[2], sys.argv[3], sys.argv[4])
