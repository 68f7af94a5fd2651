"""Command-line harness for the experiments.

Subcommands: gen, run-am, ode, dmax-scan, lambda-compare, agreement-scan,
bad-vertices, verify-theory.  Flag values can also come from a JSON config
file (--config); explicit flags win.  Outputs are UTF-8 CSV with LF line
endings and a '#'-prefixed config echo, or JSON for summaries and reports.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .errors import ParameterError


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if str(x).strip() != ""]


def _parse_float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if str(x).strip() != ""]


def _parse_seeds(text) -> list[int]:
    """'0:5' -> [0..4]; '3,7,9' -> [3, 7, 9]; plain int -> [int]."""
    if isinstance(text, list):
        return [int(x) for x in text]
    text = str(text)
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi)))
    return _parse_int_list(text)


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=int)
    p.add_argument("--seeds")
    p.add_argument("--runs", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--config", help="JSON file with defaults for any flag")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sbm3color")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a graph and write the edge-list text format")
    _add_shared(p)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("run-am", help="run the colouring algorithm over seeds")
    _add_shared(p)
    p.add_argument("--mode", choices=["full", "truncated"])
    p.add_argument("--sample-every", type=int)
    p.add_argument("--trace-out")

    p = sub.add_parser("ode", help="integrate the degree-profile system")
    _add_shared(p)
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--abs-tol", type=float)
    p.add_argument("--report-out")
    p.add_argument("--full-state", action="store_true")

    p = sub.add_parser("dmax-scan", help="d_max(alpha) over an alpha grid")
    _add_shared(p)
    p.add_argument("--alphas")
    p.add_argument("--d-lo", type=float)
    p.add_argument("--d-hi", type=float)
    p.add_argument("--resolution", type=float)

    p = sub.add_parser("lambda-compare", help="ODE lambda/gamma vs the empirical trace")
    _add_shared(p)
    p.add_argument("--out-ode")
    p.add_argument("--out-emp")
    p.add_argument("--summary-out")

    p = sub.add_parser("agreement-scan", help="agreement vs n on the full-graph runs")
    _add_shared(p)
    p.add_argument("--n-list")

    p = sub.add_parser("bad-vertices", help="per-run bad-vertex counts and summary")
    _add_shared(p)
    p.add_argument("--summary-out")

    p = sub.add_parser("verify-theory", help="run every closed-form identity check")
    _add_shared(p)
    p.add_argument("--delta-small", type=int)
    p.add_argument("--alphas")
    p.add_argument("--betas")
    p.add_argument("--mc-trials", type=int)
    return ap


def _value(args, config, key, default=None):
    v = getattr(args, key.replace("-", "_"), None)
    if v is not None:
        return v
    if key in config:
        return config[key]
    return default


def _require(args, config, key):
    v = _value(args, config, key)
    if v is None:
        raise ParameterError(f"missing required option --{key}")
    return v


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)

    def val(key, default=None):
        return _value(args, config, key, default)

    def req(key):
        return _require(args, config, key)

    cmd = args.command
    workers = int(val("workers", 1))
    try:
        if cmd == "gen":
            experiments.cmd_gen(
                int(req("n")), float(req("d")), float(req("beta")),
                int(val("seed", 0)), req("out"),
            )
        elif cmd == "run-am":
            seeds = _parse_seeds(val("seeds", "0:1"))
            experiments.cmd_run_am(
                int(req("n")), float(req("d")), float(req("beta")), float(req("alpha")),
                seeds, req("out"), mode=val("mode", "full"),
                delta=(int(val("delta")) if val("delta") is not None else None),
                sample_every=(int(val("sample-every")) if val("sample-every") is not None else None),
                trace_out=val("trace-out"), workers=workers,
            )
        elif cmd == "ode":
            experiments.cmd_ode(
                float(req("d")), float(req("alpha")), int(req("delta")), req("out"),
                rel_tol=float(val("rel-tol", experiments.ode.DEFAULT_REL_TOL)),
                abs_tol=float(val("abs-tol", experiments.ode.DEFAULT_ABS_TOL)),
                report_out=val("report-out"), full_state=bool(val("full-state", False)),
            )
        elif cmd == "dmax-scan":
            alphas = _parse_float_list(req("alphas"))
            experiments.cmd_dmax_scan(
                alphas, int(req("delta")), req("out"),
                d_lo=float(val("d-lo", 1.5)), d_hi=float(val("d-hi", 8.0)),
                resolution=float(val("resolution", 1e-3)), workers=workers,
            )
        elif cmd == "lambda-compare":
            seeds = _parse_seeds(val("seeds", "0:5"))
            experiments.cmd_lambda_compare(
                int(req("n")), seeds, float(req("d")), float(req("alpha")),
                float(req("beta")), int(req("delta")),
                req("out-ode"), req("out-emp"), summary_out=val("summary-out"),
                workers=workers,
            )
        elif cmd == "agreement-scan":
            experiments.cmd_agreement_scan(
                _parse_int_list(req("n-list")), int(req("runs")), float(req("d")),
                float(req("alpha")), float(req("beta")), req("out"), workers=workers,
            )
        elif cmd == "bad-vertices":
            experiments.cmd_bad_vertices(
                int(req("n")), int(req("runs")), float(req("d")), float(req("alpha")),
                float(req("beta")), req("out"), summary_out=val("summary-out"),
                workers=workers,
            )
        elif cmd == "verify-theory":
            checks = experiments.cmd_verify_theory(
                int(val("delta-small", 5)),
                _parse_float_list(val("alphas", "1,2,15")),
                _parse_float_list(val("betas", "0,2,6")),
                val("out"), mc_trials=int(val("mc-trials", 10**6)), workers=workers,
            )
            failed = [c for c in checks if not c["pass"]]
            for c in checks:
                flag = "PASS" if c["pass"] else "FAIL"
                print(f"[{flag}] {c['check_name']}: err={c['max_abs_error']:.3e} "
                      f"threshold={c['threshold']:.1e}")
            if failed:
                return 1
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
