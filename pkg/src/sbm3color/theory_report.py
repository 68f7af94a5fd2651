"""The verify-theory check battery.

Every closed-form identity of the type-space algebra is evaluated
numerically on product states built from degree-profile trajectories, and
reported as {check_name, max_abs_error, threshold, pass}.  A deliberately
tampered state is included as a negative control: its residual must be
large, or the battery has lost its teeth.
"""

from __future__ import annotations

import numpy as np

from . import ode, typespace as tsp

STATE_D = 4.03
STATE_ALPHA = 15.0
MC_DELTA = 4
MC_D = 2.5
MC_ALPHA = 2.0


def _states(delta: int, count: int = 4):
    """Positive (u, w) profiles from the reference trajectory at this delta."""
    traj = ode.integrate(STATE_D, STATE_ALPHA, delta, with_report=False)
    idx = np.linspace(0, len(traj.t) // 2, count).astype(int)
    out = []
    for j in idx:
        u, w = traj.u[j], traj.w[j]
        if u.sum() > 0 and ode.lambda_of(u, w) < 0.9:
            out.append((u, w))
    return out


def _chain_rule_expected(fs, u, w, alpha):
    """Time derivative implied by differentiating the product form."""
    import math

    du_s, dw_s = ode.rhs(u, w, alpha)
    ts = fs.ts
    q = tsp.colour_weight(fs.beta)
    base = np.empty(ts.size)
    for k, (s, d1, d2, d3) in enumerate(ts.types):
        total = d1 + d2 + d3
        multi = math.factorial(total) // (
            math.factorial(d1) * math.factorial(d2) * math.factorial(d3)
        )
        base[k] = multi * q[s - 1, 0] ** d1 * q[s - 1, 1] ** d2 * q[s - 1, 2] ** d3
    exp_w = dw_s[ts.deg] / 3.0 * base
    exp_u = du_s[ts.deg] / 9.0 * base
    return exp_w, exp_u


def _residual(fs, u, w, alpha) -> float:
    dw_full, du_full = tsp.full_rhs(fs, alpha)
    exp_w, exp_u = _chain_rule_expected(fs, u, w, alpha)
    err = float(np.abs(dw_full - exp_w).max())
    for c in (1, 2, 3):
        err = max(err, float(np.abs(du_full[c - 1] - exp_u).max()))
    return err


def run_all(delta: int, alphas, betas, mc_trials: int = 10**6) -> list[dict]:
    checks: list[dict] = []

    def record(name, err, threshold, flipped=False):
        ok = (err > threshold) if flipped else (err < threshold)
        checks.append(
            {"check_name": name, "max_abs_error": float(err),
             "threshold": float(threshold), "pass": bool(ok)}
        )

    states = _states(delta)
    ts = tsp.TypeSpace(delta)

    for beta in betas:
        full_states = [(u, w, tsp.flat_white_expand(u, w, beta, ts=ts)) for u, w in states]

        err = max(
            float(np.abs(fs.small_u() - u).max()) + float(np.abs(fs.small_w() - w).max())
            for u, w, fs in full_states
        )
        record(f"marginalisation[beta={beta}]", err, 1e-12)

        for alpha in alphas:
            err = max(_residual(fs, u, w, alpha) for u, w, fs in full_states)
            record(f"flat_white_residual[alpha={alpha},beta={beta}]", err, 1e-8)

            err = 0.0
            for _, _, fs in full_states:
                kt = tsp.kappa_linear(fs, alpha)
                err = max(err, float(np.abs(kt.by_colour - tsp.kappa_closed_form(fs, alpha)).max()))
            record(f"kappa_linear_vs_closed_form[alpha={alpha},beta={beta}]", err, 1e-8)

        alpha0 = alphas[0]
        err = 0.0
        for _, _, fs in full_states:
            mv, me = tsp.factor_matrices(fs, alpha0)
            radius = tsp.spectral_radius(mv @ me)
            err = max(err, abs(radius - tsp.flat_white_lambda(fs)))
        record(f"edge_product_radius[beta={beta}]", err, 1e-10)

        err = 0.0
        for _, _, fs in full_states:
            sysm = tsp.assemble_system(fs, alpha0)
            mv, me = tsp.factor_matrices(fs, alpha0)
            err = max(err, float(np.abs(me @ mv - sysm.M).max()))
        record(f"m_factorisation[beta={beta}]", err, 1e-12)

        err = 0.0
        for _, _, fs in full_states:
            sysm = tsp.assemble_system(fs, alpha0)
            mv, me = tsp.factor_matrices(fs, alpha0)
            phat = mv @ sysm.p
            lam = tsp.flat_white_lambda(fs)
            err = max(err, float(np.abs(mv @ (me @ phat) - lam * phat).max()))
        record(f"phat_eigenvector[beta={beta}]", err, 1e-12)

        err = 0.0
        for u, w, fs in full_states:
            cm = tsp.cleanup_matrix(u, w, beta)
            i = np.arange(delta + 1, dtype=float)
            m1 = float(i @ (u + w))
            err = max(err, abs(cm.radius - 1.0 - ode.gamma_of(u, w) / m1))
        record(f"cleanup_radius_identity[beta={beta}]", err, 1e-12)

        err = 0.0
        for alpha in alphas:
            for u, w, fs in full_states:
                err = max(
                    err,
                    abs(tsp.kappa_scalar(fs, alpha) - ode.kappa_of(u, w, alpha)),
                )
        record(f"kappa_scalar_identity[beta={beta}]", err, 1e-12)

    # Monte-Carlo oracle at the dedicated small-delta state
    st = ode.initial_state(MC_D, MC_DELTA)
    for beta in betas:
        fs = tsp.flat_white_expand(st.u, st.w, beta)
        kt = tsp.kappa_linear(fs, MC_ALPHA)
        oracle = tsp.branching_mc_oracle(fs, MC_ALPHA, trials=mc_trials, seed=0)
        sig = np.abs(oracle.mean - kt.by_colour) / np.where(
            oracle.stderr > 0, oracle.stderr, np.inf
        )
        record(f"branching_mc[beta={beta},trials={mc_trials}]", float(sig.max()), 4.0)

    # negative control: a 1e-3 perturbation must blow the residual up
    u, w, fs = [(u, w, tsp.flat_white_expand(u, w, betas[-1], ts=ts)) for u, w in states[:1]][0]
    tampered = tsp.FullTypeState(ts=fs.ts, beta=fs.beta, w=fs.w.copy(), u=fs.u.copy())
    tampered.w[ts.size // 2] += 1e-3
    record(
        "negative_control_tampered_state",
        _residual(tampered, u, w, alphas[0]),
        1e-4,
        flipped=True,
    )
    return checks
