"""Full type-space algebra for the forced-colouring branching process.

A vertex type is theta = (s, d1, d2, d3): planted colour s and the number
of remaining neighbours of each planted colour, with d1+d2+d3 <= Delta.
States carry densities w_theta (three-colour lists) and u_{c,theta}
(two-colour lists missing colour c).  On top of these the module builds

* the root-type distribution p and the edge table e_{s,s'},
* the offspring-mean matrix M over (colour, type) pairs, its exact
  factorisation M = M^E M^V through 27 edge types,
* the cascade edge-count table kappa_{c,s,s'} via the linear solve
  (I - M) x = p, with a closed form on product ("flat-white") states,
* the full-system time derivatives, which on flat-white states must agree
  with the chain rule through the small system,
* the residual-graph cleanup matrix and the two-type high-degree matrix,
  each with the closed-form radius they are checked against, and
* a Monte-Carlo branching simulation as an independent oracle for kappa.

Everything here is check machinery at small Delta (dense linear algebra is
capped at Delta <= 8); the production dynamics live in the ode module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ode
from .errors import ConvergenceError, DegenerateStateError, DivergenceError, ParameterError
from .poisson import poisson_pmf
from .streams import stream

DENSE_DELTA_CAP = 8


def colour_weight(beta: float) -> np.ndarray:
    """q[s, s'] = exp(-beta 1{s=s'})/(2+exp(-beta)): neighbour-colour law."""
    e = math.exp(-beta)
    q = np.full((3, 3), 1.0 / (2.0 + e))
    np.fill_diagonal(q, e / (2.0 + e))
    return q


class TypeSpace:
    """Dense indexing of {(s, d1, d2, d3): d1+d2+d3 <= delta}."""

    def __init__(self, delta: int):
        if delta < 1:
            raise ParameterError(f"delta must be >= 1, got {delta}")
        self.delta = delta
        types = []
        for s in (1, 2, 3):
            for d1 in range(delta + 1):
                for d2 in range(delta + 1 - d1):
                    for d3 in range(delta + 1 - d1 - d2):
                        types.append((s, d1, d2, d3))
        self.types = types
        self.size = len(types)
        self.index = {t: k for k, t in enumerate(types)}
        self.s_of = np.array([t[0] for t in types], dtype=np.int64)
        self.dvec = np.array([t[1:] for t in types], dtype=np.int64)
        self.deg = self.dvec.sum(axis=1)
        # theta^{+chi}: one more remaining neighbour of planted colour chi
        self.plus = np.full((self.size, 3), -1, dtype=np.int64)
        for k, (s, d1, d2, d3) in enumerate(types):
            if d1 + d2 + d3 < delta:
                for chi in range(3):
                    dd = [d1, d2, d3]
                    dd[chi] += 1
                    self.plus[k, chi] = self.index[(s, dd[0], dd[1], dd[2])]

    def pair_index(self, c: int, k: int) -> int:
        """Flat index of (colour c, type k) in 3|T|-dimensional vectors."""
        return (c - 1) * self.size + k


@dataclass
class FullTypeState:
    ts: TypeSpace
    beta: float
    w: np.ndarray  # (|T|,)
    u: np.ndarray  # (3, |T|) indexed by missing colour c-1

    def u_total(self) -> np.ndarray:
        return self.u.sum(axis=0)

    def small_u(self) -> np.ndarray:
        """Marginal two-list densities by remaining degree."""
        out = np.zeros(self.ts.delta + 1)
        np.add.at(out, self.ts.deg, self.u_total())
        return out

    def small_w(self) -> np.ndarray:
        out = np.zeros(self.ts.delta + 1)
        np.add.at(out, self.ts.deg, self.w)
        return out

    def moment_u(self, ell: float) -> float:
        i = np.arange(self.ts.delta + 1, dtype=float)
        return float(i**ell @ self.small_u())

    def moment_w(self, ell: float) -> float:
        i = np.arange(self.ts.delta + 1, dtype=float)
        return float(i**ell @ self.small_w())

    def relabel_colours(self, perm: dict) -> "FullTypeState":
        """Apply one global colour permutation to planted and list labels."""
        ts = self.ts
        w2 = np.empty_like(self.w)
        u2 = np.empty_like(self.u)
        for k, (s, d1, d2, d3) in enumerate(ts.types):
            dd = [0, 0, 0]
            for chi, dval in zip((1, 2, 3), (d1, d2, d3)):
                dd[perm[chi] - 1] = dval
            k2 = ts.index[(perm[s], dd[0], dd[1], dd[2])]
            w2[k2] = self.w[k]
            for c in (1, 2, 3):
                u2[perm[c] - 1, k2] = self.u[c - 1, k]
        return FullTypeState(ts=ts, beta=self.beta, w=w2, u=u2)


def flat_white_expand(u_small, w_small, beta: float, ts: TypeSpace | None = None) -> FullTypeState:
    """Product-form state: degree profile times multinomial colour split.

    w_theta = w_D/3 * multinom(d1,d2,d3) * prod q[s,s']^{d_s'} and
    u_{c,theta} = u_D/9 * (same factor), independent of c.
    """
    u_small = np.asarray(u_small, dtype=float)
    w_small = np.asarray(w_small, dtype=float)
    if np.any(u_small < 0) or np.any(w_small < 0):
        raise ParameterError("flat-white expansion needs non-negative profiles")
    delta = len(u_small) - 1
    if ts is None:
        ts = TypeSpace(delta)
    elif ts.delta != delta:
        raise ParameterError("type space delta does not match profile length")
    q = colour_weight(beta)
    base = np.empty(ts.size)
    for k, (s, d1, d2, d3) in enumerate(ts.types):
        total = d1 + d2 + d3
        multi = math.factorial(total) // (
            math.factorial(d1) * math.factorial(d2) * math.factorial(d3)
        )
        base[k] = multi * q[s - 1, 0] ** d1 * q[s - 1, 1] ** d2 * q[s - 1, 2] ** d3
    w = w_small[ts.deg] / 3.0 * base
    u_row = u_small[ts.deg] / 9.0 * base
    return FullTypeState(ts=ts, beta=beta, w=w, u=np.tile(u_row, (3, 1)))


# --- system assembly -----------------------------------------------------------


@dataclass
class SystemMatrices:
    p: np.ndarray  # (3|T|,) root-type distribution over (c, theta)
    e: np.ndarray  # (3, 3) edge table e[s-1, s'-1]
    M: np.ndarray  # (3|T|, 3|T|) offspring means, row = child, column = parent


def edge_table(fs: FullTypeState) -> np.ndarray:
    """e[s, s'] = sum over types of planted colour s' of d_s (w + sum_c u)."""
    ts = fs.ts
    tot = fs.w + fs.u_total()
    e = np.zeros((3, 3))
    for sp in (1, 2, 3):
        rows = ts.s_of == sp
        for s in (1, 2, 3):
            e[s - 1, sp - 1] = float(ts.dvec[rows, s - 1] @ tot[rows])
    return e


def assemble_system(fs: FullTypeState, alpha: float) -> SystemMatrices:
    """Root distribution p, edge table e, and offspring-mean matrix M.

    M[(c', theta'), (c, theta)] = 1{c != c'} d_{s'} (d'_s + 1)
    u_{c'', theta'^{+s}} / e_{s,s'} with s = planted(theta), s' =
    planted(theta') and c'' the colour outside {c, c'}; a child's type
    discounts the edge to its parent.
    """
    ts = fs.ts
    dega = ts.deg.astype(float) ** alpha
    denom = 2.0 * float((dega[None, :] * fs.u).sum())
    if denom <= 0.0:
        raise DegenerateStateError("no two-list mass with positive degree")
    u_tot = fs.u_total()
    p = np.empty(3 * ts.size)
    for c in (1, 2, 3):
        p[(c - 1) * ts.size : c * ts.size] = dega * (u_tot - fs.u[c - 1]) / denom

    e = edge_table(fs)
    if np.any(e <= 0.0):
        raise DegenerateStateError("edge table has a vanishing entry")

    M = np.zeros((3 * ts.size, 3 * ts.size))
    third = {(c, cp): 6 - c - cp for c in (1, 2, 3) for cp in (1, 2, 3) if c != cp}
    for cp in (1, 2, 3):  # child colour
        for c in (1, 2, 3):  # parent colour
            if c == cp:
                continue
            cpp = third[(c, cp)]
            for s in (1, 2, 3):  # parent planted colour
                cols = np.flatnonzero(ts.s_of == s)
                # child factor: (d'_s + 1) u_{c'', theta'^{+s}} by child type
                plus = ts.plus[:, s - 1]
                child = np.where(
                    plus >= 0,
                    (ts.dvec[:, s - 1] + 1.0) * fs.u[cpp - 1][np.maximum(plus, 0)],
                    0.0,
                )
                for sp in (1, 2, 3):  # child planted colour
                    rows = np.flatnonzero(ts.s_of == sp)
                    block = np.outer(
                        child[rows], ts.dvec[cols, sp - 1].astype(float)
                    ) / e[s - 1, sp - 1]
                    M[np.ix_((cp - 1) * ts.size + rows, (c - 1) * ts.size + cols)] = block
    return SystemMatrices(p=p, e=e, M=M)


def spectral_radius(m: np.ndarray, tol: float = 1e-12, max_iter: int = 10**5) -> float:
    """Dominant eigenvalue of a non-negative matrix by power iteration.

    Iterates on m + I (guaranteed aperiodic) and subtracts the shift;
    converges when the eigenvalue estimate moves by < tol relatively.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError("square matrix required")
    if np.any(m < 0):
        raise ParameterError("power iteration requires a non-negative matrix")
    x = np.ones(m.shape[0])
    est = None
    for _ in range(max_iter):
        y = m @ x + x
        norm = float(y.sum())
        if norm <= 0.0 or not math.isfinite(norm):
            raise ConvergenceError("power iteration collapsed")
        new_est = norm / float(x.sum())
        x = y / norm
        if est is not None and abs(new_est - est) <= tol * abs(new_est):
            return new_est - 1.0
        est = new_est
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


@dataclass
class KappaTables:
    by_colour: np.ndarray  # (3, 3, 3) kappa[c-1, s-1, s'-1]
    by_pair: np.ndarray  # (3, 3) kappa[s-1, s'-1] = sum over c
    radius: float


def _gate_radius(m: np.ndarray) -> float:
    """Radius for subcriticality gates; falls back to dense eigenvalues when
    power iteration stalls (defective spectra at degenerate states)."""
    try:
        return spectral_radius(m)
    except ConvergenceError:
        return float(np.abs(np.linalg.eigvals(m)).max())


def kappa_linear(fs: FullTypeState, alpha: float, system: SystemMatrices | None = None) -> KappaTables:
    """Expected cascade edge counts via the total-progeny linear solve."""
    sysm = assemble_system(fs, alpha) if system is None else system
    radius = _gate_radius(sysm.M)
    if radius >= 1.0:
        raise DivergenceError(f"offspring matrix has radius {radius:.6f} >= 1")
    ts = fs.ts
    x = np.linalg.solve(np.eye(3 * ts.size) - sysm.M, sysm.p)
    by_colour = np.zeros((3, 3, 3))
    for c in (1, 2, 3):
        xc = x[(c - 1) * ts.size : c * ts.size]
        for s in (1, 2, 3):
            rows = ts.s_of == s
            for sp in (1, 2, 3):
                by_colour[c - 1, s - 1, sp - 1] = float(
                    ts.dvec[rows, sp - 1] @ xc[rows]
                )
    return KappaTables(by_colour=by_colour, by_pair=by_colour.sum(axis=0), radius=radius)


def kappa_closed_form(fs: FullTypeState, alpha: float) -> np.ndarray:
    """Flat-white prediction kappa_{c,s,s'} = (kappa/9) q[s,s']."""
    kap = kappa_scalar(fs, alpha)
    q = colour_weight(fs.beta)
    return kap / 9.0 * np.broadcast_to(q, (3, 3, 3)).copy()


def kappa_scalar(fs: FullTypeState, alpha: float) -> float:
    """kappa = 3 (u1+w1) u^{(a+1)} / ((5 u1 + 3 w1 - 2 u2) u^{(a)})."""
    u1, u2 = fs.moment_u(1), fs.moment_u(2)
    w1 = fs.moment_w(1)
    den = (5.0 * u1 + 3.0 * w1 - 2.0 * u2) * fs.moment_u(alpha)
    if den <= 0.0:
        raise DegenerateStateError("closed-form kappa undefined (supercritical state)")
    return 3.0 * (u1 + w1) * fs.moment_u(alpha + 1) / den


def kappa_neumann(fs: FullTypeState, alpha: float, terms: int = 40) -> np.ndarray:
    """Truncated Neumann series sum M^l p as an independent cross-check."""
    sysm = assemble_system(fs, alpha)
    ts = fs.ts
    acc = sysm.p.copy()
    vec = sysm.p.copy()
    for _ in range(terms):
        vec = sysm.M @ vec
        acc += vec
    by_colour = np.zeros((3, 3, 3))
    for c in (1, 2, 3):
        xc = acc[(c - 1) * ts.size : c * ts.size]
        for s in (1, 2, 3):
            rows = ts.s_of == s
            for sp in (1, 2, 3):
                by_colour[c - 1, s - 1, sp - 1] = float(ts.dvec[rows, sp - 1] @ xc[rows])
    return by_colour


# --- edge-type factorisation -----------------------------------------------------


def factor_matrices(fs: FullTypeState, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """(M_V, M_E): vertex-to-edge and edge-to-vertex offspring factors.

    Edge types are triples (c', s1', s2'): tree colour, tree planted
    colour, target planted colour.  M = M_E @ M_V exactly; the 27 x 27
    product M_V @ M_E has the same nonzero spectrum.
    """
    ts = fs.ts
    e = edge_table(fs)
    mv = np.zeros((27, 3 * ts.size))
    me = np.zeros((3 * ts.size, 27))
    third = {(a, b): 6 - a - b for a in (1, 2, 3) for b in (1, 2, 3) if a != b}

    def edge_index(c, s1, s2):
        return (c - 1) * 9 + (s1 - 1) * 3 + (s2 - 1)

    for c in (1, 2, 3):
        for k in range(ts.size):
            s = ts.s_of[k]
            col = ts.pair_index(c, k)
            for s2 in (1, 2, 3):
                mv[edge_index(c, s, s2), col] = ts.dvec[k, s2 - 1]
    for c in (1, 2, 3):
        for k in range(ts.size):
            s = ts.s_of[k]
            row = ts.pair_index(c, k)
            for cp in (1, 2, 3):
                if cp == c:
                    continue
                cpp = third[(c, cp)]
                for s1 in (1, 2, 3):
                    kp = ts.plus[k, s1 - 1]
                    if kp < 0:
                        continue
                    me[row, edge_index(cp, s1, s)] = (
                        (ts.dvec[k, s1 - 1] + 1.0)
                        * fs.u[cpp - 1, kp]
                        / e[s1 - 1, s - 1]
                    )
    return mv, me


def flat_white_lambda(fs: FullTypeState) -> float:
    """2 (u2 - u1) / (3 (u1 + w1)): radius of the edge-type product matrix."""
    u1, u2, w1 = fs.moment_u(1), fs.moment_u(2), fs.moment_w(1)
    return 2.0 * (u2 - u1) / (3.0 * (u1 + w1))


def rank_one_colour_block(beta: float) -> np.ndarray:
    """Rows (e^-beta, e^-beta, e^-beta), (1,1,1), (1,1,1): radius 2+e^-beta."""
    e = math.exp(-beta)
    return np.array([[e, e, e], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])


# --- full-system right-hand side ---------------------------------------------------


def full_rhs(fs: FullTypeState, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """(dw_theta, du_{c,theta}) of the type-resolved system.

    A u_{c,theta} vertex leaves its cell on a cascade hit of any colour
    (colour c shifts its degree, the other two colours force it), so the
    outflow carries kappa_{s',s}; the inflows from theta^{+s'} carry
    kappa_{c,s',s}, because only colour-c hits produce a u_c vertex.  On
    product states this is exactly the chain rule through the
    degree-profile system.
    """
    ts = fs.ts
    sysm = assemble_system(fs, alpha)
    kt = kappa_linear(fs, alpha, system=sysm)
    e = sysm.e
    dega = ts.deg.astype(float) ** alpha
    denom = float((dega[None, :] * fs.u).sum())

    dw = np.zeros_like(fs.w)
    for s in (1, 2, 3):
        rows = ts.s_of == s
        rate = np.zeros(rows.sum())
        for sp in (1, 2, 3):
            rate += ts.dvec[rows, sp - 1] * kt.by_pair[sp - 1, s - 1] / e[s - 1, sp - 1]
        dw[rows] = -rate * fs.w[rows]

    du = np.zeros_like(fs.u)
    for c in (1, 2, 3):
        du[c - 1] = -dega * fs.u[c - 1] / denom
        for s in (1, 2, 3):
            rows = np.flatnonzero(ts.s_of == s)
            acc = np.zeros(len(rows))
            for sp in (1, 2, 3):
                kap_c = kt.by_colour[c - 1, sp - 1, s - 1]
                kap_all = kt.by_pair[sp - 1, s - 1]
                dsp = ts.dvec[rows, sp - 1].astype(float)
                plus = ts.plus[rows, sp - 1]
                gain = np.where(
                    plus >= 0,
                    (dsp + 1.0)
                    * (fs.w[np.maximum(plus, 0)] + fs.u[c - 1][np.maximum(plus, 0)]),
                    0.0,
                )
                acc += (kap_c * gain - kap_all * dsp * fs.u[c - 1, rows]) / e[s - 1, sp - 1]
            du[c - 1, rows] += acc
    return dw, du


# --- cleanup (residual graph) matrix -----------------------------------------------


@dataclass
class CleanupMatrix:
    matrix: np.ndarray  # 9 x 9 over colour pairs
    radius: float
    identity_gap: float  # |radius - closed form|


def cleanup_matrix(u_small, w_small, beta: float) -> CleanupMatrix:
    """Two-factor offspring matrix of the leftover-graph exploration.

    Closed form: radius = (u2 + w2 - u1 - w1)/(u1 + w1), so subcriticality
    is exactly gamma < 0.
    """
    u_small = np.asarray(u_small, dtype=float)
    w_small = np.asarray(w_small, dtype=float)
    delta = len(u_small) - 1
    i = np.arange(delta + 1, dtype=float)
    m1 = float(i @ (u_small + w_small))
    if m1 <= 0.0:
        raise DegenerateStateError("no edge mass in the residual profile")
    q = colour_weight(beta)

    def pair_idx(s1, s2):
        return (s1 - 1) * 3 + (s2 - 1)

    def vert_idx(s, ell):
        return (s - 1) * (delta + 1) + ell

    nv = 3 * (delta + 1)
    mtv = np.zeros((9, nv))
    mte = np.zeros((nv, 9))
    for s1 in (1, 2, 3):
        for ell in range(delta + 1):
            for s2 in (1, 2, 3):
                mtv[pair_idx(s1, s2), vert_idx(s1, ell)] = (ell - 1.0) * q[s1 - 1, s2 - 1]
    for s1 in (1, 2, 3):
        for s2 in (1, 2, 3):
            for ell in range(delta + 1):
                mte[vert_idx(s2, ell), pair_idx(s1, s2)] = (
                    ell * (u_small[ell] + w_small[ell]) / m1
                )
    mt = mtv @ mte
    # the (ell-1) factor makes degree-0 columns of M_T^V negative, but the
    # product re-weights them by ell = 0 mass, so mt is non-negative
    radius = spectral_radius(mt)
    u1 = float(i @ u_small)
    w1 = float(i @ w_small)
    u2 = float(i**2 @ u_small)
    w2 = float(i**2 @ w_small)
    closed = (u2 + w2 - u1 - w1) / (u1 + w1)
    return CleanupMatrix(matrix=mt, radius=radius, identity_gap=abs(radius - closed))


# --- high-degree two-type matrix ----------------------------------------------------


@dataclass
class HighDegreeMatrix:
    matrix: np.ndarray  # 2x2, rows/cols ordered (big, small), child row by parent column
    radius: float
    phi: float
    e_big_minus_1: float
    e_small_minus_1: float


def high_degree_matrix(d: float, delta: int, tail: int = 400) -> HighDegreeMatrix:
    """Expected offspring of the exploration of edges meeting a high-degree vertex.

    A neighbour is "big" (degree > delta) with probability phi; a big
    vertex reached by an edge has E[B-1] further neighbours, all of whose
    edges qualify, while a small vertex contributes only its big
    neighbours, so M_{small,small} = 0.
    """
    if d <= 0:
        raise ParameterError(f"d must be positive, got {d}")
    pmf = poisson_pmf(d, delta + tail)
    i = np.arange(delta + tail + 1, dtype=float)
    big = i > delta
    f = float((i[big] @ pmf[big]) / d)  # == phi(d, delta)
    eb = float((i[big] ** 2 @ pmf[big]) / (i[big] @ pmf[big]))
    es = float((i[~big] ** 2 @ pmf[~big]) / (i[~big] @ pmf[~big]))
    m = np.array([[(eb - 1.0) * f, (es - 1.0) * f], [(eb - 1.0) * (1.0 - f), 0.0]])
    # exact 2x2 Perron root; at large delta the two eigenvalues nearly
    # cancel in modulus, which starves power iteration of a spectral gap
    a, b, c = m[0, 0], m[0, 1], m[1, 0]
    radius = 0.5 * (a + math.sqrt(a * a + 4.0 * b * c))
    return HighDegreeMatrix(
        matrix=m,
        radius=radius,
        phi=f,
        e_big_minus_1=eb - 1.0,
        e_small_minus_1=es - 1.0,
    )


def delta0(d: float, delta_max: int = 200) -> int:
    """Smallest delta whose high-degree exploration is subcritical."""
    for delta in range(1, delta_max + 1):
        if high_degree_matrix(d, delta).radius < 1.0:
            return delta
    raise ConvergenceError(f"no subcritical delta up to {delta_max}")


# --- Monte-Carlo branching oracle ----------------------------------------------------


@dataclass
class BranchingOracle:
    mean: np.ndarray  # (3, 3, 3) empirical kappa[c-1, s-1, s'-1]
    stderr: np.ndarray
    trials: int


def branching_mc_oracle(
    fs: FullTypeState,
    alpha: float,
    trials: int,
    seed: int = 0,
    chunk: int = 100_000,
    max_generations: int = 10_000,
) -> BranchingOracle:
    """Simulate the cascade branching process and average the edge counts.

    Root type from p; each individual of type (c, theta) spawns
    Poisson(M[child, parent]) children per child type and contributes its
    remaining degrees d_{s'} to the (c, planted, s') table.  The expected
    table equals the kappa of the linear solve.
    """
    sysm = assemble_system(fs, alpha)
    radius = _gate_radius(sysm.M)
    if radius >= 1.0:
        raise DivergenceError(f"refusing supercritical simulation (radius {radius:.4f})")
    ts = fs.ts
    dim = 3 * ts.size
    col_sums = sysm.M.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        child_cdf = np.cumsum(sysm.M / np.where(col_sums > 0, col_sums, 1.0), axis=0)
    p_cdf = np.cumsum(sysm.p)
    p_cdf[-1] = 1.0
    # contribution of one individual of flat type (c, theta): d_{s'} added
    # to row (c, s) of the trial's 3x3x3 table
    s_flat = np.tile(ts.s_of, 3)
    c_flat = np.repeat(np.array([1, 2, 3]), ts.size)
    base27 = ((c_flat - 1) * 3 + (s_flat - 1)) * 3
    contrib = np.tile(ts.dvec.astype(float), (3, 1))

    rng = stream(f"typespace.mc:alpha={alpha!r}:beta={fs.beta!r}:delta={ts.delta}", seed)
    sum_x = np.zeros(27)
    sum_x2 = np.zeros(27)
    done = 0
    while done < trials:
        r = min(chunk, trials - done)
        table = np.zeros((r, 27))
        trial_ids = np.arange(r, dtype=np.int64)
        types = np.searchsorted(p_cdf, rng.random(r))
        for _ in range(max_generations):
            rows = base27[types]
            for off in range(3):
                np.add.at(table, (trial_ids, rows + off), contrib[types, off])
            counts = rng.poisson(col_sums[types])
            total = int(counts.sum())
            if total == 0:
                break
            parents = np.repeat(np.arange(len(types)), counts)
            parent_types = types[parents]
            unif = rng.random(total)
            children = np.empty(total, dtype=np.int64)
            for pt in np.unique(parent_types):
                mask = parent_types == pt
                children[mask] = np.searchsorted(child_cdf[:, pt], unif[mask])
            trial_ids = trial_ids[parents]
            types = children
        else:
            raise ConvergenceError("branching simulation exceeded the generation cap")
        sum_x += table.sum(axis=0)
        sum_x2 += (table**2).sum(axis=0)
        done += r
    mean = sum_x / trials
    var = np.maximum(sum_x2 / trials - mean**2, 0.0)
    stderr = np.sqrt(var / trials)
    return BranchingOracle(
        mean=mean.reshape(3, 3, 3), stderr=stderr.reshape(3, 3, 3), trials=trials
    )
