"""Disassortative three-community block model: parameters, sampling, scoring.

Vertices carry a uniformly random planted colour in {1,2,3}; a pair with
equal colours is joined with probability d_in/n, an unequal pair with
probability d_out/n, where

    d_in = 3 d e^(-beta) / (2 + e^(-beta)),   d_out = 3 d / (2 + e^(-beta)),

so the mean degree is d and intra-community edges are the rare ones for
beta > 0.  The module also provides the permutation-maximised agreement
score, the degree-truncated type census, the unnormalised log-posterior of
a colouring, and the loss (log-posterior gap) in exhaustive and
reference-colouring modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import ParameterError
from .poisson import poisson_pmf
from .streams import stream

COLOURS = (1, 2, 3)
_PERMS = [np.array((0,) + p, dtype=np.int8) for p in permutations(COLOURS)]
EXHAUSTIVE_MAX_N = 12


def derive_rates(d: float, beta: float) -> tuple[float, float]:
    """(d_in, d_out) for mean degree d and disassortativity beta."""
    if d <= 0:
        raise ParameterError(f"d must be positive, got {d}")
    if beta < 0:
        raise ParameterError(f"beta must be non-negative, got {beta}")
    e = math.exp(-beta)
    return 3.0 * d * e / (2.0 + e), 3.0 * d / (2.0 + e)


def kesten_stigum(beta: float) -> float:
    """Degree threshold ((2+e^-beta)/(1-e^-beta))^2 above which efficient
    non-trivial reconstruction is conjectured possible."""
    if beta <= 0:
        raise ParameterError(f"beta must be positive (formula singular at 0), got {beta}")
    e = math.exp(-beta)
    return ((2.0 + e) / (1.0 - e)) ** 2


@dataclass(frozen=True)
class SbmParams:
    n: int
    d: float
    beta: float

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        derive_rates(self.d, self.beta)  # validates d, beta

    @property
    def d_in(self) -> float:
        return derive_rates(self.d, self.beta)[0]

    @property
    def d_out(self) -> float:
        return derive_rates(self.d, self.beta)[1]


@dataclass
class PlantedGraph:
    """Sparse undirected graph with its planted colouring.

    edges is an (m, 2) array with u < v, free of duplicates and loops.
    """

    n: int
    d: float
    beta: float
    seed: int
    sigma_star: np.ndarray
    edges: np.ndarray
    _adj: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.m:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) of the symmetric adjacency structure."""
        if self._adj is None:
            deg = self.degrees()
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(deg, out=indptr[1:])
            indices = np.empty(2 * self.m, dtype=np.int32)
            fill = indptr[:-1].copy()
            for u, v in ((0, 1), (1, 0)):
                src = self.edges[:, u]
                dst = self.edges[:, v]
                order = np.argsort(src, kind="stable")
                src, dst = src[order], dst[order]
                uniq, counts = np.unique(src, return_counts=True)
                starts = fill[uniq]
                pos = np.repeat(starts, counts) + _ragged_arange(counts)
                indices[pos] = dst
                fill[uniq] += counts
            object.__setattr__(self, "_adj", (indptr, indices))
        return self._adj

    def neighbour_lists(self) -> list:
        indptr, indices = self.csr()
        return [indices[indptr[v] : indptr[v + 1]].tolist() for v in range(self.n)]

    def to_text(self) -> str:
        lines = [f"{self.n} {self.d!r} {self.beta!r} {self.seed}"]
        lines += [str(int(c)) for c in self.sigma_star]
        lines += [f"{int(u)} {int(v)}" for u, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PlantedGraph":
        rows = text.strip().split("\n")
        n_s, d_s, beta_s, seed_s = rows[0].split()
        n = int(n_s)
        sigma = np.array([int(x) for x in rows[1 : n + 1]], dtype=np.int8)
        edges = np.array(
            [[int(a) for a in r.split()] for r in rows[n + 1 :]], dtype=np.int64
        ).reshape(-1, 2)
        return cls(n=n, d=float(d_s), beta=float(beta_s), seed=int(seed_s),
                   sigma_star=sigma, edges=edges)


def _ragged_arange(counts: np.ndarray) -> np.ndarray:
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    out = np.ones(total, dtype=np.int64)
    out[0] = 0
    ends = np.cumsum(counts)[:-1]
    out[ends[ends < total]] = 1 - counts[:-1][ends < total]
    return np.cumsum(out)


def _distinct_pairs(rng, draw_u, draw_v, count, n, same_class):
    """count distinct unordered pairs, resampling collision slots only.

    Duplicate detection keeps the first occurrence in slot order, so the
    scheme is exchangeable over pair codes and yields a uniform subset.
    """
    us = draw_u(count)
    vs = draw_v(count)
    while True:
        lo = np.minimum(us, vs)
        hi = np.maximum(us, vs)
        codes = lo.astype(np.int64) * n + hi
        bad = lo == hi if same_class else np.zeros(count, dtype=bool)
        _, first = np.unique(codes, return_index=True)
        dup = np.ones(count, dtype=bool)
        dup[first] = False
        bad |= dup
        k = int(bad.sum())
        if k == 0:
            return lo, hi
        us[bad] = draw_u(k)
        vs[bad] = draw_v(k)


def generate(params: SbmParams, seed: int) -> PlantedGraph:
    """Sample a graph from the model, exactly in distribution.

    Per class pair, the edge count is Binomial(#pairs, rate/n) and the edge
    set a uniform subset of that size, which reproduces independent
    per-pair coin flips in O(d n) expected time.
    """
    n, d, beta = params.n, params.d, params.beta
    d_in, d_out = derive_rates(d, beta)
    if d_in / n > 1.0 or d_out / n > 1.0:
        raise ParameterError(
            f"edge rate above 1 (n={n} too small for d={d}, beta={beta}); "
            "the clamped regime is not supported"
        )
    rng = stream(f"sbm.generate:n={n}:d={d!r}:beta={beta!r}", seed)
    sigma = rng.integers(1, 4, size=n, dtype=np.int8)
    members = [np.flatnonzero(sigma == c).astype(np.int64) for c in COLOURS]
    chunks = []
    for a in range(3):
        for b in range(a, 3):
            ka, kb = len(members[a]), len(members[b])
            npairs = ka * (ka - 1) // 2 if a == b else ka * kb
            rate = (d_in if a == b else d_out) / n
            if npairs == 0 or rate == 0.0:
                continue
            count = int(rng.binomial(npairs, rate))
            if count == 0:
                continue
            mem_a, mem_b = members[a], members[b]
            draw_u = lambda k: mem_a[rng.integers(0, ka, size=k)]
            draw_v = lambda k: mem_b[rng.integers(0, kb, size=k)]
            lo, hi = _distinct_pairs(rng, draw_u, draw_v, count, n, same_class=a == b)
            chunks.append(np.column_stack([lo, hi]))
    if chunks:
        edges = np.concatenate(chunks)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return PlantedGraph(n=n, d=d, beta=beta, seed=seed, sigma_star=sigma, edges=edges)


# --- agreement ----------------------------------------------------------------


def agreement(sigma, sigma_star) -> float:
    """Permutation-maximised overlap, rescaled to [0, 1].

    -1/2 + (3/2n) max over the six colour permutations of the match count;
    0 for uncorrelated colourings, 1 for a perfect relabelling.
    """
    sigma = np.asarray(sigma, dtype=np.int8)
    sigma_star = np.asarray(sigma_star, dtype=np.int8)
    if sigma.shape != sigma_star.shape:
        raise ParameterError("colourings must have equal length")
    n = len(sigma)
    best = max(int((perm[sigma] == sigma_star).sum()) for perm in _PERMS)
    return -0.5 + 1.5 * best / n


# --- census -------------------------------------------------------------------


@dataclass
class TypeCensus:
    delta: int
    ns: np.ndarray  # survivors per planted colour, shape (3,)
    cells: np.ndarray  # counts by (s-1, d1, d2, d3), shape (3, delta+1)^3

    def cell(self, s: int, d1: int, d2: int, d3: int) -> int:
        return int(self.cells[s - 1, d1, d2, d3])


def census(graph: PlantedGraph, delta: int) -> TypeCensus:
    """Counts of surviving vertices by planted colour and per-colour degrees
    after deleting every vertex of degree > delta."""
    if delta < 0:
        raise ParameterError(f"delta must be >= 0, got {delta}")
    cells = np.zeros((3, delta + 1, delta + 1, delta + 1), dtype=np.int64)
    if graph.n == 0:
        return TypeCensus(delta=delta, ns=np.zeros(3, dtype=np.int64), cells=cells)
    deg = graph.degrees()
    keep = deg <= delta
    dbc = np.zeros((graph.n, 3), dtype=np.int32)
    if graph.m:
        e = graph.edges[keep[graph.edges[:, 0]] & keep[graph.edges[:, 1]]]
        sig = graph.sigma_star
        np.add.at(dbc, (e[:, 0], sig[e[:, 1]].astype(np.int64) - 1), 1)
        np.add.at(dbc, (e[:, 1], sig[e[:, 0]].astype(np.int64) - 1), 1)
    kept = np.flatnonzero(keep)
    ns = np.bincount(graph.sigma_star[kept] - 1, minlength=3).astype(np.int64)
    np.add.at(
        cells,
        (
            graph.sigma_star[kept].astype(np.int64) - 1,
            dbc[kept, 0],
            dbc[kept, 1],
            dbc[kept, 2],
        ),
        1,
    )
    return TypeCensus(delta=delta, ns=ns, cells=cells)


def expected_cell(n: int, d: float, beta: float, s: int, d1: int, d2: int, d3: int) -> float:
    """First-order prediction for a census cell count."""
    total = d1 + d2 + d3
    pmf = poisson_pmf(d, total)[total]
    multi = math.factorial(total) // (
        math.factorial(d1) * math.factorial(d2) * math.factorial(d3)
    )
    ds = (d1, d2, d3)[s - 1]
    e = math.exp(-beta)
    return n / 3.0 * pmf * multi * math.exp(-beta * ds) / (2.0 + e) ** total


# --- posterior and loss --------------------------------------------------------


def _class_sizes(sigma: np.ndarray) -> list[int]:
    counts = np.bincount(sigma, minlength=4)
    return [int(counts[c]) for c in COLOURS]


def pair_counts(sigma: np.ndarray) -> tuple[int, int]:
    """(N_in, N_out): potential monochromatic / bichromatic vertex pairs.

    Python integers throughout: the counts are Theta(n^2) and must stay
    exact until the log stage.
    """
    sizes = _class_sizes(sigma)
    n = int(len(sigma))
    n_in = sum(k * (k - 1) // 2 for k in sizes)
    return n_in, n * (n - 1) // 2 - n_in


def mono_edge_count(graph: PlantedGraph, sigma: np.ndarray) -> int:
    if graph.m == 0:
        return 0
    return int((sigma[graph.edges[:, 0]] == sigma[graph.edges[:, 1]]).sum())


def log_posterior(graph: PlantedGraph, sigma) -> float:
    """Unnormalised log P[planted = sigma | graph] per the Bayes factorisation.

    m_in log d_in + m_out log d_out + (N_in - m_in) log(1 - d_in/n)
    + (N_out - m_out) log(1 - d_out/n).  Returns -inf when d_in = 0
    (beta = infinity) and sigma has a monochromatic edge.
    """
    sigma = np.asarray(sigma, dtype=np.int8)
    if len(sigma) != graph.n:
        raise ParameterError("colouring length must equal vertex count")
    n = graph.n
    d_in, d_out = derive_rates(graph.d, graph.beta)
    if not (0.0 <= d_in / n < 1.0 and 0.0 < d_out / n < 1.0):
        raise ParameterError("rates outside the supported open-unit regime")
    m_in = mono_edge_count(graph, sigma)
    m_out = graph.m - m_in
    n_in, n_out = pair_counts(sigma)
    if d_in == 0.0:
        if m_in > 0:
            return -math.inf
        return float(n_in) * math.log1p(-d_in / n) + m_out * math.log(d_out) + float(
            n_out - m_out
        ) * math.log1p(-d_out / n)
    return (
        m_in * math.log(d_in)
        + m_out * math.log(d_out)
        + float(n_in - m_in) * math.log1p(-d_in / n)
        + float(n_out - m_out) * math.log1p(-d_out / n)
    )


def _all_colourings(n: int) -> np.ndarray:
    codes = np.arange(3**n, dtype=np.int64)
    cols = np.empty((3**n, n), dtype=np.int8)
    for v in range(n):
        cols[:, v] = (codes // 3**v) % 3 + 1
    return cols


def max_posterior_exhaustive(graph: PlantedGraph) -> tuple[float, np.ndarray]:
    """(best log-weight, one argmax colouring) over all 3^n colourings."""
    n = graph.n
    if n > EXHAUSTIVE_MAX_N:
        raise ParameterError(
            f"exhaustive mode refuses n={n} > {EXHAUSTIVE_MAX_N} (3^n colourings)"
        )
    d_in, d_out = derive_rates(graph.d, graph.beta)
    cols = _all_colourings(n)
    m_in = np.zeros(len(cols), dtype=np.int64)
    for u, v in graph.edges:
        m_in += cols[:, u] == cols[:, v]
    m_out = graph.m - m_in
    sizes = np.stack([(cols == c).sum(axis=1, dtype=np.int64) for c in COLOURS])
    n_in = (sizes * (sizes - 1) // 2).sum(axis=0)
    n_out = n * (n - 1) // 2 - n_in
    log_in = math.log(d_in) if d_in > 0 else -math.inf
    with np.errstate(invalid="ignore"):
        weights = np.where(
            m_in > 0, m_in * log_in, 0.0
        ) + m_out * math.log(d_out) + (n_in - m_in) * math.log1p(
            -d_in / n
        ) + (n_out - m_out) * math.log1p(-d_out / n)
    best = int(np.argmax(weights))
    return float(weights[best]), cols[best].copy()


def loss(graph: PlantedGraph, sigma, reference=None) -> float:
    """Per-vertex log-posterior gap of sigma.

    Exhaustive mode (reference None, n <= 12): gap to the true maximiser,
    always >= 0.  Reference mode: signed gap to the supplied colouring,
    negative if the reference scores below sigma.
    """
    lp = log_posterior(graph, sigma)
    if reference is None:
        best, _ = max_posterior_exhaustive(graph)
    else:
        best = log_posterior(graph, reference)
    return (best - lp) / graph.n


def theoretical_ground_truth_loss(d: float, beta: float) -> float:
    """Limiting per-vertex loss of the planted colouring: d beta/(4 e^beta + 2)."""
    return d * beta / (4.0 * math.exp(beta) + 2.0)


def rebalance_on_isolated(graph: PlantedGraph, sigma) -> np.ndarray:
    """Equalise class sizes (within 1) by recolouring isolated vertices only.

    Recolouring a degree-0 vertex can never create a monochromatic edge, so
    a proper colouring stays proper.  Vertices move in index order from
    surplus classes to deficit classes; with too few isolated vertices the
    result is best-effort.
    """
    sigma = np.asarray(sigma, dtype=np.int8).copy()
    isolated = np.flatnonzero(graph.degrees() == 0)
    n = graph.n
    base, extra = divmod(n, 3)
    targets = {c: base + (1 if c <= extra else 0) for c in COLOURS}
    sizes = {c: int((sigma == c).sum()) for c in COLOURS}
    for v in isolated:
        c = int(sigma[v])
        if sizes[c] <= targets[c]:
            continue
        for c2 in COLOURS:
            if sizes[c2] < targets[c2]:
                sigma[v] = c2
                sizes[c] -= 1
                sizes[c2] += 1
                break
    return sigma
