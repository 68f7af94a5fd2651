"""List-3-colouring dynamics (the Achlioptas-Moore greedy process).

One main loop colours a vertex per iteration, forever removing that colour
from the lists of its live neighbours.  Forced vertices (list size 1) take
strict priority; otherwise a free vertex is drawn among list-size-2
vertices with probability proportional to live_degree^alpha and coloured
uniformly from its list; when neither exists but three-colour-list
vertices remain, a uniformly random one is coloured with a uniformly
random colour (this restart rule makes the colouring total).  Vertices
whose list empties are "bad": they are removed from the live graph at
once, counted, and given uniform random colours after termination.

Two initial-list modes: "full" keeps all vertices with complete lists;
"truncated" drops vertices of degree > delta, 2-colours the high-degree
subgraph component-wise, and removes the induced forbidden colour from
each surviving boundary vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import PlantedGraph, agreement, mono_edge_count
from .streams import stream

_POPCOUNT = (0, 1, 1, 2, 1, 2, 2, 3)
_SINGLE = {1: 1, 2: 2, 4: 3}
_BIT = (0, 1, 2, 4)

LIVE, ASSIGNED, BAD, EXCLUDED = 0, 1, 2, 3


class IndexedSet:
    """Set with O(1) insert, delete, and uniform random choice."""

    __slots__ = ("items", "pos")

    def __init__(self):
        self.items = []
        self.pos = {}

    def add(self, v):
        self.pos[v] = len(self.items)
        self.items.append(v)

    def remove(self, v):
        items, pos = self.items, self.pos
        i = pos.pop(v)
        last = items.pop()
        if last != v:
            items[i] = last
            pos[last] = i

    def random(self, rng):
        return self.items[int(rng.integers(len(self.items)))]

    def __len__(self):
        return len(self.items)

    def __contains__(self, v):
        return v in self.pos


@dataclass
class PrecolourResult:
    sigma_hash: dict  # vertex -> colour on the high-degree closure
    forbidden: dict  # surviving boundary vertex -> excluded colour
    monochromatic_hash_edges: int
    components: int


def high_degree_precolor(graph: PlantedGraph, delta: int, seed: int) -> PrecolourResult:
    """2-colour each component of the subgraph spanned by edges meeting a
    high-degree vertex; odd cycles produce counted conflicts.

    Every neighbour set of a surviving boundary vertex sits at one BFS
    parity, so it inherits a single forbidden colour.
    """
    if delta < 1:
        raise ParameterError(f"delta must be >= 1, got {delta}")
    rng = stream(f"am.precolour:delta={delta}", seed)
    deg = graph.degrees()
    big = deg > delta
    if not big.any():
        return PrecolourResult({}, {}, 0, 0)
    e = graph.edges
    hash_edges = e[big[e[:, 0]] | big[e[:, 1]]]
    adj: dict[int, list[int]] = {}
    for u, v in hash_edges:
        adj.setdefault(int(u), []).append(int(v))
        adj.setdefault(int(v), []).append(int(u))

    sigma_hash: dict[int, int] = {}
    mono = 0
    components = 0
    for root in sorted(adj):
        if root in sigma_hash:
            continue
        components += 1
        c_even = int(rng.integers(1, 4))
        c_odd = [c for c in (1, 2, 3) if c != c_even][int(rng.integers(0, 2))]
        sigma_hash[root] = c_even
        frontier = [root]
        parity = {root: 0}
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w not in parity:
                        parity[w] = parity[u] ^ 1
                        sigma_hash[w] = c_odd if parity[w] else c_even
                        nxt.append(w)
            frontier = nxt
    for u, v in hash_edges:
        if sigma_hash[int(u)] == sigma_hash[int(v)]:
            mono += 1
    forbidden = {
        v: sigma_hash[adj[v][0]] for v in adj if not big[v]
    }
    return PrecolourResult(sigma_hash, forbidden, mono, components)


@dataclass
class EpochDiagnostics:
    t_scaled: float
    u_counts: np.ndarray  # two-list vertices by live degree
    w_counts: np.ndarray  # three-list vertices by live degree
    lambda_emp: float  # nan when undefined
    gamma_emp: float
    live: int
    bad_so_far: int
    forced_tree_size: int

    @property
    def two_lists(self) -> int:
        return int(self.u_counts.sum())

    @property
    def three_lists(self) -> int:
        return int(self.w_counts.sum())


@dataclass
class RunStats:
    seed: int
    n: int
    d: float
    beta: float
    alpha: float
    mode: str
    bad: int
    mono_edges: int
    epochs: int
    agreement: float
    restarts: int

    def as_dict(self) -> dict:
        return {
            "seed": self.seed, "n": self.n, "d": self.d, "beta": self.beta,
            "alpha": self.alpha, "mode": self.mode, "bad": self.bad,
            "mono_edges": self.mono_edges, "epochs": self.epochs,
            "agreement": self.agreement, "restarts": self.restarts,
        }


class ColoringState:
    """Mutable algorithm state over the live subgraph."""

    def __init__(self, graph: PlantedGraph, mode: str, delta: int | None, seed: int):
        if mode not in ("full", "truncated"):
            raise ParameterError(f"mode must be 'full' or 'truncated', got {mode!r}")
        self.graph = graph
        self.mode = mode
        self.delta = delta
        n = graph.n
        deg = graph.degrees()
        self.precolour = None
        excluded = np.zeros(n, dtype=bool)
        forbidden: dict[int, int] = {}
        if mode == "truncated":
            if delta is None or delta < 1:
                raise ParameterError("truncated mode needs delta >= 1")
            self.precolour = high_degree_precolor(graph, delta, seed)
            excluded = deg > delta
            forbidden = self.precolour.forbidden

        indptr, indices = graph.csr()
        idx_list = indices.tolist()
        self.adj: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            if excluded[v]:
                continue
            self.adj[v] = [u for u in idx_list[indptr[v] : indptr[v + 1]] if not excluded[u]]

        self.status = bytearray(n)
        self.mask = bytearray(n)
        self.colour = bytearray(n)
        self.live_deg = [0] * n
        self.sigma_star_list = graph.sigma_star.tolist()
        self.dbc = [0] * (3 * n)
        maxdeg = 0
        for v in range(n):
            if excluded[v]:
                self.status[v] = EXCLUDED
                continue
            dv = len(self.adj[v])
            self.live_deg[v] = dv
            maxdeg = max(maxdeg, dv)
            for u in self.adj[v]:
                self.dbc[3 * v + self.sigma_star_list[u] - 1] += 1
        self.maxdeg = maxdeg
        self.two = [IndexedSet() for _ in range(maxdeg + 1)]
        self.three = IndexedSet()
        self.forced = IndexedSet()
        self.u_counts = [0] * (maxdeg + 1)
        self.w_counts = [0] * (maxdeg + 1)
        self.n_live = 0
        for v in range(n):
            if excluded[v]:
                continue
            self.n_live += 1
            if v in forbidden:
                self.mask[v] = 7 & ~_BIT[forbidden[v]]
                self.two[self.live_deg[v]].add(v)
                self.u_counts[self.live_deg[v]] += 1
            else:
                self.mask[v] = 7
                self.three.add(v)
                self.w_counts[self.live_deg[v]] += 1
        self.bad: list[int] = []
        self.bad_epochs: list[int] = []
        self.epochs = 0
        self.restarts = 0
        self.last_tree_size = 0
        self.events: list | None = None

    # list-class bookkeeping -------------------------------------------------

    def _degree_drop(self, u: int) -> None:
        d = self.live_deg[u]
        self.live_deg[u] = d - 1
        size = _POPCOUNT[self.mask[u]]
        if size == 3:
            self.w_counts[d] -= 1
            self.w_counts[d - 1] += 1
        elif size == 2:
            self.two[d].remove(u)
            self.two[d - 1].add(u)
            self.u_counts[d] -= 1
            self.u_counts[d - 1] += 1

    def _detach(self, v: int) -> None:
        """Remove v from whichever selection structure holds it."""
        size = _POPCOUNT[self.mask[v]]
        d = self.live_deg[v]
        if size == 3:
            self.three.remove(v)
            self.w_counts[d] -= 1
        elif size == 2:
            self.two[d].remove(v)
            self.u_counts[d] -= 1
        elif size == 1:
            self.forced.remove(v)

    def _make_bad(self, u: int, epoch: int) -> None:
        self.forced.remove(u)
        self.status[u] = BAD
        self.bad.append(u)
        self.bad_epochs.append(epoch)
        self.n_live -= 1
        if self.events is not None:
            self.events.append(("bad", u, epoch))
        star = self.sigma_star_list[u]
        for x in self.adj[u]:
            if self.status[x] == LIVE:
                self._degree_drop(x)
                self.dbc[3 * x + star - 1] -= 1

    def colour_vertex(self, v: int, c: int, epoch: int) -> None:
        """Assign c to v, delete v, and push the colour removals."""
        self._detach(v)
        self.status[v] = ASSIGNED
        self.colour[v] = c
        self.n_live -= 1
        bit = _BIT[c]
        star = self.sigma_star_list[v]
        for u in self.adj[v]:
            if self.status[u] != LIVE:
                continue
            self._degree_drop(u)
            self.dbc[3 * u + star - 1] -= 1
            m = self.mask[u]
            if m & bit:
                m &= ~bit
                self.mask[u] = m
                size = _POPCOUNT[m]
                d = self.live_deg[u]
                if self.events is not None:
                    self.events.append(("removed_colour", u, c, epoch))
                if size == 2:
                    self.three.remove(u)
                    self.w_counts[d] -= 1
                    self.two[d].add(u)
                    self.u_counts[d] += 1
                elif size == 1:
                    self.two[d].remove(u)
                    self.u_counts[d] -= 1
                    self.forced.add(u)
                else:
                    self._make_bad(u, epoch)

    # selection ----------------------------------------------------------------

    def two_list_total(self) -> int:
        return sum(self.u_counts)

    def select_free_vertex(self, alpha: float, rng) -> int:
        """Sample a list-size-2 vertex with probability ~ live_degree^alpha
        (uniform when every live degree is zero)."""
        if len(self.forced):
            raise ParameterError("free selection with forced vertices pending")
        weights = [
            (float(d) ** alpha) * len(bucket) if len(bucket) else 0.0
            for d, bucket in enumerate(self.two)
        ]
        total = math.fsum(weights)
        if total > 0.0:
            r = float(rng.random()) * total
            acc = 0.0
            chosen = None
            for d, wgt in enumerate(weights):
                if wgt <= 0.0:
                    continue
                acc += wgt
                if r < acc:
                    chosen = d
                    break
            if chosen is None:  # float round-off at the top end
                chosen = max(d for d, wgt in enumerate(weights) if wgt > 0.0)
            return self.two[chosen].random(rng)
        count = self.two_list_total()
        if count == 0:
            raise ParameterError("no two-list vertex available")
        k = int(rng.integers(count))
        for bucket in self.two:
            if k < len(bucket):
                return bucket.items[k]
            k -= len(bucket)
        raise AssertionError("unreachable")

    def diagnostics(self) -> EpochDiagnostics:
        return epoch_diagnostics(self)


def epoch_diagnostics(state: ColoringState) -> EpochDiagnostics:
    """Spectral and subcriticality observables of the current live state."""
    u = np.array(state.u_counts, dtype=float)
    w = np.array(state.w_counts, dtype=float)
    i = np.arange(len(u))
    den = 3.0 * float(i @ (u + w))
    lam = 2.0 * float((i * (i - 1)) @ u) / den if den > 0 else math.nan
    gam = float((i * (i - 2)) @ (u + w)) / state.graph.n
    return EpochDiagnostics(
        t_scaled=state.epochs / state.graph.n,
        u_counts=u.astype(np.int64),
        w_counts=w.astype(np.int64),
        lambda_emp=lam,
        gamma_emp=gam,
        live=state.n_live,
        bad_so_far=len(state.bad),
        forced_tree_size=state.last_tree_size,
    )


def init_lists(
    graph: PlantedGraph, mode: str = "full", delta: int | None = None, seed: int = 0
) -> ColoringState:
    """Fresh algorithm state; see the module docstring for the two modes."""
    return ColoringState(graph, mode, delta, seed)


def run(
    graph: PlantedGraph,
    state: ColoringState,
    alpha: float,
    seed: int,
    sample_every: int | None = None,
    record_events: bool = False,
    abort_on_bad: bool = False,
):
    """Execute the main loop to a total colouring.

    Returns (colouring, RunStats, trace); the trace holds EpochDiagnostics
    sampled every sample_every free steps (default n/500) plus the final
    state.  Identical (graph, state-mode, alpha, seed) reproduce the output
    bit for bit.

    abort_on_bad stops as soon as the first bad vertex appears (for seed
    searches that only keep clean runs); the returned colouring is then
    partial and only stats.bad is meaningful.
    """
    rng = stream(f"am.run:alpha={alpha!r}:mode={state.mode}", seed)
    n = graph.n
    if sample_every is None:
        sample_every = max(1, n // 500)
    if record_events:
        state.events = []
    trace: list[EpochDiagnostics] = []
    forced = state.forced
    three = state.three
    epoch_forced = 0

    while True:
        if abort_on_bad and state.bad:
            break
        if len(forced):
            # the cascade belongs to the epoch its free step started
            epoch_id = state.epochs - 1
            v = forced.random(rng)
            c = _SINGLE[state.mask[v]]
            epoch_forced += 1
            if state.events is not None:
                state.events.append(("forced", v, 1, epoch_id, len(forced)))
            state.colour_vertex(v, c, epoch_id)
        elif state.two_list_total():
            state.last_tree_size = epoch_forced
            epoch_forced = 0
            if sample_every and state.epochs % sample_every == 0:
                trace.append(state.diagnostics())
            v = state.select_free_vertex(alpha, rng)
            m = state.mask[v]
            options = [c for c in (1, 2, 3) if m & _BIT[c]]
            c = options[int(rng.integers(2))]
            if state.events is not None:
                state.events.append(("free", v, 2, state.epochs, len(forced)))
            epoch_id = state.epochs
            state.epochs += 1
            state.colour_vertex(v, c, epoch_id)
        elif len(three):
            v = three.random(rng)
            c = int(rng.integers(1, 4))
            if state.events is not None:
                state.events.append(("restart", v, 3, state.epochs, len(forced)))
            state.restarts += 1
            state.colour_vertex(v, c, state.epochs)
        else:
            break
    state.last_tree_size = epoch_forced
    trace.append(state.diagnostics())

    colouring = np.zeros(n, dtype=np.int8)
    status = state.status
    for v in range(n):
        if status[v] == ASSIGNED:
            colouring[v] = state.colour[v]
    for v in state.bad:
        colouring[v] = int(rng.integers(1, 4))
    if state.precolour is not None:
        deg = graph.degrees()
        for v, c in state.precolour.sigma_hash.items():
            if deg[v] > state.delta:
                colouring[v] = c
    stats = RunStats(
        seed=seed,
        n=n,
        d=graph.d,
        beta=graph.beta,
        alpha=alpha,
        mode=state.mode,
        bad=len(state.bad),
        mono_edges=mono_edge_count(graph, colouring),
        epochs=state.epochs,
        agreement=agreement(colouring, graph.sigma_star),
        restarts=state.restarts,
    )
    return colouring, stats, trace


def run_am(
    graph: PlantedGraph,
    alpha: float,
    seed: int,
    mode: str = "full",
    delta: int | None = None,
    sample_every: int | None = None,
    record_events: bool = False,
    abort_on_bad: bool = False,
):
    """Convenience wrapper: init_lists + run with one seed."""
    state = init_lists(graph, mode=mode, delta=delta, seed=seed)
    return run(graph, state, alpha, seed, sample_every=sample_every,
               record_events=record_events, abort_on_bad=abort_on_bad)
