"""Brute-force partition functions, all returned as natural logarithms.

Each routine enumerates its full configuration space (edge subsets, vertex
subsets or spin assignments) inside a numba kernel and accumulates terms with
a streaming log-sum-exp, so values stay finite far beyond the range where the
raw partition function overflows.  Enumerations are split into index ranges
that can run on separate threads; partial sums merge with ``logaddexp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import parallel
from .errors import BudgetExceeded, DomainError, InvalidQ, Positivity
from .graphs import Graph, build_graph, cyclic_components_max

EDGE_BUDGET = 24
VERTEX_BUDGET = 24
POTTS_BUDGET = 1 << 24
Q_MIN_RANK2 = 1.0 + 1e-12
SANDWICH_EPS = 1e-9

LogValue = float


@dataclass(frozen=True)
class RCParams:
    q: float
    w: float
    B: float

    def __post_init__(self):
        if not self.q > 0:
            raise InvalidQ(f"cluster weight q must be positive, got {self.q}")
        if not self.w >= 0:
            raise ValueError(f"edge weight w must be non-negative, got {self.w}")
        if not math.isfinite(self.B):
            raise ValueError("field B must be finite")

    @property
    def beta(self) -> float:
        return math.log1p(self.w)


@dataclass(frozen=True)
class TwoSpinWeights:
    psi_pp: float
    psi_pm: float
    psi_mm: float
    psibar_p: float
    psibar_m: float

    def __post_init__(self):
        for name in ("psi_pp", "psi_pm", "psi_mm", "psibar_p", "psibar_m"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise Positivity(f"{name} must be finite and > 0, got {val}")

    def edge_log(self) -> np.ndarray:
        """2x2 table of log psi indexed by (spin_u, spin_v), index 1 = '+'."""
        return np.log(np.array([[self.psi_mm, self.psi_pm], [self.psi_pm, self.psi_pp]]))

    def vertex_log(self) -> np.ndarray:
        return np.log(np.array([self.psibar_m, self.psibar_p]))


@dataclass(frozen=True)
class EIsingParams:
    """Ising coupling ``beta_star`` with degree-dependent field ``k*d_v + h``."""

    beta_star: float
    k: float
    h: float

    def __post_init__(self):
        if not self.beta_star >= 0:
            raise ValueError(f"beta_star must be non-negative, got {self.beta_star}")

    def field(self, degree) -> float:
        return self.k * degree + self.h


# -- kernels ---------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _lse_push(mx, acc, t):
    if t == -np.inf:
        return mx, acc
    if t > mx:
        acc = acc * math.exp(mx - t) + 1.0
        mx = t
    else:
        acc += math.exp(t - mx)
    return mx, acc


@njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _edge_subset_kernel(n, eu, ev, logw, logcomp, start, stop):
    """Sum over A of w^|A| prod_C exp(logcomp[|C|]) for masks in [start, stop)."""
    m = eu.shape[0]
    parent = np.empty(n, np.int64)
    size = np.empty(n, np.int64)
    mx = -np.inf
    acc = 0.0
    for mask in range(start, stop):
        nedges = 0
        for i in range(n):
            parent[i] = i
            size[i] = 1
        for j in range(m):
            if (mask >> j) & 1:
                nedges += 1
                a = _find(parent, eu[j])
                b = _find(parent, ev[j])
                if a != b:
                    if size[a] < size[b]:
                        a, b = b, a
                    parent[b] = a
                    size[a] += size[b]
        if nedges > 0 and logw == -np.inf:
            continue
        t = nedges * logw if nedges > 0 else 0.0
        for i in range(n):
            if parent[i] == i:
                t += logcomp[size[i]]
        mx, acc = _lse_push(mx, acc, t)
    return mx, acc


@njit(cache=True, nogil=True)
def _root(parent, x):
    while parent[x] != x:
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _edge_dfs_kernel(n, eu, ev, logw, logcomp, r, lo, hi):
    """Same sum as ``_edge_subset_kernel`` via depth-first walk over edges.

    The first ``r`` edges are fixed by a prefix mask in [lo, hi); the
    remaining edges are decided depth-first with a union-find that supports
    undo (union by size, no path compression).  The running sum of component
    log-factors is updated per union, so each subset costs O(1) at its leaf.
    """
    m = eu.shape[0]
    parent = np.empty(n, np.int64)
    size = np.empty(n, np.int64)
    choice = np.zeros(m + 1, np.int64)
    child = np.full(m + 1, -1, np.int64)
    saved = np.zeros(m + 1, np.float64)
    mx = -np.inf
    acc = 0.0
    for prefix in range(lo, hi):
        for i in range(n):
            parent[i] = i
            size[i] = 1
        comp = n * logcomp[1]
        nedges = 0
        for j in range(r):
            if (prefix >> j) & 1:
                nedges += 1
                a = _root(parent, eu[j])
                b = _root(parent, ev[j])
                if a != b:
                    if size[a] < size[b]:
                        a, b = b, a
                    comp += logcomp[size[a] + size[b]] - logcomp[size[a]] - logcomp[size[b]]
                    parent[b] = a
                    size[a] += size[b]
        j = r
        choice[j] = 0
        while j >= r:
            if j == m:
                t = comp + (nedges * logw if nedges > 0 else 0.0)
                mx, acc = _lse_push(mx, acc, t)
                j -= 1
                continue
            c = choice[j]
            if c == 0:
                choice[j] = 1
                j += 1
                choice[j] = 0
            elif c == 1:
                choice[j] = 2
                a = _root(parent, eu[j])
                b = _root(parent, ev[j])
                saved[j] = comp
                if a != b:
                    if size[a] < size[b]:
                        a, b = b, a
                    comp += logcomp[size[a] + size[b]] - logcomp[size[a]] - logcomp[size[b]]
                    parent[b] = a
                    size[a] += size[b]
                    child[j] = b
                else:
                    child[j] = -1
                nedges += 1
                j += 1
                choice[j] = 0
            else:
                b = child[j]
                if b >= 0:
                    a = parent[b]
                    size[a] -= size[b]
                    parent[b] = b
                comp = saved[j]
                nedges -= 1
                j -= 1
    return mx, acc


@njit(cache=True, nogil=True)
def _rank2_kernel(n, eu, ev, a, b, c, start, stop):
    """Sum over S of (1+w)^|E(S)| (1+w/(q-1))^|E(V-S)| ((q-1)e^-B)^(n-|S|)."""
    m = eu.shape[0]
    mx = -np.inf
    acc = 0.0
    for mask in range(start, stop):
        e_in = 0
        e_out = 0
        for j in range(m):
            su = (mask >> eu[j]) & 1
            sv = (mask >> ev[j]) & 1
            if su == 1 and sv == 1:
                e_in += 1
            elif su == 0 and sv == 0:
                e_out += 1
        s = 0
        x = mask
        while x:
            x &= x - 1
            s += 1
        t = e_in * a + e_out * b + (n - s) * c
        mx, acc = _lse_push(mx, acc, t)
    return mx, acc


@njit(cache=True, nogil=True)
def _spin_kernel(n, eu, ev, vlog, elog, start, stop):
    """Sum over sigma in {-,+}^n of prod_v psibar_v(sigma_v) prod_e psi(sigma_u, sigma_v).

    Bit v of the mask is 1 when sigma_v = '+'; ``vlog`` is (n, 2) and
    ``elog`` is (2, 2), both indexed by that bit.
    """
    m = eu.shape[0]
    mx = -np.inf
    acc = 0.0
    for mask in range(start, stop):
        t = 0.0
        for v in range(n):
            t += vlog[v, (mask >> v) & 1]
        for j in range(m):
            t += elog[(mask >> eu[j]) & 1, (mask >> ev[j]) & 1]
        mx, acc = _lse_push(mx, acc, t)
    return mx, acc


@njit(cache=True, nogil=True)
def _potts_kernel(n, q, eu, ev, beta, B, start, stop):
    m = eu.shape[0]
    sigma = np.empty(n, np.int64)
    mx = -np.inf
    acc = 0.0
    for idx in range(start, stop):
        x = idx
        ones = 0
        for v in range(n):
            sigma[v] = x % q
            x //= q
            if sigma[v] == 0:
                ones += 1
        mono = 0
        for j in range(m):
            if sigma[eu[j]] == sigma[ev[j]]:
                mono += 1
        mx, acc = _lse_push(mx, acc, beta * mono + B * ones)
    return mx, acc


def _finish(parts) -> float:
    total = -math.inf
    for mx, acc in parts:
        if acc > 0:
            total = np.logaddexp(total, mx + math.log(acc))
    return float(total)


def _edge_arrays(g: Graph):
    ea = g.edge_array
    return ea[:, 0].copy(), ea[:, 1].copy()


# -- public operations ------------------------------------------------------------

def _check_edges(g: Graph, budget: int) -> None:
    if g.m > budget:
        raise BudgetExceeded(f"{g.m} edges: 2^{g.m} subsets exceeds budget 2^{budget}")


def _check_vertices(g: Graph, budget: int) -> None:
    if g.n > budget:
        raise BudgetExceeded(f"{g.n} vertices: 2^{g.n} states exceeds budget 2^{budget}")


PREFIX_BITS = 8


def _run_edge_subsets(g: Graph, logw: float, logcomp: np.ndarray, method: str = "dfs") -> float:
    eu, ev = _edge_arrays(g)
    if logw == -math.inf:
        # only the empty subset survives
        return float(g.n * logcomp[1])
    if method == "reset":
        parts = parallel.chunked(
            lambda lo, hi: _edge_subset_kernel(g.n, eu, ev, logw, logcomp, lo, hi), 1 << g.m
        )
    elif method == "dfs":
        r = min(g.m, PREFIX_BITS)
        parts = parallel.chunked(
            lambda lo, hi: _edge_dfs_kernel(g.n, eu, ev, logw, logcomp, r, lo, hi),
            1 << r,
            min_chunk=1 if g.m >= 16 else 1 << r,
        )
    else:
        raise ValueError(f"unknown enumeration method {method!r}")
    return _finish(parts)


def rc_partition(
    g: Graph, p: RCParams, budget: int = EDGE_BUDGET, method: str = "dfs"
) -> LogValue:
    """log Z_G(q, w, B): sum over edge subsets, component factor 1 + (q-1)e^{-B|C|}.

    ``method="reset"`` rebuilds the union-find for every subset; the default
    depth-first walk gives the same sum several times faster.
    """
    _check_edges(g, budget)
    sizes = np.arange(g.n + 1, dtype=np.float64)
    factors = 1.0 + (p.q - 1.0) * np.exp(-p.B * sizes)
    if np.any(factors[1:] <= 0):
        raise DomainError("component factor 1+(q-1)e^{-B|C|} is not positive for these (q, B)")
    logcomp = np.log1p((p.q - 1.0) * np.exp(-p.B * sizes))
    logw = math.log(p.w) if p.w > 0 else -math.inf
    return _run_edge_subsets(g, logw, logcomp, method)


def rc_partition_no_field(
    g: Graph, q: float, w: float, budget: int = EDGE_BUDGET, method: str = "dfs"
) -> LogValue:
    """log of sum over A of q^{k(A)} w^{|A|}."""
    _check_edges(g, budget)
    if not q > 0:
        raise InvalidQ(f"q must be positive, got {q}")
    if w < 0:
        raise ValueError("w must be non-negative")
    logcomp = np.full(g.n + 1, math.log(q))
    logw = math.log(w) if w > 0 else -math.inf
    return _run_edge_subsets(g, logw, logcomp, method)


def potts_partition(g: Graph, q: int, beta: float, B: float, budget: int = POTTS_BUDGET) -> LogValue:
    """log of sum over [q]^V of exp(beta * #monochromatic edges + B * #{sigma_v = 1})."""
    if int(q) != q or q < 2:
        raise InvalidQ(f"Potts model needs an integer q >= 2, got {q}")
    q = int(q)
    total = q ** g.n
    if total > budget:
        raise BudgetExceeded(f"q^n = {q}^{g.n} exceeds budget {budget}")
    eu, ev = _edge_arrays(g)
    parts = parallel.chunked(
        lambda lo, hi: _potts_kernel(g.n, q, eu, ev, float(beta), float(B), lo, hi), total
    )
    return _finish(parts)


def rank2_partition(g: Graph, p: RCParams, budget: int = VERTEX_BUDGET) -> LogValue:
    """log Z^(2)_G(q, w, B), the vertex-bipartition sum."""
    if p.q <= Q_MIN_RANK2:
        raise InvalidQ(f"rank-2 sum needs q > 1, got {p.q}")
    _check_vertices(g, budget)
    a = math.log1p(p.w)
    b = math.log1p(p.w / (p.q - 1.0))
    c = math.log(p.q - 1.0) - p.B
    eu, ev = _edge_arrays(g)
    parts = parallel.chunked(lambda lo, hi: _rank2_kernel(g.n, eu, ev, a, b, c, lo, hi), 1 << g.n)
    return _finish(parts)


def _spin_sum(g: Graph, vlog: np.ndarray, elog: np.ndarray, budget: int) -> float:
    _check_vertices(g, budget)
    eu, ev = _edge_arrays(g)
    vlog = np.ascontiguousarray(vlog, dtype=np.float64)
    elog = np.ascontiguousarray(elog, dtype=np.float64)
    parts = parallel.chunked(lambda lo, hi: _spin_kernel(g.n, eu, ev, vlog, elog, lo, hi), 1 << g.n)
    return _finish(parts)


def two_spin_partition(g: Graph, ws: TwoSpinWeights, budget: int = VERTEX_BUDGET) -> LogValue:
    vlog = np.tile(ws.vertex_log(), (g.n, 1))
    return _spin_sum(g, vlog, ws.edge_log(), budget)


def eising_vertex_log(g: Graph, p: EIsingParams) -> np.ndarray:
    fields = p.k * np.asarray(g.degrees, dtype=np.float64) + p.h
    return np.stack([-fields, fields], axis=1)


def eising_edge_log(beta_star: float) -> np.ndarray:
    return np.array([[beta_star, -beta_star], [-beta_star, beta_star]])


def eising_partition(g: Graph, p: EIsingParams, budget: int = VERTEX_BUDGET) -> LogValue:
    """log of sum over {-1,1}^V of exp(beta* sum_uv s_u s_v + sum_v (k d_v + h) s_v)."""
    return _spin_sum(g, eising_vertex_log(g, p), eising_edge_log(p.beta_star), budget)


def spin_marginals(g: Graph, vlog: np.ndarray, elog: np.ndarray, budget: int = 20) -> np.ndarray:
    """Exact P(sigma_v = '+') for every vertex of a pairwise binary model.

    Plain numpy enumeration; used as an oracle for belief propagation.
    """
    _check_vertices(g, budget)
    n = g.n
    masks = np.arange(1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)) & 1
    logw = vlog[np.arange(n), bits].sum(axis=1)
    for u, v in g.edges:
        logw = logw + elog[bits[:, u], bits[:, v]]
    prob = np.exp(logw - logw.max())
    prob /= prob.sum()
    return prob @ bits


# -- sandwich and identities -----------------------------------------------------

@dataclass(frozen=True)
class SandwichReport:
    log_z: float
    log_z2: float
    log_bound_gap: float  # L * log q, the width of the admissible window
    L: int
    passed: bool

    @property
    def lower_margin(self) -> float:
        return self.log_z - self.log_z2

    @property
    def upper_margin(self) -> float:
        return self.log_z2 + self.log_bound_gap - self.log_z


def sandwich_check(g: Graph, p: RCParams, eps: float = SANDWICH_EPS) -> SandwichReport:
    """Check Z2 <= Z <= q^L(G) Z2 in log space with slack ``eps``."""
    if p.q < 2:
        raise InvalidQ(f"sandwich bounds need q >= 2, got {p.q}")
    if p.B < 0:
        raise DomainError(f"sandwich bounds need B >= 0, got {p.B}")
    log_z = rc_partition(g, p)
    log_z2 = rank2_partition(g, p)
    L = cyclic_components_max(g, budget=EDGE_BUDGET)
    gap = L * math.log(p.q)
    ok = (log_z2 - eps <= log_z) and (log_z <= log_z2 + gap + eps)
    return SandwichReport(log_z, log_z2, gap, L, bool(ok))


def induced_subgraph(g: Graph, keep: list[int]) -> Graph | None:
    """Subgraph induced on ``keep`` relabelled to 0..len-1; None when empty."""
    if not keep:
        return None
    index = {v: i for i, v in enumerate(keep)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    return build_graph(len(keep), edges)


def reduction_rhs(g: Graph, p: RCParams) -> LogValue:
    """log of sum_S e^{B(|S|-n)} (1+w)^{|E(S)|} Z_{G-S}(q-1, w).

    Equal to ``rc_partition`` for every q > 1; evaluated by recursion into
    ``rc_partition_no_field`` on each induced complement.
    """
    if p.q <= 1:
        raise InvalidQ("reduction to q - 1 needs q > 1")
    n = g.n
    terms = []
    for mask in range(1 << n):
        inside = [v for v in range(n) if (mask >> v) & 1]
        outside = [v for v in range(n) if not (mask >> v) & 1]
        e_s = sum(1 for u, v in g.edges if (mask >> u) & 1 and (mask >> v) & 1)
        rest = induced_subgraph(g, outside)
        log_rest = 0.0 if rest is None else rc_partition_no_field(rest, p.q - 1.0, p.w)
        terms.append(p.B * (len(inside) - n) + e_s * math.log1p(p.w) + log_rest)
    return float(np.logaddexp.reduce(terms))


def rank1_lower_bound(g: Graph, q: float, w: float) -> LogValue:
    """log of q^n (1 + w/q)^|E|, a lower bound on the no-field sum."""
    return g.n * math.log(q) + g.m * math.log1p(w / q)
