"""Finite simple graphs, random generators and cycle-structure statistics.

The cycle statistics are exact and exponential-time: ``cyclic_components_max``
enumerates all edge subsets, ``disjoint_cycles_max`` enumerates all cycles of a
given length and packs them exhaustively.  Both raise ``BudgetExceeded``
rather than approximate.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from numba import njit

from .errors import (
    BudgetExceeded,
    DuplicateEdge,
    GenerationFailure,
    IndexOutOfRange,
    ParityError,
    SelfLoop,
)
from .rng import stream

DEFAULT_EDGE_BUDGET = 22
TREE_BUDGET = 1 << 21


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Edges are stored as ``(u, v)`` with ``u < v`` in insertion order.  Build
    instances through :func:`build_graph`, which validates the invariants.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    degrees: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        object.__setattr__(self, "degrees", tuple(deg))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        arr = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        return arr

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(x) for x in nbrs)

    def is_forest(self) -> bool:
        return self.m == self.n - num_components(self)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    if n < 1:
        raise ValueError(f"vertex count must be positive, got {n}")
    seen: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise IndexOutOfRange(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise DuplicateEdge(f"edge {key} appears twice")
        seen.add(key)
        out.append(key)
    return Graph(n, tuple(out))


# -- small named graphs used throughout tests and the CLI ------------------

def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def disjoint_union(g: Graph, h: Graph) -> Graph:
    shifted = [(u + g.n, v + g.n) for u, v in h.edges]
    return build_graph(g.n + h.n, list(g.edges) + shifted)


def num_components(g: Graph) -> int:
    parent = list(range(g.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = g.n
    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    return comps


# -- text format ------------------------------------------------------------

def format_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines()]
    rows = [r for r in rows if r and not r[0].startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError("graph text must start with a line 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise ValueError(f"header announces {m} edges, found {len(body)}")
    for r in body:
        if len(r) != 2:
            raise ValueError(f"malformed edge line: {' '.join(r)!r}")
    return build_graph(n, [(int(a), int(b)) for a, b in body])


def read_graph(path: Union[str, Path]) -> Graph:
    return parse_graph(Path(path).read_text())


def write_graph(g: Graph, path: Union[str, Path]) -> None:
    Path(path).write_text(format_graph(g))


# -- random generators --------------------------------------------------------

def gen_random_regular(n: int, d: int, seed: int, max_attempts: int = 10_000) -> Graph:
    """Uniform simple d-regular graph by configuration-model rejection.

    The whole stub pairing is redrawn whenever it contains a loop or a
    repeated pair, so the accepted graph is uniform over simple d-regular
    graphs on ``n`` labelled vertices.
    """
    if (n * d) % 2:
        raise ParityError(f"n*d = {n * d} is odd")
    if not 0 <= d < n:
        raise ValueError(f"need 0 <= d < n, got d={d}, n={n}")
    rng = stream(seed)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_attempts):
        perm = rng.permutation(stubs).reshape(-1, 2)
        u = perm.min(axis=1)
        v = perm.max(axis=1)
        if np.any(u == v):
            continue
        keys = u * n + v
        if np.unique(keys).size != keys.size:
            continue
        order = np.argsort(keys, kind="stable")
        return build_graph(n, zip(u[order].tolist(), v[order].tolist()))
    raise GenerationFailure(
        f"no simple {d}-regular pairing on {n} vertices in {max_attempts} attempts"
    )


def gen_random_graph(n: int, m: int, seed: int) -> Graph:
    """Uniform simple graph with ``n`` vertices and ``m`` edges."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if m > len(pairs):
        raise ValueError(f"at most {len(pairs)} edges fit on {n} vertices")
    rng = stream(seed)
    pick = np.sort(rng.choice(len(pairs), size=m, replace=False))
    return build_graph(n, [pairs[i] for i in pick])


def gen_random_tree(n: int, seed: int) -> Graph:
    """Uniform labelled tree via a random Prufer sequence."""
    if n <= 2:
        return path_graph(n)
    rng = stream(seed)
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(n) if degree[i] == 1]
    edges.append((u, v))
    return build_graph(n, edges)


# -- rooted Galton-Watson trees -------------------------------------------------

@dataclass(frozen=True)
class Deterministic:
    c: int

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("offspring count must be non-negative")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.c, dtype=np.int64)

    def support(self) -> tuple[int, ...]:
        return (self.c,)


@dataclass(frozen=True)
class Tabulated:
    probs: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        if not p or any(x < 0 for x in p):
            raise ValueError("offspring probabilities must be non-negative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"offspring probabilities sum to {math.fsum(p)!r}, not 1")
        object.__setattr__(self, "probs", p)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > 0)


Offspring = Union[Deterministic, Tabulated]


@dataclass(frozen=True)
class OffspringSpec:
    """Offspring law of the root and of every later generation."""

    root: Offspring
    interior: Offspring

    def degree_support(self) -> tuple[int, ...]:
        """Possible vertex degrees in the untruncated tree."""
        degs = set(self.root.support())
        degs.update(c + 1 for c in self.interior.support())
        return tuple(sorted(degs))


def regular_tree_spec(d: int) -> OffspringSpec:
    """Local limit of d-regular graphs: root has d children, others d - 1."""
    return OffspringSpec(Deterministic(d), Deterministic(d - 1))


def as_spec(spec: Union[OffspringSpec, Offspring]) -> OffspringSpec:
    if isinstance(spec, OffspringSpec):
        return spec
    return OffspringSpec(spec, spec)


@dataclass(frozen=True)
class RootedTree:
    """A tree truncated at ``depth`` generations below ``root``.

    ``full_degree[v]`` is the degree of ``v`` in the untruncated tree: for
    vertices in the last generation the offspring count is sampled but the
    children are not materialised.
    """

    graph: Graph
    root: int
    parent: tuple[int, ...]
    level: tuple[int, ...]
    full_degree: tuple[int, ...]

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in range(self.graph.n)]
        for v, p in enumerate(self.parent):
            if p >= 0:
                ch[p].append(v)
        return tuple(tuple(c) for c in ch)


def gen_gw_tree(
    spec: Union[OffspringSpec, Offspring], depth: int, seed: int, max_vertices: int = TREE_BUDGET
) -> RootedTree:
    if depth < 0:
        raise ValueError("depth must be non-negative")
    spec = as_spec(spec)
    rng = stream(seed)
    return grow_tree(spec, depth, rng, max_vertices)


def grow_tree(
    spec: OffspringSpec, depth: int, rng: np.random.Generator, max_vertices: int = TREE_BUDGET
) -> RootedTree:
    parent = [-1]
    level = [0]
    full_degree = [0]
    edges: list[tuple[int, int]] = []
    frontier = [0]
    for gen in range(depth + 1):
        law = spec.root if gen == 0 else spec.interior
        counts = law.sample(rng, len(frontier)).tolist()
        for v, c in zip(frontier, counts):
            full_degree[v] = c + (0 if gen == 0 else 1)
        if gen == depth:
            break
        if len(parent) + sum(counts) > max_vertices:
            raise BudgetExceeded(f"truncated tree exceeds {max_vertices} vertices at generation {gen + 1}")
        nxt = []
        for v, c in zip(frontier, counts):
            for _ in range(c):
                w = len(parent)
                parent.append(v)
                level.append(gen + 1)
                full_degree.append(0)
                edges.append((v, w))
                nxt.append(w)
        frontier = nxt
    g = build_graph(len(parent), edges)
    return RootedTree(g, 0, tuple(parent), tuple(level), tuple(full_degree))


# -- cycle statistics -----------------------------------------------------------

@njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _cyclic_max_kernel(n, eu, ev, bound):
    m = eu.shape[0]
    parent = np.empty(n, np.int64)
    cyc = np.empty(n, np.bool_)
    best = 0
    for mask in range(1 << m):
        for i in range(n):
            parent[i] = i
            cyc[i] = False
        for j in range(m):
            if (mask >> j) & 1:
                a = _find(parent, eu[j])
                b = _find(parent, ev[j])
                if a == b:
                    cyc[a] = True
                else:
                    parent[a] = b
                    cyc[b] = cyc[b] or cyc[a]
        count = 0
        for i in range(n):
            if parent[i] == i and cyc[i]:
                count += 1
        if count > best:
            best = count
            if best >= bound:
                break
    return best


def cyclic_components_max(g: Graph, budget: int = DEFAULT_EDGE_BUDGET) -> int:
    """Largest number of cycle-containing components over all spanning subgraphs."""
    if g.m > budget:
        raise BudgetExceeded(f"{g.m} edges exceeds the enumeration budget of {budget}")
    # each cyclic component needs >= 3 vertices and one independent cycle
    bound = min(g.n // 3, g.m - g.n + num_components(g))
    if bound <= 0:
        return 0
    ea = g.edge_array
    return int(_cyclic_max_kernel(g.n, ea[:, 0].copy(), ea[:, 1].copy(), bound))


def cycles_of_length(g: Graph, i: int) -> list[frozenset[int]]:
    """Vertex sets of all length-``i`` cycles (each cycle listed once)."""
    adj = [set(a) for a in g.adjacency]
    found: set[frozenset[int]] = set()
    out: list[frozenset[int]] = []
    for s in range(g.n):
        # cycles whose smallest vertex is s
        stack = [(s, (s,))]
        while stack:
            v, path = stack.pop()
            if len(path) == i:
                if s in adj[v]:
                    key = frozenset(path)
                    # the same vertex set can carry several distinct cycles;
                    # for disjointness only the vertex set matters
                    if key not in found:
                        found.add(key)
                        out.append(key)
                continue
            for w in adj[v]:
                if w > s and w not in path:
                    stack.append((w, path + (w,)))
    return out


def disjoint_cycles_max(g: Graph, i: int, max_cycles: int = 5_000) -> int:
    """Maximum number of vertex-disjoint cycles of length exactly ``i``."""
    if i < 3:
        return 0
    if g.n > 64:
        raise BudgetExceeded(f"{g.n} vertices exceeds the exhaustive-search budget of 64")
    cycles = cycles_of_length(g, i)
    if len(cycles) > max_cycles:
        raise BudgetExceeded(f"{len(cycles)} cycles of length {i} exceeds budget {max_cycles}")
    masks = sorted({sum(1 << v for v in c) for c in cycles})
    cap = g.n // i
    best = 0

    def search(start: int, used: int, count: int) -> None:
        nonlocal best
        if count > best:
            best = count
        if best >= cap:
            return
        # remaining disjoint cycles can use at most the free vertices
        free = g.n - bin(used).count("1")
        if count + free // i <= best:
            return
        for k in range(start, len(masks)):
            if not masks[k] & used:
                search(k + 1, used | masks[k], count + 1)
                if best >= cap:
                    return

    search(0, 0, 0)
    return best


def cycle_bound_rhs(g: Graph, k: int) -> float:
    """Right-hand side n/k + sum_{i=3}^{k-1} L_i(G) of the cycle-count bound."""
    if k < 4:
        raise ValueError("k must be at least 4")
    return g.n / k + sum(disjoint_cycles_max(g, i) for i in range(3, k))


def bfs_levels(g: Graph, root: int) -> list[int]:
    dist = [-1] * g.n
    dist[root] = 0
    q = deque([root])
    while q:
        v = q.popleft()
        for w in g.adjacency[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist
