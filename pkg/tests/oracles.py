"""Slow reference implementations that share no code with the package.

Everything here is plain Python over exact rationals or networkx, so it can
serve as ground truth for the numba kernels.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import networkx as nx
from hypothesis import strategies as st

from rclab.graphs import Graph, build_graph


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def subsets(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def rc_exact(g: Graph, q: int, w: Fraction) -> Fraction:
    """Sum over A of q^{k(A)} w^{|A|} in exact arithmetic (no field)."""
    total = Fraction(0)
    for A in subsets(list(g.edges)):
        h = nx.Graph()
        h.add_nodes_from(range(g.n))
        h.add_edges_from(A)
        total += Fraction(q) ** nx.number_connected_components(h) * w ** len(A)
    return total


def rc_float(g: Graph, q: float, w: float, B: float) -> float:
    total = 0.0
    for A in subsets(list(g.edges)):
        h = nx.Graph()
        h.add_nodes_from(range(g.n))
        h.add_edges_from(A)
        term = w ** len(A)
        for comp in nx.connected_components(h):
            term *= 1.0 + (q - 1.0) * math.exp(-B * len(comp))
        total += term
    return math.log(total)


def rank2_float(g: Graph, q: float, w: float, B: float) -> float:
    total = 0.0
    for S in subsets(list(range(g.n))):
        s = set(S)
        e_in = sum(1 for u, v in g.edges if u in s and v in s)
        e_out = sum(1 for u, v in g.edges if u not in s and v not in s)
        total += (1 + w) ** e_in * (1 + w / (q - 1)) ** e_out * ((q - 1) * math.exp(-B)) ** (g.n - len(s))
    return math.log(total)


def potts_float(g: Graph, q: int, beta: float, B: float) -> float:
    total = 0.0
    for sigma in itertools.product(range(q), repeat=g.n):
        mono = sum(1 for u, v in g.edges if sigma[u] == sigma[v])
        ones = sum(1 for s in sigma if s == 0)
        total += math.exp(beta * mono + B * ones)
    return math.log(total)


def max_disjoint_cycles(g: Graph) -> int:
    """Largest family of vertex-disjoint cycles of any lengths."""
    cycles = {frozenset(c) for c in nx.simple_cycles(to_nx(g)) if len(c) >= 3}
    cycles = sorted(cycles, key=len)
    best = 0

    def go(i: int, used: frozenset, count: int) -> None:
        nonlocal best
        best = max(best, count)
        for j in range(i, len(cycles)):
            if not cycles[j] & used:
                go(j + 1, used | cycles[j], count + 1)

    go(0, frozenset(), 0)
    return best


def max_disjoint_cycles_of_length(g: Graph, i: int) -> int:
    cycles = sorted({frozenset(c) for c in nx.simple_cycles(to_nx(g), length_bound=i) if len(c) == i}, key=sorted)
    best = 0
    for r in range(len(cycles) + 1):
        found = False
        for combo in itertools.combinations(cycles, r):
            if sum(len(c) for c in combo) == len(frozenset().union(*combo)):
                found = True
                break
        if not found:
            break
        best = r
    return best


@st.composite
def small_graphs(draw, max_n: int = 7, max_m: int = 12, min_n: int = 1):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=min(max_m, len(pairs)))) if pairs else []
    return build_graph(n, chosen)
