"""Belief propagation, the Bethe functional and cavity pressure on trees.

Messages live on directed edges.  The message on ``u -> v`` is the log-odds
``log P(s_u = +) / P(s_u = -)`` of the spin at ``u`` in the cavity graph with
the edge ``{u, v}`` removed.  Directed edge ``e`` (0 <= e < m) runs along
``g.edges[e]`` and ``e + m`` is its reverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit
from scipy.special import log_expit

from . import parallel
from .errors import BudgetExceeded, InconsistentMarginals, NoConvergedRun, NonConvergence, SignCondition
from .exact import EIsingParams, TwoSpinWeights, eising_edge_log, eising_vertex_log
from .graphs import Deterministic, Graph, Offspring, OffspringSpec, as_spec, grow_tree
from .rng import stream

Weights = Union[TwoSpinWeights, EIsingParams]

PLUS_INIT = 20.0
RANDOM_INIT = 2.0
CLAMP = 40.0
SUPERMODULAR_BUDGET = 14


def _tables(g: Graph, weights: Weights) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex log psibar of shape (n, 2) and the 2x2 log psi table, index 1 = '+'."""
    if isinstance(weights, EIsingParams):
        return eising_vertex_log(g, weights), eising_edge_log(weights.beta_star)
    return np.tile(weights.vertex_log(), (g.n, 1)), weights.edge_log()


# -- message passing --------------------------------------------------------------

@dataclass
class BPState:
    messages: np.ndarray  # log-odds, length 2m
    sweeps: int = 0
    residual: float = math.inf
    clamped: bool = False

    def copy(self) -> "BPState":
        return BPState(self.messages.copy(), self.sweeps, self.residual, self.clamped)


def _directed(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    e = g.edge_array.reshape(-1, 2)
    src = np.concatenate([e[:, 0], e[:, 1]]).astype(np.int64)
    dst = np.concatenate([e[:, 1], e[:, 0]]).astype(np.int64)
    return src, dst


def _reverse(m: int) -> np.ndarray:
    return np.concatenate([np.arange(m, 2 * m), np.arange(m)])


def bp_init(
    g: Graph, mode: str = "uniform", seed: int = 0, rng: np.random.Generator | None = None
) -> BPState:
    size = 2 * g.m
    if mode == "uniform":
        msg = np.zeros(size)
    elif mode == "plus":
        msg = np.full(size, PLUS_INIT)
    elif mode == "minus":
        msg = np.full(size, -PLUS_INIT)
    elif mode == "random":
        rng = rng if rng is not None else stream(seed)
        msg = rng.uniform(-RANDOM_INIT, RANDOM_INIT, size)
    else:
        raise ValueError(f"unknown init mode {mode!r}")
    return BPState(msg)


def _pass_through(x: np.ndarray, elog: np.ndarray) -> np.ndarray:
    """Log-odds contribution sum_s' psi(sigma, s') m(s') seen by the receiving vertex."""
    lp, lm = log_expit(x), log_expit(-x)
    plus = np.logaddexp(elog[1, 1] + lp, elog[1, 0] + lm)
    minus = np.logaddexp(elog[0, 1] + lp, elog[0, 0] + lm)
    return plus - minus


def _synchronous(g, vfield, elog, x, src, dst, rev):
    c = _pass_through(x, elog)
    incoming = np.bincount(dst, weights=c, minlength=g.n)
    return vfield[src] + incoming[src] - c[rev]


def _sequential(g, vfield, elog, x, src, dst, rev, order, damping):
    x = x.copy()
    c = _pass_through(x, elog)
    incoming = np.bincount(dst, weights=c, minlength=g.n)
    for e in order:
        upd = vfield[src[e]] + incoming[src[e]] - c[rev[e]]
        upd = min(CLAMP, max(-CLAMP, (1.0 - damping) * upd + damping * x[e]))
        x[e] = upd
        cn = float(_pass_through(np.array([upd]), elog)[0])
        incoming[dst[e]] += cn - c[e]
        c[e] = cn
    return x


def bp_step(
    g: Graph,
    weights: Weights,
    s: BPState,
    damping: float = 0.5,
    schedule: str = "synchronous",
    rng: np.random.Generator | None = None,
) -> BPState:
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    vlog, elog = _tables(g, weights)
    vfield = vlog[:, 1] - vlog[:, 0]
    src, dst = _directed(g)
    rev = _reverse(g.m)
    old = s.messages
    if schedule == "synchronous":
        upd = _synchronous(g, vfield, elog, old, src, dst, rev)
        new = (1.0 - damping) * upd + damping * old
    elif schedule == "sequential":
        rng = rng if rng is not None else stream(0, s.sweeps)
        new = _sequential(g, vfield, elog, old, src, dst, rev, rng.permutation(2 * g.m), damping)
    else:
        raise ValueError(f"unknown schedule {schedule!r}")
    clamped = bool(np.any(np.abs(new) >= CLAMP))
    new = np.clip(new, -CLAMP, CLAMP)
    resid = float(np.max(np.abs(new - old))) if new.size else 0.0
    return BPState(new, s.sweeps + 1, resid, clamped)


def bp_run(
    g: Graph,
    weights: Weights,
    init: BPState | None = None,
    max_sweeps: int = 10_000,
    tol: float = 1e-12,
    damping: float = 0.5,
    schedule: str = "synchronous",
    seed: int = 0,
) -> BPState:
    s = init if init is not None else bp_init(g)
    if g.m == 0:
        return BPState(s.messages.copy(), 0, 0.0, False)
    for it in range(max_sweeps):
        rng = stream(seed, it) if schedule == "sequential" else None
        s = bp_step(g, weights, s, damping, schedule, rng)
        if s.residual < tol:
            if s.clamped:
                raise NonConvergence("messages pinned at the clamp bound", s)
            return s
    raise NonConvergence(f"residual {s.residual:.3g} after {max_sweeps} sweeps", s)


# -- Bethe functional ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BetheEvaluation:
    vertex: np.ndarray  # (n, 2), columns (-, +)
    edge: np.ndarray  # (m, 2, 2), indexed (spin_u, spin_v) along g.edges
    log_zb: float = math.nan


def beliefs_from_messages(g: Graph, weights: Weights, s: BPState) -> BetheEvaluation:
    vlog, elog = _tables(g, weights)
    vfield = vlog[:, 1] - vlog[:, 0]
    src, dst = _directed(g)
    x = s.messages
    c = _pass_through(x, elog) if g.m else np.zeros(0)
    xv = vfield + np.bincount(dst, weights=c, minlength=g.n)
    vertex = np.stack([np.exp(log_expit(-xv)), np.exp(log_expit(xv))], axis=1)
    m = g.m
    lu = np.stack([log_expit(-x[:m]), log_expit(x[:m])], axis=1)  # u -> v, spin of u
    lv = np.stack([log_expit(-x[m:]), log_expit(x[m:])], axis=1)  # v -> u, spin of v
    le = lu[:, :, None] + elog[None, :, :] + lv[:, None, :]
    le -= np.logaddexp.reduce(le.reshape(m, 4), axis=1)[:, None, None] if m else 0.0
    return BetheEvaluation(vertex, np.exp(le))


def _xlogy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = a[nz] * np.log(b[nz])
    return out


def check_marginals(g: Graph, ev: BetheEvaluation, tol: float = 1e-8) -> float:
    """Largest violation of normalisation and edge-vertex consistency."""
    err = float(np.max(np.abs(ev.vertex.sum(axis=1) - 1.0), initial=0.0))
    if g.m:
        e = g.edge_array.reshape(-1, 2)
        err = max(err, float(np.max(np.abs(ev.edge.sum(axis=2) - ev.vertex[e[:, 0]]))))
        err = max(err, float(np.max(np.abs(ev.edge.sum(axis=1) - ev.vertex[e[:, 1]]))))
    if np.any(ev.vertex < -tol) or np.any(ev.edge < -tol):
        err = max(err, float(-min(ev.vertex.min(initial=0), ev.edge.min(initial=0))))
    if err > tol:
        raise InconsistentMarginals(f"marginal consistency violated by {err:.3g}")
    return err


def bethe_log_partition(g: Graph, weights: Weights, ev: BetheEvaluation, tol: float = 1e-8) -> float:
    check_marginals(g, ev, tol)
    vlog, elog = _tables(g, weights)
    mu_v = ev.vertex
    total = float(np.sum(mu_v * vlog))
    total -= float(np.sum(_xlogy(mu_v, mu_v)))
    if g.m:
        e = g.edge_array.reshape(-1, 2)
        mu_e = ev.edge
        total += float(np.sum(mu_e * elog[None, :, :]))
        prod = mu_v[e[:, 0]][:, :, None] * mu_v[e[:, 1]][:, None, :]
        ratio = np.divide(mu_e, prod, out=np.ones_like(mu_e), where=prod > 0)
        total -= float(np.sum(_xlogy(mu_e, ratio)))
    return total


def bethe_at(g: Graph, weights: Weights, s: BPState, tol: float = 1e-8) -> BetheEvaluation:
    ev = beliefs_from_messages(g, weights, s)
    return BetheEvaluation(ev.vertex, ev.edge, bethe_log_partition(g, weights, ev, tol))


@dataclass(frozen=True, eq=False)
class BetheMaxResult:
    log_zb: float
    fixed_points: tuple[float, ...]  # distinct values, descending
    converged: int
    failed: int
    best: BetheEvaluation


DISTINCT_TOL = 1e-8


def bethe_max(
    g: Graph,
    weights: Weights,
    restarts: int = 4,
    seed: int = 0,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_sweeps: int = 10_000,
    schedule: str = "synchronous",
) -> BetheMaxResult:
    """Best Bethe value over BP fixed points reached from several starts."""
    inits = [bp_init(g, "uniform"), bp_init(g, "plus"), bp_init(g, "minus")]
    inits += [bp_init(g, "random", rng=stream(seed, i)) for i in range(restarts)]

    def run(s0: BPState):
        try:
            s = bp_run(g, weights, s0, max_sweeps, tol, damping, schedule, seed)
        except NonConvergence:
            return None
        return bethe_at(g, weights, s)

    results = parallel.pmap(run, inits)
    good = [r for r in results if r is not None]
    if not good:
        raise NoConvergedRun(f"none of {len(inits)} BP runs converged")
    good.sort(key=lambda r: -r.log_zb)
    distinct: list[float] = []
    for r in good:
        if all(abs(r.log_zb - v) > DISTINCT_TOL for v in distinct):
            distinct.append(r.log_zb)
    return BetheMaxResult(good[0].log_zb, tuple(distinct), len(good), len(inits) - len(good), good[0])


# -- log-supermodularity ------------------------------------------------------------

@dataclass(frozen=True)
class SupermodularReport:
    holds: bool  # exhaustive check over all spin pairs
    analytic: bool  # psi(++) psi(--) >= psi(+-)^2

    def __bool__(self) -> bool:
        return self.holds


@njit(cache=True, nogil=True)
def _supermodular_kernel(logf):
    size = logf.shape[0]
    for a in range(size):
        for b in range(a + 1, size):
            lhs = logf[a & b] + logf[a | b]
            rhs = logf[a] + logf[b]
            if lhs < rhs - 1e-12 * (1.0 + abs(rhs)):
                return False
    return True


def log_supermodular_check(g: Graph, weights: Weights) -> SupermodularReport:
    if g.n > SUPERMODULAR_BUDGET:
        raise BudgetExceeded(f"supermodularity check needs n <= {SUPERMODULAR_BUDGET}, got {g.n}")
    vlog, elog = _tables(g, weights)
    masks = np.arange(1 << g.n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(g.n)) & 1
    logf = vlog[np.arange(g.n), bits].sum(axis=1)
    for u, v in g.edges:
        logf = logf + elog[bits[:, u], bits[:, v]]
    analytic = elog[1, 1] + elog[0, 0] >= 2.0 * elog[1, 0]
    return SupermodularReport(bool(_supermodular_kernel(np.ascontiguousarray(logf))), bool(analytic))


# -- cavity pressure on Galton-Watson trees -----------------------------------------

@dataclass(frozen=True, eq=False)
class TreePressureEstimate:
    estimate: float  # midpoint of the bracket
    stderr: float
    samples: int
    depth: int
    free: float
    plus: float
    free_stderr: float
    plus_stderr: float
    free_values: np.ndarray = field(repr=False)
    plus_values: np.ndarray = field(repr=False)

    @property
    def width(self) -> float:
        return self.plus - self.free


def _child_terms(x: np.ndarray, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """log sum_s' e^{beta sigma s'} mu(s') for sigma = +, - and child log-odds x."""
    lp, lm = log_expit(x), log_expit(-x)
    return np.logaddexp(beta + lp, -beta + lm), np.logaddexp(-beta + lp, beta + lm)


def _root_pressure(xs: np.ndarray, b_root: float, beta: float) -> float:
    """Phi_vx - Phi_e at a root with field ``b_root`` and child messages ``xs``."""
    if xs.size == 0:
        return float(np.logaddexp(b_root, -b_root))
    ap, am = _child_terms(xs, beta)
    phi_vx = float(np.logaddexp(b_root + ap.sum(), -b_root + am.sum()))
    x_out = 2.0 * b_root + (ap - am).sum() - (ap - am)
    combos = [
        beta + log_expit(xs) + log_expit(x_out),
        -beta + log_expit(-xs) + log_expit(x_out),
        -beta + log_expit(xs) + log_expit(-x_out),
        beta + log_expit(-xs) + log_expit(-x_out),
    ]
    phi_e = 0.5 * float(np.logaddexp.reduce(np.stack(combos), axis=0).sum())
    return phi_vx - phi_e


def _upward(x: np.ndarray, beta: float) -> np.ndarray:
    ap, am = _child_terms(x, beta)
    return ap - am


def _regular_chain(c: int, p: EIsingParams, depth: int) -> tuple[float, float]:
    """Level-1 messages of a tree whose non-root vertices all have ``c`` children."""
    b = p.field(c + 1)
    free, plus = 2.0 * b, math.inf
    for _ in range(depth - 1):
        free = 2.0 * b + c * float(_upward(np.array([free]), p.beta_star)[0])
        plus = 2.0 * b + c * float(_upward(np.array([plus]), p.beta_star)[0])
    return free, plus


def _tree_sample(spec: OffspringSpec, p: EIsingParams, depth: int, rng: np.random.Generator):
    t = grow_tree(spec, depth, rng)
    n = t.graph.n
    parent = np.asarray(t.parent)
    level = np.asarray(t.level)
    fields = p.k * np.asarray(t.full_degree, dtype=np.float64) + p.h
    x_free = 2.0 * fields
    x_plus = 2.0 * fields
    x_plus[level == depth] = math.inf
    for lev in range(depth, 1, -1):
        idx = np.nonzero(level == lev)[0]
        if idx.size == 0:
            continue
        np.add.at(x_free, parent[idx], _upward(x_free[idx], p.beta_star))
        np.add.at(x_plus, parent[idx], _upward(x_plus[idx], p.beta_star))
    kids = np.nonzero(level == 1)[0] if n > 1 else np.zeros(0, dtype=np.int64)
    b_root = fields[0]
    return (
        _root_pressure(x_free[kids], b_root, p.beta_star),
        _root_pressure(x_plus[kids], b_root, p.beta_star),
    )


def tree_pressure_mc(
    spec: Union[OffspringSpec, Offspring],
    p: EIsingParams,
    depth: int,
    samples: int,
    seed: int = 0,
) -> TreePressureEstimate:
    """Monte-Carlo estimate of E[Phi_vx - Phi_e] with free and plus truncation.

    When every non-root vertex has a deterministic number of children the
    subtrees below the root are all identical, so the recursion runs once per
    root degree instead of on an explicit tree of exponential size.
    """
    spec = as_spec(spec)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if samples < 1:
        raise ValueError("need at least one sample")
    degs = spec.degree_support()
    worst = min(p.field(d) for d in degs)
    if not worst > 0:
        raise SignCondition(f"field k*d + h = {worst:.6g} <= 0 for some degree in {degs}")

    if isinstance(spec.interior, Deterministic):
        free1, plus1 = _regular_chain(spec.interior.c, p, depth)
        roots = spec.root.sample(stream(seed, 0), samples)
        cache: dict[int, tuple[float, float]] = {}
        for r in np.unique(roots):
            r = int(r)
            cache[r] = (
                _root_pressure(np.full(r, free1), p.field(r), p.beta_star),
                _root_pressure(np.full(r, plus1), p.field(r), p.beta_star),
            )
        pairs = [cache[int(r)] for r in roots]
    else:
        pairs = parallel.pmap(lambda i: _tree_sample(spec, p, depth, stream(seed, 1, i)), range(samples))

    fv = np.array([a for a, _ in pairs])
    pv = np.array([b for _, b in pairs])

    def se(v: np.ndarray) -> float:
        if v.size < 2 or np.ptp(v) == 0.0:
            return 0.0
        return float(v.std(ddof=1) / math.sqrt(v.size))

    free, plus = float(fv.mean()), float(pv.mean())
    return TreePressureEstimate(
        estimate=0.5 * (free + plus),
        stderr=max(se(fv), se(pv)),
        samples=samples,
        depth=depth,
        free=free,
        plus=plus,
        free_stderr=se(fv),
        plus_stderr=se(pv),
        free_values=fv,
        plus_values=pv,
    )
