"""Pressure and phase diagram on locally tree-like d-regular graphs.

The Ising pressure is a one-dimensional variational problem

    phi_ising(beta, z) = beta d / 2 + sup_t [H(t) + d F_b(t) + z (2t - 1)],

with b = e^{-2 beta}, H the binary entropy and F_b the integral of log f_b.
The random cluster pressure follows from it through the extended Ising
mapping, and the critical curve is where the effective field k d + h
vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import parallel
from .errors import DomainError, InvalidQ, QuadratureFailure, RootNotBracketed, Singularity
from .mapping import rc_to_eising

GRID_POINTS = 2001
GOLDEN_TOL = 1e-12
QUAD_TOL = 1e-11
GAP_THRESHOLD = 1e-3
PROBE_STEP = 1e-4
T_GAP_MIN = 1e-6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _check_b(b: float) -> None:
    if not (b > 0 and math.isfinite(b)):
        raise DomainError(f"b = e^(-2 beta) must be positive and finite, got {b}")


def _f_b(s, b):
    u = 1.0 - 2.0 * s
    return (b * u + np.sqrt(1.0 + (b * b - 1.0) * u * u)) / (2.0 * (1.0 - s))


def f_b(s: float, b: float) -> float:
    _check_b(b)
    if not 0.0 <= s <= 0.5:
        raise DomainError(f"f_b needs 0 <= s <= 1/2, got {s}")
    return float(_f_b(s, b))


def F_b(t: float, b: float, tol: float = QUAD_TOL) -> float:
    """Integral of log f_b over [0, min(t, 1 - t)]."""
    _check_b(b)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"F_b needs 0 <= t <= 1, got {t}")
    upper = min(t, 1.0 - t)
    if upper == 0.0 or b == 1.0:
        return 0.0
    res = integrate.quad(
        lambda s: math.log(_f_b(s, b)), 0.0, upper, epsabs=tol, epsrel=0.0, limit=200, full_output=1
    )
    # a fourth element is the warning message quad attaches when ier > 0
    if len(res) > 3 or res[1] > tol:
        raise QuadratureFailure(f"F_b({t}, {b}): error estimate {res[1]:.3g} above {tol:.3g}")
    return float(res[0])


def dF_b(t: float, b: float) -> float:
    """Derivative of F_b in t."""
    if t <= 0.5:
        return math.log(_f_b(t, b))
    return -math.log(_f_b(1.0 - t, b))


def _entropy(t):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(t * np.log(t) + (1.0 - t) * np.log1p(-t))
    return np.where((t <= 0.0) | (t >= 1.0), 0.0, h)


def L(beta: float, t: float, d: int, tol: float = QUAD_TOL) -> float:
    return float(_entropy(t)) + d * F_b(t, math.exp(-2.0 * beta), tol)


def G(beta: float, z: float, t: float, d: int, tol: float = QUAD_TOL) -> float:
    return L(beta, t, d, tol) + z * (2.0 * t - 1.0)


def _G_prime(beta: float, z: float, t: float, d: int) -> float:
    return math.log((1.0 - t) / t) + d * dF_b(t, math.exp(-2.0 * beta)) + 2.0 * z


def _grid_F(b: float, grid: np.ndarray) -> np.ndarray:
    """F_b on a uniform grid of [0, 1] by Gauss-Legendre cell integrals."""
    half = grid[grid <= 0.5]
    lo, hi = half[:-1], half[1:]
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid[:, None] + rad[:, None] * _GL_NODES[None, :]
    cells = (np.log(_f_b(nodes, b)) * _GL_WEIGHTS[None, :]).sum(axis=1) * rad
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    # grid is symmetric about 1/2, so F(t) = F(1 - t) is a reversal
    return np.concatenate([cum, cum[-2::-1]])


def _golden(fun, a: float, c: float, tol: float = GOLDEN_TOL) -> float:
    """Maximise a unimodal ``fun`` on [a, c]."""
    r = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = c - r * (c - a), a + r * (c - a)
    f1, f2 = fun(x1), fun(x2)
    while c - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + r * (c - a)
            f2 = fun(x2)
        else:
            c, x2, f2 = x2, x1, f1
            x1 = c - r * (c - a)
            f1 = fun(x1)
        if x1 >= x2:  # interval collapsed below float resolution
            break
    return 0.5 * (a + c)


def _polish(beta: float, z: float, d: int, t: float, lo: float, hi: float) -> float:
    """Root of G' near a golden-section estimate, if one is bracketed."""
    for width in (1e-9, 1e-7, 1e-5, 1e-3):
        a, c = max(lo, t - width), min(hi, t + width)
        if not 0.0 < a < c < 1.0:
            continue
        ga, gc = _G_prime(beta, z, a, d), _G_prime(beta, z, c, d)
        if ga > 0 > gc:
            return float(optimize.brentq(lambda s: _G_prime(beta, z, s, d), a, c, xtol=1e-15, rtol=8.9e-16))
        if ga == 0.0:
            return a
        if gc == 0.0:
            return c
    return t


@dataclass(frozen=True)
class VariationalSolution:
    t_star: float
    value: float  # sup_t G
    beta: float
    z: float
    d: int
    t_plus: float  # maximiser on the t >= 1/2 branch at z = 0, else t_star
    t_minus: float


def maximize_G(beta: float, z: float, d: int, tol: float = QUAD_TOL) -> VariationalSolution:
    if not beta >= 0:
        raise DomainError(f"beta must be non-negative, got {beta}")
    if d < 1:
        raise DomainError(f"degree must be positive, got {d}")
    b = math.exp(-2.0 * beta)
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    gvals = _entropy(grid) + d * _grid_F(b, grid) + z * (2.0 * grid - 1.0)
    first = GRID_POINTS // 2 if z == 0.0 else 0
    last = GRID_POINTS - 1
    # endpoint cells count too: a sharp peak can sit between the last node and t = 1
    peaks = [
        i for i in range(first, GRID_POINTS)
        if (i == first or gvals[i] >= gvals[i - 1]) and (i == last or gvals[i] >= gvals[i + 1])
    ]
    fun = lambda t: G(beta, z, t, d, tol)
    best_t, best_v = math.nan, -math.inf
    for i in peaks:
        lo = grid[max(i - 1, first)]
        hi = grid[min(i + 1, last)]
        t = _golden(fun, lo, hi)
        t = _polish(beta, z, d, t, lo, hi)
        v = fun(t)
        if v > best_v:
            best_t, best_v = t, v
    if z == 0.0:
        return VariationalSolution(best_t, best_v, beta, z, d, best_t, 1.0 - best_t)
    return VariationalSolution(best_t, best_v, beta, z, d, best_t, best_t)


def phi_ising(beta: float, z: float, d: int, tol: float = QUAD_TOL) -> float:
    return beta * d / 2.0 + maximize_G(beta, z, d, tol).value


def beta_c_ising(d: int) -> float:
    return 0.5 * math.log(d / (d - 2.0))


def _check_rc(q: float, w: float, B: float, d: int) -> None:
    if not q >= 2:
        raise InvalidQ(f"regular-graph pressure needs q >= 2, got {q}")
    if not w >= 0:
        raise DomainError(f"w must be non-negative, got {w}")
    if not B >= 0:
        raise DomainError(f"B must be non-negative, got {B}")
    if d < 3:
        raise DomainError(f"degree must be at least 3, got {d}")


def effective_field(q: float, w: float, B: float, d: int) -> tuple[float, float]:
    """(beta*, z = k d + h) for the d-regular extended Ising model."""
    mm = rc_to_eising(q, w, B)
    return mm.eising.beta_star, mm.eising.field(d)


def phi_rc_regular(q: float, w: float, B: float, d: int, tol: float = QUAD_TOL) -> float:
    _check_rc(q, w, B, d)
    mm = rc_to_eising(q, w, B)
    beta_star = mm.eising.beta_star
    return beta_star * d / 2.0 + mm.log_prefactor_per_vertex + phi_ising(beta_star, mm.eising.field(d), d, tol)


def _dF_dbeta(t: float, b: float) -> float:
    """Derivative of F_b(t) in beta, through b = e^{-2 beta}."""
    upper = min(t, 1.0 - t)
    if upper == 0.0:
        return 0.0

    def dlogf_db(s: float) -> float:
        u = 1.0 - 2.0 * s
        r = math.sqrt(1.0 + (b * b - 1.0) * u * u)
        return (u + b * u * u / r) / (b * u + r)

    val = integrate.quad(dlogf_db, 0.0, upper, epsabs=QUAD_TOL, epsrel=0.0, limit=200)[0]
    return -2.0 * b * val


def dphi_dw(q: float, w: float, B: float, d: int, sol: VariationalSolution | None = None) -> float:
    """Derivative of phi_rc_regular in w by the envelope theorem.

    On the critical curve (z = 0) the value uses the t >= 1/2 branch, i.e.
    the right derivative.
    """
    _check_rc(q, w, B, d)
    beta_star, z = effective_field(q, w, B, d)
    if sol is None:
        sol = maximize_G(beta_star, z, d)
    dbeta = 0.25 * (1.0 / (1.0 + w) + 1.0 / (q - 1.0 + w))
    dz = 0.25 * d * (1.0 / (1.0 + w) - 1.0 / (q - 1.0 + w))
    dphi_dbeta = d / 2.0 + d / 2.0 + d * _dF_dbeta(sol.t_plus, math.exp(-2.0 * beta_star))
    return dbeta * dphi_dbeta + (2.0 * sol.t_plus - 1.0) * dz


# -- critical curve -----------------------------------------------------------------

def ell_qd(x: float, q: float, d: int) -> float:
    if not x > 0:
        raise DomainError(f"ell_qd needs x > 0, got {x}")
    a = (2.0 / d) * math.log(x)
    den = -math.expm1(a - math.log(q - 1.0))
    if abs(den) < 1e-15:
        raise Singularity(f"x^(2/d) = q - 1 at x = {x}, q = {q}, d = {d}")
    return math.expm1(a) / den


def w_c(B: float, q: float, d: int) -> float:
    """Critical edge weight, where k d + h = 0.

    q = 2, B = 0 is 0/0 in the closed form; the value returned there is the
    q -> 2 limit 2/(d - 2).
    """
    if not B >= 0:
        raise DomainError(f"B must be non-negative, got {B}")
    if q == 2.0 and B == 0.0:
        return 2.0 / (d - 2.0)
    if not q > 2:
        raise InvalidQ(f"the critical curve needs q > 2, got {q}")
    return ell_qd((q - 1.0) * math.exp(-B), q, d)


def g_w(w: float, q: float) -> float:
    return (1.0 + w) * (1.0 + w / (q - 1.0))


def find_B_plus(q: float, d: int) -> float:
    """Unique B > 0 with g(w_c(B)) = (d / (d - 2))^2."""
    if not q > 2:
        raise InvalidQ(f"B_+ needs q > 2, got {q}")
    if d < 3:
        raise DomainError(f"degree must be at least 3, got {d}")
    target = (d / (d - 2.0)) ** 2
    resid = lambda B: g_w(w_c(B, q, d), q) - target
    hi = math.log(q - 1.0)
    if not (resid(0.0) > 0 > resid(hi)):
        raise RootNotBracketed(f"g(w_c(B)) - {target} does not change sign on [0, {hi}]")
    root = optimize.bisect(resid, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=400)
    if abs(resid(root)) >= 1e-10:
        raise RootNotBracketed(f"bisection stalled with residual {resid(root):.3g}")
    return float(root)


@dataclass(frozen=True)
class PhasePoint:
    w: float
    B: float
    phi: float
    dphi_dw_minus: float
    dphi_dw_plus: float
    gap: float
    first_order: bool
    t_gap: float  # 2 t_{beta*, 0+} - 1, the jump of d(phi_ising)/dz at z = 0
    beta_star: float


def transition_probe(
    q: float, d: int, B: float, step: float = PROBE_STEP, w: float | None = None
) -> PhasePoint:
    """One-sided w-derivatives of the pressure at w_c(B), or at ``w`` if given."""
    if w is None:
        if q == 2.0 and B != 0.0:
            raise DomainError("for q = 2 and B > 0 there is no critical weight; pass w")
        w = max(w_c(B, q, d), 2.0 * step)
    _check_rc(q, w, B, d)
    if w < step:
        raise DomainError(f"need w >= step for a left derivative, got w = {w}")
    phi = lambda x: phi_rc_regular(q, x, B, d)
    p0 = phi(w)

    def one_sided(sign: int) -> float:
        d1 = sign * (phi(w + sign * step) - p0) / step
        d2 = sign * (phi(w + sign * step / 2.0) - p0) / (step / 2.0)
        return 2.0 * d2 - d1

    left, right = one_sided(-1), one_sided(+1)
    beta_star, _ = effective_field(q, w, B, d)
    t_plus = maximize_G(beta_star, 0.0, d).t_plus
    gap = right - left
    return PhasePoint(w, B, p0, left, right, gap, abs(gap) > GAP_THRESHOLD, 2.0 * t_plus - 1.0, beta_star)


# -- grids --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    w: float
    B: float
    phi: float
    t_plus: float
    t_minus: float
    dphi_dw: float


def _scan_point(q: float, d: int, w: float, B: float) -> ScanRow:
    _check_rc(q, w, B, d)
    mm = rc_to_eising(q, w, B)
    beta_star, z = mm.eising.beta_star, mm.eising.field(d)
    sol = maximize_G(beta_star, z, d)
    # the outer beta* d / 2 is the per-edge prefactor, the inner one belongs to phi_ising
    phi = beta_star * d / 2.0 + mm.log_prefactor_per_vertex + (beta_star * d / 2.0 + sol.value)
    return ScanRow(w, B, phi, sol.t_plus, sol.t_minus, dphi_dw(q, w, B, d, sol))


def scan(q: float, d: int, ws, Bs) -> list[ScanRow]:
    """Pressure over a (w, B) grid, B-major then w-minor."""
    pts = [(float(w), float(B)) for B in Bs for w in ws]
    return parallel.pmap(lambda p: _scan_point(q, d, *p), pts)


@dataclass(frozen=True)
class CurveRow:
    B: float
    w_c: float
    beta_star: float
    g: float
    first_order: bool
    gap: float
    t_gap: float


def trace_curve(q: float, d: int, Bs, step: float = PROBE_STEP) -> tuple[list[CurveRow], float, float]:
    """Critical curve over the B values in [0, B_+); returns rows, B_+ and its residual."""
    b_plus = find_B_plus(q, d)
    target = (d / (d - 2.0)) ** 2
    resid = abs(g_w(w_c(b_plus, q, d), q) - target)
    keep = [float(B) for B in Bs if 0.0 <= B < b_plus]

    def row(B: float) -> CurveRow:
        wc = w_c(B, q, d)
        pp = transition_probe(q, d, B, step)
        return CurveRow(B, wc, pp.beta_star, g_w(wc, q), pp.first_order, pp.gap, pp.t_gap)

    return parallel.pmap(row, keep), b_plus, resid
