"""Parameter bridge RC(q, w, B) -> two-spin weights -> extended Ising (beta*, k, h).

The rank-2 sum equals a two-spin partition function with

    psi(+,+) = 1 + w,  psi(+,-) = 1,  psi(-,-) = 1 + w/(q-1),
    psibar(+) = 1,     psibar(-) = (q-1) e^{-B},

and writing psi(s, s') = e^{B0} e^{beta* s s'} e^{k (s + s')} turns it into an
Ising model whose vertex field k*d_v + h depends on the degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidQ, Positivity
from .exact import EIsingParams, TwoSpinWeights, eising_partition, rank2_partition, two_spin_partition, RCParams
from .graphs import Graph


@dataclass(frozen=True)
class MappedModel:
    two_spin: TwoSpinWeights
    eising: EIsingParams
    B0: float
    log_prefactor_per_vertex: float
    log_prefactor_per_edge: float
    below_q2: bool = False  # q in (1, 2): mapping is finite but the bounds do not apply

    def log_prefactor(self, n: int, m: int) -> float:
        return n * self.log_prefactor_per_vertex + m * self.log_prefactor_per_edge


def _check_q(q: float) -> None:
    if not q > 1:
        raise InvalidQ(f"the two-spin mapping needs q > 1, got {q}")


def rc_to_two_spin(q: float, w: float, B: float) -> TwoSpinWeights:
    _check_q(q)
    if w < 0:
        raise ValueError(f"w must be non-negative, got {w}")
    return TwoSpinWeights(
        psi_pp=1.0 + w,
        psi_pm=1.0,
        psi_mm=1.0 + w / (q - 1.0),
        psibar_p=1.0,
        psibar_m=(q - 1.0) * math.exp(-B),
    )


def two_spin_to_eising(ws: TwoSpinWeights) -> MappedModel:
    """Decompose general positive two-spin weights into (beta*, k, h, B0)."""
    for val in (ws.psi_pp, ws.psi_pm, ws.psi_mm, ws.psibar_p, ws.psibar_m):
        if not val > 0:
            raise Positivity("all two-spin weights must be strictly positive")
    lpp, lpm, lmm = math.log(ws.psi_pp), math.log(ws.psi_pm), math.log(ws.psi_mm)
    lbp, lbm = math.log(ws.psibar_p), math.log(ws.psibar_m)
    h = 0.5 * (lbp - lbm)
    k = 0.25 * (lpp - lmm)
    beta_star = 0.25 * (lpp + lmm - 2.0 * lpm)
    B0 = 0.25 * (lpp + 2.0 * lpm + lmm)
    if beta_star < 0:
        # antiferromagnetic weights are allowed by the decomposition but
        # EIsingParams is restricted to the ferromagnetic side
        raise Positivity(f"psi(++)psi(--) < psi(+-)^2 gives beta* = {beta_star} < 0")
    return MappedModel(
        two_spin=ws,
        eising=EIsingParams(beta_star, k, h),
        B0=B0,
        log_prefactor_per_vertex=0.5 * (lbp + lbm),
        log_prefactor_per_edge=B0,
    )


def rc_to_eising(q: float, w: float, B: float) -> MappedModel:
    """Direct closed forms in log space; agrees with the two-step route."""
    _check_q(q)
    if w < 0:
        raise ValueError(f"w must be non-negative, got {w}")
    lp = math.log1p(w)
    lm = math.log1p(w / (q - 1.0))
    lq = math.log(q - 1.0)
    beta_star = 0.25 * (lp + lm)
    return MappedModel(
        two_spin=rc_to_two_spin(q, w, B),
        eising=EIsingParams(beta_star, 0.25 * (lp - lm), 0.5 * (B - lq)),
        B0=beta_star,
        log_prefactor_per_vertex=0.5 * (lq - B),
        log_prefactor_per_edge=beta_star,
        below_q2=q < 2,
    )


@dataclass(frozen=True)
class IdentityResiduals:
    log_z2: float
    eising_residual: float
    two_spin_residual: float

    def ok(self, tol: float = 1e-10) -> bool:
        return self.eising_residual < tol and self.two_spin_residual < tol


def assemble_identities(g: Graph, q: float, w: float, B: float) -> IdentityResiduals:
    """Residuals of log Z2 against the extended-Ising and two-spin representations."""
    mm = rc_to_eising(q, w, B)
    log_z2 = rank2_partition(g, RCParams(q, w, B))
    via_eising = mm.log_prefactor(g.n, g.m) + eising_partition(g, mm.eising)
    via_two_spin = two_spin_partition(g, mm.two_spin)
    return IdentityResiduals(log_z2, abs(log_z2 - via_eising), abs(log_z2 - via_two_spin))
