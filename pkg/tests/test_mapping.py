from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from rclab.errors import InvalidQ, Positivity
from rclab.exact import RCParams, TwoSpinWeights, eising_partition, EIsingParams, rank2_partition, rc_partition, two_spin_partition
from rclab.graphs import build_graph, cycle_graph, path_graph
from rclab.mapping import assemble_identities, rc_to_eising, rc_to_two_spin, two_spin_to_eising

from .oracles import small_graphs

qs = st.floats(2.0, 8.0)
ws = st.floats(0.0, 10.0)
Bs = st.floats(0.0, 5.0)


def weights(ws_):
    return (ws_.psi_pp, ws_.psi_pm, ws_.psi_mm), (ws_.psibar_p, ws_.psibar_m)


class TestTwoSpin:
    def test_examples(self):
        assert weights(rc_to_two_spin(2, 1, 0)) == ((2, 1, 2), (1, 1))
        assert weights(rc_to_two_spin(3, 1, 0)) == ((2, 1, 1.5), (1, 2))
        psi, bar = weights(rc_to_two_spin(3, 0, math.log(2)))
        assert psi == (1, 1, 1) and bar == pytest.approx((1, 1), abs=1e-15)

    def test_rejects(self):
        with pytest.raises(InvalidQ):
            rc_to_two_spin(1.0, 1, 0)
        with pytest.raises(Positivity):
            TwoSpinWeights(1, 1, 1, 1, 0)

    def test_partition_examples(self):
        ones = TwoSpinWeights(1, 1, 1, 1, 1)
        assert two_spin_partition(cycle_graph(4), ones) == pytest.approx(4 * math.log(2))
        assert two_spin_partition(path_graph(2), rc_to_two_spin(3, 1, 0)) == pytest.approx(math.log(12))


class TestEising:
    def test_q2(self):
        for w in (0.0, 0.5, 3.0):
            mm = two_spin_to_eising(rc_to_two_spin(2, w, 0.7))
            assert mm.eising.k == pytest.approx(0, abs=1e-15)
            assert mm.eising.beta_star == pytest.approx(0.5 * math.log1p(w))

    def test_q3_w1(self):
        e = two_spin_to_eising(rc_to_two_spin(3, 1, 0)).eising
        assert e.beta_star == pytest.approx(0.27465307216702742285, abs=1e-15)
        assert e.k == pytest.approx(0.07192051811294523186, abs=1e-15)

    def test_zero_field_point(self):
        for q in (2.5, 3, 7):
            assert rc_to_eising(q, 1.3, math.log(q - 1)).eising.h == pytest.approx(0, abs=1e-15)

    def test_antiferromagnet_rejected(self):
        with pytest.raises(Positivity):
            two_spin_to_eising(TwoSpinWeights(1, 2, 1, 1, 1))

    def test_partition_examples(self):
        v = build_graph(1, [])
        assert eising_partition(v, EIsingParams(0.8, 0.3, 0.4)) == pytest.approx(math.log(2 * math.cosh(0.4)))
        assert eising_partition(path_graph(2), EIsingParams(0, 0, 0.7)) == pytest.approx(2 * math.log(2 * math.cosh(0.7)))

    def test_below_two_flag(self):
        assert rc_to_eising(1.5, 1, 0).below_q2
        assert not rc_to_eising(2.0, 1, 0).below_q2

    @given(st.floats(1.01, 8.0), ws, st.floats(-5.0, 5.0))
    def test_direct_route_matches_two_step(self, q, w, B):
        a = rc_to_eising(q, w, B)
        b = two_spin_to_eising(rc_to_two_spin(q, w, B))
        for x, y in [
            (a.eising.beta_star, b.eising.beta_star),
            (a.eising.k, b.eising.k),
            (a.eising.h, b.eising.h),
            (a.B0, b.B0),
            (a.log_prefactor_per_vertex, b.log_prefactor_per_vertex),
        ]:
            assert x == pytest.approx(y, abs=1e-12)

    @given(qs, ws, Bs)
    def test_beta_star_is_B0_and_product_identity(self, q, w, B):
        mm = rc_to_eising(q, w, B)
        assert mm.B0 == mm.eising.beta_star
        lhs = 4 * mm.eising.beta_star
        assert lhs == pytest.approx(math.log((1 + w) * (1 + w / (q - 1))), abs=1e-12)

    @given(st.floats(2.01, 8.0), ws, Bs)
    def test_sign_regimes(self, q, w, B):
        e = rc_to_eising(q, w, B).eising
        assert (e.k > 0) == (w > 0)
        if abs(B - math.log(q - 1)) > 1e-12:
            assert (e.h >= 0) == (B >= math.log(q - 1))


class TestIdentities:
    @pytest.mark.parametrize(
        "g,q,w,B",
        [(path_graph(2), 3, 1, 0), (cycle_graph(3), 4, 2, 1), (path_graph(3), 2, 1, 0.5)],
    )
    def test_examples(self, g, q, w, B):
        r = assemble_identities(g, q, w, B)
        assert r.ok(1e-10)
        if q == 2:
            assert r.log_z2 == pytest.approx(rc_partition(g, RCParams(q, w, B)), abs=1e-10)

    @given(small_graphs(max_n=8, max_m=14), st.floats(1.05, 8.0), ws, st.floats(-3.0, 5.0))
    def test_random(self, g, q, w, B):
        r = assemble_identities(g, q, w, B)
        assert r.eising_residual < 1e-10 and r.two_spin_residual < 1e-10
        assert r.log_z2 == pytest.approx(rank2_partition(g, RCParams(q, w, B)))
