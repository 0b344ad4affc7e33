import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aqds.baseline import (
    LABELS,
    baseline_yields,
    decoy_roles,
    double_scan,
    failure_bounds,
    minimal_length,
    pair_counts,
    select_primes,
)
from aqds.finitekey import binary_entropy, binary_entropy_inv
from aqds.params import BaselineParams, ProtocolParams
from oracles import mdi_counts_oracle

PP = ProtocolParams()
BP = BaselineParams()


def at(l, **kw):
    return PP.at_distance(l).replace(**kw)


class TestYields:
    def test_against_interference_oracle_at_25km_each_arm(self):
        p = PP.replace(l_a=25.0, l_b=25.0)
        ints = {"mu": 0.5, "nu": 0.1, "omega": 0.01, "o": 0.0}
        for la in LABELS:
            for lb in LABELS:
                c = pair_counts(ints[la], ints[lb], 1.0, p)
                a = p.eta_d * p.eta_a * ints[la]
                b = p.eta_d * p.eta_b * ints[lb]
                n_z, m_z, n_x, m_x = mdi_counts_oracle(a, b, p.p_d, p.e_d)
                for got, want in ((c.n_z, n_z), (c.m_z, m_z), (c.n_x, n_x), (c.m_x, m_x)):
                    assert got == pytest.approx(want, rel=1e-8, abs=1e-300), (la, lb)

    def test_oracle_with_strong_dark_counts(self):
        p = PP.replace(l_a=10.0, l_b=40.0, p_d=1e-3, e_d=0.1)
        for ka, kb in ((0.5, 0.1), (0.0, 0.3), (0.02, 0.0)):
            c = pair_counts(ka, kb, 1.0, p)
            want = mdi_counts_oracle(p.eta_d * p.eta_a * ka, p.eta_d * p.eta_b * kb, p.p_d, p.e_d)
            assert (c.n_z, c.m_z, c.n_x, c.m_x) == pytest.approx(want, rel=1e-8)

    def test_no_light_no_dark(self):
        c = pair_counts(0.0, 0.0, 1e12, PP.replace(p_d=0.0))
        assert (c.n_z, c.n_x, c.m_z, c.m_x) == (0.0, 0.0, 0.0, 0.0)

    @given(st.floats(0, 600), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1e-3), st.floats(0, 0.5))
    def test_errors_subset_of_detections(self, l, ka, kb, pd, ed):
        c = pair_counts(ka, kb, 1.0, at(l, p_d=pd, e_d=ed))
        assert 0 <= c.m_z <= c.n_z * (1 + 1e-12)
        assert 0 <= c.m_x <= c.n_x * (1 + 1e-12)

    def test_table_shape_and_weights(self):
        y = baseline_yields(PP, BP)
        assert len(y) == 16
        one = pair_counts(0.5, 0.5, 1.0, PP)
        assert y[("mu", "mu")].n_z == pytest.approx(PP.N * 0.25 * one.n_z, rel=1e-14)


class TestScan:
    def test_grid_refinement_stable(self):
        for l in (20.0, 100.0, 200.0):
            coarse = double_scan(at(l), BP)
            fine = double_scan(at(l), BP.replace(scan_points=128))
            assert fine.key_min == pytest.approx(coarse.key_min, rel=0.01)

    def test_minimal_length(self):
        for l in (20.0, 100.0, 150.0):
            r = double_scan(at(l), BP)
            assert r.feasible
            assert max(failure_bounds(r.L, r.E_z_up, r.p_E)) <= 1e-10
            assert max(failure_bounds(r.L - 1, r.E_z_up, r.p_E)) > 1e-10
            assert r.R_sig == pytest.approx(r.n_z / (2 * r.L * 1000))

    def test_threshold_ordering(self):
        for l in np.arange(0.0, 301.0, 20.0):
            r = double_scan(at(float(l)), BP)
            if r.feasible:
                assert r.E_z_up < r.s_a < r.s_v < r.p_E <= 0.5

    def test_entropy_endpoint(self):
        # c0 = 0, c1 = 1, phi = 0 -> H(p_E) = 1 -> p_E = 1/2
        assert binary_entropy_inv(0.0 + 1.0 * (1 - binary_entropy(0.0))) == 0.5

    def test_gap_closing_is_infeasible(self):
        assert minimal_length(0.1, 0.1, 1e-10) == 0
        assert minimal_length(0.1, 0.09, 1e-10) == 0
        lengths = [minimal_length(0.1, 0.1 + g, 1e-10) for g in (1e-1, 1e-2, 1e-3)]
        assert lengths[0] < lengths[1] < lengths[2]

    def test_infeasible_far_out(self):
        r = double_scan(at(600.0), BP)
        assert not r.feasible and r.R_sig == 0.0

    def test_entropy_fields(self):
        r = double_scan(at(100.0), BP)
        assert r.H_total == pytest.approx(r.key_min * PP.N, rel=1e-9)
        assert r.h_max > 0

    def test_decoy_roles(self):
        # omega is always the weaker decoy since parameters enforce mu > nu > omega
        assert decoy_roles(BP) == ("omega", "nu")
        with pytest.raises(ValueError):
            BaselineParams(mu_a=0.5, nu_a=0.005, omega_a=0.1)

    def test_prime_selection(self):
        assert select_primes(BP) == (0.1, 0.01)
        bp = BP.replace(nu_a=0.12, nu_b=0.1, omega_a=0.01, omega_b=0.01)
        assert select_primes(bp) == (0.1, 0.01)  # Bob's ratio is smaller
