import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aqds.finitekey import (
    ChernoffBound,
    NoKeyError,
    binary_entropy,
    binary_entropy_inv,
    chernoff_expected,
    chernoff_observed,
    entropy_budget,
    estimate,
    forgery_bound,
    gamma_u,
    select_primes,
    signature_length,
    subgroup_bounds,
    unknown_information,
)
from aqds.messaging import security_bounds
from aqds.params import ProtocolParams
from aqds.photonics import pairing_stats

DEFAULT = ProtocolParams()
BETA = math.log(1e10)


def run(l, **kw):
    p = DEFAULT.at_distance(l).replace(**kw)
    return p, estimate(p, pairing_stats(p))


class TestChernoff:
    def test_zero(self):
        assert chernoff_observed(0.0, 1e-10) == (0.0, pytest.approx(BETA))
        assert chernoff_expected(0.0, 1e-10) == (0.0, pytest.approx(2 * BETA))

    def test_worked_values(self):
        lo, _ = chernoff_observed(1e6, 1e-10)
        assert lo == pytest.approx(1e6 - math.sqrt(2 * BETA * 1e6), rel=1e-15)
        assert round(lo) == 993214
        _, hi = chernoff_expected(1e4, 1e-10)
        assert round(hi) == 10702

    @given(st.floats(0, 1e13), st.floats(1e-15, 0.5))
    def test_brackets(self, x, eps):
        lo, hi = chernoff_observed(x, eps)
        assert lo <= x <= hi
        lo, hi = chernoff_expected(x, eps)
        assert lo <= x <= hi

    @given(st.floats(0, 1e12), st.floats(1e-15, 0.5))
    def test_nesting(self, x, eps):
        assert chernoff_observed(chernoff_expected(x, eps)[0], eps)[0] <= x

    def test_object_form_matches(self):
        for direction, fn in (("observed", chernoff_observed), ("expected", chernoff_expected)):
            lo = ChernoffBound.from_eps(1e-6, direction, "lower")
            hi = ChernoffBound.from_eps(1e-6, direction, "upper")
            assert (lo(1234.5), hi(1234.5)) == fn(1234.5, 1e-6)

    def test_invalid(self):
        with pytest.raises(ValueError):
            chernoff_observed(-1.0, 0.1)
        with pytest.raises(ValueError):
            chernoff_expected(1.0, 1.0)
        with pytest.raises(ValueError):
            ChernoffBound(0.0, "observed", "upper")


class TestGammaU:
    @given(st.floats(1, 1e12), st.floats(1, 1e12), st.floats(1e-6, 1 - 1e-6), st.floats(1e-15, 0.9))
    def test_nonnegative(self, n, k, lam, eps):
        assert gamma_u(n, k, lam, eps) >= 0

    def test_reference_point(self):
        g = gamma_u(1e6, 1e6, 0.01, 1e-10)
        assert math.isfinite(g) and 0 < g < 1

    def test_decreases_with_eps(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n, k = 10 ** rng.uniform(2, 9, 2)
            lam = rng.uniform(0.001, 0.4)
            vals = [gamma_u(n, k, lam, e) for e in (1e-14, 1e-10, 1e-6, 1e-3, 0.1)]
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("lam", [0.0, 1.0])
    def test_lambda_endpoints(self, lam):
        with pytest.raises(ValueError):
            gamma_u(10, 10, lam, 0.1)


class TestBinaryEntropy:
    def test_values(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0 == binary_entropy(1.0)
        assert binary_entropy_inv(binary_entropy(0.11)) == pytest.approx(0.11, abs=1e-10)
        assert binary_entropy_inv(1.0) == pytest.approx(0.5, abs=1e-12)

    @given(st.floats(0, 0.4999))
    def test_round_trip(self, x):
        # within ~2e-7 of 1/2, H(x) rounds to 1.0 and no inverse can recover x
        assert abs(binary_entropy_inv(binary_entropy(x)) - x) <= 1e-10

    @pytest.mark.parametrize("bad", [-0.1, 1.1])
    def test_range(self, bad):
        with pytest.raises(ValueError):
            binary_entropy(bad)
        with pytest.raises(ValueError):
            binary_entropy_inv(bad)


class TestEstimate:
    def test_regression_100km(self):
        # frozen regression values for the default parameters
        p, e = run(100.0)
        assert e.n_z == pytest.approx(1212148752.106499, rel=1e-9)
        assert e.E_z == pytest.approx(1.9974922683405432e-08, rel=1e-9)
        assert e.s11_z_low == pytest.approx(570031803.1695018, rel=1e-9)
        assert e.phi11_z_up == pytest.approx(0.08995007529546091, rel=1e-9)
        assert e.s11_x_low == pytest.approx(440613.61152718926, rel=1e-9)
        assert e.e11_x_up == pytest.approx(0.08744520588511563, rel=1e-9)
        assert e.m0_2nu_low == pytest.approx(237711.31932270856, rel=1e-9)
        assert e.E_z < 0.05
        assert all(math.isfinite(v) for v in vars(e).values() if isinstance(v, float))

    def test_invariants(self):
        for l in range(0, 501, 25):
            _, e = run(float(l))
            assert 0 <= e.E_z <= 1 and 0 <= e.phi11_z_up <= 0.5
            assert e.s0_z_low + e.s11_z_low <= e.n_z * (1 + 1e-12)
            assert min(e.s0_z_low, e.s11_z_low, e.s11_x_low, e.t11_x_up, e.m0_2nu_low) >= 0

    def test_ideal_device_limit(self):
        # with perfect devices the single-pair X error bound vanishes as nu -> 0 and N -> inf,
        # and the phase error bound is the error rate plus the sampling correction alone
        vals = []
        for nu in (0.01, 0.003, 0.001):
            p, e = run(20.0, p_d=0.0, e_d=0.0, nu_a=nu, nu_b=nu, N=1e16)
            vals.append(e.e11_x_up)
            corr = gamma_u(e.s11_z_low, e.s11_x_low, e.e11_x_up, p.eps_phase)
            assert e.phi11_z_up == pytest.approx(e.e11_x_up + corr, rel=1e-12)
        assert vals[0] > vals[1] > vals[2] and vals[2] < 0.002

    def test_prime_selection_branch(self):
        a = DEFAULT.replace(mu_a=0.4, mu_b=0.5, nu_a=0.03, nu_b=0.03)
        b = DEFAULT.replace(mu_a=0.5, mu_b=0.4, nu_a=0.03, nu_b=0.03)
        assert select_primes(a) == (0.4, 0.03)
        assert select_primes(b) == (0.4, 0.03)  # Bob's pair
        c = DEFAULT.replace(mu_a=0.5, mu_b=0.4, nu_a=0.03, nu_b=0.02)
        assert select_primes(c) == (0.5, 0.03)  # ratio order flips back to Alice

    def test_counts_nonincreasing_with_distance(self):
        prev = None
        for l in range(50, 451, 10):
            _, e = run(float(l))
            if e.degenerate:
                break
            cur = (e.n_z, e.s0_z_low, e.s11_z_low, e.s11_x_low)
            if prev is not None:
                assert all(c <= q * (1 + 1e-12) for c, q in zip(cur, prev)), l
            prev = cur

    def test_no_key(self):
        p = DEFAULT.at_distance(50)
        s = pairing_stats(p)
        s.n_sets[("mu", "mu")] = 0.0
        with pytest.raises(NoKeyError):
            estimate(p, s)


class TestEntropyBudget:
    def test_identity_and_fractions(self):
        for l in (50.0, 150.0, 300.0):
            p, e = run(l)
            b = entropy_budget(e, p)
            assert b.H_total == b.h_min_eps - b.h_max_cor
            assert 0 < b.h_min_fraction < 1 and 0 < b.h_max_fraction < 1

    def test_half_phase_error_kills_single_pair_term(self):
        p, e = run(100.0)
        e.phi11_z_up = 0.5
        b = entropy_budget(e, p)
        assert b.h_min_eps == pytest.approx(e.s0_z_low - 2 * math.log2(2 / p.eps**2))

    def test_zero_error_rate_leaves_only_correction_term(self):
        p, e = run(100.0)
        e.E_z = 0.0
        assert entropy_budget(e, p).h_max_cor == pytest.approx(math.log2(2 / p.eps))

    def test_fractions_stable_before_the_knee(self):
        # fractions of n_z stay within +-10% of their 100 km values from 50 to 400 km at N = 1e12
        p, e = run(100.0)
        ref = entropy_budget(e, p)
        assert 0 < ref.h_min_fraction < 1 and 0 < ref.h_max_fraction < 1
        for l in range(50, 401, 25):
            p, e = run(float(l))
            b = entropy_budget(e, p)
            assert abs(b.h_min_fraction / ref.h_min_fraction - 1) <= 0.10, (l, b.h_min_fraction)
            assert abs(b.h_max_fraction / ref.h_max_fraction - 1) <= 0.10, (l, b.h_max_fraction)


class TestSubgroups:
    def test_monotone_and_clamped(self):
        p, e = run(100.0, p_d=1e-6)
        prev = (-1.0, -1.0)
        for n in np.unique(np.geomspace(1, e.n_z / 3, 60).astype(int)):
            s0, s11, phi = subgroup_bounds(e, int(n), p.eps)
            assert s0 >= 0 and s11 >= 0 and 0 <= phi <= 0.5
            assert s0 >= prev[0] and s11 >= prev[1]
            prev = (s0, s11)

    def test_corrections_vanish_for_long_keys(self):
        # at a fixed fraction of the key, the sampling corrections shrink as the key grows
        rel = []
        for N in (1e11, 1e12, 1e13):
            p, e = run(100.0, p_d=1e-6, N=N)
            n = int(e.n_z / 2)
            s0, s11, _ = subgroup_bounds(e, n, p.eps)
            rel.append(1 - s11 / (e.s11_z_low * n / e.n_z))
        assert rel[0] > rel[1] > rel[2] > 0
        assert rel[2] < 1e-4

    def test_range(self):
        _, e = run(100.0)
        with pytest.raises(ValueError):
            subgroup_bounds(e, int(e.n_z) + 1, 1e-10)
        with pytest.raises(ValueError):
            subgroup_bounds(e, 0, 1e-10)


class TestSignatureLength:
    def test_minimal(self):
        for l in (20.0, 100.0, 250.0):
            p, e = run(l)
            s = signature_length(e, p, 1000, 1e-10)
            assert s.feasible
            assert forgery_bound(1000, unknown_information(e, p, s.n)[0]) <= 1e-10
            assert forgery_bound(1000, unknown_information(e, p, s.n - 1)[0]) > 1e-10
            assert s.R_sig == pytest.approx(e.n_z / (3 * s.n))
            assert 3 * s.n <= e.n_z

    def test_rate_formula(self):
        _, e = run(100.0)
        e.n_z = 3e6
        # R_sig = n_z / (3 n): 3e6 bits with 1e4-bit segments gives 100
        assert e.n_z / (3 * 10_000) == 100

    def test_doubling_m_costs_one_bit(self):
        for h in (40.0, 44.5, 60.0):
            assert forgery_bound(2000, h + 1) == pytest.approx(forgery_bound(1000, h), rel=1e-14)

    def test_doubling_m_never_shrinks_n(self):
        p, e = run(100.0)
        assert signature_length(e, p, 2000).n >= signature_length(e, p, 1000).n

    def test_h_n_shared_with_security_bounds(self):
        p, e = run(100.0)
        s = signature_length(e, p, 1000)
        b = security_bounds(1000, s.H_n, p.eps, p.eps)
        assert b.eps_for == s.eps_for
        assert (b.eps_rob, b.eps_rep) == (s.eps_rob, s.eps_rep)

    def test_require_all_gates_on_robustness(self):
        p, e = run(100.0)
        s = signature_length(e, p, 1000, 1e-10, require_all=True)
        assert not s.feasible and s.R_sig == 0  # 4 eps > 1e-10

    def test_infeasible_far_out(self):
        p, e = run(600.0)
        assert not signature_length(e, p, 1000).feasible
