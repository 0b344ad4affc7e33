import numpy as np
import pytest
from hypothesis import given, strategies as st

from aqds.gf2 import (
    BitString,
    Gf2Error,
    Gf2Poly,
    derive_irreducible,
    is_irreducible,
    poly_mul_mod,
)
from oracles import count_irreducible_exhaustive, mul_mod, necklace_count, trial_division_irreducible

bitstrings = st.integers(min_value=0, max_value=200).flatmap(
    lambda n: st.tuples(st.integers(min_value=0, max_value=(1 << n) - 1), st.just(n))
).map(lambda t: BitString(*t))


class TestBitString:
    @given(bitstrings, st.data())
    def test_xor_involution_and_length(self, a, data):
        b = BitString(data.draw(st.integers(0, (1 << a.length) - 1 if a.length else 0)), a.length)
        assert (a ^ b) ^ b == a
        assert len(a ^ b) == len(a)

    def test_xor_length_mismatch(self):
        with pytest.raises(Gf2Error):
            BitString(1, 3) ^ BitString(1, 4)

    @given(bitstrings)
    def test_bytes_round_trip(self, a):
        assert BitString.from_bytes(a.to_bytes(), a.length) == a
        assert BitString.from_hex(a.to_hex()) == a
        assert BitString.from_bits(a.to_bits()) == a

    def test_low_bit_first_packing(self):
        b = BitString.from_bits([1, 0, 0, 0, 0, 0, 0, 0, 1])
        assert b.to_bytes() == bytes([0x01, 0x01])
        assert b.to_hex() == "9:0101"
        assert b[0] == 1 and b[8] == 1 and b[1] == 0

    def test_padding_must_be_zero(self):
        with pytest.raises(Gf2Error):
            BitString.from_bytes(bytes([0xFF]), 4)

    def test_bad_hex(self):
        for text in ("ff", "x:ff", "8:zz", "8:ffff"):
            with pytest.raises(Gf2Error):
                BitString.from_hex(text)

    def test_value_must_fit(self):
        with pytest.raises(Gf2Error):
            BitString(8, 3)

    def test_flip_and_weight(self):
        b = BitString.zeros(10).flip(3).flip(7)
        assert b.weight() == 2 and b[3] == 1 and b[7] == 1


class TestPolyArithmetic:
    def test_gf4_example(self):
        x = Gf2Poly(0b10)
        assert poly_mul_mod(x, x, Gf2Poly(0b111)) == Gf2Poly(0b11)

    @given(st.integers(0, 1 << 20), st.integers(2, 1 << 12))
    def test_identity_and_zero(self, b, m):
        bp, mp = Gf2Poly(b), Gf2Poly(m)
        assert poly_mul_mod(Gf2Poly(1), bp, mp) == bp % mp
        assert poly_mul_mod(Gf2Poly(0), bp, mp) == Gf2Poly(0)

    @given(st.integers(0, 1 << 16), st.integers(0, 1 << 16), st.integers(0, 1 << 16), st.integers(2, 1 << 13))
    def test_linear_in_first_argument(self, a1, a2, b, m):
        mp = Gf2Poly(m)
        lhs = poly_mul_mod(Gf2Poly(a1 ^ a2), Gf2Poly(b), mp)
        rhs = poly_mul_mod(Gf2Poly(a1), Gf2Poly(b), mp) + poly_mul_mod(Gf2Poly(a2), Gf2Poly(b), mp)
        assert lhs == rhs

    @given(st.integers(0, 1 << 16), st.integers(0, 1 << 16), st.integers(2, 1 << 13))
    def test_matches_brute_force(self, a, b, m):
        r = poly_mul_mod(Gf2Poly(a), Gf2Poly(b), Gf2Poly(m))
        assert r.bits == mul_mod(a, b, m)
        assert r.deg < Gf2Poly(m).deg

    def test_ring_axioms_small_table(self):
        m = 0b10011  # x^4 + x + 1
        els = [Gf2Poly(i) for i in range(16)]
        mod = Gf2Poly(m)
        for a in els:
            for b in els:
                assert poly_mul_mod(a, b, mod) == poly_mul_mod(b, a, mod)
                for c in els[::5]:
                    assert poly_mul_mod(poly_mul_mod(a, b, mod), c, mod) == poly_mul_mod(a, poly_mul_mod(b, c, mod), mod)

    def test_bad_modulus(self):
        with pytest.raises(Gf2Error):
            poly_mul_mod(Gf2Poly(3), Gf2Poly(3), Gf2Poly(0))
        with pytest.raises(Gf2Error):
            poly_mul_mod(Gf2Poly(3), Gf2Poly(3), Gf2Poly(1))

    def test_coeffs_monic_layout(self):
        p = Gf2Poly.from_coeffs([1, 1, 0, 1])
        assert p.deg == 3 and len(p.coeffs) == 4 and p.coeffs[3] == 1
        assert repr(p) == "Gf2Poly(x^3 + x + 1)"


class TestIrreducibility:
    def test_examples(self):
        assert is_irreducible(Gf2Poly(0b111))
        assert not is_irreducible(Gf2Poly(0b101))
        assert is_irreducible(Gf2Poly(0b10))

    def test_matches_trial_division_up_to_degree_12(self):
        rng = np.random.default_rng(0)
        # exhaustive through degree 9, sampled above
        polys = list(range(2, 1 << 10))
        for n in (10, 11, 12):
            polys += [int(v) | (1 << n) for v in rng.integers(0, 1 << n, 300)]
        for p in polys:
            assert is_irreducible(Gf2Poly(p)) == trial_division_irreducible(p), bin(p)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_density_matches_necklace_count(self, n):
        found = sum(is_irreducible(Gf2Poly(p)) for p in range(1 << n, 1 << (n + 1)))
        assert found == count_irreducible_exhaustive(n) == necklace_count(n)

    def test_rejects_constants(self):
        for p in (0, 1):
            with pytest.raises(Gf2Error):
                is_irreducible(Gf2Poly(p))


class TestDerive:
    def test_every_two_bit_seed_gives_x2_x_1(self):
        for v in range(4):
            assert derive_irreducible(BitString(v, 2)) == Gf2Poly(0b111)

    @given(st.integers(1, 96), st.data())
    def test_monic_irreducible_of_exact_degree(self, n, data):
        seed = BitString(data.draw(st.integers(0, (1 << n) - 1)), n)
        p = derive_irreducible(seed)
        assert p.deg == n
        assert is_irreducible(p)
        assert derive_irreducible(seed) == p

    def test_distinct_seeds_degree_16(self):
        a = derive_irreducible(BitString(0x1234, 16))
        b = derive_irreducible(BitString(0xBEEF, 16))
        assert is_irreducible(a) and is_irreducible(b)

    def test_first_candidate_used_when_irreducible(self):
        # seed 0b011 with x^3 gives x^3 + x + 1, irreducible
        assert derive_irreducible(BitString(0b010, 3)) == Gf2Poly(0b1011)

    def test_empty_seed(self):
        with pytest.raises(Gf2Error):
            derive_irreducible(BitString(0, 0))
