"""Bit strings and GF(2)[x] polynomials.

Bit order is fixed once: index 0 is the first message bit and the constant
coefficient of a polynomial.  Both types keep their bits in a Python int
(bit ``i`` of the int is element ``i``), so XOR and polynomial arithmetic
are single big-int operations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .kernels import GOLDEN, mix64

_MASK64 = (1 << 64) - 1


class Gf2Error(ValueError):
    """Invalid GF(2) operand (length mismatch, zero modulus, non-monic input)."""


# ---------------------------------------------------------------------------
# bit strings


@dataclass(frozen=True)
class BitString:
    """Immutable fixed-length bit string."""

    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise Gf2Error("length must be nonnegative")
        if self.value < 0 or self.value >> self.length:
            raise Gf2Error(f"value does not fit in {self.length} bits")

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise Gf2Error("bits must be 0 or 1")
        return cls.from_bytes(np.packbits(arr, bitorder="little").tobytes(), int(arr.size))

    @classmethod
    def from_bytes(cls, data: bytes, length: int) -> "BitString":
        """Unpack ``length`` bits stored low-bit-first."""
        if len(data) != (length + 7) // 8:
            raise Gf2Error(f"{length} bits need {(length + 7) // 8} bytes, got {len(data)}")
        value = int.from_bytes(data, "little")
        if value >> length:
            raise Gf2Error("padding bits must be zero")
        return cls(value, length)

    @classmethod
    def random(cls, rng: np.random.Generator, length: int) -> "BitString":
        nbytes = (length + 7) // 8
        value = int.from_bytes(rng.bytes(nbytes), "little") & ((1 << length) - 1)
        return cls(value, length)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes((self.length + 7) // 8, "little")

    def to_bits(self) -> np.ndarray:
        raw = np.frombuffer(self.to_bytes(), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.length].copy()

    def to_hex(self) -> str:
        """``<length>:<hex bytes>``, bytes packed low-bit-first."""
        return f"{self.length}:{self.to_bytes().hex()}"

    @classmethod
    def from_hex(cls, text: str) -> "BitString":
        head, sep, body = text.strip().partition(":")
        if not sep:
            raise Gf2Error("hex bit string needs a '<length>:' prefix")
        try:
            length = int(head)
            data = bytes.fromhex(body)
        except ValueError as exc:
            raise Gf2Error(f"bad hex bit string: {exc}") from None
        return cls.from_bytes(data, length)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not -self.length <= i < self.length:
            raise IndexError(i)
        return (self.value >> (i % self.length)) & 1

    def __xor__(self, other: "BitString") -> "BitString":
        if not isinstance(other, BitString):
            return NotImplemented
        if other.length != self.length:
            raise Gf2Error(f"XOR of {self.length}-bit and {other.length}-bit strings")
        return BitString(self.value ^ other.value, self.length)

    def flip(self, i: int) -> "BitString":
        if not 0 <= i < self.length:
            raise IndexError(i)
        return BitString(self.value ^ (1 << i), self.length)

    def weight(self) -> int:
        return self.value.bit_count() if hasattr(self.value, "bit_count") else bin(self.value).count("1")

    def __repr__(self) -> str:
        bits = "".join(str((self.value >> i) & 1) for i in range(min(self.length, 64)))
        tail = "..." if self.length > 64 else ""
        return f"BitString({self.length}, {bits}{tail})"


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class Gf2Poly:
    """Polynomial over GF(2); bit ``i`` of ``bits`` is the coefficient of ``x^i``."""

    bits: int

    def __post_init__(self) -> None:
        if self.bits < 0:
            raise Gf2Error("coefficients must be a nonnegative int")

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[int]) -> "Gf2Poly":
        """Build from coefficients listed low to high."""
        return cls(BitString.from_bits(coeffs).value)

    @classmethod
    def from_bitstring(cls, b: BitString) -> "Gf2Poly":
        return cls(b.value)

    @property
    def deg(self) -> int:
        """Degree; the zero polynomial reports -1."""
        return self.bits.bit_length() - 1

    @property
    def coeffs(self) -> BitString:
        """Coefficients as a ``deg + 1`` bit string (empty for zero)."""
        return BitString(self.bits, self.deg + 1)

    def is_zero(self) -> bool:
        return self.bits == 0

    def __add__(self, other: "Gf2Poly") -> "Gf2Poly":
        return Gf2Poly(self.bits ^ other.bits)

    __xor__ = __add__
    __sub__ = __add__

    def __mul__(self, other: "Gf2Poly") -> "Gf2Poly":
        return Gf2Poly(clmul(self.bits, other.bits))

    def __mod__(self, other: "Gf2Poly") -> "Gf2Poly":
        if other.is_zero():
            raise Gf2Error("reduction by the zero polynomial")
        return Gf2Poly(poly_mod(self.bits, other.bits))

    def __repr__(self) -> str:
        if self.bits == 0:
            return "Gf2Poly(0)"
        terms = []
        for i in range(self.deg, -1, -1):
            if (self.bits >> i) & 1:
                terms.append("1" if i == 0 else "x" if i == 1 else f"x^{i}")
        return "Gf2Poly(" + " + ".join(terms) + ")"


def clmul(a: int, b: int) -> int:
    """Carry-less product of two packed polynomials."""
    if a.bit_length() < b.bit_length():
        a, b = b, a
    r = 0
    while b:
        low = b & -b
        r ^= a << (low.bit_length() - 1)
        b ^= low
    return r


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length()
    if dm == 0:
        raise Gf2Error("reduction by the zero polynomial")
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def _mulmod(a: int, b: int, m: int) -> int:
    return poly_mod(clmul(a, b), m)


def poly_mul_mod(a: Gf2Poly, b: Gf2Poly, modulus: Gf2Poly) -> Gf2Poly:
    """``a * b mod modulus`` over GF(2)."""
    if modulus.is_zero():
        raise Gf2Error("zero modulus")
    if modulus.deg < 1:
        raise Gf2Error("modulus must have degree >= 1")
    return Gf2Poly(_mulmod(poly_mod(a.bits, modulus.bits), poly_mod(b.bits, modulus.bits), modulus.bits))


def is_irreducible(p: Gf2Poly) -> bool:
    """Distinct-degree test: no ``gcd(x^(2^i) - x, p)`` is nontrivial for ``i <= deg/2``."""
    n = p.deg
    if n < 1:
        raise Gf2Error("irreducibility needs degree >= 1")
    # every stored polynomial with degree n has its top bit set, so it is monic
    if n == 1:
        return True
    m = p.bits
    if not m & 1:
        return False  # divisible by x
    x = 0b10
    h = x
    for _ in range(n // 2):
        h = _mulmod(h, h, m)
        if poly_gcd(m, h ^ x) != 1:
            return False
    return True


def _seed_words(value: int, n: int) -> list[int]:
    return [(value >> (64 * j)) & _MASK64 for j in range((n + 63) // 64)]


def derive_irreducible(seed: BitString, max_attempts: int = 1_000_000) -> Gf2Poly:
    """Deterministic monic irreducible polynomial of degree ``len(seed)``.

    The first candidate is ``x^n`` plus the seed as low coefficients with
    the constant term forced to 1.  Later candidates come from a
    splitmix64 counter-mode expansion of the seed.
    """
    n = seed.length
    if n < 1:
        raise Gf2Error("seed must have at least one bit")
    low = (1 << n) - 1
    top = 1 << n
    cand = Gf2Poly(seed.value | top | 1)
    if is_irreducible(cand):
        return cand
    words = _seed_words(seed.value, n)
    key = mix64(n)
    for w in words:
        key = mix64(key ^ w)
    nw = len(words)
    for attempt in range(1, max_attempts + 1):
        acc = 0
        for j in range(nw):
            acc |= mix64(key + (attempt * nw + j) * GOLDEN) << (64 * j)
        cand = Gf2Poly((acc & low) | top | 1)
        if is_irreducible(cand):
            return cand
    raise RuntimeError("irreducible search did not terminate")  # pragma: no cover
