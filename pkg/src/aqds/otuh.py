"""LFSR-based Toeplitz hashing.

The hash matrix has columns ``s, W s, W^2 s, ...`` where ``W`` is the
companion matrix of a monic irreducible ``p(x)`` of degree ``n``: its first
row is ``(p_{n-1}, ..., p_0)`` and below that it shifts the state down by
one place.  State vectors are indexed from the top, so ``s[0]`` is the
element that receives the feedback bit.

The digest of an ``m``-bit message ``M`` is ``sum_i M_i W^i s``.  It is
evaluated by streaming the state sequence; the explicit matrix exists for
cross-checking only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ResourceLimitError
from .gf2 import BitString, Gf2Error, Gf2Poly, is_irreducible

#: largest n*m the explicit matrix builder will materialize
MATRIX_LIMIT = 1 << 24


def feedback_mask(p: Gf2Poly) -> int:
    """Packed first row of ``W``: bit ``j`` holds ``p_{n-1-j}``."""
    n = p.deg
    mask = 0
    for j in range(n):
        mask |= ((p.bits >> (n - 1 - j)) & 1) << j
    return mask


@dataclass(frozen=True)
class ToeplitzSpec:
    """Hash key: irreducible ``p`` of degree ``n``, initial state ``s`` and message length ``m``."""

    p: Gf2Poly
    s: BitString
    m: int
    check_irreducible: bool = True

    def __post_init__(self) -> None:
        if self.p.deg < 1:
            raise Gf2Error("p must have degree >= 1")
        if self.p.deg != self.s.length:
            raise Gf2Error(f"deg p = {self.p.deg} but the state has {self.s.length} bits")
        if self.m < 1:
            raise Gf2Error("messages must have at least one bit")
        if self.check_irreducible and not is_irreducible(self.p):
            raise Gf2Error(f"{self.p!r} is reducible")

    @property
    def n(self) -> int:
        return self.s.length

    @property
    def mask(self) -> int:
        return feedback_mask(self.p)


def _step(state: int, mask: int, full: int) -> int:
    new = (state & mask).bit_count() & 1
    return ((state << 1) & full) | new


def lfsr_next_state(spec: ToeplitzSpec, s_i: BitString) -> BitString:
    """``W s_i``: new top element ``p . s_i``, everything else shifted down."""
    if s_i.length != spec.n:
        raise Gf2Error(f"state has {s_i.length} bits, spec needs {spec.n}")
    full = (1 << spec.n) - 1
    return BitString(_step(s_i.value, spec.mask, full), spec.n)


def toeplitz_hash(spec: ToeplitzSpec, message: BitString) -> BitString:
    """Digest ``H M`` computed from the state sequence without building ``H``."""
    if message.length != spec.m:
        raise Gf2Error(f"message has {message.length} bits, spec expects {spec.m}")
    n = spec.n
    if n <= 64:
        dig = kernels.hash_batch(
            np.array([spec.mask], dtype=np.uint64),
            np.array([spec.s.value], dtype=np.uint64),
            message.to_bits()[None, :],
            n,
        )
        return BitString(int(dig[0]), n)
    full = (1 << n) - 1
    mask = spec.mask
    state = spec.s.value
    dig = 0
    bits = message.value
    for _ in range(spec.m):
        if bits & 1:
            dig ^= state
        bits >>= 1
        state = _step(state, mask, full)
    return BitString(dig, n)


def toeplitz_matrix(spec: ToeplitzSpec, limit: int = MATRIX_LIMIT) -> np.ndarray:
    """Explicit ``n x m`` hash matrix (uint8); column ``i`` is ``W^i s``."""
    n, m = spec.n, spec.m
    if n * m > limit:
        raise ResourceLimitError(f"{n}x{m} matrix exceeds the {limit}-entry guard")
    out = np.zeros((n, m), dtype=np.uint8)
    full = (1 << n) - 1
    mask = spec.mask
    state = spec.s.value
    for i in range(m):
        for j in range(n):
            out[j, i] = (state >> j) & 1
        state = _step(state, mask, full)
    return out


def matrix_hash(matrix: np.ndarray, message: BitString) -> BitString:
    """``matrix . M`` over GF(2), for cross-checks against :func:`toeplitz_hash`."""
    if matrix.shape[1] != message.length:
        raise Gf2Error("matrix width and message length differ")
    col = (matrix.astype(np.int64) @ message.to_bits().astype(np.int64)) & 1
    return BitString.from_bits(col)
