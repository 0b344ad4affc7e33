"""Three-party signing and verification over XOR-shared keys.

Alice holds ``(X_a, Y_a, Z_a)``; Bob and Charlie hold shares with
``X_a = X_b ^ X_c`` and likewise for ``Y`` and ``Z``.  Alice signs a
document with the LFSR Toeplitz hash keyed by the irreducible polynomial
derived from ``p_a`` and the initial state ``Y_a``, then one-time-pads the
digest with ``Z_a`` and the polynomial seed with ``X_a``.  A verifier needs
the other verifier's shares to rebuild Alice's key, which is what makes the
relationship asymmetric.
"""

from __future__ import annotations

import enum
import math
import struct
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .gf2 import BitString, Gf2Error, derive_irreducible
from .otuh import ToeplitzSpec, toeplitz_hash

BUNDLE_MAGIC = b"AQB1"
SHARE_MAGIC = b"AQK1"
SIGNER_MAGIC = b"AQS1"
_HEADER = struct.Struct("<4sII")


class MessagingError(ValueError):
    """Inconsistent lengths or otherwise unusable protocol inputs."""


class MalformedFileError(MessagingError):
    """A bundle or share file does not parse."""


class Verdict(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"

    def __bool__(self) -> bool:
        return self is Verdict.ACCEPT


Triple = tuple[BitString, BitString, BitString]


@dataclass(frozen=True)
class KeyShares:
    """``X``, ``Y``, ``Z`` as ``(alice, bob, charlie)`` triples."""

    X: Triple
    Y: Triple
    Z: Triple

    def __post_init__(self) -> None:
        lengths = {s.length for t in (self.X, self.Y, self.Z) for s in t}
        if len(lengths) != 1:
            raise MessagingError(f"all nine shares must share one length, got {sorted(lengths)}")
        for name, (a, b, c) in zip("XYZ", (self.X, self.Y, self.Z)):
            if a != b ^ c:
                raise MessagingError(f"{name}_a != {name}_b ^ {name}_c")

    @property
    def n(self) -> int:
        return self.X[0].length

    def party(self, who: str) -> Triple:
        idx = {"alice": 0, "bob": 1, "charlie": 2}[who]
        return self.X[idx], self.Y[idx], self.Z[idx]


def _rng(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def split_keys(rng: Union[int, np.random.Generator], n: int) -> KeyShares:
    """Draw Alice's and Bob's shares uniformly and set Charlie's to match.

    The six ``n``-bit strings are cut from one raw string after a seeded
    shuffle of its bit order, the stand-in for the post-correction key
    shuffle.  It changes no statistics.
    """
    if n < 1:
        raise MessagingError("share length must be at least 1")
    gen = _rng(rng)
    raw = gen.integers(0, 2, size=6 * n, dtype=np.uint8)
    raw = raw[gen.permutation(6 * n)]
    parts = [BitString.from_bits(raw[i * n:(i + 1) * n]) for i in range(6)]
    xa, ya, za, xb, yb, zb = parts
    return KeyShares((xa, xb, xa ^ xb), (ya, yb, ya ^ yb), (za, zb, za ^ zb))


@dataclass(frozen=True)
class SignatureBundle:
    doc: BitString
    sig: BitString
    p_enc: BitString

    def __post_init__(self) -> None:
        if self.sig.length != self.p_enc.length:
            raise MessagingError("signature and encrypted polynomial lengths differ")
        if self.doc.length < 1:
            raise MessagingError("document must have at least one bit")


def _digest(p_seed: BitString, state: BitString, doc: BitString) -> BitString:
    spec = ToeplitzSpec(derive_irreducible(p_seed), state, doc.length, check_irreducible=False)
    return toeplitz_hash(spec, doc)


def sign(doc: BitString, alice: Triple, p_a: BitString) -> SignatureBundle:
    """``Sig = h(doc) ^ Z_a`` and ``P = p_a ^ X_a``."""
    x_a, y_a, z_a = alice
    n = p_a.length
    if not (x_a.length == y_a.length == z_a.length == n):
        raise MessagingError("Alice's shares and p_a must have equal length")
    try:
        sig = _digest(p_a, y_a, doc) ^ z_a
    except Gf2Error as exc:
        raise MessagingError(str(exc)) from None
    return SignatureBundle(doc, sig, p_a ^ x_a)


def verify(bundle: SignatureBundle, own: Triple, counterpart: Triple) -> Verdict:
    """Rebuild Alice's key from both verifiers' shares and compare digests."""
    n = bundle.sig.length
    for s in (*own, *counterpart):
        if s.length != n:
            raise MessagingError(f"share of {s.length} bits for an {n}-bit signature")
    k_x = own[0] ^ counterpart[0]
    k_y = own[1] ^ counterpart[1]
    k_z = own[2] ^ counterpart[2]
    expected = bundle.sig ^ k_z
    actual = _digest(bundle.p_enc ^ k_x, k_y, bundle.doc)
    return Verdict.ACCEPT if actual == expected else Verdict.REJECT


# ---------------------------------------------------------------------------
# message flow


class Channel:
    """Reliable authenticated link modeled as a FIFO; ``tamper`` rewrites payloads in flight."""

    def __init__(self, name: str, tamper: Optional[Callable] = None) -> None:
        self.name = name
        self.tamper = tamper
        self._q: deque = deque()

    def send(self, item) -> None:
        self._q.append(self.tamper(item) if self.tamper is not None else item)

    def recv(self):
        if not self._q:
            raise MessagingError(f"nothing waiting on {self.name}")
        return self._q.popleft()


@dataclass(frozen=True)
class ThreePartyResult:
    bob: Verdict
    charlie: Verdict


def run_three_party(
    doc: BitString,
    shares: KeyShares,
    p_a: BitString,
    tamper: Optional[Callable[[SignatureBundle], SignatureBundle]] = None,
) -> ThreePartyResult:
    """Alice signs for Bob; Bob and Charlie swap shares; Bob forwards the bundle to Charlie.

    ``tamper`` acts on the bundle in the Bob-to-Charlie leg only.
    """
    a_to_b = Channel("alice->bob")
    b_to_c = Channel("bob->charlie", tamper)
    b_to_c_keys = Channel("bob->charlie keys")
    c_to_b_keys = Channel("charlie->bob keys")

    a_to_b.send(sign(doc, shares.party("alice"), p_a))

    received = a_to_b.recv()
    b_to_c.send(received)
    b_to_c_keys.send(shares.party("bob"))
    c_to_b_keys.send(shares.party("charlie"))

    bob = verify(received, shares.party("bob"), c_to_b_keys.recv())
    charlie = verify(b_to_c.recv(), shares.party("charlie"), b_to_c_keys.recv())
    return ThreePartyResult(bob, charlie)


# ---------------------------------------------------------------------------
# security bounds


@dataclass(frozen=True)
class SecurityBounds:
    eps_rob: float
    eps_rep: float
    eps_for: float
    eps_total: float
    m: int
    H_n: float
    eps_cor: float
    eps_prime: float


def security_bounds(m: int, H_n: float, eps_cor: float, eps_prime: float) -> SecurityBounds:
    """Robustness, repudiation and forgery bounds; the scheme is as secure as the worst."""
    if m < 1:
        raise MessagingError("document length must be at least 1")
    if H_n < 0:
        raise MessagingError("unknown information cannot be negative")
    for e in (eps_cor, eps_prime):
        if not 0.0 < e < 1.0:
            raise MessagingError(f"failure probabilities must lie in (0, 1), got {e}")
    eps_for = min(1.0, m * 2.0 ** (1.0 - H_n))
    eps_rep = min(1.0, 2.0 * eps_prime)
    eps_rob = min(1.0, 2.0 * eps_cor + 2.0 * eps_prime)
    return SecurityBounds(eps_rob, eps_rep, eps_for, max(eps_rob, eps_rep, eps_for), m, H_n, eps_cor, eps_prime)


# ---------------------------------------------------------------------------
# adversarial trials (packed, n <= 32)


def reverse_bits(values: np.ndarray, n: int) -> np.ndarray:
    """Reverse the low ``n`` bits of each entry."""
    values = np.asarray(values, dtype=np.uint64)
    out = np.zeros_like(values)
    for j in range(n):
        out |= ((values >> np.uint64(j)) & np.uint64(1)) << np.uint64(n - 1 - j)
    return out


def random_specs(rng: np.random.Generator, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """``k`` packed ``(feedback mask, state)`` pairs with uniformly seeded irreducibles."""
    seeds = rng.integers(0, 1 << n, size=k, dtype=np.uint64)
    polys = kernels.derive_irreducible_batch(seeds, n)
    masks = reverse_bits(polys & np.uint64((1 << n) - 1), n)
    states = rng.integers(0, 1 << n, size=k, dtype=np.uint64)
    return masks, states


def irreducible_count(n: int) -> int:
    """Number of monic irreducible polynomials of degree ``n`` over GF(2) (necklace formula)."""
    total = 0
    for d in range(1, n + 1):
        if n % d == 0:
            total += _mobius(n // d) * 2**d
    return total // n


def _mobius(k: int) -> int:
    result, d = 1, 2
    while d * d <= k:
        if k % d == 0:
            k //= d
            if k % d == 0:
                return 0
            result = -result
        d += 1
    return -result if k > 1 else result


def packed_irreducibles(n: int, count: int) -> list[int]:
    """The ``count`` smallest odd monic irreducibles of degree ``n`` (packed)."""
    out: list[int] = []
    base = 1 << n
    step = 4096
    start = 1
    while len(out) < count and start < base:
        cand = np.arange(base + start, base + min(start + 2 * step, base), 2, dtype=np.uint64)
        good = kernels.irreducible_batch(cand, n)
        out.extend(int(c) for c in cand[good])
        start += 2 * step
    if len(out) < count:
        raise MessagingError(f"only {len(out)} odd irreducibles of degree {n}")
    return out[:count]


@dataclass(frozen=True)
class ForgeryStats:
    successes: int
    trials: int
    n: int
    m: int
    strategy: str

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        r = max(self.rate, 1.0 / self.trials)
        return math.sqrt(r * (1.0 - r) / self.trials)

    @property
    def bound(self) -> float:
        return min(1.0, self.m * 2.0 ** (1 - self.n))


def uniform_factor_rate(n: int, m: int) -> float:
    """Success rate of the product-of-irreducibles forgery if Alice's
    polynomial were uniform over odd degree-``n`` irreducibles.

    The forged difference is the product of ``k = floor((m-1)/n)`` distinct
    odd irreducibles of degree ``n``; it hashes to zero when Alice's
    polynomial is one of them or her initial state is all zero.
    """
    k = (m - 1) // n
    total = irreducible_count(n) - (1 if n == 1 else 0)
    hit = k / total
    return hit + (1.0 - hit) * 2.0 ** (-n)


#: largest degree for which :func:`factor_strategy_rate` enumerates every seed
EXACT_RATE_MAX_DEGREE = 24


def factor_strategy_rate(n: int, m: int) -> float:
    """Exact success rate of the product-of-irreducibles forgery.

    Counts the seeds whose derived polynomial is one of the forger's
    factors.  The counter-mode retry spreads seeds unevenly over the
    irreducibles, so this differs from :func:`uniform_factor_rate` by a
    few percent.
    """
    if not 1 <= n <= EXACT_RATE_MAX_DEGREE:
        raise MessagingError(f"exact rate enumerates 2^n seeds; needs 1 <= n <= {EXACT_RATE_MAX_DEGREE}")
    k = (m - 1) // n
    if k < 1:
        raise MessagingError("document too short for a factor forgery")
    derived = kernels.derive_irreducible_batch(np.arange(1 << n, dtype=np.uint64), n)
    factors = np.array(packed_irreducibles(n, k), dtype=np.uint64)
    hit = float(np.isin(derived, factors).mean())
    return hit + (1.0 - hit) * 2.0 ** (-n)


def forgery_trials(
    n: int,
    m: int,
    trials: int,
    rng: Union[int, np.random.Generator],
    strategy: str = "random",
    batch: int = 1 << 18,
) -> ForgeryStats:
    """Count how often a substituted document passes verification.

    ``strategy="random"`` swaps in a uniformly random different document.
    ``strategy="factor"`` adds the product of as many distinct degree-``n``
    irreducibles as fit in ``m`` bits, the difference that maximizes the
    chance that Alice's polynomial divides it.
    """
    if not 1 <= n <= kernels.MAX_BATCH_DEGREE:
        raise MessagingError(f"packed trials need 1 <= n <= {kernels.MAX_BATCH_DEGREE}")
    if strategy not in ("random", "factor"):
        raise MessagingError(f"unknown strategy {strategy!r}")
    gen = _rng(rng)
    diff_fixed = None
    if strategy == "factor":
        k = (m - 1) // n
        if k < 1:
            raise MessagingError("document too short for a factor forgery")
        from .gf2 import clmul

        prod = 1
        for f in packed_irreducibles(n, k):
            prod = clmul(prod, f)
        diff_fixed = BitString(prod, m).to_bits()
    successes = 0
    done = 0
    while done < trials:
        k_now = min(batch, trials - done)
        masks, states = random_specs(gen, n, k_now)
        docs = gen.integers(0, 2, size=(k_now, m), dtype=np.uint8)
        if diff_fixed is None:
            diff = gen.integers(0, 2, size=(k_now, m), dtype=np.uint8)
            zero = ~diff.any(axis=1)
            while zero.any():  # the forged document must differ
                diff[zero] = gen.integers(0, 2, size=(int(zero.sum()), m), dtype=np.uint8)
                zero = ~diff.any(axis=1)
        else:
            diff = np.broadcast_to(diff_fixed, (k_now, m))
        forged = docs ^ diff
        h_doc = kernels.hash_batch(masks, states, docs, n)
        h_forged = kernels.hash_batch(masks, states, forged, n)
        successes += int(np.count_nonzero(h_doc == h_forged))
        done += k_now
    return ForgeryStats(successes, trials, n, m, strategy)


# ---------------------------------------------------------------------------
# file formats


def _pack(magic: bytes, n: int, m: int, strings: list[BitString]) -> bytes:
    return _HEADER.pack(magic, n, m) + b"".join(s.to_bytes() for s in strings)


def _unpack(data: bytes, magic: bytes, counts: list[str]) -> tuple[int, int, list[BitString]]:
    if len(data) < _HEADER.size:
        raise MalformedFileError("file shorter than its header")
    got, n, m = _HEADER.unpack_from(data)
    if got != magic:
        raise MalformedFileError(f"bad magic {got!r}, expected {magic!r}")
    sizes = [n if c == "n" else m for c in counts]
    need = _HEADER.size + sum((s + 7) // 8 for s in sizes)
    if len(data) != need:
        raise MalformedFileError(f"expected {need} bytes, got {len(data)}")
    out, off = [], _HEADER.size
    for s in sizes:
        nb = (s + 7) // 8
        try:
            out.append(BitString.from_bytes(data[off:off + nb], s))
        except Gf2Error as exc:
            raise MalformedFileError(str(exc)) from None
        off += nb
    return n, m, out


def encode_bundle(b: SignatureBundle) -> bytes:
    """magic, n, m (u32 little-endian), then Sig, P, Doc packed low-bit-first."""
    return _pack(BUNDLE_MAGIC, b.sig.length, b.doc.length, [b.sig, b.p_enc, b.doc])


def decode_bundle(data: bytes) -> SignatureBundle:
    n, m, (sig, p_enc, doc) = _unpack(data, BUNDLE_MAGIC, ["n", "n", "m"])
    if n < 1 or m < 1:
        raise MalformedFileError("bundle lengths must be positive")
    return SignatureBundle(doc, sig, p_enc)


def encode_shares(shares: Triple) -> bytes:
    """A verifier's ``(X, Y, Z)`` in the bundle container (``m = 0``)."""
    return _pack(SHARE_MAGIC, shares[0].length, 0, list(shares))


def decode_shares(data: bytes) -> Triple:
    n, m, strings = _unpack(data, SHARE_MAGIC, ["n", "n", "n"])
    if n < 1 or m != 0:
        raise MalformedFileError("share file must have n >= 1 and m = 0")
    return strings[0], strings[1], strings[2]


def encode_signer_key(shares: Triple, p_a: BitString) -> bytes:
    """Alice's ``(X, Y, Z, p_a)`` in the bundle container (``m = 0``)."""
    return _pack(SIGNER_MAGIC, p_a.length, 0, [*shares, p_a])


def decode_signer_key(data: bytes) -> tuple[Triple, BitString]:
    n, m, strings = _unpack(data, SIGNER_MAGIC, ["n", "n", "n", "n"])
    if n < 1 or m != 0:
        raise MalformedFileError("signer key must have n >= 1 and m = 0")
    return (strings[0], strings[1], strings[2]), strings[3]
