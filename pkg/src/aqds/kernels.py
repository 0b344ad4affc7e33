"""Hot loops with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``AQDS_NO_NUMBA`` is unset
(or ``0``).  Both paths return identical results; the benchmark in
``benchmarks/bench_kernels.py`` times them against each other.

Packed conventions
------------------
* LFSR state: bit ``j`` of the integer is element ``j`` of the state
  vector counted from the top, so the freshly computed element lands in
  bit 0 and the shift pushes everything one bit up.
* Feedback mask: bit ``j`` holds ``p_{n-1-j}``.
* Polynomials: bit ``i`` is the coefficient of ``x^i``.
"""

from __future__ import annotations

import os

import numpy as np

NO_NUMBA_ENV = "AQDS_NO_NUMBA"

try:  # pragma: no cover - exercised implicitly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
#: largest degree handled by the packed polynomial kernels
MAX_BATCH_DEGREE = 32


def numba_enabled() -> bool:
    """True when the numba path is active for this process."""
    return _HAVE_NUMBA and os.environ.get(NO_NUMBA_ENV, "0") in ("", "0")


def _njit(fn):
    if _HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# splitmix64


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z &= 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * MIX1) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * MIX2) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


# ---------------------------------------------------------------------------
# LFSR Toeplitz hash


@_njit
def _parity64(x):
    x ^= x >> np.uint64(32)
    x ^= x >> np.uint64(16)
    x ^= x >> np.uint64(8)
    x ^= x >> np.uint64(4)
    x ^= x >> np.uint64(2)
    x ^= x >> np.uint64(1)
    return x & np.uint64(1)


@_njit
def _hash_batch_numba(pmask, state, msgs, n):
    k, m = msgs.shape
    full = np.uint64(0xFFFFFFFFFFFFFFFF) if n == 64 else (np.uint64(1) << np.uint64(n)) - np.uint64(1)
    out = np.zeros(k, dtype=np.uint64)
    for r in range(k):
        st = state[r]
        pm = pmask[r]
        dig = np.uint64(0)
        for i in range(m):
            if msgs[r, i]:
                dig ^= st
            new = _parity64(st & pm)
            st = ((st << np.uint64(1)) & full) | new
        out[r] = dig
    return out


def _hash_batch_numpy(pmask, state, msgs, n):
    full = np.uint64(0xFFFFFFFFFFFFFFFF) if n == 64 else np.uint64((1 << n) - 1)
    st = state.copy()
    dig = np.zeros_like(st)
    one = np.uint64(1)
    for i in range(msgs.shape[1]):
        col = msgs[:, i].astype(bool)
        dig[col] ^= st[col]
        new = (np.bitwise_count(st & pmask) & 1).astype(np.uint64)
        st = ((st << one) & full) | new
    return dig


def hash_batch(pmask: np.ndarray, state: np.ndarray, msgs: np.ndarray, n: int) -> np.ndarray:
    """Digests of ``k`` messages under ``k`` packed LFSR specs.

    ``msgs`` is a ``(k, m)`` array of bits (or ``(m,)``, broadcast to every
    spec).  Requires ``1 <= n <= 64``.
    """
    if not 1 <= n <= 64:
        raise ValueError(f"packed hash needs 1 <= n <= 64, got {n}")
    pmask = np.ascontiguousarray(pmask, dtype=np.uint64)
    state = np.ascontiguousarray(state, dtype=np.uint64)
    msgs = np.asarray(msgs, dtype=np.uint8)
    if msgs.ndim == 1:
        msgs = np.broadcast_to(msgs, (len(pmask), msgs.shape[0]))
    if msgs.shape[0] != len(pmask) or len(state) != len(pmask):
        raise ValueError("batch sizes disagree")
    msgs = np.ascontiguousarray(msgs)
    if numba_enabled():
        return _hash_batch_numba(pmask, state, msgs, n)
    return _hash_batch_numpy(pmask, state, msgs, n)


# ---------------------------------------------------------------------------
# packed GF(2)[x] arithmetic and irreducibility (degree <= 32)


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@_njit
def _mulmod_scalar(a, b, p, n):
    top = np.uint64(1) << np.uint64(n)
    r = np.uint64(0)
    while b:
        if b & np.uint64(1):
            r ^= a
        b >>= np.uint64(1)
        a <<= np.uint64(1)
        if a & top:
            a ^= p
    return r


@_njit
def _deg_scalar(a):
    d = -1
    while a:
        a >>= np.uint64(1)
        d += 1
    return d


@_njit
def _gcd_scalar(a, b):
    while b:
        db = _deg_scalar(b)
        while True:
            da = _deg_scalar(a)
            if da < db:
                break
            a ^= b << np.uint64(da - db)
        a, b = b, a
    return a


@_njit
def _irreducible_numba(polys, n, exps):
    k = polys.shape[0]
    out = np.zeros(k, dtype=np.bool_)
    x = np.uint64(2)
    for r in range(k):
        p = polys[r]
        if n == 1:
            out[r] = True
            continue
        if not (p & np.uint64(1)):
            continue
        ok = True
        for e in exps:
            h = x
            for _ in range(e):
                h = _mulmod_scalar(h, h, p, n)
            if _gcd_scalar(p, h ^ x) != np.uint64(1):
                ok = False
                break
        if ok:
            h = x
            for _ in range(n):
                h = _mulmod_scalar(h, h, p, n)
            ok = h == x
        out[r] = ok
    return out


def _mulmod_np(a, b, p, n):
    top = np.uint64(1 << n)
    one = np.uint64(1)
    a = a.copy()
    b = b.copy()
    r = np.zeros_like(a)
    for _ in range(n):
        sel = (b & one).astype(bool)
        r[sel] ^= a[sel]
        b >>= one
        a <<= one
        hit = (a & top).astype(bool)
        a[hit] ^= p[hit]
    return r


def _deg_np(a: np.ndarray) -> np.ndarray:
    # values stay below 2**33, so float64 log2 is exact on powers of two
    out = np.full(a.shape, -1, dtype=np.int64)
    nz = a != 0
    out[nz] = np.floor(np.log2(a[nz].astype(np.float64))).astype(np.int64)
    return out


def _gcd_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a.copy()
    b = b.copy()
    while True:
        act = b != 0
        if not act.any():
            return a
        while True:  # a <- a mod b on the active rows
            da, db = _deg_np(a), _deg_np(b)
            red = act & (da >= db)
            if not red.any():
                break
            a[red] ^= b[red] << (da - db)[red].astype(np.uint64)
        a[act], b[act] = b[act], a[act]


def _irreducible_numpy(polys, n, exps):
    x = np.full(polys.shape, 2, dtype=np.uint64)
    if n == 1:
        return np.ones(polys.shape, dtype=bool)
    ok = (polys & np.uint64(1)).astype(bool)
    for e in exps:
        h = x.copy()
        for _ in range(e):
            h = _mulmod_np(h, h, polys, n)
        ok &= _gcd_np(polys.copy(), h ^ x) == 1
    h = x.copy()
    for _ in range(n):
        h = _mulmod_np(h, h, polys, n)
    return ok & (h == x)


def irreducible_batch(polys: np.ndarray, n: int) -> np.ndarray:
    """Rabin irreducibility test for packed monic polynomials of degree ``n``.

    Each entry must have bit ``n`` set.  Requires ``1 <= n <= 32``.
    """
    if not 1 <= n <= MAX_BATCH_DEGREE:
        raise ValueError(f"packed irreducibility test needs 1 <= n <= {MAX_BATCH_DEGREE}, got {n}")
    polys = np.ascontiguousarray(polys, dtype=np.uint64)
    if np.any((polys >> np.uint64(n)) != 1):
        raise ValueError(f"every polynomial must be monic of degree {n}")
    exps = np.array([n // q for q in _prime_factors(n)], dtype=np.int64)
    if numba_enabled():
        return _irreducible_numba(polys, n, exps)
    return _irreducible_numpy(polys, n, exps)


def seed_keys(seeds: np.ndarray, n: int) -> np.ndarray:
    """Per-seed counter-mode keys for one-word seeds (``n <= 64``)."""
    key = np.full(seeds.shape, mix64(n), dtype=np.uint64)
    return _mix64_np(key ^ seeds.astype(np.uint64))


def candidate_words(keys: np.ndarray, attempt: int) -> np.ndarray:
    """Word 0 of retry ``attempt`` for one-word seeds."""
    with np.errstate(over="ignore"):
        z = keys + np.uint64((attempt * GOLDEN) & 0xFFFFFFFFFFFFFFFF)
    return _mix64_np(z)


def derive_irreducible_batch(seeds: np.ndarray, n: int, max_attempts: int = 100_000) -> np.ndarray:
    """Packed monic irreducible polynomials of degree ``n`` from packed seeds.

    Matches :func:`aqds.gf2.derive_irreducible` entry by entry.
    """
    if not 1 <= n <= MAX_BATCH_DEGREE:
        raise ValueError(f"batch derivation needs 1 <= n <= {MAX_BATCH_DEGREE}, got {n}")
    low = np.uint64((1 << n) - 1)
    top = np.uint64(1 << n)
    seeds = np.asarray(seeds, dtype=np.uint64) & low
    cand = seeds | top | np.uint64(1)
    out = np.zeros_like(cand)
    todo = np.arange(len(cand))
    good = irreducible_batch(cand, n)
    out[good] = cand[good]
    todo = todo[~good]
    keys = seed_keys(seeds[todo], n)
    attempt = 0
    while len(todo):
        attempt += 1
        if attempt > max_attempts:
            raise RuntimeError("irreducible search did not terminate")
        cand = (candidate_words(keys, attempt) & low) | top | np.uint64(1)
        good = irreducible_batch(cand, n)
        out[todo[good]] = cand[good]
        todo = todo[~good]
        keys = keys[~good]
    return out


# ---------------------------------------------------------------------------
# nearest-click pairing


@_njit
def _pair_numba(bins, window):
    k = bins.shape[0]
    first = np.empty(k // 2 + 1, dtype=np.int64)
    count = 0
    i = 0
    while i + 1 < k:
        if bins[i + 1] - bins[i] <= window:
            first[count] = i
            count += 1
            i += 2
        else:
            i += 1
    return first[:count]


def _pair_numpy(bins, window):
    if len(bins) < 2:
        return np.zeros(0, dtype=np.int64)
    ok = np.diff(bins) <= window
    # inside each run of pairable gaps the greedy scan takes every other gap
    edges = np.diff(np.concatenate(([0], ok.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    lengths = ends - starts
    run_start = np.repeat(starts, lengths)
    idx = np.flatnonzero(ok)
    return idx[(idx - run_start) % 2 == 0].astype(np.int64)


def pair_clicks(bins: np.ndarray, window: float) -> np.ndarray:
    """Greedy nearest-click pairing.

    Walks the sorted click bins; a click pairs with the next one when the
    gap is at most ``window`` bins, otherwise it is dropped.  Returns the
    index of the first click of every pair.
    """
    bins = np.ascontiguousarray(bins, dtype=np.int64)
    if numba_enabled():
        return _pair_numba(bins, np.int64(min(window, 2**62)))
    return _pair_numpy(bins, window)
