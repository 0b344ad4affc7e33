"""Independent reference implementations used as test oracles.

Nothing here imports the package's arithmetic: each oracle is a slow,
direct computation from first principles.
"""

from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# GF(2)[x]


def _deg(a: int) -> int:
    return a.bit_length() - 1


def _mod(a: int, m: int) -> int:
    dm = _deg(m)
    while a and _deg(a) >= dm:
        a ^= m << (_deg(a) - dm)
    return a


def _mul(a: int, b: int) -> int:
    r = 0
    i = 0
    while b >> i:
        if (b >> i) & 1:
            r ^= a << i
        i += 1
    return r


def trial_division_irreducible(p: int) -> bool:
    """Irreducible iff no polynomial of degree 1..deg/2 divides ``p``."""
    n = _deg(p)
    if n < 1:
        raise ValueError("degree must be >= 1")
    for d in range(2, 1 << (n // 2 + 1)):
        if _deg(d) >= 1 and _deg(d) <= n // 2 and _mod(p, d) == 0:
            return False
    return True


def count_irreducible_exhaustive(n: int) -> int:
    return sum(trial_division_irreducible(p) for p in range(1 << n, 1 << (n + 1)))


def necklace_count(n: int) -> int:
    """(1/n) sum_{d | n} mobius(n/d) 2^d, with mobius from a factor scan."""

    def mobius(k: int) -> int:
        primes = [q for q in range(2, k + 1) if k % q == 0 and all(q % r for r in range(2, q))]
        if any(k % (q * q) == 0 for q in primes):
            return 0
        return (-1) ** len(primes)

    return sum(mobius(n // d) * 2**d for d in range(1, n + 1) if n % d == 0) // n


def mul_mod(a: int, b: int, m: int) -> int:
    return _mod(_mul(a, b), m)


# ---------------------------------------------------------------------------
# Toeplitz hash by explicit companion-matrix powers


def companion(p: int) -> np.ndarray:
    """``W`` with first row ``(p_{n-1}, ..., p_0)`` and a shifted identity below."""
    n = _deg(p)
    w = np.zeros((n, n), dtype=np.int64)
    for j in range(n):
        w[0, j] = (p >> (n - 1 - j)) & 1
    for i in range(1, n):
        w[i, i - 1] = 1
    return w


def hash_by_matrix_powers(p: int, s_bits: list[int], m_bits: list[int]) -> list[int]:
    w = companion(p)
    col = np.array(s_bits, dtype=np.int64)
    acc = np.zeros_like(col)
    for bit in m_bits:
        if bit:
            acc ^= col
        col = (w @ col) % 2
    return [int(x) for x in acc]


# ---------------------------------------------------------------------------
# special functions


def bessel_i0_trapezoid(x: float, nodes: int = 4000) -> float:
    """``(1/pi) int_0^pi exp(x cos t) dt``; trapezoid is spectrally exact for this periodic integrand."""
    t = np.linspace(0.0, 2.0 * math.pi, nodes, endpoint=False)
    # factor out e^|x| so large arguments do not overflow
    ax = abs(x)
    return float(np.mean(np.exp(ax * (np.cos(t) - 1.0)))) * math.exp(ax)


# ---------------------------------------------------------------------------
# four-detector optics for the MDI comparator


def mdi_counts_oracle(a: float, b: float, pd: float, e_d: float, nodes: int = 4000):
    """Per-pulse-pair (n_z, m_z, n_x, m_x) from explicit interference.

    Alice and Bob send weak coherent states of mean photon number ``a``
    and ``b`` (already including every loss) in two orthogonal modes.  The
    middle node mixes them on a 50/50 beam splitter and four threshold
    detectors (two modes on each output port) click with probability
    ``1 - (1 - pd) exp(-I)``.  Only the psi-minus pattern (one click per
    output port, in opposite modes) is kept.  The relative phase is
    averaged uniformly.  Errors are outcomes with equal bits in either
    basis; misalignment mixes correct and wrong outcomes with weight ``e_d``.
    """
    phi = np.linspace(0.0, 2.0 * math.pi, nodes, endpoint=False)

    def click(intensity):
        # 1 - (1 - pd) e^{-I}, written to keep tiny pd and I exact
        return pd * np.exp(-intensity) - np.expm1(-intensity)

    totals = {"z": [0.0, 0.0], "x": [0.0, 0.0]}
    for basis in ("z", "x"):
        for sa in (0, 1):
            for sb in (0, 1):
                if basis == "z":
                    va = np.array([1.0, 0.0]) if sa == 0 else np.array([0.0, 1.0])
                    vb = np.array([1.0, 0.0]) if sb == 0 else np.array([0.0, 1.0])
                else:
                    va = np.array([1.0, 1.0 if sa == 0 else -1.0]) / math.sqrt(2.0)
                    vb = np.array([1.0, 1.0 if sb == 0 else -1.0]) / math.sqrt(2.0)
                amp_a = math.sqrt(a) * va[:, None] * np.ones_like(phi)
                amp_b = math.sqrt(b) * vb[:, None] * np.exp(1j * phi)
                c = (amp_a + amp_b) / math.sqrt(2.0)
                d = (amp_a - amp_b) / math.sqrt(2.0)
                ch, cv = click(abs(c[0]) ** 2), click(abs(c[1]) ** 2)
                dh, dv = click(abs(d[0]) ** 2), click(abs(d[1]) ** 2)
                psi_minus = ch * dv * (1 - cv) * (1 - dh) + cv * dh * (1 - ch) * (1 - dv)
                rate = float(psi_minus.mean()) / 4.0
                totals[basis][0] += rate
                if sa == sb:
                    totals[basis][1] += rate
    n_z, m_z0 = totals["z"]
    n_x, m_x0 = totals["x"]
    m_x = m_x0 + e_d * (n_x - 2.0 * m_x0)
    return n_z, m_z0, n_x, m_x


# ---------------------------------------------------------------------------
# pairing


def greedy_pairs(bins: list[int], window: float) -> list[int]:
    """Plain-Python nearest-click pairing; returns first indices of pairs."""
    out = []
    i = 0
    while i + 1 < len(bins):
        if bins[i + 1] - bins[i] <= window:
            out.append(i)
            i += 2
        else:
            i += 1
    return out
