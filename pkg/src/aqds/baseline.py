"""Four-intensity MDI comparator with double scanning.

Alice and Bob each pick ``k in {mu, nu, omega, o}``; ``mu`` pulses form
the Z-basis key and the three weaker intensities are sent in the X basis
for decoy estimation.  Only the psi-minus Bell outcome is announced.

Counts are closed forms in the modified Bessel function ``I0``.  With
``a = eta_d*eta_a*k_a`` and ``b = eta_d*eta_b*k_b``::

    n_z = N p p (1-pd)^2 e^{-(a+b)/2} {pd [I0(sqrt(ab)) - (1-pd) e^{-(a+b)/2}]
                                     + [1-(1-pd)e^{-a/2}] [1-(1-pd)e^{-b/2}]}
    m_z = N p p pd (1-pd)^2 e^{-(a+b)/2} [I0(sqrt(ab)) - (1-pd) e^{-(a+b)/2}]
    n_x = N p p y^2 [1 + 2y^2 - 4y I0(sqrt(ab)/2) + I0(sqrt(ab))]
    m_x = N p p y^2 [1 + y^2 - 2y I0(sqrt(ab)/2) + e_d (I0(sqrt(ab)) - 1)]

with ``y = (1-pd) e^{-(a+b)/4}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .finitekey import binary_entropy_inv, chernoff_expected, o_lower
from .params import BaselineParams, ProtocolParams
from .photonics import bessel_i0m1

LABELS = ("mu", "nu", "omega", "o")


class BaselineScanError(ValueError):
    """The (H, M) scan rectangle is empty or not finite."""


@dataclass(frozen=True)
class Counts:
    n_z: float
    n_x: float
    m_z: float
    m_x: float


def _intensity(bp: BaselineParams, side: str, label: str) -> float:
    return 0.0 if label == "o" else getattr(bp, f"{label}_{side}")


def _probability(bp: BaselineParams, side: str, label: str) -> float:
    return bp.p_o(side) if label == "o" else getattr(bp, f"p_{label}_{side}")


def pair_counts(k_a: float, k_b: float, weight: float, params: ProtocolParams) -> Counts:
    """Counts for one intensity pair sent ``weight`` times (``N p_ka p_kb``).

    The brackets are rearranged around ``1 - y`` and ``I0 - 1`` so that weak
    pulses at long distance do not lose precision to cancellation.
    """
    pd = params.p_d
    a = params.eta_d * params.eta_a * k_a
    b = params.eta_d * params.eta_b * k_b
    root = math.sqrt(a * b)

    def dark_or_light(s: float) -> float:
        # 1 - (1 - pd) e^{-s}
        return pd - (1.0 - pd) * math.expm1(-s)

    pref = (1.0 - pd) ** 2 * math.exp(-(a + b) / 2.0)
    dark_term = pd * (bessel_i0m1(root) + dark_or_light((a + b) / 2.0))
    clean = dark_or_light(a / 2.0) * dark_or_light(b / 2.0)
    n_z = weight * pref * (dark_term + clean)
    m_z = weight * pref * dark_term

    y = (1.0 - pd) * math.exp(-(a + b) / 4.0)
    one_minus_y = dark_or_light((a + b) / 4.0)
    i_half, i_full = bessel_i0m1(root / 2.0), bessel_i0m1(root)
    # 1 + 2y^2 - 4y I0(r/2) + I0(r)  and  1 + y^2 - 2y I0(r/2) + e_d (I0(r) - 1)
    n_x = weight * y * y * (2.0 * one_minus_y**2 - 4.0 * y * i_half + i_full)
    m_x = weight * y * y * (one_minus_y**2 - 2.0 * y * i_half + params.e_d * i_full)
    return Counts(max(0.0, n_z), max(0.0, n_x), max(0.0, m_z), max(0.0, m_x))


def baseline_yields(params: ProtocolParams, bp: BaselineParams) -> dict[tuple[str, str], Counts]:
    """Expected Z- and X-basis detection and error counts for every intensity pair."""
    table: dict[tuple[str, str], Counts] = {}
    for la in LABELS:
        for lb in LABELS:
            w = params.N * _probability(bp, "a", la) * _probability(bp, "b", lb)
            table[(la, lb)] = pair_counts(_intensity(bp, "a", la), _intensity(bp, "b", lb), w, params)
    return table


@dataclass
class BaselineResult:
    n_z: float
    E_z: float
    E_z_up: float
    n0_z_low: float
    n11_z_low: float
    phi11_z_up: float
    key_min: float
    H_hat: float
    M_hat: float
    p_E: float
    s_a: float
    s_v: float
    L: int
    R_sig: float
    feasible: bool
    h_min: float = 0.0
    h_max: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def H_total(self) -> float:
        return self.h_min - self.h_max


def decoy_roles(bp: BaselineParams) -> tuple[str, str]:
    """``(weak, middle)`` decoy labels, ranked by intensity.

    The weak decoy carries the phase-error estimate and enters the
    single-pair bound with positive weight; both parties must agree on
    which label is weaker.
    """
    a_weak = "nu" if bp.nu_a < bp.omega_a else "omega"
    b_weak = "nu" if bp.nu_b < bp.omega_b else "omega"
    if a_weak != b_weak:
        raise ValueError("both parties must rank their two decoy intensities the same way")
    return (a_weak, "omega" if a_weak == "nu" else "nu")


def select_primes(bp: BaselineParams) -> tuple[float, float]:
    """``(middle', weak')``: Alice's pair when middle_a/middle_b <= weak_a/weak_b, else Bob's."""
    wk, md = decoy_roles(bp)
    w_a, w_b = _intensity(bp, "a", wk), _intensity(bp, "b", wk)
    d_a, d_b = _intensity(bp, "a", md), _intensity(bp, "b", md)
    if d_a / d_b <= w_a / w_b:
        return d_a, w_a
    return d_b, w_b


def failure_bounds(L: int, e_up: float, p_e: float) -> tuple[float, float, float]:
    """(honest abort, repudiation, forgery) bounds for signature length ``L``."""
    gap = p_e - e_up
    s_a = e_up + gap / 4.0
    s_v = e_up + 3.0 * gap / 4.0
    abort = 2.0 * math.exp(-((s_a - e_up) ** 2) * L)
    repud = 2.0 * math.exp(-(((s_v - s_a) / 2.0) ** 2) * L)
    forge = 2.0 * math.exp(-((p_e - s_v) ** 2) * L)
    return abort, repud, forge


def minimal_length(e_up: float, p_e: float, eps_target: float) -> int:
    """Smallest ``L`` with all three failure bounds at or under ``eps_target``.

    Returns 0 when ``p_E <= E_z`` (no finite ``L`` exists).
    """
    gap = p_e - e_up
    if gap <= 0.0:
        return 0
    worst = gap / 4.0  # all three exponent gaps coincide
    L = max(1, math.ceil(math.log(2.0 / eps_target) / (worst * worst)))

    def ok(n: int) -> bool:
        return max(failure_bounds(n, e_up, p_e)) <= eps_target

    while not ok(L):
        L += 1
    while L > 1 and ok(L - 1):
        L -= 1
    return L


def _entropy_vec(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 0.5)
    out = np.ones_like(x)
    inner = (x > 0.0) & (x < 0.5)
    xi = x[inner]
    out[inner] = -xi * np.log2(xi) - (1.0 - xi) * np.log2(1.0 - xi)
    out[x <= 0.0] = 0.0
    return out


def double_scan(
    params: ProtocolParams,
    bp: BaselineParams,
    yields: dict[tuple[str, str], Counts] | None = None,
    m: int = 1000,
    eps_target: float = 1e-10,
) -> BaselineResult:
    """Worst-case key quantity over the (H, M) confidence rectangle and the signature length it implies."""
    if yields is None:
        yields = baseline_yields(params, bp)
    eps = params.eps
    eps_pa = bp.eps_pa if bp.eps_pa is not None else eps
    mu_a, mu_b = bp.mu_a, bp.mu_b
    wk, md = decoy_roles(bp)
    w_a, w_b = _intensity(bp, "a", wk), _intensity(bp, "b", wk)
    d_a, d_b = _intensity(bp, "a", md), _intensity(bp, "b", md)
    d_p, w_p = select_primes(bp)
    p = {(s, l): _probability(bp, s, l) for s in "ab" for l in LABELS}

    def lo(x: float) -> float:
        return chernoff_expected(x, eps)[0]

    def hi(x: float) -> float:
        return chernoff_expected(x, eps)[1]

    def rate(bound, la: str, lb: str) -> float:
        return bound(yields[(la, lb)].n_x) / (p[("a", la)] * p[("b", lb)])

    n_z = yields[("mu", "mu")].n_z
    m_z = yields[("mu", "mu")].m_z
    if n_z <= 0.0:
        return BaselineResult(
            0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0.0, False, notes=["no Z-basis key"]
        )
    e_z = m_z / n_z
    e_up = min(1.0, hi(m_z) / n_z)

    n0_star = max(
        math.exp(-mu_a) * p[("a", "mu")] / p[("a", "o")] * lo(yields[("o", "mu")].n_z),
        math.exp(-mu_b) * p[("b", "mu")] / p[("b", "o")] * lo(yields[("mu", "o")].n_z),
    )
    n0 = o_lower(n0_star, eps)

    # weak-decoy terms enter with weight d_a d_b d', middle-decoy terms with w_a w_b w'
    ddd = d_a * d_b * d_p
    www = w_a * w_b * w_p
    ww = p[("a", wk)] * p[("b", wk)]
    correct = yields[(wk, wk)].n_x - yields[(wk, wk)].m_x
    p_plus = (
        ddd * math.exp(w_a + w_b) * lo(correct) / ww
        + www * math.exp(d_a) * rate(lo, md, "o")
        + www * math.exp(d_b) * rate(lo, "o", md)
    )
    p_minus = www * math.exp(d_a + d_b) * rate(hi, md, md) + www * rate(hi, "o", "o")
    m_ww = yields[(wk, wk)].m_x
    m_lo = ddd * math.exp(w_a + w_b) * lo(m_ww) / ww
    m_hi = ddd * math.exp(w_a + w_b) * hi(m_ww) / ww
    h_lo = ddd * (
        math.exp(w_b) * rate(lo, "o", wk) + math.exp(w_a) * rate(lo, wk, "o") - rate(hi, "o", "o")
    )
    h_hi = ddd * (
        math.exp(w_b) * rate(hi, "o", wk) + math.exp(w_a) * rate(hi, wk, "o") - rate(lo, "o", "o")
    )
    bounds = np.array([h_lo, h_hi, m_lo, m_hi])
    if not np.all(np.isfinite(bounds)) or h_lo > h_hi or m_lo > m_hi:
        raise BaselineScanError(f"degenerate scan rectangle H=[{h_lo}, {h_hi}] M=[{m_lo}, {m_hi}]")

    z_pair = mu_a * mu_b * math.exp(-mu_a - mu_b) * p[("a", "mu")] * p[("b", "mu")]
    n11_coef = z_pair / (w_a * w_b * d_a * d_b * (d_p - w_p))
    t11x_coef = ww / (ddd * math.exp(w_a + w_b))
    to_z = z_pair / (w_a * w_b * math.exp(-w_a - w_b) * ww)
    beta = math.log(1.0 / eps)
    leak = n_z * params.f * float(_entropy_vec(np.array([e_z]))[0])
    # smoothing and privacy-amplification terms charged against the secret part
    sec_terms = 2.0 * math.log2(2.0 / (eps * eps)) + 2.0 * math.log2(1.0 / (2.0 * eps_pa))
    cor_terms = leak + math.log2(2.0 / eps)
    fixed = sec_terms + cor_terms

    def evaluate(hh: np.ndarray, mm: np.ndarray):
        n11_star = np.maximum(0.0, n11_coef * (p_plus - p_minus + mm - hh))
        # cannot exceed the detections it is a subset of
        n11 = np.minimum(n_z, np.maximum(0.0, n11_star - np.sqrt(2.0 * beta * n11_star)))
        t11_star = np.maximum(0.0, to_z * t11x_coef * (mm - hh / 2.0))
        t11 = t11_star + beta / 2.0 + np.sqrt(2.0 * beta * t11_star + beta * beta / 4.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(n11 > 0.0, np.minimum(0.5, t11 / n11), 0.5)
        key = (n0 + n11 * (1.0 - _entropy_vec(phi)) - fixed) / params.N
        return key, n11, phi

    k = bp.scan_points
    hs = np.linspace(h_lo, h_hi, k)
    ms = np.linspace(m_lo, m_hi, k)
    key, n11g, phig = evaluate(*np.meshgrid(hs, ms, indexing="ij"))
    i, j = np.unravel_index(int(np.argmin(key)), key.shape)  # first minimum in C order
    # one refinement pass on the cells around the incumbent
    hs2 = np.linspace(hs[max(i - 1, 0)], hs[min(i + 1, k - 1)], k)
    ms2 = np.linspace(ms[max(j - 1, 0)], ms[min(j + 1, k - 1)], k)
    key2, n11g2, phig2 = evaluate(*np.meshgrid(hs2, ms2, indexing="ij"))
    i2, j2 = np.unravel_index(int(np.argmin(key2)), key2.shape)
    if key2[i2, j2] < key[i, j]:
        key_min, n11, phi, h_star, m_star = key2[i2, j2], n11g2[i2, j2], phig2[i2, j2], hs2[i2], ms2[j2]
    else:
        key_min, n11, phi, h_star, m_star = key[i, j], n11g[i, j], phig[i, j], hs[i], ms[j]

    c0 = min(1.0, n0 / n_z)
    c1 = min(1.0, n11 / n_z)
    target = c0 + c1 * (1.0 - float(_entropy_vec(np.array([phi]))[0]))
    p_e = binary_entropy_inv(min(1.0, max(0.0, target)))
    notes: list[str] = []
    L = minimal_length(e_up, p_e, eps_target)
    if L == 0:
        notes.append("p_E does not exceed the upper error bound")
        s_a = s_v = e_up
        r_sig = 0.0
    else:
        gap = p_e - e_up
        s_a = e_up + gap / 4.0
        s_v = e_up + 3.0 * gap / 4.0
        r_sig = n_z / (2.0 * L * m)
    return BaselineResult(
        n_z=n_z,
        E_z=e_z,
        E_z_up=e_up,
        n0_z_low=n0,
        n11_z_low=float(n11),
        phi11_z_up=float(phi),
        key_min=float(key_min),
        H_hat=float(h_star),
        M_hat=float(m_star),
        p_E=p_e,
        s_a=s_a,
        s_v=s_v,
        L=L,
        R_sig=r_sig,
        feasible=L > 0,
        h_min=float(key_min) * params.N + cor_terms,
        h_max=cor_terms,
        notes=notes,
    )
