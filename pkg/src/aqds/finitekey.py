"""Finite-key estimation for the asynchronous MDI distribution stage.

Covers Chernoff and random-sampling bounds, decoy-state estimates of the
vacuum and single-photon-pair contributions, the smooth-entropy budget,
the n-bit subgroup bounds and the minimum signature length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .params import ProtocolParams
from .photonics import LABEL_SPLITS, PairingStats, gain_table, is_filtered

# ---------------------------------------------------------------------------
# concentration bounds


class NoKeyError(ValueError):
    """The Z-basis raw key is empty."""


def _beta(eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    return math.log(1.0 / eps)


@dataclass(frozen=True)
class ChernoffBound:
    """One Chernoff bound with ``beta = ln(1/eps)``.

    ``direction`` is ``"observed"`` (bound an observed count from its
    expectation) or ``"expected"`` (bound the expectation from an observed
    count); ``sense`` is ``"upper"`` or ``"lower"``.
    """

    beta: float
    direction: str
    sense: str

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.direction not in ("observed", "expected") or self.sense not in ("upper", "lower"):
            raise ValueError("bad direction/sense")

    @classmethod
    def from_eps(cls, eps: float, direction: str, sense: str) -> "ChernoffBound":
        return cls(_beta(eps), direction, sense)

    def __call__(self, value: float) -> float:
        b = self.beta
        x = max(0.0, value)
        if self.direction == "observed":
            if self.sense == "upper":
                return x + b / 2.0 + math.sqrt(2.0 * b * x + b * b / 4.0)
            return max(0.0, x - math.sqrt(2.0 * b * x))
        if self.sense == "upper":
            return x + b + math.sqrt(2.0 * b * x + b * b)
        return max(0.0, x - b / 2.0 - math.sqrt(2.0 * b * x + b * b / 4.0))


def chernoff_observed(x_star: float, eps: float) -> tuple[float, float]:
    """(lower, upper) bounds on an observed count with expectation ``x_star``."""
    if x_star < 0:
        raise ValueError("x_star must be nonnegative")
    b = _beta(eps)
    upper = x_star + b / 2.0 + math.sqrt(2.0 * b * x_star + b * b / 4.0)
    lower = max(0.0, x_star - math.sqrt(2.0 * b * x_star))
    return lower, upper


def chernoff_expected(x: float, eps: float) -> tuple[float, float]:
    """(lower, upper) bounds on the expectation behind an observed count ``x``."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    b = _beta(eps)
    upper = x + b + math.sqrt(2.0 * b * x + b * b)
    lower = max(0.0, x - b / 2.0 - math.sqrt(2.0 * b * x + b * b / 4.0))
    return lower, upper


def o_lower(x_star: float, eps: float) -> float:
    return chernoff_observed(max(0.0, x_star), eps)[0]


def o_upper(x_star: float, eps: float) -> float:
    return chernoff_observed(max(0.0, x_star), eps)[1]


def gamma_u(n: float, k: float, lam: float, eps: float) -> float:
    """Random-sampling-without-replacement correction to a rate ``lam``.

    ``n`` and ``k`` are the sizes of the two sample groups.
    """
    if n <= 0 or k <= 0:
        raise ValueError(f"sample sizes must be positive, got n={n}, k={k}")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must be in (0, 1), got {lam}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    s = n + k
    a = max(n, k)
    g = s / (n * k) * math.log(s / (2.0 * math.pi * n * k * lam * (1.0 - lam) * eps * eps))
    if g <= 0.0:
        return 0.0
    ag = a * a * g / (s * s)
    num = (1.0 - 2.0 * lam) * a * g / s + math.sqrt(a * a * g * g / (s * s) + 4.0 * lam * (1.0 - lam) * g)
    return num / (2.0 + 2.0 * ag)


# ---------------------------------------------------------------------------
# binary entropy


def binary_entropy(x: float) -> float:
    """Shannon entropy of a Bernoulli(x) variable, in bits."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def binary_entropy_inv(y: float, tol: float = 1e-12) -> float:
    """The root of ``H(x) = y`` in ``[0, 1/2]``, by bisection."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"binary_entropy_inv needs y in [0, 1], got {y}")
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _h_capped(rate: float) -> float:
    """Entropy with rates at or above 1/2 saturating at 1 bit."""
    if rate >= 0.5:
        return 1.0
    return binary_entropy(max(0.0, rate))


# ---------------------------------------------------------------------------
# decoy-state estimation


@dataclass
class EstimatedParams:
    n_z: float
    E_z: float
    s0_z_low: float
    s11_z_low: float
    phi11_z_up: float
    s11_x_low: float
    e11_x_up: float
    t11_x_up: float
    m0_2nu_low: float
    mu_prime: float
    nu_prime: float
    degenerate: bool = False


def set_probability(params: ProtocolParams, la: str, lb: str) -> float:
    """Probability that a pair lands in ``[la, lb]`` given unfiltered bins."""
    pa = params.probabilities("a")
    pb = params.probabilities("b")
    p_s = 1.0 - pa[0] * pb[1] - pa[1] * pb[0]
    total = 0.0
    for ea, l_a in LABEL_SPLITS[la]:
        for eb, l_b in LABEL_SPLITS[lb]:
            if is_filtered(ea, eb) or is_filtered(l_a, l_b):
                continue
            total += (pa[ea] * pb[eb] / p_s) * (pa[l_a] * pb[l_b] / p_s)
    return total


def select_primes(params: ProtocolParams) -> tuple[float, float]:
    """``(mu', nu')``: Alice's pair when mu_a/mu_b <= nu_a/nu_b, else Bob's."""
    if params.mu_a / params.mu_b <= params.nu_a / params.nu_b:
        return params.mu_a, params.nu_a
    return params.mu_b, params.nu_b


def _decoy_bracket(params: ProtocolParams, stats: PairingStats, eps: float) -> float:
    """Brace term shared by the Z- and X-basis single-photon-pair bounds."""
    mu_a, mu_b, nu_a, nu_b = params.mu_a, params.mu_b, params.nu_a, params.nu_b
    mu_p, nu_p = select_primes(params)

    def lo(la: str, lb: str) -> float:
        return chernoff_expected(stats.n(la, lb), eps)[0] / set_probability(params, la, lb)

    def hi(la: str, lb: str) -> float:
        return chernoff_expected(stats.n(la, lb), eps)[1] / set_probability(params, la, lb)

    nu_part = (
        math.exp(nu_a + nu_b) * lo("nu", "nu")
        - math.exp(nu_b) * hi("o", "nu")
        - math.exp(nu_a) * hi("nu", "o")
        + lo("o", "o")
    )
    mu_part = (
        math.exp(mu_a + mu_b) * hi("mu", "mu")
        - math.exp(mu_b) * lo("o", "mu")
        - math.exp(mu_a) * lo("mu", "o")
        + lo("o", "o")
    )
    return mu_a * mu_b * mu_p * nu_part - nu_a * nu_b * nu_p * mu_part


def phase_match_fraction(params: ProtocolParams) -> float:
    """Fraction of [2nu, 2nu] pairs kept by the phase-matching rule."""
    return 2.0 / params.M


def estimate(params: ProtocolParams, stats: PairingStats) -> EstimatedParams:
    """Decoy-state finite-key estimates from (expected) pairing statistics.

    Negative intermediate bounds clamp to zero.  An upper phase-error bound
    at or above 1/2 sets ``degenerate`` (no extractable entropy).
    """
    eps = params.eps
    mu_a, mu_b, nu_a, nu_b = params.mu_a, params.mu_b, params.nu_a, params.nu_b
    if not (mu_a > nu_a > 0 and mu_b > nu_b > 0):
        raise ValueError("estimation needs mu > nu > 0 for both parties")
    n_z = stats.n_z
    if n_z <= 0:
        raise NoKeyError("n_z = 0: no Z-basis key")
    e_z = min(1.0, stats.m_z / n_z)
    mu_p, nu_p = select_primes(params)
    p_mm = set_probability(params, "mu", "mu")

    # vacuum contribution
    n_om_low = chernoff_expected(stats.n("o", "mu"), eps)[0]
    s0_star = math.exp(-mu_a) * p_mm / set_probability(params, "o", "mu") * n_om_low
    s0 = o_lower(s0_star, eps)

    # single-photon pairs, Z basis
    bracket = _decoy_bracket(params, stats, eps)
    s11_star = math.exp(-mu_a - mu_b) * p_mm / (nu_a * nu_b * (mu_p - nu_p)) * bracket
    s11 = o_lower(max(0.0, s11_star), eps)

    # X basis
    p_xx = phase_match_fraction(params) * set_probability(params, "2nu", "2nu")
    s11x_star = math.exp(-2 * nu_a - 2 * nu_b) * 4.0 * p_xx / (mu_a * mu_b * (mu_p - nu_p)) * bracket
    s11x = o_lower(max(0.0, s11x_star), eps)
    m0_star = (
        math.exp(-2 * nu_a) * p_xx / (2.0 * set_probability(params, "o", "2nu"))
        * chernoff_expected(stats.n("o", "2nu"), eps)[0]
        + math.exp(-2 * nu_b) * p_xx / (2.0 * set_probability(params, "2nu", "o"))
        * chernoff_expected(stats.n("2nu", "o"), eps)[0]
        - math.exp(-2 * nu_a - 2 * nu_b) * p_xx / (2.0 * set_probability(params, "o", "o"))
        * chernoff_expected(stats.n("o", "o"), eps)[1]
    )
    m0 = o_lower(max(0.0, m0_star), eps)
    t11x = max(0.0, stats.m_x - m0)

    degenerate = False
    if s11x <= 0.0 or s11 <= 0.0:
        e11x = 0.5
        phi = 0.5
        degenerate = True
    else:
        e11x = min(0.5, t11x / s11x)
        lam = min(max(e11x, 1e-15), 0.5)
        if lam >= 0.5:
            phi = 0.5
        else:
            phi = min(0.5, e11x + gamma_u(s11, s11x, lam, params.eps_phase))
        degenerate = phi >= 0.5

    # a subset can never exceed the raw key
    if s0 + s11 > n_z:
        scale = n_z / (s0 + s11)
        s0, s11 = s0 * scale, s11 * scale
    return EstimatedParams(
        n_z=n_z,
        E_z=e_z,
        s0_z_low=s0,
        s11_z_low=s11,
        phi11_z_up=phi,
        s11_x_low=s11x,
        e11_x_up=e11x,
        t11_x_up=t11x,
        m0_2nu_low=m0,
        mu_prime=mu_p,
        nu_prime=nu_p,
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# entropy budget


@dataclass
class EntropyBudget:
    h_min_eps: float
    h_max_cor: float
    H_total: float
    n_z: float
    leak_ec: float

    @property
    def h_min_fraction(self) -> float:
        return self.h_min_eps / self.n_z if self.n_z > 0 else 0.0

    @property
    def h_max_fraction(self) -> float:
        return self.h_max_cor / self.n_z if self.n_z > 0 else 0.0

    @property
    def feasible(self) -> bool:
        return self.H_total > 0


def entropy_budget(est: EstimatedParams, params: ProtocolParams) -> EntropyBudget:
    eps_p = eps_hat = eps_cor = params.eps
    h_min = (
        est.s0_z_low
        + est.s11_z_low * (1.0 - _h_capped(est.phi11_z_up))
        - 2.0 * math.log2(2.0 / (eps_p * eps_hat))
    )
    leak = est.n_z * params.f * _h_capped(est.E_z)
    h_max = leak + math.log2(2.0 / eps_cor)
    return EntropyBudget(h_min, h_max, h_min - h_max, est.n_z, leak)


def composite_eps_sec(params: ProtocolParams) -> float:
    """Composite secrecy parameter with every component set to ``eps``."""
    e = params.eps
    e_e = params.eps_phase
    return 2.0 * (e + 2.0 * e_e + e + 2.0 * e + e)


# ---------------------------------------------------------------------------
# n-bit subgroups and signature length


@dataclass
class SignatureSizing:
    n: int
    H_n: float
    s0_zn_low: float
    s11_zn_low: float
    phi11_zn_up: float
    R_sig: float
    eps_for: float
    eps_rob: float
    eps_rep: float
    feasible: bool
    notes: list[str] = field(default_factory=list)


def subgroup_bounds(est: EstimatedParams, n: int, eps: float) -> tuple[float, float, float]:
    """Bounds on the vacuum count, single-pair count and phase error of an n-bit group."""
    n_z = est.n_z
    if not 1 <= n < n_z:
        raise ValueError(f"need 1 <= n < n_z, got n={n}, n_z={n_z}")
    rest = n_z - n

    def scaled(total: float) -> float:
        rate = total / n_z
        if rate <= 0.0:
            return 0.0
        if rate >= 1.0:
            return float(n)
        return max(0.0, n * (rate - gamma_u(n, rest, rate, eps)))

    s0n = scaled(est.s0_z_low)
    s11n = scaled(est.s11_z_low)
    phi = est.phi11_z_up
    other = est.s11_z_low - s11n
    if s11n <= 0.0 or other <= 0.0 or phi >= 0.5:
        phin = 0.5
    else:
        phin = min(0.5, phi + gamma_u(s11n, other, max(phi, 1e-15), eps))
    return s0n, s11n, phin


def unknown_information(est: EstimatedParams, params: ProtocolParams, n: int) -> tuple[float, tuple[float, float, float]]:
    """``(H_n, subgroup bounds)`` for an n-bit key segment."""
    s0n, s11n, phin = subgroup_bounds(est, n, params.eps)
    h_n = s0n + s11n * (1.0 - _h_capped(phin)) - n * params.f * _h_capped(est.E_z)
    return h_n, (s0n, s11n, phin)


def forgery_bound(m: int, h_n: float) -> float:
    """``m * 2^(1 - H_n)`` clamped to [0, 1]."""
    exponent = 1.0 - h_n
    if exponent > 0:
        return 1.0
    return min(1.0, m * 2.0 ** exponent)


def signature_length(
    est: EstimatedParams,
    params: ProtocolParams,
    m: int,
    eps_target: float = 1e-10,
    require_all: bool = False,
) -> SignatureSizing:
    """Smallest n whose n-bit segment keeps the forgery bound under ``eps_target``.

    Search doubles n, bisects the bracket, then walks down while n-1 still
    passes.  ``n`` is capped at ``n_z / 3``.  The robustness and repudiation
    bounds do not depend on n; with ``require_all`` they also gate
    feasibility.
    """
    eps_rob = min(1.0, 2.0 * params.eps + 2.0 * params.eps)
    eps_rep = min(1.0, 2.0 * params.eps)
    cap = int(math.floor(est.n_z / 3.0))
    if cap >= est.n_z:
        cap = int(math.ceil(est.n_z)) - 1

    def infeasible(note: str) -> SignatureSizing:
        return SignatureSizing(0, 0.0, 0.0, 0.0, 0.5, 0.0, 1.0, eps_rob, eps_rep, False, [note])

    if cap < 1 or est.degenerate:
        return infeasible("no usable key")
    if require_all and max(eps_rob, eps_rep) > eps_target:
        return infeasible("robustness/repudiation bound exceeds target")

    cache: dict[int, tuple[float, tuple[float, float, float]]] = {}

    def info(n: int):
        if n not in cache:
            cache[n] = unknown_information(est, params, n)
        return cache[n]

    def passes(n: int) -> bool:
        return forgery_bound(m, info(n)[0]) <= eps_target

    lo, hi = 0, 1
    while not passes(hi):
        lo = hi
        if hi == cap:
            return infeasible("no n <= n_z/3 reaches the target")
        hi = min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(mid):
            hi = mid
        else:
            lo = mid
    n = hi
    while n > 1 and passes(n - 1):
        n -= 1
    h_n, (s0n, s11n, phin) = info(n)
    return SignatureSizing(
        n=n,
        H_n=h_n,
        s0_zn_low=s0n,
        s11_zn_low=s11n,
        phi11_zn_up=phin,
        R_sig=est.n_z / (3.0 * n),
        eps_for=forgery_bound(m, h_n),
        eps_rob=eps_rob,
        eps_rep=eps_rep,
        feasible=True,
    )
