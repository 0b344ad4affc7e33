"""Analytic channel, detector and asynchronous-pairing model.

Intensities are indexed ``0 = mu``, ``1 = nu``, ``2 = o`` (vacuum) per party.
A coincidence label is the multiset of the two indices a party used in the
early and late bins, written as the total-intensity name: ``"o"``, ``"nu"``,
``"mu"``, ``"2nu"``, ``"mu+nu"``, ``"2mu"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernels
from .errors import ResourceLimitError
from .params import ProtocolParams

MU, NU, VAC = 0, 1, 2

#: label -> ordered (early, late) intensity-index splits
LABEL_SPLITS: dict[str, tuple[tuple[int, int], ...]] = {
    "o": ((VAC, VAC),),
    "nu": ((NU, VAC), (VAC, NU)),
    "mu": ((MU, VAC), (VAC, MU)),
    "2nu": ((NU, NU),),
    "mu+nu": ((MU, NU), (NU, MU)),
    "2mu": ((MU, MU),),
}
#: labels that survive sifting (total intensity below mu + nu)
KEPT_LABELS = ("o", "nu", "mu", "2nu")

SIMPSON_PANELS = 2048


class DegenerateChannelError(ValueError):
    """No clicks are possible, so no pairing statistics exist."""


def label_of(early: int, late: int) -> str:
    pair = tuple(sorted((early, late)))
    for name, splits in LABEL_SPLITS.items():
        if tuple(sorted(splits[0])) == pair:
            return name
    raise ValueError(f"bad intensity indices {early}, {late}")


def is_filtered(ka: int, kb: int) -> bool:
    """Click filtering discards (mu_a|nu_b) and (nu_a|mu_b) bins."""
    return (ka, kb) in ((MU, NU), (NU, MU))


# ---------------------------------------------------------------------------
# Bessel I0


def bessel_i0m1(x: float) -> float:
    """``I0(x) - 1`` without cancellation for small ``|x|``."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"bessel_i0m1 needs a finite argument, got {x}")
    if abs(x) > 2.0:
        return bessel_i0(x) - 1.0
    q = 0.25 * x * x
    term = q
    total = q
    k = 1
    while term > 1e-17 * total:
        k += 1
        term *= q / (k * k)
        total += term
    return total


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero.

    Power series below ``|x| = 40`` (all terms positive, so no
    cancellation), Hankel asymptotic series above it.  Both stop once the
    next term falls under ``1e-16`` of the partial sum.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"bessel_i0 needs a finite argument, got {x}")
    ax = abs(x)
    if ax <= 40.0:
        q = 0.25 * ax * ax
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term < 1e-16 * total:
                return total
    # asymptotic: e^x / sqrt(2 pi x) * sum ((2k-1)!!)^2 / (k! (8x)^k)
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 / (k * 8.0 * ax)
        if nxt > term:
            break
        term = nxt
        total += term
        if term < 1e-16 * total:
            break
    return math.exp(ax) / math.sqrt(2.0 * math.pi * ax) * total


# ---------------------------------------------------------------------------
# gains


def _interference(k_a: float, k_b: float, params: ProtocolParams) -> tuple[float, float, float]:
    """Return ``(x, y_L, y_R)`` for one bin with intensities ``k_a, k_b``."""
    ia = params.eta_a * k_a
    ib = params.eta_b * k_b
    x = math.sqrt(ia * ib)
    y_l = (1.0 - params.pd_l) * math.exp(-params.eta_l * (ia + ib) / 2.0)
    y_r = (1.0 - params.pd_r) * math.exp(-params.eta_r * (ia + ib) / 2.0)
    return x, y_l, y_r


def gain_theta(k_a: float, k_b: float, theta, detector: str, params: ProtocolParams):
    """Probability that only ``detector`` (``'L'`` or ``'R'``) clicks at phase ``theta``.

    ``theta`` may be an array.
    """
    if k_a < 0 or k_b < 0:
        raise ValueError("intensities must be nonnegative")
    x, y_l, y_r = _interference(k_a, k_b, params)
    c = np.cos(theta)
    if detector == "L":
        return y_r * np.exp(params.eta_r * x * c) * (1.0 - y_l * np.exp(-params.eta_l * x * c))
    if detector == "R":
        return y_l * np.exp(-params.eta_l * x * c) * (1.0 - y_r * np.exp(params.eta_r * x * c))
    raise ValueError(f"detector must be 'L' or 'R', got {detector!r}")


def overall_gain(k_a: float, k_b: float, params: ProtocolParams) -> float:
    """Phase-averaged probability of exactly one click (closed Bessel form)."""
    if k_a < 0 or k_b < 0:
        raise ValueError("intensities must be nonnegative")
    x, y_l, y_r = _interference(k_a, k_b, params)
    return (
        y_l * bessel_i0(params.eta_l * x)
        + y_r * bessel_i0(params.eta_r * x)
        - 2.0 * y_l * y_r * bessel_i0((params.eta_l - params.eta_r) * x)
    )


def simpson_phase(values: np.ndarray) -> float:
    """Composite Simpson over ``[0, 2 pi]`` for samples on :func:`phase_grid`."""
    h = 2.0 * math.pi / (len(values) - 1)
    return h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def phase_grid(panels: int = SIMPSON_PANELS) -> np.ndarray:
    return np.linspace(0.0, 2.0 * math.pi, panels + 1)


# ---------------------------------------------------------------------------
# pairing statistics


@dataclass
class PairingStats:
    """Expected (or, from the Monte Carlo oracle, observed) pairing counts.

    ``n_sets`` maps ``(label_a, label_b)`` to a coincidence count.  The
    ``("2nu", "2nu")`` entry counts only phase-matched pairs
    (``phi_ab mod 2 pi`` in ``{0, pi}``), i.e. the X-basis set.
    """

    q_tot: float
    q_tc: float
    n_tot: float
    t_mean: float
    n_sets: dict[tuple[str, str], float]
    m_z: float
    m_x: float
    # standard errors, filled by the Monte Carlo oracle only
    stderr: dict[str, float] = field(default_factory=dict)

    @property
    def n_z(self) -> float:
        return self.n_sets[("mu", "mu")]

    @property
    def n_x(self) -> float:
        return self.n_sets[("2nu", "2nu")]

    def n(self, la: str, lb: str) -> float:
        return self.n_sets[(la, lb)]


def gain_table(params: ProtocolParams, filtered: bool = True) -> np.ndarray:
    """3x3 table of ``p_ka * p_kb * q(ka|kb)``; filtered entries zeroed."""
    ka = params.intensities("a")
    kb = params.intensities("b")
    pa = params.probabilities("a")
    pb = params.probabilities("b")
    table = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            if filtered and is_filtered(i, j):
                continue
            table[i, j] = pa[i] * pb[j] * overall_gain(ka[i], kb[j], params)
    return table


def total_gain(params: ProtocolParams) -> float:
    return float(gain_table(params).sum())


def set_weight(table: np.ndarray, la: str, lb: str) -> float:
    """Sum over splits of ``table[e_a, e_b] * table[l_a, l_b]``."""
    total = 0.0
    for ea, la_ in LABEL_SPLITS[la]:
        for eb, lb_ in LABEL_SPLITS[lb]:
            total += table[ea, eb] * table[la_, lb_]
    return total


def _phase_gains(params: ProtocolParams, shift: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    theta = phase_grid() + shift
    ka, kb = params.nu_a, params.nu_b
    return gain_theta(ka, kb, theta, "L", params), gain_theta(ka, kb, theta, "R", params)


def pairing_stats(params: ProtocolParams, labels: Iterable[str] = KEPT_LABELS) -> PairingStats:
    """Expected pairing statistics for the configured link."""
    table = gain_table(params)
    q_tot = float(table.sum())
    if q_tot <= 0.0:
        raise DegenerateChannelError("total click probability is zero; no pairing possible")
    n_tc = params.n_tc
    if n_tc > 0:
        q_tc = -math.expm1(n_tc * math.log1p(-q_tot)) if q_tot < 1.0 else 1.0
    else:
        q_tc = 0.0
    n_tot = params.N * q_tot / (1.0 + 1.0 / q_tc) if q_tc > 0 else 0.0
    t_mean = (1.0 - n_tc * q_tot * (1.0 / q_tc - 1.0)) / (params.F * q_tot) if q_tc > 0 else math.inf

    weights = table / q_tot
    labels = tuple(labels)
    n_sets: dict[tuple[str, str], float] = {}
    for la in labels:
        for lb in labels:
            if la == "2nu" and lb == "2nu":
                continue
            n_sets[(la, lb)] = n_tot * set_weight(weights, la, lb)

    pp = params.p_nu_a * params.p_nu_b / q_tot
    prefactor = n_tot / (params.M * math.pi)
    ql, qr = _phase_gains(params)
    n_sets[("2nu", "2nu")] = prefactor * simpson_phase((pp * (ql + qr)) ** 2)
    ql_d, qr_d = _phase_gains(params, params.delta)
    wrong = ql * qr_d + qr * ql_d
    same = ql * ql_d + qr * qr_d
    m_x = prefactor * pp * pp * simpson_phase((1.0 - params.e_d) * wrong + params.e_d * same)

    m_z = n_tot * (weights[MU, MU] * weights[VAC, VAC] + weights[VAC, VAC] * weights[MU, MU])
    return PairingStats(q_tot, q_tc, n_tot, t_mean, n_sets, float(m_z), float(m_x))


# ---------------------------------------------------------------------------
# pulse-level Monte Carlo oracle

#: largest run the oracle accepts
MC_MAX_BINS = 100_000_000
_MC_CHUNK = 1 << 21


def x_flip(same_slice, same_detector):
    """Whether Bob flips his X-basis bit for a sifted pair (elementwise).

    Flips on ``phi = 0`` with two different detectors and on ``phi = pi``
    with the same detector twice.  The remaining ``phi = pi`` pattern (two
    different detectors) is taken as no flip.
    """
    same_slice = np.asarray(same_slice, dtype=bool)
    same_detector = np.asarray(same_detector, dtype=bool)
    return np.where(same_slice, ~same_detector, same_detector)


def mc_oracle(params: ProtocolParams, n_bins: int, rng: np.random.Generator) -> PairingStats:
    """Simulate ``n_bins`` bins and return observed pairing statistics.

    Each bin draws both intensities and both phase slices; the reference
    phase offset is drawn once per run.  Clicks are sampled from
    :func:`gain_theta`, filtered, paired greedily within the ``T_c``
    window, and sorted into Z- and X-basis sets.  ``stderr`` holds
    Poisson errors for counts and the binomial error for ``q_tot``.
    The reference phase is static, so ``delta`` must be 0.
    """
    n_bins = int(n_bins)
    if n_bins > MC_MAX_BINS:
        raise ResourceLimitError(f"{n_bins} bins exceeds the {MC_MAX_BINS} limit")
    if n_bins < 0:
        raise ValueError("n_bins must be nonnegative")
    if params.delta != 0.0:
        raise ValueError("the Monte Carlo oracle models a static reference phase (delta = 0)")
    M = params.M
    ka, kb = params.intensities("a"), params.intensities("b")
    cum_a = np.cumsum(params.probabilities("a"))[:-1]
    cum_b = np.cumsum(params.probabilities("b"))[:-1]
    phi0 = rng.uniform(0.0, 2.0 * math.pi)
    theta = phi0 + 2.0 * math.pi * np.arange(M) / M
    # (i_a, i_b, slice difference) -> single-click probabilities
    q_l = np.zeros((3, 3, M))
    q_r = np.zeros((3, 3, M))
    for i in range(3):
        for j in range(3):
            if not is_filtered(i, j):
                q_l[i, j] = gain_theta(ka[i], kb[j], theta, "L", params)
                q_r[i, j] = gain_theta(ka[i], kb[j], theta, "R", params)

    bins, ia, ib, diff, det = [], [], [], [], []
    for start in range(0, n_bins, _MC_CHUNK):
        k = min(_MC_CHUNK, n_bins - start)
        a = np.searchsorted(cum_a, rng.random(k), side="right")
        b = np.searchsorted(cum_b, rng.random(k), side="right")
        d = (rng.integers(0, M, k) - rng.integers(0, M, k)) % M
        u = rng.random(k)
        ql = q_l[a, b, d]
        hit = u < ql + q_r[a, b, d]
        idx = np.flatnonzero(hit)
        bins.append(idx + start)
        ia.append(a[idx])
        ib.append(b[idx])
        diff.append(d[idx])
        det.append((u[idx] >= ql[idx]).astype(np.int8))  # 0 = L, 1 = R
    cat = (lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt))
    bins, ia, ib = cat(bins, np.int64), cat(ia, np.int64), cat(ib, np.int64)
    diff, det = cat(diff, np.int64), cat(det, np.int8)

    clicks = len(bins)
    q_tot = clicks / n_bins if n_bins else 0.0
    first = kernels.pair_clicks(bins, params.n_tc)
    second = first + 1
    n_pairs = len(first)
    # every pairing attempt starts from an unpaired click: pairs plus dropped clicks
    attempts = clicks - n_pairs - (1 if clicks and (n_pairs == 0 or second[-1] != clicks - 1) else 0)
    q_tc = n_pairs / attempts if attempts > 0 else 0.0
    t_mean = float(np.mean(bins[second] - bins[first])) / params.F if n_pairs else math.inf

    names = {}
    for name, splits in LABEL_SPLITS.items():
        for e, l in splits:
            names[(e, l)] = name
    code = {name: c for c, name in enumerate(LABEL_SPLITS)}
    lut = np.zeros((3, 3), dtype=np.int64)
    for (e, l), name in names.items():
        lut[e, l] = code[name]
    lab_a = lut[ia[first], ia[second]]
    lab_b = lut[ib[first], ib[second]]

    n_sets: dict[tuple[str, str], float] = {}
    stderr: dict[str, float] = {}
    for la in KEPT_LABELS:
        for lb in KEPT_LABELS:
            if la == "2nu" and lb == "2nu":
                continue
            n_sets[(la, lb)] = float(np.count_nonzero((lab_a == code[la]) & (lab_b == code[lb])))

    # X basis: both parties sent nu in both bins, slice differences agree modulo pi
    x = np.flatnonzero((lab_a == code["2nu"]) & (lab_b == code["2nu"]))
    dd = (diff[first[x]] - diff[second[x]]) % M
    keep = (dd == 0) | ((M % 2 == 0) & (dd == M // 2))
    x = x[keep]
    same_slice = dd[keep] == 0
    same_det = det[first[x]] == det[second[x]]
    flips = x_flip(same_slice, same_det)
    misaligned = rng.random(len(x)) < params.e_d
    n_x = float(len(x))
    m_x = float(np.count_nonzero(flips ^ misaligned))
    n_sets[("2nu", "2nu")] = n_x

    # Z basis: an error when both parties put mu in the same bin
    z = (lab_a == code["mu"]) & (lab_b == code["mu"])
    m_z = float(np.count_nonzero(z & (ia[first] == ib[first])))

    for key, val in n_sets.items():
        stderr[f"n[{key[0]},{key[1]}]"] = math.sqrt(max(val, 1.0))
    stderr["q_tot"] = math.sqrt(q_tot * (1.0 - q_tot) / n_bins) if n_bins else 0.0
    stderr["n_tot"] = math.sqrt(max(n_pairs, 1.0))
    stderr["m_z"] = math.sqrt(max(m_z, 1.0))
    stderr["m_x"] = math.sqrt(max(m_x, 1.0))
    return PairingStats(q_tot, q_tc, float(n_pairs), t_mean, n_sets, m_z, m_x, stderr)
