"""Distance sweeps, maximum reach and intensity optimization.

Every evaluation is a pure function of its inputs, so sweep points can be
farmed out to a process pool; results always come back in input order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .baseline import BaselineScanError, double_scan
from .finitekey import NoKeyError, entropy_budget, estimate, signature_length
from .params import BaselineParams, Config, ProtocolParams
from .photonics import DegenerateChannelError, pairing_stats

PROTOCOLS = ("async", "baseline")


@dataclass(frozen=True)
class RateCurvePoint:
    """One row of a rate curve.

    ``n`` is the per-signature key length: the segment length for the
    asynchronous protocol and ``L`` for the baseline.
    """

    l: float
    N: float
    protocol: str
    R_sig: float
    n: int
    n_z: float
    h_min: float
    h_max: float
    H_total: float
    feasible: bool


@dataclass(frozen=True)
class ProfilePoint:
    l: float
    h_min: float
    h_max: float
    H_total: float
    h_min_fraction: float
    h_max_fraction: float
    feasible: bool


def async_point(params: ProtocolParams, l: float, N: float, m: int, eps_target: float) -> RateCurvePoint:
    p = params.at_distance(l).replace(N=N)
    try:
        est = estimate(p, pairing_stats(p))
    except (NoKeyError, DegenerateChannelError):
        return RateCurvePoint(l, N, "async", 0.0, 0, 0.0, 0.0, 0.0, 0.0, False)
    budget = entropy_budget(est, p)
    sizing = signature_length(est, p, m, eps_target)
    r = sizing.R_sig if sizing.feasible else 0.0
    return RateCurvePoint(
        l, N, "async", r, sizing.n, est.n_z, budget.h_min_eps, budget.h_max_cor, budget.H_total, bool(r > 0.0)
    )


def baseline_point(
    params: ProtocolParams, bp: BaselineParams, l: float, N: float, m: int, eps_target: float
) -> RateCurvePoint:
    p = params.at_distance(l).replace(N=N)
    try:
        res = double_scan(p, bp, m=m, eps_target=eps_target)
    except BaselineScanError:
        return RateCurvePoint(l, N, "baseline", 0.0, 0, 0.0, 0.0, 0.0, 0.0, False)
    r = res.R_sig if res.feasible else 0.0
    return RateCurvePoint(l, N, "baseline", r, res.L, res.n_z, res.h_min, res.h_max, res.H_total, bool(r > 0.0))


def _point(task: tuple) -> RateCurvePoint:
    cfg, protocol, l, N, m, eps_target = task
    if protocol == "async":
        return async_point(cfg.protocol, l, N, m, eps_target)
    return baseline_point(cfg.protocol, cfg.baseline, l, N, m, eps_target)


def _map(fn: Callable, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def distances(l_min: float, l_max: float, step: float) -> list[float]:
    """``l_min, l_min + step, ...`` up to and always including ``l_max``."""
    if l_min > l_max:
        raise ValueError(f"l_min {l_min} exceeds l_max {l_max}")
    if step <= 0:
        raise ValueError("step must be positive")
    count = int(math.floor((l_max - l_min) / step + 1e-9))
    out = [l_min + i * step for i in range(count + 1)]
    if out[-1] < l_max - 1e-9:
        out.append(l_max)
    return out


def rate_curve(
    cfg: Config,
    dists: Sequence[float],
    N_list: Iterable[float],
    m: int = 1000,
    eps_target: float = 1e-10,
    protocols: Sequence[str] = PROTOCOLS,
    jobs: int = 1,
) -> list[RateCurvePoint]:
    """Rows ordered by ``N``, then distance, then protocol."""
    for proto in protocols:
        if proto not in PROTOCOLS:
            raise ValueError(f"unknown protocol {proto!r}")
    tasks = [(cfg, proto, l, N, m, eps_target) for N in N_list for l in dists for proto in protocols]
    return _map(_point, tasks, jobs)


def _profile(task: tuple) -> ProfilePoint:
    params, l, N = task
    p = params.at_distance(l).replace(N=N)
    try:
        est = estimate(p, pairing_stats(p))
    except (NoKeyError, DegenerateChannelError):
        return ProfilePoint(l, 0.0, 0.0, 0.0, 0.0, 0.0, False)
    b = entropy_budget(est, p)
    return ProfilePoint(l, b.h_min_eps, b.h_max_cor, b.H_total, b.h_min_fraction, b.h_max_fraction, bool(b.feasible))


def entropy_profile(params: ProtocolParams, dists: Sequence[float], N: float, jobs: int = 1) -> list[ProfilePoint]:
    return _map(_profile, [(params, l, N) for l in dists], jobs)


# ---------------------------------------------------------------------------
# reach and intensity search


def max_reach(
    feasible: Callable[[float], bool],
    l_max: float = 1000.0,
    coarse: float = 25.0,
    resolution: float = 1.0,
) -> float:
    """Largest distance (to ``resolution``) at which ``feasible`` holds.

    Walks a coarse grid from 0 and bisects the first feasible/infeasible
    transition.  Returns -1 if the link fails already at 0 km.
    """
    if not feasible(0.0):
        return -1.0
    lo = 0.0
    hi = None
    l = coarse
    while l <= l_max:
        if feasible(l):
            lo = l
        else:
            hi = l
            break
        l += coarse
    if hi is None:
        return lo
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def async_feasible(params: ProtocolParams, N: float, m: int, eps_target: float) -> Callable[[float], bool]:
    return lambda l: async_point(params, l, N, m, eps_target).feasible


def baseline_feasible(
    params: ProtocolParams, bp: BaselineParams, N: float, m: int, eps_target: float
) -> Callable[[float], bool]:
    return lambda l: baseline_point(params, bp, l, N, m, eps_target).feasible


def async_from_unit(params: ProtocolParams, u: np.ndarray) -> ProtocolParams:
    """Map a point of the unit cube to symmetric asynchronous intensities and probabilities."""
    mu = 0.05 + 0.75 * u[0]
    nu = 0.005 + (0.6 * mu - 0.005) * u[1]
    p_mu = 0.05 + 0.55 * u[2]
    p_nu = 0.05 + (0.9 - p_mu - 0.05) * u[3]
    return params.replace(mu_a=mu, mu_b=mu, nu_a=nu, nu_b=nu, p_mu_a=p_mu, p_mu_b=p_mu, p_nu_a=p_nu, p_nu_b=p_nu)


def baseline_from_unit(bp: BaselineParams, u: np.ndarray) -> BaselineParams:
    """Map a point of the unit cube to symmetric baseline intensities and probabilities."""
    mu = 0.2 + 0.6 * u[0]
    nu = 0.05 + (0.8 * mu - 0.05) * u[1]
    om = 0.005 + (0.8 * nu - 0.005) * u[2]
    p_mu = 0.3 + 0.5 * u[3]
    rest = 1.0 - p_mu
    p_nu = (0.1 + 0.5 * u[4]) * rest
    p_om = (0.1 + 0.5 * u[5]) * (rest - p_nu)
    return bp.replace(
        mu_a=mu, mu_b=mu, nu_a=nu, nu_b=nu, omega_a=om, omega_b=om,
        p_mu_a=p_mu, p_mu_b=p_mu, p_nu_a=p_nu, p_nu_b=p_nu, p_omega_a=p_om, p_omega_b=p_om,
    )


@dataclass(frozen=True)
class ReachOptimum:
    reach: float
    unit: tuple[float, ...]
    evaluations: int


def optimize_reach(
    objective: Callable[[np.ndarray], float],
    dim: int,
    seed: int = 0,
    samples: int = 24,
    steps: Sequence[float] = (0.1, 0.05, 0.02),
) -> ReachOptimum:
    """Seeded random search over the unit cube, then coordinate refinement.

    Deterministic for a given seed.  Ties keep the earlier point.
    """
    rng = np.random.default_rng(seed)
    evals = 0
    best_u = np.full(dim, 0.5)
    best = objective(best_u)
    evals += 1
    for u in rng.random((samples, dim)):
        val = objective(u)
        evals += 1
        if val > best:
            best, best_u = val, u
    for step in steps:
        improved = True
        while improved:
            improved = False
            for i in range(dim):
                for sign in (1.0, -1.0):
                    u = best_u.copy()
                    u[i] = min(1.0, max(0.0, u[i] + sign * step))
                    if u[i] == best_u[i]:
                        continue
                    val = objective(u)
                    evals += 1
                    if val > best:
                        best, best_u, improved = val, u, True
    return ReachOptimum(float(best), tuple(float(x) for x in best_u), evals)


def optimized_async_reach(
    params: ProtocolParams, N: float, m: int = 1000, eps_target: float = 1e-10, seed: int = 0, **kw
) -> tuple[ReachOptimum, ProtocolParams]:
    def obj(u: np.ndarray) -> float:
        return max_reach(async_feasible(async_from_unit(params, u), N, m, eps_target))

    opt = optimize_reach(obj, 4, seed, **kw)
    return opt, async_from_unit(params, np.array(opt.unit))


def optimized_baseline_reach(
    params: ProtocolParams,
    bp: BaselineParams,
    N: float,
    m: int = 1000,
    eps_target: float = 1e-10,
    seed: int = 0,
    **kw,
) -> tuple[ReachOptimum, BaselineParams]:
    def obj(u: np.ndarray) -> float:
        return max_reach(baseline_feasible(params, baseline_from_unit(bp, u), N, m, eps_target))

    opt = optimize_reach(obj, 6, seed, **kw)
    return opt, baseline_from_unit(bp, np.array(opt.unit))
