"""Self-test battery behind ``aqds selftest``.

Each check returns a :class:`CheckResult` carrying its measured deviation
and threshold so the JSON report is self-explanatory.  ``fault`` injects a
known defect into the analytic model to prove the checks can fail.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .finitekey import binary_entropy, binary_entropy_inv, chernoff_expected, chernoff_observed
from .gf2 import BitString, Gf2Poly, derive_irreducible
from .messaging import run_three_party, split_keys, SignatureBundle
from .otuh import ToeplitzSpec, matrix_hash, toeplitz_hash, toeplitz_matrix
from .params import Config, ProtocolParams
from .photonics import mc_oracle, pairing_stats

FAULTS = ("pd-sign",)
SIGMA_LIMIT = 5.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    deviation: float
    threshold: float
    detail: str = ""

    def __post_init__(self) -> None:
        # numpy scalars sneak in from the analytic side; keep the report plain JSON
        self.passed = bool(self.passed)
        self.deviation = float(self.deviation)
        self.threshold = float(self.threshold)


@dataclass
class Report:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        return json.dumps(
            {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}, indent=2, sort_keys=True
        )


def _with_fault(params: ProtocolParams, fault: Optional[str]) -> ProtocolParams:
    if fault is None:
        return params
    if fault == "pd-sign":
        # bypass validation on purpose: the analytic side sees -p_d
        bad = copy.copy(params)
        object.__setattr__(bad, "p_d", -params.p_d)
        return bad
    raise ValueError(f"unknown fault {fault!r}; known: {', '.join(FAULTS)}")


def mc_agreement(
    params: ProtocolParams, n_bins: int, seed: int, label: str, fault: Optional[str] = None
) -> list[CheckResult]:
    """Observed vs expected q_tot, n[mu,mu], n[2nu,2nu], m[mu,mu], m[2nu,2nu] in standard errors."""
    p = params.replace(N=float(n_bins))
    emp = mc_oracle(p, n_bins, np.random.default_rng(seed))
    ana = pairing_stats(_with_fault(p, fault))
    out = []
    sd_q = math.sqrt(max(ana.q_tot * (1.0 - ana.q_tot), 0.0) / n_bins)
    pairs = [
        ("q_tot", ana.q_tot, emp.q_tot, sd_q),
        ("n[mu,mu]", ana.n_z, emp.n_z, math.sqrt(max(ana.n_z, 1.0))),
        ("n[2nu,2nu]", ana.n_x, emp.n_x, math.sqrt(max(ana.n_x, 1.0))),
        ("m[mu,mu]", ana.m_z, emp.m_z, math.sqrt(max(ana.m_z, 1.0))),
        ("m[2nu,2nu]", ana.m_x, emp.m_x, math.sqrt(max(ana.m_x, 1.0))),
    ]
    for name, a, e, sd in pairs:
        dev = abs(a - e) / sd if sd > 0 else (0.0 if a == e else math.inf)
        out.append(
            CheckResult(f"mc/{label}/{name}", dev <= SIGMA_LIMIT, dev, SIGMA_LIMIT, f"analytic={a:.6e} observed={e:.6e}")
        )
    return out


def bound_checks(draws: int, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_bracket = 0.0
    bad = 0
    for _ in range(draws):
        x = float(10.0 ** rng.uniform(0, 12))
        eps = float(10.0 ** rng.uniform(-15, -2))
        lo, hi = chernoff_expected(x, eps)
        olo, ohi = chernoff_observed(x, eps)
        if not (lo <= x <= hi and olo <= x <= ohi):
            bad += 1
    worst_rt = 0.0
    for x in rng.uniform(1e-9, 0.5, draws):
        worst_rt = max(worst_rt, abs(binary_entropy_inv(binary_entropy(float(x))) - x))
    return [
        CheckResult("bounds/chernoff-bracket", bad == 0, float(bad), 0.0, f"{draws} draws"),
        CheckResult("bounds/entropy-roundtrip", worst_rt <= 1e-10, worst_rt, 1e-10, f"{draws} draws"),
    ]


def hash_checks(instances: int, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    nonzero = 0
    nonlinear = 0
    mismatch = 0
    for _ in range(instances):
        n = int(rng.choice([8, 16]))
        p = derive_irreducible(BitString.random(rng, n))
        s = BitString.random(rng, n)
        q = Gf2Poly(int(rng.integers(1, 1 << 24)))
        d = p * q
        m = d.deg + 1
        spec = ToeplitzSpec(p, s, m, check_irreducible=False)
        if toeplitz_hash(spec, BitString(d.bits, m)).value != 0:
            nonzero += 1
        a, b = BitString.random(rng, m), BitString.random(rng, m)
        if toeplitz_hash(spec, a ^ b) != toeplitz_hash(spec, a) ^ toeplitz_hash(spec, b):
            nonlinear += 1
        small = ToeplitzSpec(p, s, min(m, 64), check_irreducible=False)
        msg = BitString.random(rng, small.m)
        if matrix_hash(toeplitz_matrix(small), msg) != toeplitz_hash(small, msg):
            mismatch += 1
    return [
        CheckResult("hash/divisibility", nonzero == 0, float(nonzero), 0.0, f"{instances} instances"),
        CheckResult("hash/linearity", nonlinear == 0, float(nonlinear), 0.0, f"{instances} instances"),
        CheckResult("hash/matrix-equivalence", mismatch == 0, float(mismatch), 0.0, f"{instances} instances"),
    ]


def protocol_checks(trials: int, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    honest_fail = 0
    tamper_pass = 0
    for _ in range(trials):
        shares = split_keys(rng, 32)
        p_a = BitString.random(rng, 32)
        doc = BitString.random(rng, 256)
        res = run_three_party(doc, shares, p_a)
        if not (res.bob and res.charlie):
            honest_fail += 1
        pos = int(rng.integers(0, doc.length))

        def flip(b: SignatureBundle, pos: int = pos) -> SignatureBundle:
            return SignatureBundle(b.doc.flip(pos), b.sig, b.p_enc)

        if run_three_party(doc, shares, p_a, tamper=flip).charlie:
            tamper_pass += 1
    return [
        CheckResult("protocol/honest-accept", honest_fail == 0, float(honest_fail), 0.0, f"{trials} runs"),
        CheckResult("protocol/tamper-reject", tamper_pass == 0, float(tamper_pass), 0.0, f"{trials} runs"),
    ]


def run_selftest(
    cfg: Config,
    mc_bins: int = 2_000_000,
    seed: int = 2024,
    fault: Optional[str] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> Report:
    """Run every check; never raises on a failed check."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {', '.join(FAULTS)}")
    checks: list[CheckResult] = []
    base = cfg.protocol.at_distance(50.0)
    stages = [
        ("mc default", lambda: mc_agreement(base, mc_bins, seed, "50km", fault)),
        ("mc dark", lambda: mc_agreement(base.replace(p_d=1e-3), mc_bins, seed + 1, "50km-dark", fault)),
        ("bounds", lambda: bound_checks(2000, seed)),
        ("hash", lambda: hash_checks(500, seed)),
        ("protocol", lambda: protocol_checks(100, seed)),
    ]
    for name, fn in stages:
        if progress:
            progress(name)
        checks.extend(fn())
    return Report(checks)
