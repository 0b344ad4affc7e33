"""Protocol parameters and the flat key-value config format.

Config files are plain ``key = value`` lines; ``#`` starts a comment.
Keys match the dataclass field names below.  Baseline keys carry a
``baseline.`` prefix, e.g. ``baseline.mu_a = 0.5``.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

CONFIG_ENV = "AQDS_CONFIG"


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration input."""


def _check_probs(label: str, *probs: float) -> None:
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{label}: probability {p} outside [0, 1]")
    if sum(probs) > 1.0 + 1e-12:
        raise ValueError(f"{label}: probabilities sum to {sum(probs)} > 1")


@dataclass(frozen=True)
class ProtocolParams:
    """Physical and statistical inputs of the asynchronous MDI distribution stage.

    Detector, fiber and security defaults are the standard simulation
    values for this setup.  Intensities, probabilities, ``M``, ``T_c`` and
    ``delta`` defaults are local choices (see README).
    """

    # standard simulation parameters
    eta_d: float = 0.80
    p_d: float = 2.5e-10
    f: float = 1.1
    alpha_f: float = 0.16
    e_d: float = 0.04
    eps: float = 1e-10
    F: float = 1e9
    # local defaults
    M: int = 16
    T_c: float = 1e-3
    N: float = 1e12
    mu_a: float = 0.40
    nu_a: float = 0.03
    p_mu_a: float = 0.40
    p_nu_a: float = 0.30
    mu_b: float = 0.40
    nu_b: float = 0.03
    p_mu_b: float = 0.40
    p_nu_b: float = 0.30
    l_a: float = 25.0
    l_b: float = 25.0
    delta: float = 0.0
    eps_e: Optional[float] = None
    # right-detector overrides; None means identical to the left detector
    eta_d_r: Optional[float] = None
    p_d_r: Optional[float] = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for name in ("eta_d", "eta_d_r"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        for name in ("p_d", "p_d_r"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {v}")
        if self.alpha_f <= 0:
            raise ValueError(f"alpha_f must be positive, got {self.alpha_f}")
        if not 0.0 <= self.e_d <= 0.5:
            raise ValueError(f"e_d must be in [0, 0.5], got {self.e_d}")
        for name in ("eps", "eps_e"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.F <= 0 or self.T_c < 0 or self.N < 0:
            raise ValueError("F must be positive; T_c and N nonnegative")
        if self.M < 2 or self.M % 2:
            raise ValueError(f"M must be an even integer >= 2, got {self.M}")
        if self.f < 1.0:
            raise ValueError(f"f must be >= 1, got {self.f}")
        for side in ("a", "b"):
            mu, nu = getattr(self, f"mu_{side}"), getattr(self, f"nu_{side}")
            if not mu > nu >= 0.0:
                raise ValueError(f"intensities for {side} must satisfy mu > nu >= 0")
            _check_probs(side, getattr(self, f"p_mu_{side}"), getattr(self, f"p_nu_{side}"))
        if self.l_a < 0 or self.l_b < 0:
            raise ValueError("distances must be nonnegative")

    # detector views
    @property
    def eta_l(self) -> float:
        return self.eta_d

    @property
    def eta_r(self) -> float:
        return self.eta_d if self.eta_d_r is None else self.eta_d_r

    @property
    def pd_l(self) -> float:
        return self.p_d

    @property
    def pd_r(self) -> float:
        return self.p_d if self.p_d_r is None else self.p_d_r

    @property
    def eps_phase(self) -> float:
        return self.eps if self.eps_e is None else self.eps_e

    # channel views
    @property
    def eta_a(self) -> float:
        return 10.0 ** (-self.alpha_f * self.l_a / 10.0)

    @property
    def eta_b(self) -> float:
        return 10.0 ** (-self.alpha_f * self.l_b / 10.0)

    @property
    def n_tc(self) -> float:
        """Number of time bins inside the pairing window."""
        return self.F * self.T_c

    @property
    def p_o_a(self) -> float:
        return max(0.0, 1.0 - self.p_mu_a - self.p_nu_a)

    @property
    def p_o_b(self) -> float:
        return max(0.0, 1.0 - self.p_mu_b - self.p_nu_b)

    def intensities(self, side: str) -> tuple[float, float, float]:
        """``(mu, nu, o)`` for party ``'a'`` or ``'b'``."""
        return (getattr(self, f"mu_{side}"), getattr(self, f"nu_{side}"), 0.0)

    def probabilities(self, side: str) -> tuple[float, float, float]:
        pm, pn = getattr(self, f"p_mu_{side}"), getattr(self, f"p_nu_{side}")
        return (pm, pn, max(0.0, 1.0 - pm - pn))

    def at_distance(self, total_km: float) -> "ProtocolParams":
        """Copy with the symmetric split ``l_a = l_b = total_km / 2``."""
        return dataclasses.replace(self, l_a=total_km / 2.0, l_b=total_km / 2.0)

    def replace(self, **changes: Any) -> "ProtocolParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class BaselineParams:
    """Four-intensity MDI comparator settings.

    Intensity and probability defaults are local choices.  Detector and fiber fields come from :class:`ProtocolParams`.
    """

    mu_a: float = 0.5
    nu_a: float = 0.1
    omega_a: float = 0.01
    p_mu_a: float = 0.5
    p_nu_a: float = 0.25
    p_omega_a: float = 0.125
    mu_b: float = 0.5
    nu_b: float = 0.1
    omega_b: float = 0.01
    p_mu_b: float = 0.5
    p_nu_b: float = 0.25
    p_omega_b: float = 0.125
    scan_points: int = 64
    eps_pa: Optional[float] = None

    def __post_init__(self) -> None:
        for side in ("a", "b"):
            mu, nu, om = (getattr(self, f"{k}_{side}") for k in ("mu", "nu", "omega"))
            if not mu > nu > om > 0.0:
                raise ValueError(f"baseline intensities for {side} must satisfy mu > nu > omega > 0")
            _check_probs(
                f"baseline {side}",
                getattr(self, f"p_mu_{side}"),
                getattr(self, f"p_nu_{side}"),
                getattr(self, f"p_omega_{side}"),
            )
            if self.p_o(side) <= 0.0:
                raise ValueError(f"baseline {side}: vacuum probability must be positive")
        if self.scan_points < 2:
            raise ValueError("scan_points must be >= 2")

    def p_o(self, side: str) -> float:
        return 1.0 - sum(getattr(self, f"p_{k}_{side}") for k in ("mu", "nu", "omega"))

    def replace(self, **changes: Any) -> "BaselineParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Config:
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    baseline: BaselineParams = field(default_factory=BaselineParams)


def _field_types(cls: type) -> dict[str, str]:
    return {f.name: str(f.type) for f in fields(cls)}


def coerce(type_name: str, raw: str) -> Any:
    raw = raw.strip()
    if raw.lower() in ("none", "null", ""):
        if "Optional" in type_name:
            return None
        raise ValueError("value required")
    if "int" in type_name and "float" not in type_name:
        v = float(raw)
        if not v.is_integer():
            raise ValueError(f"expected integer, got {raw!r}")
        return int(v)
    v = float(raw)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {raw!r}")
    return v


def parse_config_text(text: str, source: str = "<config>") -> Config:
    """Parse flat ``key = value`` text into a :class:`Config`.

    Unknown keys, malformed lines and invalid values raise
    :class:`ConfigError` naming the source and line number.
    """
    proto_types = _field_types(ProtocolParams)
    base_types = _field_types(BaselineParams)
    proto: dict[str, Any] = {}
    base: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key.startswith("baseline."):
            name, types, target = key[len("baseline."):], base_types, base
        else:
            name, types, target = key, proto_types, proto
        if name not in types:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            target[name] = coerce(types[name], value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    try:
        return Config(ProtocolParams(**proto), BaselineParams(**base))
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: Optional[str | os.PathLike] = None) -> Config:
    """Load a config file; falls back to ``$AQDS_CONFIG`` and then to defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if not path:
        return Config()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config_text(text, str(p))


def dump_config(cfg: Config) -> str:
    lines = ["# aqds config"]
    for f in fields(ProtocolParams):
        lines.append(f"{f.name} = {getattr(cfg.protocol, f.name)}")
    for f in fields(BaselineParams):
        lines.append(f"baseline.{f.name} = {getattr(cfg.baseline, f.name)}")
    return "\n".join(lines) + "\n"
