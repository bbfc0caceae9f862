"""Instance parameters, loaded from a ``key = value`` text file."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceConfig:
    budget: float = 0.0
    charge_price: float = 1.0          # p, revenue per charging-hour
    charge_value: float = 1.0          # t, user cost per charging-hour
    unmet_weight: float = 1.0          # w, penalty per unserved vehicle
    battery_capacity: float = 10.0     # b_max, energy units
    battery_quantum: float = 1.0       # q
    charge_rate: float = 1.0           # energy units per hour
    epsilon: float = 0.0               # absolute UB-LB stopping gap
    big_m: float | None = None         # linking constant; derived when unset
    time_limit: float = 3600.0
    # solver knobs
    gap_tol_pct: float | None = None   # optional relative stopping gap, percent
    mtap_tol: float = 1e-5
    mtap_max_iter: int = 2000
    mtap_method: str = "fw"            # "fw" or "cfw" (conjugate direction)
    cg_max_rounds: int = 200
    vf_kappa: float = 10.0
    max_charges: int | None = None     # charging stops per priced walk; None = |C|
    enum_cap: int = 22
    lp_backend: str = "simplex"

    def __post_init__(self):
        if self.budget < 0:
            raise ConfigError("budget must be >= 0")
        for name in ("charge_price", "charge_value", "unmet_weight", "epsilon"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not self.battery_capacity > 0:
            raise ConfigError("battery_capacity must be > 0")
        if not 0 < self.battery_quantum <= self.battery_capacity:
            raise ConfigError("battery_quantum must satisfy 0 < q <= battery_capacity")
        if not self.charge_rate > 0:
            raise ConfigError("charge_rate must be > 0")
        if self.mtap_method not in ("fw", "cfw"):
            raise ConfigError(f"unknown mtap_method {self.mtap_method!r}")
        if self.lp_backend not in ("simplex", "highs"):
            raise ConfigError(f"unknown lp_backend {self.lp_backend!r}")

    @property
    def levels(self) -> int:
        """Number of battery quanta in a full battery (b_max rounded down to the grid)."""
        return int(math.floor(self.battery_capacity / self.battery_quantum + 1e-9))

    @property
    def b_max(self) -> float:
        return self.levels * self.battery_quantum

    def replace(self, **changes) -> "InstanceConfig":
        return dataclasses.replace(self, **changes)


def _coerce(field: dataclasses.Field, text: str):
    text = text.strip()
    kind = field.type if isinstance(field.type, str) else field.type.__name__
    if "None" in kind and text.lower() in ("", "none", "null"):
        return None
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    if kind.startswith("str"):
        return text
    raise ConfigError(f"cannot coerce field {field.name}")


ALIASES = {
    "B": "budget", "p": "charge_price", "t": "charge_value", "w": "unmet_weight",
    "b_max": "battery_capacity", "q": "battery_quantum", "M": "big_m", "eps": "epsilon",
}


def parse_config(text: str, base: InstanceConfig | None = None) -> InstanceConfig:
    known = {f.name: f for f in fields(InstanceConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(known[key], val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {val!r} for {key}") from None
    return (base or InstanceConfig()).replace(**values)


def load_config(path) -> InstanceConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(cfg: InstanceConfig) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in fields(cfg))
