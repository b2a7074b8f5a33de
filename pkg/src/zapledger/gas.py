"""Chain profiles and the pricing of resource traces into gas and money.

Pricing is a plain weighted sum, except for two kinds whose price has a fixed
part: ``hash_words`` (base + per word) and ``deploy_code_bytes`` (creation
base + per code byte). ``memory_words`` is linear plus ``words**2 // 512``.
No refunds, no warm/cold distinction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from zapledger.ledger import ResourceEvent, ResourceTrace

GWEI_PER_ETH = 10**9
RATES = ("fast", "standard")


class GasError(Exception):
    pass


class UnknownEventKind(GasError):
    pass


class WrongProfile(GasError):
    pass


class ProfileError(GasError):
    pass


@dataclass(frozen=True)
class LatencyModel:
    """Confirmation delay in seconds: ``uniform`` on [low, high] or ``fixed`` at low."""

    kind: str
    low: float
    high: float

    def __post_init__(self):
        if self.kind not in ("uniform", "fixed"):
            raise ProfileError(f"unknown latency model {self.kind!r}")
        if self.low < 0 or self.high < self.low:
            raise ProfileError(f"bad latency bounds [{self.low}, {self.high}]")

    def sample(self, rng) -> float:
        if self.kind == "fixed":
            return self.low
        return rng.uniform(self.low, self.high)

    @property
    def worst(self) -> float:
        return self.low if self.kind == "fixed" else self.high

    def to_json(self) -> dict:
        return {"kind": self.kind, "low_s": str(self.low), "high_s": str(self.high)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "LatencyModel":
        low = float(obj["low_s"])
        return cls(obj["kind"], low, float(obj.get("high_s", low)))


@dataclass(frozen=True)
class ChainProfile:
    name: str
    prices: Mapping[str, int]
    exec_base: Mapping[str, int]
    code_size: Mapping[str, int]
    gwei_per_gas: Mapping[str, int]
    usd_per_eth: Decimal
    confirmation: LatencyModel
    gas_priced: bool = True
    throughput_gas_per_s: int = 1_000_000
    node_monthly_usd: Decimal | None = None

    def __post_init__(self):
        for table in (self.prices, self.exec_base, self.code_size, self.gwei_per_gas):
            for key, value in table.items():
                if not isinstance(value, int) or value < 0:
                    raise ProfileError(f"{self.name}: {key} must be a non-negative integer")
        missing = set(RATES) - set(self.gwei_per_gas)
        if missing:
            raise ProfileError(f"{self.name}: missing gas rates {sorted(missing)}")
        if self.usd_per_eth < 0:
            raise ProfileError(f"{self.name}: negative usd_per_eth")
        if self.throughput_gas_per_s <= 0:
            raise ProfileError(f"{self.name}: throughput must be positive")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "gas_priced": self.gas_priced,
            "prices": dict(self.prices),
            "exec_base": dict(sorted(self.exec_base.items())),
            "code_size": dict(sorted(self.code_size.items())),
            "gwei_per_gas": {r: self.gwei_per_gas[r] for r in RATES},
            "usd_per_eth": f"{self.usd_per_eth:.2f}",
            "confirmation_latency": self.confirmation.to_json(),
            "throughput_gas_per_s": self.throughput_gas_per_s,
            "node_monthly_usd": None
            if self.node_monthly_usd is None
            else f"{self.node_monthly_usd:.2f}",
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ChainProfile":
        try:
            node = obj.get("node_monthly_usd")
            return cls(
                name=obj["name"],
                prices=dict(obj["prices"]),
                exec_base=dict(obj["exec_base"]),
                code_size=dict(obj["code_size"]),
                gwei_per_gas=dict(obj["gwei_per_gas"]),
                usd_per_eth=Decimal(obj["usd_per_eth"]),
                confirmation=LatencyModel.from_json(obj["confirmation_latency"]),
                gas_priced=bool(obj["gas_priced"]),
                throughput_gas_per_s=int(obj.get("throughput_gas_per_s", 1_000_000)),
                node_monthly_usd=None if node is None else Decimal(node),
            )
        except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
            raise ProfileError(f"malformed chain profile: {exc!r}") from exc


def dump_profiles(profiles: Iterable[ChainProfile]) -> str:
    doc = {"version": 1, "profiles": [p.to_json() for p in profiles]}
    return json.dumps(doc, indent=2) + "\n"


def load_profiles(path: str | Path | None = None) -> dict[str, ChainProfile]:
    """Read a profile document; ``None`` loads the calibrated defaults shipped with the package."""
    if path is None:
        text = resources.files("zapledger.data").joinpath("profiles.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        doc = json.loads(text)
        entries = doc["profiles"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ProfileError(f"malformed profile document: {exc!r}") from exc
    profiles = [ChainProfile.from_json(e) for e in entries]
    return {p.name: p for p in profiles}


def default_profile(name: str = "ethereum") -> ChainProfile:
    return load_profiles()[name]


# -- pricing -------------------------------------------------------------------


def event_units(ev: ResourceEvent, profile: ChainProfile) -> int:
    p = profile.prices
    try:
        if ev.kind == "exec_base":
            return profile.exec_base[ev.tag] * ev.count
        if ev.kind == "hash_words":
            return p["hash_base"] + p["hash_word"] * ev.count
        if ev.kind == "calldata_bytes":
            return p["calldata_byte"] * ev.count
        if ev.kind == "memory_words":
            return p["memory_word"] * ev.count + ev.count * ev.count // p["memory_quad_divisor"]
        if ev.kind == "deploy_code_bytes":
            return p["deploy_base"] + p["code_byte"] * ev.count
        return p[ev.kind] * ev.count
    except KeyError as exc:
        raise UnknownEventKind(f"{profile.name} has no price for {ev.label}") from exc


@dataclass(frozen=True)
class GasReceipt:
    gas_units: int
    breakdown: tuple[tuple[str, int], ...] = field(default=())


def price_trace(trace: ResourceTrace | Iterable[ResourceEvent], profile: ChainProfile) -> GasReceipt:
    events = list(trace)
    if not events:
        raise ValueError("cannot price an empty trace")
    breakdown = tuple((ev.label, event_units(ev, profile)) for ev in events)
    return GasReceipt(sum(units for _, units in breakdown), breakdown)


# -- money ---------------------------------------------------------------------


@dataclass(frozen=True)
class MoneyAmount:
    gwei: int
    usd_cents: int

    @property
    def usd(self) -> Decimal:
        return Decimal(self.usd_cents) / 100

    def __add__(self, other: "MoneyAmount") -> "MoneyAmount":
        return MoneyAmount(self.gwei + other.gwei, self.usd_cents + other.usd_cents)


ZERO = MoneyAmount(0, 0)


def gwei_to_usd_cents(gwei: int, usd_per_eth: Decimal) -> int:
    cents = Decimal(gwei) * usd_per_eth * 100 / GWEI_PER_ETH
    return int(cents.to_integral_value(rounding=ROUND_HALF_UP))


def gas_to_money(gas_units: int, rate: str, profile: ChainProfile) -> MoneyAmount:
    if rate not in RATES:
        raise ValueError(f"rate must be one of {RATES}, got {rate!r}")
    if not profile.gas_priced:
        return ZERO
    gwei = gas_units * profile.gwei_per_gas[rate]
    return MoneyAmount(gwei, gwei_to_usd_cents(gwei, profile.usd_per_eth))


def gasfree_cost(nodes: int, months: int, profile: ChainProfile) -> MoneyAmount:
    """Hosting bill for a gas-free chain: flat per node and month."""
    if profile.gas_priced or profile.node_monthly_usd is None:
        raise WrongProfile(f"{profile.name} is not a gas-free profile")
    cents = int(profile.node_monthly_usd * 100) * nodes * months
    return MoneyAmount(0, cents)
