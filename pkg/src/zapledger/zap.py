"""Zap energy-token metadata: record type, canonical bytes, hashing, history.

A Zap describes the energy produced by one generator during one five-minute
window. The canonical serialization is minified UTF-8 JSON with a fixed key
order; fractional quantities are fixed-point decimal strings so that every
implementation produces identical bytes (and therefore identical digests).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from enum import Enum

from zapledger.ledger import AccountId, to_account

CANONICAL_VERSION = 1
HISTORY_CAP = 5
WINDOWS_PER_HOUR = 12  # five-minute windows

KWH = Decimal("0.001")
DEGREES = Decimal("0.000001")

FIELD_ORDER = (
    "version",
    "token_id",
    "created_at",
    "energy_kwh",
    "power_kw",
    "value_usd_cents",
    "generator_id",
    "source",
    "owner_history",
    "location_history",
)


class ZapError(ValueError):
    pass


class NonPositiveEnergy(ZapError):
    pass


class InvariantViolation(ZapError):
    pass


class EnergySource(str, Enum):
    PHOTOVOLTAIC = "photovoltaic"
    WIND = "wind"
    BIODIESEL = "biodiesel"
    HYDRO = "hydro"
    FOSSIL = "fossil"
    OTHER = "other"


def fixed(value, quantum: Decimal) -> Decimal:
    """Coerce ``value`` to a Decimal with exactly the places of ``quantum``.

    Raises InvariantViolation when the value carries more precision than the
    quantum allows; silent rounding would make two distinct inputs hash alike.
    """
    if isinstance(value, float):
        value = repr(value)
    try:
        d = Decimal(value)
    except (InvalidOperation, TypeError) as exc:
        raise InvariantViolation(f"not a decimal: {value!r}") from exc
    if not d.is_finite():
        raise InvariantViolation(f"not finite: {value!r}")
    q = d.quantize(quantum)
    if q != d:
        raise InvariantViolation(f"{value!r} exceeds precision {quantum}")
    return q


def round_half_up(value: Decimal) -> int:
    return int(value.to_integral_value(rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class GeoPoint:
    lat: Decimal
    lon: Decimal

    def __post_init__(self):
        object.__setattr__(self, "lat", fixed(self.lat, DEGREES))
        object.__setattr__(self, "lon", fixed(self.lon, DEGREES))
        if not -90 <= self.lat <= 90:
            raise InvariantViolation(f"latitude out of range: {self.lat}")
        if not -180 <= self.lon <= 180:
            raise InvariantViolation(f"longitude out of range: {self.lon}")

    def to_json(self) -> dict:
        return {"lat": f"{self.lat:.6f}", "lon": f"{self.lon:.6f}"}

    @classmethod
    def from_json(cls, obj) -> "GeoPoint":
        if not isinstance(obj, dict) or list(obj) != ["lat", "lon"]:
            raise InvariantViolation(f"bad location: {obj!r}")
        return cls(obj["lat"], obj["lon"])


@dataclass(frozen=True)
class Zap:
    token_id: int
    created_at: int
    energy_kwh: Decimal
    power_kw: Decimal
    value_usd_cents: int
    generator_id: int
    source: EnergySource
    owner_history: tuple[AccountId, ...] = field(default=())
    location_history: tuple[GeoPoint, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "energy_kwh", fixed(self.energy_kwh, KWH))
        object.__setattr__(self, "power_kw", fixed(self.power_kw, KWH))
        object.__setattr__(self, "source", EnergySource(self.source))
        object.__setattr__(
            self, "owner_history", tuple(to_account(a) for a in self.owner_history)
        )
        object.__setattr__(self, "location_history", tuple(self.location_history))

    @property
    def owner(self) -> AccountId:
        return self.owner_history[-1]

    def validate(self) -> None:
        problems = []
        if self.token_id < 1 or self.token_id >= 2**64:
            problems.append(f"token_id {self.token_id} outside 1..2^64-1")
        if self.created_at < 0:
            problems.append("negative created_at")
        if self.energy_kwh <= 0 or self.power_kw <= 0:
            problems.append("energy and power must be positive")
        if self.value_usd_cents < 0:
            problems.append("negative value")
        if not 0 <= self.generator_id < 2**64:
            problems.append("generator_id outside u64")
        n_own, n_loc = len(self.owner_history), len(self.location_history)
        if not 1 <= n_own <= HISTORY_CAP:
            problems.append(f"owner history length {n_own}")
        if n_own != n_loc:
            problems.append(f"history lengths differ ({n_own} vs {n_loc})")
        if problems:
            raise InvariantViolation("; ".join(problems))


def new_zap(
    generator_id: int,
    created_at: int,
    energy_kwh,
    source,
    owner,
    location: GeoPoint,
    unit_price_usd_cents_per_kwh,
    token_id: int = 0,
) -> Zap:
    """Build the metadata for a freshly generated five-minute energy quantity.

    ``token_id`` stays 0 until the ledger assigns one at mint time.
    """
    energy = fixed(energy_kwh, KWH)
    if energy <= 0:
        raise NonPositiveEnergy(f"energy must be > 0, got {energy}")
    value = round_half_up(energy * Decimal(unit_price_usd_cents_per_kwh))
    return Zap(
        token_id=token_id,
        created_at=int(created_at),
        energy_kwh=energy,
        power_kw=energy * WINDOWS_PER_HOUR,
        value_usd_cents=value,
        generator_id=int(generator_id),
        source=source,
        owner_history=(owner,),
        location_history=(location,),
    )


def to_document(zap: Zap) -> dict:
    return {
        "version": CANONICAL_VERSION,
        "token_id": zap.token_id,
        "created_at": zap.created_at,
        "energy_kwh": f"{zap.energy_kwh:.3f}",
        "power_kw": f"{zap.power_kw:.3f}",
        "value_usd_cents": zap.value_usd_cents,
        "generator_id": zap.generator_id,
        "source": zap.source.value,
        "owner_history": list(zap.owner_history),
        "location_history": [p.to_json() for p in zap.location_history],
    }


def canonical_bytes(zap: Zap) -> bytes:
    zap.validate()
    return json.dumps(
        to_document(zap), separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def _strict_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvariantViolation(f"{name} must be an integer")
    return value


def parse_zap(data: bytes) -> Zap:
    """Inverse of :func:`canonical_bytes`; rejects documents it would not emit."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvariantViolation(f"unparseable metadata: {exc}") from exc
    if not isinstance(doc, dict) or tuple(doc) != FIELD_ORDER:
        raise InvariantViolation("metadata keys missing or out of order")
    if doc["version"] != CANONICAL_VERSION:
        raise InvariantViolation(f"unsupported version {doc['version']!r}")
    for key in ("energy_kwh", "power_kw"):
        if not isinstance(doc[key], str):
            raise InvariantViolation(f"{key} must be a decimal string")
    try:
        zap = Zap(
            token_id=_strict_int(doc["token_id"], "token_id"),
            created_at=_strict_int(doc["created_at"], "created_at"),
            energy_kwh=doc["energy_kwh"],
            power_kw=doc["power_kw"],
            value_usd_cents=_strict_int(doc["value_usd_cents"], "value_usd_cents"),
            generator_id=_strict_int(doc["generator_id"], "generator_id"),
            source=doc["source"],
            owner_history=tuple(doc["owner_history"]),
            location_history=tuple(GeoPoint.from_json(p) for p in doc["location_history"]),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, InvariantViolation):
            raise
        raise InvariantViolation(str(exc)) from exc
    zap.validate()
    return zap


def metadata_hash(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def append_history(zap: Zap, new_owner, new_location: GeoPoint) -> Zap:
    """Record a change of hands; the oldest entries fall off past the cap."""
    owners = (zap.owner_history + (to_account(new_owner),))[-HISTORY_CAP:]
    places = (zap.location_history + (new_location,))[-HISTORY_CAP:]
    return replace(zap, owner_history=owners, location_history=places)


def word_count(n_bytes: int) -> int:
    return (n_bytes + 31) // 32
