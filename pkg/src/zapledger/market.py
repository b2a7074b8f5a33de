"""Neighbourhood energy market driven in fixed ticks over a Zap ledger.

Each tick:

1. every generating household mints one Zap for the energy it produced;
2. households short of energy buy untouched Zaps from peers, lowest household
   index first (no bidding: the price is the value fixed at mint);
3. every household consumes its demand oldest-Zap-first; whatever cannot be
   covered is a deficit supplied by the utility.

At the end of each billing cycle buyers owe producers the value of every Zap
they bought, deficits are billed at the utility rate, and the utility mints
and hands over one Zap per (household, deficit tick) so the ledger reflects
the energy delivered.

Partial consumption is simulator state (``spent_registry``); on the ledger a
Zap is always a whole token.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping, Sequence

from zapledger.gas import ChainProfile, MoneyAmount, ZERO, gas_to_money
from zapledger.ledger import UTILITY_ACCOUNT, AccountId, to_account
from zapledger.strategies import OpReceipt, StrategyKind, ZapLedger
from zapledger.zap import (
    KWH,
    EnergySource,
    GeoPoint,
    Zap,
    append_history,
    canonical_bytes,
    fixed,
    metadata_hash,
    new_zap,
    parse_zap,
    round_half_up,
)

SECONDS_PER_DAY = 86_400
UTILITY_GENERATOR_ID = 0
ZERO_KWH = Decimal("0.000")


class ScenarioError(ValueError):
    pass


class IncompleteCycle(RuntimeError):
    pass


@dataclass(frozen=True)
class Household:
    account: AccountId
    location: GeoPoint
    generator_id: int = 0
    source: EnergySource = EnergySource.OTHER
    generation_kwh_per_tick: Decimal = ZERO_KWH
    consumption_kwh_per_tick: Decimal = ZERO_KWH
    # False: sell all own generation and buy all consumption from peers.
    self_consume: bool = True
    price_usd_cents_per_kwh: int | None = None
    consumption_jitter: Decimal = Decimal(0)

    def __post_init__(self):
        try:
            object.__setattr__(self, "account", to_account(self.account))
            object.__setattr__(self, "source", EnergySource(self.source))
            object.__setattr__(self, "generation_kwh_per_tick", fixed(self.generation_kwh_per_tick, KWH))
            object.__setattr__(self, "consumption_kwh_per_tick", fixed(self.consumption_kwh_per_tick, KWH))
            object.__setattr__(self, "consumption_jitter", Decimal(self.consumption_jitter))
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc)) from exc
        if self.generation_kwh_per_tick < 0 or self.consumption_kwh_per_tick < 0:
            raise ScenarioError(f"{self.account}: negative energy rate")
        if (self.generator_id == 0) != (self.generation_kwh_per_tick == 0):
            raise ScenarioError(f"{self.account}: generator_id is 0 exactly when generation is 0")
        if not 0 <= self.consumption_jitter <= 1:
            raise ScenarioError(f"{self.account}: consumption_jitter must lie in [0, 1]")

    @property
    def generates(self) -> bool:
        return self.generator_id != 0

    @classmethod
    def from_json(cls, obj: Mapping) -> "Household":
        try:
            loc = obj["location"]
            return cls(
                account=obj["account"],
                location=GeoPoint(loc["lat"], loc["lon"]),
                generator_id=int(obj.get("generator_id", 0)),
                source=obj.get("source", "other"),
                generation_kwh_per_tick=obj.get("generation_kwh_per_tick", "0.000"),
                consumption_kwh_per_tick=obj.get("consumption_kwh_per_tick", "0.000"),
                self_consume=bool(obj.get("self_consume", True)),
                price_usd_cents_per_kwh=obj.get("price_usd_cents_per_kwh"),
                consumption_jitter=obj.get("consumption_jitter", "0"),
            )
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"bad household entry: {exc!r}") from exc
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc


@dataclass(frozen=True)
class GridScenario:
    households: tuple[Household, ...]
    days: int
    cycle_days: int
    tick_seconds: int = 300
    ticks_per_day: int = 288
    utility_rate_usd_cents_per_kwh: int = 30
    seed: int = 0
    start_time: int = 1_600_000_000
    utility_location: GeoPoint = GeoPoint("0.000000", "0.000000")
    utility_batch_size: int = 10

    def __post_init__(self):
        object.__setattr__(self, "households", tuple(self.households))
        if self.ticks_per_day * self.tick_seconds != SECONDS_PER_DAY:
            raise ScenarioError("ticks_per_day * tick_seconds must equal 86400")
        if self.days < 0 or self.cycle_days < 1 or self.days % self.cycle_days:
            raise ScenarioError("cycle_days must be >= 1 and divide days")
        if self.utility_rate_usd_cents_per_kwh < 0 or self.utility_batch_size < 1:
            raise ScenarioError("utility rate must be >= 0 and batch size >= 1")
        accounts = [h.account for h in self.households]
        if len(set(accounts)) != len(accounts):
            raise ScenarioError("household accounts must be unique")
        if UTILITY_ACCOUNT in accounts:
            raise ScenarioError("the utility account is reserved")

    @property
    def ticks(self) -> int:
        return self.days * self.ticks_per_day

    @property
    def ticks_per_cycle(self) -> int:
        return self.cycle_days * self.ticks_per_day

    @classmethod
    def from_json(cls, obj: Mapping) -> "GridScenario":
        try:
            extra = {}
            if "utility_location" in obj:
                loc = obj["utility_location"]
                extra["utility_location"] = GeoPoint(loc["lat"], loc["lon"])
            for key in ("tick_seconds", "ticks_per_day", "utility_rate_usd_cents_per_kwh",
                        "seed", "start_time", "utility_batch_size"):
                if key in obj:
                    extra[key] = int(obj[key])
            return cls(
                households=tuple(Household.from_json(h) for h in obj["households"]),
                days=int(obj["days"]),
                cycle_days=int(obj["cycle_days"]),
                **extra,
            )
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
            raise ScenarioError(f"malformed scenario: {exc!r}") from exc


def load_scenario(path: str | Path) -> GridScenario:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return GridScenario.from_json(doc)


# -- consumption -----------------------------------------------------------------


@dataclass(frozen=True)
class Holding:
    token_id: int
    created_at: int
    remaining_kwh: Decimal


def consume_step(holdings: Sequence[Holding], demand_kwh) -> tuple[list[Holding], Decimal]:
    """Drain ``holdings`` oldest-created first; return what is left and the deficit.

    Fully drained Zaps are dropped from the returned list.
    """
    demand = Decimal(demand_kwh)
    if demand < 0:
        raise ValueError("demand must be >= 0")
    left = []
    for h in sorted(holdings, key=lambda h: (h.created_at, h.token_id)):
        take = min(h.remaining_kwh, demand)
        demand -= take
        if h.remaining_kwh - take > 0:
            left.append(replace(h, remaining_kwh=h.remaining_kwh - take))
    return left, demand


# -- settlement ------------------------------------------------------------------


@dataclass(frozen=True)
class BillingStatement:
    account: AccountId
    cycle_index: int
    produced_kwh: Decimal
    consumed_kwh: Decimal
    revenue_usd_cents: int
    purchases_usd_cents: int
    utility_charge_usd_cents: int
    zaps_received_from_utility: int

    def row(self) -> list[str]:
        return [
            self.account,
            str(self.cycle_index),
            f"{self.produced_kwh:.3f}",
            f"{self.consumed_kwh:.3f}",
            str(self.revenue_usd_cents),
            str(self.purchases_usd_cents),
            str(self.utility_charge_usd_cents),
            str(self.zaps_received_from_utility),
        ]


STATEMENT_HEADER = [
    "account",
    "cycle_index",
    "produced_kwh",
    "consumed_kwh",
    "revenue_usd_cents",
    "purchases_usd_cents",
    "utility_charge_usd_cents",
    "zaps_received_from_utility",
]


@dataclass
class CycleBook:
    """Everything that happened to each household during one billing cycle."""

    index: int
    accounts: list[AccountId]
    ticks_expected: int
    ticks_seen: int = 0
    produced: dict = field(default_factory=lambda: defaultdict(lambda: ZERO_KWH))
    consumed: dict = field(default_factory=lambda: defaultdict(lambda: ZERO_KWH))
    deficits: dict = field(default_factory=lambda: defaultdict(list))  # account -> [(t, kwh)]
    sales: list = field(default_factory=list)  # (buyer, seller, token_id, value_cents)

    @property
    def complete(self) -> bool:
        return self.ticks_seen == self.ticks_expected


def settle_cycle(book: CycleBook, utility_rate_usd_cents_per_kwh) -> list[BillingStatement]:
    if not book.complete:
        raise IncompleteCycle(
            f"cycle {book.index}: {book.ticks_seen} of {book.ticks_expected} ticks recorded"
        )
    revenue: dict[str, int] = defaultdict(int)
    purchases: dict[str, int] = defaultdict(int)
    for buyer, seller, _, value in book.sales:
        if buyer == seller:
            continue
        purchases[buyer] += value
        revenue[seller] += value
    rate = Decimal(utility_rate_usd_cents_per_kwh)
    out = []
    for acct in book.accounts:
        deficit = sum((kwh for _, kwh in book.deficits[acct]), ZERO_KWH)
        out.append(
            BillingStatement(
                account=acct,
                cycle_index=book.index,
                produced_kwh=book.produced[acct],
                consumed_kwh=book.consumed[acct],
                revenue_usd_cents=revenue[acct],
                purchases_usd_cents=purchases[acct],
                utility_charge_usd_cents=round_half_up(deficit * rate),
                zaps_received_from_utility=len(book.deficits[acct]),
            )
        )
    return out


# -- simulation ------------------------------------------------------------------


@dataclass(frozen=True)
class CycleEnergy:
    index: int
    produced_kwh: Decimal
    utility_kwh: Decimal
    consumed_kwh: Decimal
    remaining_start_kwh: Decimal
    remaining_end_kwh: Decimal


@dataclass
class SimResult:
    strategy: str
    chain: str
    seed: int
    events: list[dict] = field(default_factory=list)
    receipts: list[OpReceipt] = field(default_factory=list)
    statements: list[BillingStatement] = field(default_factory=list)
    spent_registry: dict[int, Decimal] = field(default_factory=dict)
    cycles: list[CycleEnergy] = field(default_factory=list)
    metadata: dict[int, Zap] = field(default_factory=dict)

    def count(self, event_type: str) -> int:
        return sum(1 for e in self.events if e["type"] == event_type)

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in self.events)

    def op_spend(self, rate: str, profile: ChainProfile, include_deploy: bool = False) -> MoneyAmount:
        """Sum of per-transaction costs; each transaction is paid (and rounded) separately."""
        total = ZERO
        for r in self.receipts:
            if r.op == "deploy" and not include_deploy:
                continue
            total = total + gas_to_money(r.gas_units, rate, profile)
        return total


class _Market:
    def __init__(self, scenario: GridScenario, kind: StrategyKind, profile: ChainProfile, seed: int):
        self.sc = scenario
        self.kind = kind
        self.result = SimResult(kind.value, profile.name, seed)
        self.ledger, deploy = ZapLedger.deploy(kind, profile)
        self.records: dict[int, Zap] = {}
        self.payloads: dict[int, bytes] = {}
        self.own: list[list[Holding]] = [[] for _ in scenario.households]
        self.bought: list[list[Holding]] = [[] for _ in scenario.households]
        self.energy: dict[int, Decimal] = {}
        self.rngs = [random.Random(f"{seed}:{i}") for i in range(len(scenario.households))]
        self._log(scenario.start_time, "deploy", deploy, account=UTILITY_ACCOUNT)

    # -- bookkeeping -----------------------------------------------------------

    def _log(self, t: int, kind: str, receipt: OpReceipt | None = None, **fields) -> None:
        event = {"seq": len(self.result.events), "t": t, "type": kind}
        event.update(fields)
        if receipt is not None:
            event["receipt"] = len(self.result.receipts)
            event["gas"] = receipt.gas_units
            self.result.receipts.append(receipt)
        self.result.events.append(event)

    def _remaining_total(self) -> Decimal:
        return sum(self.result.spent_registry.values(), ZERO_KWH)

    def _demand(self, i: int, hh: Household) -> Decimal:
        base = hh.consumption_kwh_per_tick
        if not hh.consumption_jitter or not base:
            return base
        u = Decimal(repr(self.rngs[i].uniform(-1.0, 1.0)))
        return max(ZERO_KWH, (base * (1 + hh.consumption_jitter * u)).quantize(KWH, ROUND_HALF_UP))

    def _usable(self, i: int) -> list[Holding]:
        hh = self.sc.households[i]
        return self.bought[i] + (self.own[i] if hh.self_consume else [])

    def _sellable(self, i: int, demand: Decimal) -> list[Holding]:
        """Untouched own Zaps this household can spare after covering its demand."""
        hh = self.sc.households[i]
        if not hh.self_consume:
            candidates = self.own[i]
        else:
            reserved: set[int] = set()
            covered = ZERO_KWH
            for h in sorted(self._usable(i), key=lambda h: (h.created_at, h.token_id)):
                if covered >= demand:
                    break
                covered += h.remaining_kwh
                reserved.add(h.token_id)
            candidates = [h for h in self.own[i] if h.token_id not in reserved]
        return [h for h in candidates if h.remaining_kwh == self.energy[h.token_id]]

    # -- ledger operations -------------------------------------------------------

    def _mint(self, t: int, owner: AccountId, zaps: list[Zap], event: str) -> list[int]:
        ids, receipt = self.ledger.mint_zaps(owner, zaps)
        for token_id, zap in zip(ids, zaps):
            record = replace(zap, token_id=token_id)
            self.records[token_id] = record
            self.energy[token_id] = zap.energy_kwh
            if self.kind is StrategyKind.LIGHTWEIGHT:
                self.payloads[token_id] = canonical_bytes(record)
        self._log(t, event, receipt, account=owner, tokens=ids,
                  kwh=f"{sum((z.energy_kwh for z in zaps), ZERO_KWH):.3f}")
        return ids

    def _transfer(self, t: int, seller: AccountId, buyer: AccountId, location: GeoPoint,
                  ids: list[int], event: str) -> None:
        payload = [self.payloads[i] for i in ids] if self.kind is StrategyKind.LIGHTWEIGHT else None
        receipt, new = self.ledger.transfer_zaps(seller, seller, buyer, ids, location, payload)
        self._log(t, event, receipt, seller=seller, buyer=buyer, tokens=ids)
        for k, token_id in enumerate(ids):
            self.records[token_id] = append_history(self.records[token_id], buyer, location)
            if new is not None:
                self.payloads[token_id] = new[k]
            if self.kind is StrategyKind.FEATHERWEIGHT:
                digest = metadata_hash(canonical_bytes(self.records[token_id]))
                modify = self.ledger.modify_zap(buyer, token_id, digest)
                self._log(t, "modify", modify, account=buyer, tokens=[token_id])

    # -- tick phases -------------------------------------------------------------

    def _tick(self, t_index: int, book: CycleBook) -> None:
        sc = self.sc
        t = sc.start_time + t_index * sc.tick_seconds
        for i, hh in enumerate(sc.households):
            if not hh.generates:
                continue
            price = sc.utility_rate_usd_cents_per_kwh if hh.price_usd_cents_per_kwh is None \
                else hh.price_usd_cents_per_kwh
            zap = new_zap(hh.generator_id, t, hh.generation_kwh_per_tick, hh.source,
                          hh.account, hh.location, price)
            (token_id,) = self._mint(t, hh.account, [zap], "mint")
            self.own[i].append(Holding(token_id, t, zap.energy_kwh))
            self.result.spent_registry[token_id] = zap.energy_kwh
            book.produced[hh.account] += zap.energy_kwh

        demands = [self._demand(i, hh) for i, hh in enumerate(sc.households)]

        for i, hh in enumerate(sc.households):
            need = demands[i] - sum((h.remaining_kwh for h in self._usable(i)), ZERO_KWH)
            for j, seller in enumerate(sc.households):
                if need <= 0:
                    break
                if j == i:
                    continue
                picked = []
                for h in sorted(self._sellable(j, demands[j]), key=lambda h: (h.created_at, h.token_id)):
                    if need <= 0:
                        break
                    picked.append(h)
                    need -= h.remaining_kwh
                if not picked:
                    continue
                ids = [h.token_id for h in picked]
                self._transfer(t, seller.account, hh.account, hh.location, ids, "transfer")
                taken = set(ids)
                self.own[j] = [h for h in self.own[j] if h.token_id not in taken]
                self.bought[i].extend(picked)
                for token_id in ids:
                    book.sales.append((hh.account, seller.account, token_id,
                                       self.records[token_id].value_usd_cents))

        for i, hh in enumerate(sc.households):
            demand = demands[i]
            book.consumed[hh.account] += demand
            if demand == 0:
                continue
            usable = self._usable(i)
            left, deficit = consume_step(usable, demand)
            kept = {h.token_id: h for h in left}
            for h in usable:
                self.result.spent_registry[h.token_id] = kept[h.token_id].remaining_kwh \
                    if h.token_id in kept else ZERO_KWH
            self.bought[i] = [kept[h.token_id] for h in self.bought[i] if h.token_id in kept]
            if hh.self_consume:
                self.own[i] = [kept[h.token_id] for h in self.own[i] if h.token_id in kept]
            if deficit > 0:
                book.deficits[hh.account].append((t, deficit))
            self._log(t, "consume", account=hh.account, kwh=f"{demand:.3f}",
                      drained=f"{demand - deficit:.3f}", deficit=f"{deficit:.3f}")
        book.ticks_seen += 1

    def _settle(self, book: CycleBook, t_end: int) -> list[BillingStatement]:
        statements = settle_cycle(book, self.sc.utility_rate_usd_cents_per_kwh)
        size = self.sc.utility_batch_size
        for i, hh in enumerate(self.sc.households):
            owed = book.deficits[hh.account]
            for start in range(0, len(owed), size):
                chunk = owed[start:start + size]
                zaps = [
                    new_zap(UTILITY_GENERATOR_ID, ts, kwh, EnergySource.HYDRO, UTILITY_ACCOUNT,
                            self.sc.utility_location, self.sc.utility_rate_usd_cents_per_kwh)
                    for ts, kwh in chunk
                ]
                ids = self._mint(t_end, UTILITY_ACCOUNT, zaps, "utility_mint")
                self._transfer(t_end, UTILITY_ACCOUNT, hh.account, hh.location, ids, "utility_transfer")
                for token_id in ids:
                    self.result.spent_registry[token_id] = ZERO_KWH
        for s in statements:
            self._log(t_end, "settle", account=s.account, cycle=s.cycle_index,
                      revenue=s.revenue_usd_cents, purchases=s.purchases_usd_cents,
                      utility_charge=s.utility_charge_usd_cents)
        return statements

    def run(self) -> SimResult:
        sc = self.sc
        accounts = [h.account for h in sc.households]
        n_cycles = sc.days // sc.cycle_days
        for c in range(n_cycles):
            book = CycleBook(c, accounts, sc.ticks_per_cycle)
            remaining_start = self._remaining_total()
            for k in range(sc.ticks_per_cycle):
                self._tick(c * sc.ticks_per_cycle + k, book)
            t_end = sc.start_time + (c + 1) * sc.ticks_per_cycle * sc.tick_seconds
            self.result.statements.extend(self._settle(book, t_end))
            self.result.cycles.append(
                CycleEnergy(
                    index=c,
                    produced_kwh=sum(book.produced.values(), ZERO_KWH),
                    utility_kwh=sum((kwh for v in book.deficits.values() for _, kwh in v), ZERO_KWH),
                    consumed_kwh=sum(book.consumed.values(), ZERO_KWH),
                    remaining_start_kwh=remaining_start,
                    remaining_end_kwh=self._remaining_total(),
                )
            )
        self.result.metadata = self._effective_metadata()
        return self.result

    def _effective_metadata(self) -> dict[int, Zap]:
        """Each token's metadata as the strategy itself exposes it."""
        out = {}
        for token_id, record in self.records.items():
            if self.kind is StrategyKind.HEAVYWEIGHT:
                out[token_id] = self.ledger.read_zap(token_id)
            elif self.kind is StrategyKind.LIGHTWEIGHT:
                out[token_id] = parse_zap(self.payloads[token_id])
            else:
                out[token_id] = self.ledger.read_zap(token_id, canonical_bytes(record))
        return out


def run(scenario: GridScenario, kind, profile: ChainProfile, seed: int | None = None) -> SimResult:
    """Simulate ``scenario`` on a fresh ledger of the given strategy."""
    kind = StrategyKind(kind)
    seed = scenario.seed if seed is None else seed
    if not scenario.households:
        return SimResult(kind.value, profile.name, seed)
    return _Market(scenario, kind, profile, seed).run()


# -- analysis --------------------------------------------------------------------


@dataclass(frozen=True)
class ViabilityReport:
    houses: int
    days: int
    mint_per_house_day_usd_cents: int
    transfer_per_house_day_usd_cents: int
    monthly_total_usd_cents: int

    @property
    def monthly_total_usd(self) -> Decimal:
        return Decimal(self.monthly_total_usd_cents) / 100


def viability_report(houses: int, mint_usd_cents: int, transfer_usd_cents: int, days: int,
                     ops_per_day: int = 288) -> ViabilityReport:
    """Operating cost when every house mints and transfers once per five-minute window."""
    if min(houses, mint_usd_cents, transfer_usd_cents, days) < 0:
        raise ValueError("inputs must be >= 0")
    mint_day = ops_per_day * mint_usd_cents
    transfer_day = ops_per_day * transfer_usd_cents
    return ViabilityReport(houses, days, mint_day, transfer_day,
                           (mint_day + transfer_day) * days * houses)


@dataclass(frozen=True)
class FeasibilityRow:
    op: str
    count: int
    max_processing_s: float
    max_latency_s: float
    fits_processing: bool
    fits: bool
    at_risk: int

    def row(self) -> list[str]:
        return [self.op, str(self.count), f"{self.max_processing_s:.6f}", f"{self.max_latency_s:.6f}",
                str(self.fits_processing).lower(), str(self.fits).lower(), str(self.at_risk)]


FEASIBILITY_HEADER = ["op", "count", "max_processing_s", "max_latency_s",
                      "fits_processing", "fits", "at_risk"]


def schedule_feasibility(result: SimResult, profile: ChainProfile, window_seconds: float = 300,
                         seed: int | None = None) -> list[FeasibilityRow]:
    """Worst-case processing + confirmation latency per operation type.

    Processing time is gas over the profile throughput; confirmation delay is
    drawn per receipt from the profile's latency model with a seeded generator.
    """
    if not result.receipts:
        raise ValueError("nothing to assess: the result has no receipts")
    rng = random.Random(result.seed if seed is None else seed)
    stats: dict[str, list] = {}
    for r in result.receipts:
        processing = r.gas_units / profile.throughput_gas_per_s
        total = processing + profile.confirmation.sample(rng)
        s = stats.setdefault(r.op, [0, 0.0, 0.0, 0])
        s[0] += 1
        s[1] = max(s[1], processing)
        s[2] = max(s[2], total)
        s[3] += total > window_seconds
    return [
        FeasibilityRow(op, n, proc, lat, proc <= window_seconds, lat <= window_seconds, risk)
        for op, (n, proc, lat, risk) in stats.items()
    ]
