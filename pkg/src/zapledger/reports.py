"""Benchmark fixtures and comparative gas reports (per-token curves, reductions)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from zapledger.gas import ChainProfile
from zapledger.ledger import account_from_index
from zapledger.strategies import OpReceipt, StrategyKind, ZapLedger, combine
from zapledger.zap import (
    EnergySource,
    GeoPoint,
    append_history,
    canonical_bytes,
    metadata_hash,
    new_zap,
)

PRODUCER = account_from_index(1)
BUYER = account_from_index(2)
PRODUCER_LOCATION = GeoPoint("45.500000", "-73.566667")
BUYER_LOCATION = GeoPoint("45.501200", "-73.567100")
FIXTURE_START = 1_600_000_000

OPS = ("mint", "transfer", "transfer+modify")


class MismatchedSeries(ValueError):
    pass


def fixture_zaps(n: int, owner=PRODUCER, start: int = FIXTURE_START):
    """``n`` consecutive five-minute PV readings of 0.250 kWh at 30 cents/kWh."""
    return [
        new_zap(7, start + 300 * i, "0.250", EnergySource.PHOTOVOLTAIC, owner, PRODUCER_LOCATION, 30)
        for i in range(n)
    ]


def measure(kind, op: str, n: int, profile: ChainProfile) -> OpReceipt:
    """Run one batch of ``op`` at size ``n`` on a freshly deployed fixture ledger."""
    if op not in OPS:
        raise ValueError(f"op must be one of {OPS}")
    kind = StrategyKind(kind)
    ledger, _ = ZapLedger.deploy(kind, profile)
    zaps = fixture_zaps(n)
    ids, minted = ledger.mint_zaps(PRODUCER, zaps)
    if op == "mint":
        return minted
    payload = None
    if kind is StrategyKind.LIGHTWEIGHT:
        payload = [canonical_bytes(replace(z, token_id=i)) for z, i in zip(zaps, ids)]
    if op == "transfer+modify" and kind is not StrategyKind.FEATHERWEIGHT:
        op = "transfer"
    receipt, _ = ledger.transfer_zaps(PRODUCER, PRODUCER, BUYER, ids, BUYER_LOCATION, payload)
    if op == "transfer":
        return receipt
    modifies = []
    for z, i in zip(zaps, ids):
        moved = append_history(replace(z, token_id=i), BUYER, BUYER_LOCATION)
        modifies.append(ledger.modify_zap(BUYER, i, metadata_hash(canonical_bytes(moved))))
    return combine("transfer+modify", [receipt, *modifies], n=n)


def effective_transfer(kind, n: int, profile: ChainProfile) -> OpReceipt:
    """Full cost of moving ``n`` Zaps: featherweight pays for the follow-up modifies."""
    kind = StrategyKind(kind)
    op = "transfer+modify" if kind is StrategyKind.FEATHERWEIGHT else "transfer"
    r = measure(kind, op, n, profile)
    return combine("transfer", [r], n=n)


def per_token_curve(kind, op: str, n_max: int, profile: ChainProfile) -> list[tuple[int, float]]:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [(n, measure(kind, op, n, profile).gas_units / n) for n in range(1, n_max + 1)]


@dataclass(frozen=True)
class Reduction:
    op: str
    n: int
    baseline_gas: int
    candidate_gas: int

    @property
    def ratio(self) -> float:
        return self.candidate_gas / self.baseline_gas

    @property
    def reduction(self) -> float:
        return 1.0 - self.ratio


def reduction_report(baseline: Sequence[OpReceipt], candidate: Sequence[OpReceipt]) -> list[Reduction]:
    """Pair receipts by (op, n) and report ``1 - candidate / baseline`` for each."""
    base = {(r.op, r.n): r for r in baseline}
    cand = {(r.op, r.n): r for r in candidate}
    if set(base) != set(cand) or len(base) != len(baseline) or len(cand) != len(candidate):
        raise MismatchedSeries("baseline and candidate must cover the same (op, n) pairs once each")
    return [
        Reduction(op, n, base[(op, n)].gas_units, cand[(op, n)].gas_units)
        for op, n in ((r.op, r.n) for r in baseline)
    ]
