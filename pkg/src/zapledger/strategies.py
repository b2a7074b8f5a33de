"""The three metadata-storage designs layered over the balance ledger.

heavyweight
    Every Zap field lives in contract storage (16 words per token). Transfers
    rewrite the stored owner/location histories of each moved token.
featherweight
    Only the SHA-256 of the canonical metadata is stored. Transfers move
    balances and nothing else; the new holder calls :meth:`ZapLedger.modify_zap`
    to publish the updated digest.
lightweight
    Digest-only storage as well, but every call carries the full metadata.
    The contract verifies it against the stored digest, applies the change,
    stores the new digest and hands back the new bytes.

A gas-free deployment is a lightweight ledger priced under a profile with
``gas_priced = False``; gas units are identical, only money differs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from zapledger.gas import ChainProfile, price_trace
from zapledger.ledger import AccountId, LedgerError, LedgerState, ResourceTrace, to_account
from zapledger.zap import (
    HISTORY_CAP,
    GeoPoint,
    InvariantViolation,
    Zap,
    append_history,
    canonical_bytes,
    metadata_hash,
    parse_zap,
    word_count,
)

# Storage layout of one on-chain Zap: 6 scalar fields, 5 owner slots and
# 5 packed (lat, lon) slots.
HEAVY_WORDS_PER_ZAP = 16
HEAVY_CALLDATA_BYTES = 32 * HEAVY_WORDS_PER_ZAP
# Working copy of the on-chain records while histories are rewritten. This is
# the term that bends the heavyweight per-token transfer curve back upwards.
HEAVY_TRANSFER_MEMORY_WORDS = 2560


class StrategyKind(str, Enum):
    HEAVYWEIGHT = "heavyweight"
    FEATHERWEIGHT = "featherweight"
    LIGHTWEIGHT = "lightweight"

    @property
    def hashed(self) -> bool:
        return self is not StrategyKind.HEAVYWEIGHT


class StrategyError(Exception):
    pass


class HashMismatch(StrategyError):
    def __init__(self, token_id: int):
        super().__init__(f"metadata for token {token_id} does not match the stored digest")
        self.token_id = token_id


class MissingPayload(StrategyError):
    pass


class UnexpectedPayload(StrategyError):
    pass


class NotOwner(StrategyError):
    pass


class UnknownToken(StrategyError):
    pass


class UnsupportedOperation(StrategyError):
    pass


@dataclass(frozen=True)
class OpReceipt:
    op: str
    strategy: str
    n: int
    gas_units: int
    breakdown: tuple[tuple[str, int], ...]
    chain: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("batch size must be >= 1")
        if self.gas_units != sum(units for _, units in self.breakdown):
            raise ValueError("gas_units must equal the breakdown total")

    def to_json(self) -> dict:
        return {
            "op": self.op,
            "strategy": self.strategy,
            "chain": self.chain,
            "n": self.n,
            "gas_units": self.gas_units,
            "breakdown": [list(item) for item in self.breakdown],
        }

    @classmethod
    def from_json(cls, obj) -> "OpReceipt":
        return cls(
            op=obj["op"],
            strategy=obj["strategy"],
            chain=obj.get("chain", ""),
            n=int(obj["n"]),
            gas_units=int(obj["gas_units"]),
            breakdown=tuple((str(k), int(v)) for k, v in obj["breakdown"]),
        )


def combine(op: str, receipts: Sequence[OpReceipt], n: int | None = None) -> OpReceipt:
    """Fold several receipts into one, e.g. a featherweight transfer plus its modifies."""
    first = receipts[0]
    breakdown = tuple(item for r in receipts for item in r.breakdown)
    return OpReceipt(
        op,
        first.strategy,
        first.n if n is None else n,
        sum(r.gas_units for r in receipts),
        breakdown,
        first.chain,
    )


class ZapLedger:
    """A deployed Zap contract: balances plus one kind of metadata store.

    ``store`` maps token id to a :class:`Zap` (heavyweight) or to a 32-byte
    digest (featherweight, lightweight).
    """

    def __init__(self, kind: StrategyKind | str, profile: ChainProfile):
        self.kind = StrategyKind(kind)
        self.profile = profile
        self.state = LedgerState()
        self.store: dict[int, Zap | bytes] = {}

    @classmethod
    def deploy(cls, kind, profile: ChainProfile) -> tuple["ZapLedger", OpReceipt]:
        ledger = cls(kind, profile)
        trace = ResourceTrace()
        trace.add("deploy_code_bytes", profile.code_size[ledger.kind.value])
        trace.add("exec_base", 1, ledger._tag("deploy"))
        return ledger, ledger._receipt("deploy", 1, trace)

    # -- helpers -------------------------------------------------------------

    def _tag(self, op: str, per_token: bool = False) -> str:
        return f"{self.kind.value}.{op}" + (".per_token" if per_token else "")

    def _receipt(self, op: str, n: int, trace: ResourceTrace) -> OpReceipt:
        priced = price_trace(trace, self.profile)
        return OpReceipt(op, self.kind.value, n, priced.gas_units, priced.breakdown, self.profile.name)

    def _exec(self, trace: ResourceTrace, op: str, n: int) -> None:
        trace.add("exec_base", 1, self._tag(op))
        trace.add("exec_base", n, self._tag(op, per_token=True))

    def _verified(self, token_id: int, payload: bytes | None) -> Zap:
        if payload is None:
            raise MissingPayload(f"token {token_id}: metadata bytes required")
        if token_id not in self.store:
            raise UnknownToken(f"token {token_id} was never minted")
        if metadata_hash(payload) != self.store[token_id]:
            raise HashMismatch(token_id)
        zap = parse_zap(payload)
        if zap.token_id != token_id:
            raise HashMismatch(token_id)
        return zap

    # -- operations ----------------------------------------------------------

    def balance_of(self, account, token_id: int) -> int:
        return self.state.balance_of(account, token_id)

    def mint_zaps(self, to, zaps: Sequence[Zap]) -> tuple[list[int], OpReceipt]:
        if not zaps:
            raise ValueError("nothing to mint")
        to = to_account(to)
        first = self.state.next_token_id
        records = []
        for offset, zap in enumerate(zaps):
            if zap.owner != to:
                raise InvariantViolation(f"zap owner {zap.owner} is not the mint recipient {to}")
            record = replace(zap, token_id=first + offset)
            record.validate()
            records.append(record)

        trace = ResourceTrace()
        ids, _ = self.state.mint_balances(to, len(records), trace)
        self._exec(trace, "mint", len(ids))
        for token_id, record in zip(ids, records):
            if self.kind is StrategyKind.HEAVYWEIGHT:
                trace.add("calldata_bytes", HEAVY_CALLDATA_BYTES)
                trace.add("storage_write_new", HEAVY_WORDS_PER_ZAP)
                trace.memory(HEAVY_WORDS_PER_ZAP)
                self.store[token_id] = record
            else:
                data = canonical_bytes(record)
                words = word_count(len(data))
                trace.add("calldata_bytes", len(data))
                trace.add("hash_words", words)
                trace.add("storage_write_new")
                trace.memory(words)
                self.store[token_id] = metadata_hash(data)
        return ids, self._receipt("mint", len(ids), trace)

    def transfer_zaps(
        self,
        operator,
        source,
        dest,
        ids: Sequence[int],
        new_location: GeoPoint,
        payload: Sequence[bytes] | None = None,
    ) -> tuple[OpReceipt, list[bytes] | None]:
        """Move whole Zaps from ``source`` to ``dest``; all-or-nothing.

        Lightweight returns the re-serialized metadata of every moved token.
        """
        ids = list(ids)
        dest = to_account(dest)
        if self.kind is StrategyKind.LIGHTWEIGHT:
            if payload is None:
                raise MissingPayload("lightweight transfers carry the metadata of every token")
            payload = list(payload)
            if len(payload) != len(ids):
                raise MissingPayload(f"{len(ids)} ids but {len(payload)} payloads")
        elif payload is not None:
            raise UnexpectedPayload(f"{self.kind.value} transfers take no metadata")

        self.state.check_transfer(operator, source, ids, [1] * len(ids))

        updates: list[tuple[int, Zap, bytes | None, bytes | None]] = []
        if self.kind is StrategyKind.LIGHTWEIGHT:
            for token_id, old in zip(ids, payload):
                moved = append_history(self._verified(token_id, old), dest, new_location)
                new = canonical_bytes(moved)
                updates.append((token_id, moved, old, new))
        elif self.kind is StrategyKind.HEAVYWEIGHT:
            for token_id in ids:
                updates.append((token_id, self.store[token_id], None, None))

        trace = ResourceTrace()
        self.state.transfer_balances(operator, source, dest, ids, [1] * len(ids), trace)
        self._exec(trace, "transfer", len(ids))

        out = None
        if self.kind is StrategyKind.HEAVYWEIGHT:
            for token_id, zap, _, _ in updates:
                full = len(zap.owner_history) >= HISTORY_CAP
                # append fills one owner and one location slot; at the cap every slot shifts
                trace.add("storage_write_update", 2 * HISTORY_CAP if full else 2)
                trace.memory(HEAVY_TRANSFER_MEMORY_WORDS)
                self.store[token_id] = append_history(zap, dest, new_location)
        elif self.kind is StrategyKind.LIGHTWEIGHT:
            out = []
            for token_id, _, old, new in updates:
                trace.add("calldata_bytes", len(old))
                trace.add("hash_words", word_count(len(old)))
                trace.add("hash_words", word_count(len(new)))
                trace.add("storage_write_update")
                trace.memory(word_count(len(old)) + word_count(len(new)))
                self.store[token_id] = metadata_hash(new)
                out.append(new)
        return self._receipt("transfer", len(ids), trace), out

    def modify_zap(self, caller, token_id: int, new_hash: bytes) -> OpReceipt:
        """Featherweight only: the holder publishes a new metadata digest.

        The preimage is not checked; correctness of the off-chain record is on
        the caller.
        """
        if self.kind is not StrategyKind.FEATHERWEIGHT:
            raise UnsupportedOperation(f"{self.kind.value} updates metadata inside transfers")
        if len(new_hash) != 32:
            raise ValueError("digest must be 32 bytes")
        if token_id not in self.store:
            raise UnknownToken(f"token {token_id} was never minted")
        if self.state.balance_of(caller, token_id) < 1:
            raise NotOwner(f"{to_account(caller)} does not hold token {token_id}")
        trace = ResourceTrace()
        trace.add("tx_base")
        trace.add("exec_base", 1, self._tag("modify"))
        trace.add("storage_write_update")
        self.store[token_id] = bytes(new_hash)
        return self._receipt("modify", 1, trace)

    def read_zap(self, token_id: int, payload: bytes | None = None) -> Zap:
        if self.kind is StrategyKind.HEAVYWEIGHT:
            if token_id not in self.store:
                raise UnknownToken(f"token {token_id} was never minted")
            return self.store[token_id]
        return self._verified(token_id, payload)

    def owner_of(self, token_id: int) -> AccountId | None:
        holders = self.state.holders(token_id)
        return holders[0] if holders else None


__all__ = [
    "HashMismatch",
    "LedgerError",
    "MissingPayload",
    "NotOwner",
    "OpReceipt",
    "StrategyKind",
    "UnexpectedPayload",
    "UnknownToken",
    "UnsupportedOperation",
    "ZapLedger",
    "combine",
]
