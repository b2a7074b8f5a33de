"""ERC-1155-style balance bookkeeping that records what every operation touches.

The ledger never prices anything itself. Each mutating call appends
:class:`ResourceEvent` items to a :class:`ResourceTrace`; :mod:`zapledger.gas`
turns the trace into gas units under a chain profile.

Balances are kept sparse: a zero balance is removed from the map, so "slot
exists" and "balance is non-zero" are the same thing. Crediting an absent slot
is a ``storage_write_new``; everything else is a ``storage_write_update``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterator, Sequence

AccountId = str

UTILITY_ACCOUNT: AccountId = "0x" + "00" * 19 + "01"

EVENT_KINDS = frozenset(
    {
        "tx_base",
        "storage_write_new",
        "storage_write_update",
        "storage_read",
        "hash_words",
        "calldata_bytes",
        "memory_words",
        "exec_base",
        "deploy_code_bytes",
    }
)


class LedgerError(Exception):
    pass


class SelfApproval(LedgerError):
    pass


class LengthMismatch(LedgerError):
    pass


class NotAuthorized(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    def __init__(self, token_id: int, held: int, wanted: int):
        super().__init__(f"token {token_id}: balance {held} < {wanted}")
        self.token_id = token_id


def to_account(value) -> AccountId:
    """Normalize a 20-byte address given as bytes or hex text to ``0x`` + 40 hex."""
    if isinstance(value, (bytes, bytearray)):
        raw = bytes(value)
    elif isinstance(value, str):
        text = value[2:] if value[:2] in ("0x", "0X") else value
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise ValueError(f"not a hex address: {value!r}") from exc
    else:
        raise TypeError(f"cannot interpret {value!r} as an account")
    if len(raw) != 20:
        raise ValueError(f"account must be 20 bytes, got {len(raw)}")
    return "0x" + raw.hex()


def account_from_index(i: int) -> AccountId:
    """Deterministic test/fixture address: big-endian index, offset past the utility."""
    return to_account((0x100 + i).to_bytes(20, "big"))


@dataclass(frozen=True)
class ResourceEvent:
    kind: str
    count: int = 1
    tag: str | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown resource kind {self.kind!r}")
        if self.count <= 0:
            raise ValueError(f"{self.kind}: count must be positive, got {self.count}")

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.tag}" if self.tag else self.kind


class ResourceTrace:
    """Ordered resource events of a single operation.

    Memory is peak usage, so all ``memory_words`` contributions within one
    operation fold into a single event; pricing is quadratic in that total.
    """

    def __init__(self, events: Sequence[ResourceEvent] = ()):
        self.events: list[ResourceEvent] = list(events)

    def add(self, kind: str, count: int = 1, tag: str | None = None) -> None:
        if count == 0:
            return
        self.events.append(ResourceEvent(kind, count, tag))

    def memory(self, words: int) -> None:
        if words <= 0:
            return
        for i, ev in enumerate(self.events):
            if ev.kind == "memory_words":
                self.events[i] = ResourceEvent("memory_words", ev.count + words)
                return
        self.events.append(ResourceEvent("memory_words", words))

    def count(self, kind: str) -> int:
        return sum(1 for ev in self.events if ev.kind == kind)

    def memory_words(self) -> int:
        return sum(ev.count for ev in self.events if ev.kind == "memory_words")

    def __iter__(self) -> Iterator[ResourceEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __add__(self, other: "ResourceTrace") -> "ResourceTrace":
        return ResourceTrace(self.events + other.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, ResourceTrace) and self.events == other.events

    def __repr__(self) -> str:
        return f"ResourceTrace({self.events!r})"


@dataclass
class LedgerState:
    balances: dict[tuple[AccountId, int], int] = field(default_factory=dict)
    operator_approvals: set[tuple[AccountId, AccountId]] = field(default_factory=set)
    next_token_id: int = 1
    supply: dict[int, int] = field(default_factory=dict)

    def snapshot(self) -> "LedgerState":
        return copy.deepcopy(self)

    # -- queries -----------------------------------------------------------

    def balance_of(self, account, token_id: int, trace: ResourceTrace | None = None) -> int:
        if trace is not None:
            trace.add("storage_read")
        return self.balances.get((to_account(account), token_id), 0)

    def is_approved_for_all(self, owner, operator) -> bool:
        return (to_account(owner), to_account(operator)) in self.operator_approvals

    def holders(self, token_id: int) -> list[AccountId]:
        return sorted(a for (a, t), v in self.balances.items() if t == token_id and v)

    def total_balance(self, token_id: int) -> int:
        return sum(v for (_, t), v in self.balances.items() if t == token_id)

    # -- mutations ---------------------------------------------------------

    def set_approval_for_all(self, owner, operator, approved: bool) -> None:
        owner, operator = to_account(owner), to_account(operator)
        if owner == operator:
            raise SelfApproval(f"{owner} cannot approve itself")
        if approved:
            self.operator_approvals.add((owner, operator))
        else:
            self.operator_approvals.discard((owner, operator))

    def mint_balances(
        self, to, count: int, trace: ResourceTrace | None = None
    ) -> tuple[list[int], ResourceTrace]:
        if count < 1:
            raise ValueError("mint count must be >= 1")
        to = to_account(to)
        trace = ResourceTrace() if trace is None else trace
        trace.add("tx_base")
        ids = list(range(self.next_token_id, self.next_token_id + count))
        for token_id in ids:
            self.balances[(to, token_id)] = 1
            self.supply[token_id] = 1
            trace.add("storage_write_new")
        self.next_token_id += count
        return ids, trace

    def check_transfer(self, operator, source, ids: Sequence[int], amounts: Sequence[int]) -> None:
        """Raise the error a transfer would raise, without touching state."""
        if len(ids) != len(amounts) or not ids:
            raise LengthMismatch(f"{len(ids)} ids vs {len(amounts)} amounts")
        operator, source = to_account(operator), to_account(source)
        if operator != source and (source, operator) not in self.operator_approvals:
            raise NotAuthorized(f"{operator} may not move tokens of {source}")
        wanted: dict[int, int] = {}
        for token_id, amount in zip(ids, amounts):
            if amount < 0:
                raise ValueError("negative amount")
            wanted[token_id] = wanted.get(token_id, 0) + amount
        for token_id, amount in wanted.items():
            held = self.balances.get((source, token_id), 0)
            if held < amount:
                raise InsufficientBalance(token_id, held, amount)

    def transfer_balances(
        self,
        operator,
        source,
        dest,
        ids: Sequence[int],
        amounts: Sequence[int],
        trace: ResourceTrace | None = None,
    ) -> ResourceTrace:
        """Batch transfer; all-or-nothing.

        Encoded payload: two array lengths plus one id word and one amount word
        per entry.
        """
        self.check_transfer(operator, source, ids, amounts)
        source, dest = to_account(source), to_account(dest)
        trace = ResourceTrace() if trace is None else trace
        trace.add("tx_base")
        for token_id, amount in zip(ids, amounts):
            src_key, dst_key = (source, token_id), (dest, token_id)
            left = self.balances[src_key] - amount
            if left:
                self.balances[src_key] = left
            else:
                del self.balances[src_key]
            trace.add("storage_write_update")
            fresh = dst_key not in self.balances
            self.balances[dst_key] = self.balances.get(dst_key, 0) + amount
            if not self.balances[dst_key]:
                del self.balances[dst_key]
            trace.add("storage_write_new" if fresh else "storage_write_update")
        trace.memory(2 + 2 * len(ids))
        return trace
