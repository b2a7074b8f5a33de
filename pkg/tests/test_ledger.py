import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zapledger.gas import price_trace
from zapledger.ledger import (
    UTILITY_ACCOUNT,
    InsufficientBalance,
    LedgerState,
    LengthMismatch,
    NotAuthorized,
    ResourceTrace,
    SelfApproval,
    account_from_index,
    to_account,
)

A, B, C = (account_from_index(i) for i in (1, 2, 3))


def test_accounts_normalize_to_lowercase_hex():
    assert to_account("0x" + "AB" * 20) == "0x" + "ab" * 20
    assert to_account(bytes(19) + b"\x01") == UTILITY_ACCOUNT
    with pytest.raises(ValueError):
        to_account("0x1234")


def test_fresh_ledger_balance_is_zero():
    assert LedgerState().balance_of(A, 1) == 0


def test_metered_balance_read():
    trace = ResourceTrace()
    LedgerState().balance_of(A, 1, trace)
    assert [e.kind for e in trace] == ["storage_read"]


def test_mint_assigns_sequential_ids():
    s = LedgerState()
    assert s.mint_balances(A, 1)[0] == [1]
    s = LedgerState()
    ids, trace = s.mint_balances(A, 3)
    assert ids == [1, 2, 3]
    assert all(s.total_balance(i) == 1 for i in ids)
    assert trace.count("tx_base") == 1 and trace.count("storage_write_new") == 3
    assert s.mint_balances(B, 2)[0] == [4, 5]
    assert s.next_token_id == 6


def test_transfer_moves_balance():
    s = LedgerState()
    s.mint_balances(A, 1)
    trace = s.transfer_balances(A, A, B, [1], [1])
    assert (s.balance_of(A, 1), s.balance_of(B, 1)) == (0, 1)
    assert trace.count("tx_base") == 1


def test_approvals():
    s = LedgerState()
    s.set_approval_for_all(A, B, True)
    assert s.is_approved_for_all(A, B)
    before = s.snapshot()
    s.set_approval_for_all(A, B, True)
    assert s == before
    with pytest.raises(SelfApproval):
        s.set_approval_for_all(A, A, True)
    s.set_approval_for_all(A, B, False)
    assert not s.is_approved_for_all(A, B)


def test_operator_needs_approval():
    s = LedgerState()
    s.mint_balances(A, 1)
    with pytest.raises(NotAuthorized):
        s.transfer_balances(B, A, C, [1], [1])
    s.set_approval_for_all(A, B, True)
    s.transfer_balances(B, A, C, [1], [1])
    assert s.balance_of(C, 1) == 1


def test_length_mismatch():
    s = LedgerState()
    s.mint_balances(A, 2)
    with pytest.raises(LengthMismatch):
        s.transfer_balances(A, A, B, [1, 2], [1])
    with pytest.raises(LengthMismatch):
        s.transfer_balances(A, A, B, [], [])


def test_failed_batch_leaves_state_untouched():
    s = LedgerState()
    s.mint_balances(A, 10)
    s.transfer_balances(A, A, C, [7], [1])
    before = s.snapshot()
    with pytest.raises(InsufficientBalance) as err:
        s.transfer_balances(A, A, B, list(range(1, 11)), [1] * 10)
    assert err.value.token_id == 7
    assert s == before


def test_debit_is_update_and_credit_to_empty_slot_is_new():
    s = LedgerState()
    s.mint_balances(A, 1)
    s.transfer_balances(A, A, B, [1], [1])
    trace = s.transfer_balances(B, B, A, [1], [1])
    kinds = [e.kind for e in trace if e.kind.startswith("storage")]
    assert kinds == ["storage_write_update", "storage_write_new"]
    assert (A, 1) in s.balances and (B, 1) not in s.balances


def _memory_cost(words):
    return 3 * words + words * words // 512


@pytest.mark.parametrize("n", [2, 5, 10])
def test_batch_gas_equals_per_token_sum_minus_amortization(n, eth):
    s = LedgerState()
    ids, _ = s.mint_balances(A, n)
    singles = []
    for token_id in ids:
        one = s.snapshot()
        singles.append(price_trace(one.transfer_balances(A, A, B, [token_id], [1]), eth).gas_units)
    batch = price_trace(s.transfer_balances(A, A, B, ids, [1] * n), eth).gas_units
    memory_delta = n * _memory_cost(4) - _memory_cost(2 + 2 * n)
    assert batch == sum(singles) - (n - 1) * 21_000 - memory_delta


@pytest.mark.parametrize("n", [10])
def test_mint_amortizes(n, eth):
    one = price_trace(LedgerState().mint_balances(A, 1)[1], eth).gas_units
    ten = price_trace(LedgerState().mint_balances(A, n)[1], eth).gas_units
    assert ten < n * one
    assert n * one - ten == (n - 1) * 21_000


# -- random operation sequences ---------------------------------------------------

ops = st.lists(
    st.tuples(st.sampled_from(["mint", "transfer", "approve"]), st.integers(0, 3), st.integers(0, 3),
              st.lists(st.integers(1, 12), min_size=1, max_size=4)),
    max_size=40,
)


def _apply(seq):
    s = LedgerState()
    traces = []
    people = [account_from_index(i) for i in range(4)]
    minted = []
    for op, i, j, toks in seq:
        try:
            if op == "mint":
                ids, t = s.mint_balances(people[i], len(toks))
                minted.extend(ids)
                traces.append(t)
            elif op == "approve":
                s.set_approval_for_all(people[i], people[j], True)
            else:
                before = s.snapshot()
                try:
                    traces.append(s.transfer_balances(people[i], people[i], people[j], toks, [1] * len(toks)))
                except (InsufficientBalance, LengthMismatch, NotAuthorized):
                    assert s == before
        except SelfApproval:
            pass
    return s, traces, minted


@settings(max_examples=200)
@given(ops)
def test_random_sequences_conserve_and_are_deterministic(seq):
    s, traces, minted = _apply(seq)
    assert minted == list(range(1, s.next_token_id))
    for token_id in minted:
        assert s.total_balance(token_id) == 1
    assert all(v > 0 for v in s.balances.values())
    s2, traces2, _ = _apply(seq)
    assert s2 == s and traces2 == traces


def test_shuffled_independent_transfers_reach_same_state():
    rng = random.Random(3)
    s = LedgerState()
    ids, _ = s.mint_balances(A, 20)
    moves = [(t, rng.choice([B, C])) for t in ids]
    s1, s2 = s.snapshot(), s.snapshot()
    for t, to in moves:
        s1.transfer_balances(A, A, to, [t], [1])
    rng.shuffle(moves)
    for t, to in moves:
        s2.transfer_balances(A, A, to, [t], [1])
    assert s1.balances == s2.balances
