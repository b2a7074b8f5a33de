"""
Three ways to store metadata
============================

Heavyweight keeps every field on-chain, featherweight keeps the digest and
asks the new holder to publish an updated one, lightweight ships the bytes
with each call and re-hashes them on-chain.
"""

from zapledger.gas import load_profiles
from zapledger.reports import effective_transfer, measure, per_token_curve
from zapledger.strategies import ZapLedger

eth = load_profiles()["ethereum"]
kinds = ("heavyweight", "featherweight", "lightweight")

# single operations
for kind in kinds:
    deploy = ZapLedger.deploy(kind, eth)[1].gas_units
    mint = measure(kind, "mint", 1, eth).gas_units
    move = effective_transfer(kind, 1, eth).gas_units
    print(f"{kind:<14}{deploy:>11,}{mint:>10,}{move:>11,}")

# savings relative to heavyweight
heavy = {op: measure("heavyweight", op, 1, eth).gas_units for op in ("mint", "transfer")}
feather_move = effective_transfer("featherweight", 1, eth).gas_units
print(f"mint  -{1 - measure('featherweight', 'mint', 1, eth).gas_units / heavy['mint']:.1%}")
print(f"move  -{1 - feather_move / heavy['transfer']:.1%}")

# per-token cost of a batch transfer; heavyweight bottoms out and climbs again
for kind in kinds:
    curve = per_token_curve(kind, "transfer", 40, eth)
    best = min(curve, key=lambda p: p[1])
    print(kind, "cheapest at n =", best[0], "->", round(best[1]), "gas/token;",
          "n=40 ->", round(curve[-1][1]))
