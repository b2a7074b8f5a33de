"""
A street trading energy for a week
==================================

Four households, two with generation. Every five minutes producers mint a
Zap, households short of energy buy untouched Zaps from neighbours, and the
utility fills whatever is left at the end of the billing cycle.
"""

from pathlib import Path

from zapledger.gas import load_profiles
from zapledger.market import load_scenario, run

eth = load_profiles()["ethereum"]
scenario = load_scenario(Path(__file__).parents[1] / "scenarios" / "street_week.json")

result = run(scenario, "lightweight", eth)
for t in ("mint", "transfer", "utility_mint"):
    print(t, result.count(t))

# money moves between neighbours, the utility bills only the remainder
for s in result.statements:
    print(s.account[-3:], s.produced_kwh, s.consumed_kwh, s.revenue_usd_cents,
          s.purchases_usd_cents, s.utility_charge_usd_cents)

# energy is conserved: produced + delivered by utility = consumed + still held
(cycle,) = result.cycles
print(cycle.produced_kwh + cycle.utility_kwh, "=", cycle.consumed_kwh + cycle.remaining_end_kwh)

# the economics do not depend on where metadata lives
other = run(scenario, "featherweight", eth)
print("same bills:", other.statements == result.statements)
print("gas:", sum(r.gas_units for r in result.receipts), "vs", sum(r.gas_units for r in other.receipts))
