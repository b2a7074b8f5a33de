"""
Does it pay, and does it fit in five minutes?
=============================================

At one mint and one transfer per house per five-minute window, public-chain
fees dwarf the energy traded. A permissioned chain costs hosting instead.
"""

from pathlib import Path

from zapledger.gas import gasfree_cost, load_profiles
from zapledger.market import load_scenario, run, schedule_feasibility, viability_report

profiles = load_profiles()
eth, quorum = profiles["ethereum"], profiles["quorum"]

report = viability_report(houses=2, mint_usd_cents=103, transfer_usd_cents=106, days=30)
print(report.mint_per_house_day_usd_cents / 100, report.transfer_per_house_day_usd_cents / 100)
print(report.monthly_total_usd, "USD per month")
print(gasfree_cost(1, 1, quorum).usd, "USD per node-month")

# the same month, simulated end to end
month = load_scenario(Path(__file__).parents[1] / "scenarios" / "two_houses_30d.json")
result = run(month, "lightweight", eth)
print(result.op_spend("standard", eth).usd, "USD simulated")

# processing fits easily; block confirmation is what eats the window
for row in schedule_feasibility(result, eth):
    print(row.op, round(row.max_processing_s, 3), round(row.max_latency_s, 1), row.fits)
for row in schedule_feasibility(run(month, "lightweight", quorum), quorum):
    print(row.op, round(row.max_latency_s, 3), row.fits)
