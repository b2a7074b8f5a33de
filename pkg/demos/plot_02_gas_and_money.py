"""
From resource traces to gas and dollars
=======================================

Operations emit resource events; a chain profile prices them. The two rates
and the ether price fall out of benchmark cost figures as exact ratios.
"""

from fractions import Fraction

from zapledger.gas import gas_to_money, gasfree_cost, load_profiles, price_trace
from zapledger.ledger import ResourceTrace

profiles = load_profiles()
eth, quorum = profiles["ethereum"], profiles["quorum"]

# one transaction that writes two fresh storage words
trace = ResourceTrace()
trace.add("tx_base")
trace.add("storage_write_new", 2)
print(price_trace(trace, eth))

# 111,089,310 Gwei for 3,702,977 gas: 30 Gwei per gas on the fast lane
print(Fraction(111_089_310, 3_702_977), Fraction(96_277_402, 3_702_977))

for gas in (3_702_977, 158_483, 71_456, 165_052, 169_077):
    fast, std = gas_to_money(gas, "fast", eth), gas_to_money(gas, "standard", eth)
    print(f"{gas:>9,}  {fast.gwei:>12,}  {fast.usd:>6}  {std.gwei:>12,}  {std.usd:>6}")

# a permissioned chain charges nothing per transaction, only hosting
print(gas_to_money(3_702_977, "fast", quorum).usd, gasfree_cost(1, 12, quorum).usd, "USD per node-year")
