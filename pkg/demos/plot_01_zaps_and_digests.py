"""
Zaps, canonical bytes and digests
=================================

A Zap is one metered reading turned into a token. Its metadata serializes to
one fixed byte string, and the hashed ledgers store only the SHA-256 of it.
"""

from dataclasses import replace

from zapledger.ledger import account_from_index
from zapledger.zap import GeoPoint, append_history, canonical_bytes, metadata_hash, new_zap, parse_zap

# five minutes of rooftop PV at 3 kW, sold at 30 cents/kWh
roof = GeoPoint("45.500000", "-73.566667")
zap = replace(new_zap(7, 1_600_000_000, "0.250", "photovoltaic", account_from_index(1), roof, 30),
              token_id=1)
print(zap.power_kw, "kW,", zap.value_usd_cents, "cents")

data = canonical_bytes(zap)
print(data.decode())
print(len(data), "bytes ->", metadata_hash(data).hex())

# parsing is strict and exact
assert parse_zap(data) == zap

# every change of hands appends to the histories, keeping the last five
for i in range(2, 9):
    zap = append_history(zap, account_from_index(i), GeoPoint("45.500000", f"-73.56{i:04d}"))
print([a[-3:] for a in zap.owner_history])
print(metadata_hash(canonical_bytes(zap)).hex())
