"""Semi-fungible energy-token ledger with metered gas and a neighbourhood market simulator."""

__version__ = "0.1.0"
