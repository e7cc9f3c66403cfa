"""Expert collaborative learning: federated long-tail personalisation simulator."""

__version__ = "0.1.0"
