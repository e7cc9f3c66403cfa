from __future__ import annotations

from .fedavg import aggregate, local_shuffle_seed, local_update, sample_clients

__all__ = ["aggregate", "local_shuffle_seed", "local_update", "sample_clients"]
