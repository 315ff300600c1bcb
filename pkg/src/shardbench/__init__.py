"""Hash-based shard placement algorithms and a rebalance benchmark."""

__version__ = "0.1.0"
