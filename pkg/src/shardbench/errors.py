"""Exception hierarchy shared by every shardbench module."""


class ShardBenchError(Exception):
    """Base class for all shardbench errors."""


class PlacementError(ShardBenchError):
    """No live shard is available to place a key on."""


class CapacityError(ShardBenchError):
    """A structure with a fixed capacity cannot hold the requested shards."""


class ConfigurationError(ShardBenchError, ValueError):
    """Invalid parameters (non-prime table size, bad experiment layout, ...)."""


class UnknownShardError(ShardBenchError, KeyError):
    """The shard being removed is not live, or the shard being added already is."""


class InconsistentPlanError(ShardBenchError):
    """A migration plan does not match the assignment it is applied to."""


class IncompleteInputError(ShardBenchError):
    """Grading input is missing rows or fields."""
