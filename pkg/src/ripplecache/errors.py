"""Exception hierarchy shared by all ripplecache modules."""


class RippleCacheError(Exception):
    """Base class; the CLI maps any subclass to a nonzero exit code."""


class TopologyError(RippleCacheError):
    pass


class DisconnectedGraph(TopologyError):
    pass


class DuplicateNode(TopologyError):
    pass


class MissingProducer(TopologyError):
    pass


class NoPath(TopologyError):
    pass


class InvalidParam(RippleCacheError, ValueError):
    pass


class ConfigError(RippleCacheError):
    pass


class EmptyWindow(RippleCacheError, ValueError):
    pass


class MissingStats(RippleCacheError, KeyError):
    pass


class InfeasibleX(RippleCacheError, ValueError):
    pass
