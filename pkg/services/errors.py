"""
Exception types raised by the community detection services.

All of them derive from ValueError so callers that only care about
"bad input" can keep catching ValueError.
"""


class CommunityDetectionError(ValueError):
    """Base class for service-level errors."""


class GraphFormatError(CommunityDetectionError):
    """Input file could not be parsed, or describes an invalid graph."""


class ConfigError(CommunityDetectionError):
    """Invalid schedule, generator or method configuration."""


class DimensionMismatchError(CommunityDetectionError):
    """Matrix/attachment shapes or partition labels do not line up."""


class NodeSpaceMismatchError(CommunityDetectionError):
    """Graphs or partitions are defined over different node sets."""


class UnsupportedGraphError(CommunityDetectionError):
    """The algorithm does not accept this kind of graph (e.g. directed)."""
