"""Custom exceptions for the chaoscluster toolkit.

This module defines exception classes used throughout the toolkit.
All exceptions inherit from :class:`ChaosClusterError`, allowing users to
catch every toolkit error with a single exception handler.

Verification outcomes (tree-graph inequality, theorem bounds, stability
falsification) are *reported*, not raised: a violated inequality is a result,
not a programming error.
"""


class ChaosClusterError(Exception):
    """Base exception for the chaoscluster toolkit.

    Example:
        >>> try:
        ...     list(enumerate_graphs(12))
        ... except ChaosClusterError as e:
        ...     print(f"toolkit error: {e}")

    """


class ConfigError(ChaosClusterError):
    """Raised when an experiment or potential configuration is invalid.

    This typically occurs when:
    - The config file does not exist or cannot be parsed
    - The file contains keys the toolkit does not recognise
    - A value cannot be converted to the expected type
    - A referenced table file is missing
    """


class GuardError(ChaosClusterError):
    """Raised when a size guard is exceeded.

    Exhaustive enumerations grow like ``2^(k(k-1)/2)`` or ``k^(k-2)`` and
    dense subset tables like ``2^j``. Each entry point refuses inputs beyond
    its guard instead of running for hours; the message carries the size
    that would have been processed.
    """


class GraphError(ChaosClusterError):
    """Raised when a graph argument has the wrong shape.

    Common causes include:
    - A non-tree passed to :func:`chaoscluster.geometry.tree_length`
    - Overlapping root and non-root label sets for rooted forests
    - A tree that does not span all labels of a cluster integral
    """


class QuadratureError(ChaosClusterError):
    """Raised when deterministic quadrature misses its tolerance.

    The message reports the achieved error estimate so the caller can
    decide whether to refine the resolution or accept the value.
    """


class RegimeError(ChaosClusterError):
    """Raised when an operation is asked to run outside its regime.

    Examples are evaluating the theorem bound at ``eps >= eps0`` or asking
    the exact tiny-system oracle for a dimension other than one.
    """
