"""Tests for chaoscluster.exceptions module."""

from __future__ import annotations

import pytest

from chaoscluster.exceptions import (
    ChaosClusterError,
    ConfigError,
    GraphError,
    GuardError,
    QuadratureError,
    RegimeError,
)


class TestChaosClusterError:
    """Test ChaosClusterError base exception."""

    def test_is_exception(self) -> None:
        """Test ChaosClusterError is an Exception."""
        assert issubclass(ChaosClusterError, Exception)

    def test_can_be_raised(self) -> None:
        """Test ChaosClusterError can be raised."""
        with pytest.raises(ChaosClusterError):
            raise ChaosClusterError("Test error")

    def test_error_message(self) -> None:
        """Test error message is preserved."""
        msg = "Test error message"
        with pytest.raises(ChaosClusterError, match=msg):
            raise ChaosClusterError(msg)


class TestGuardError:
    """Test GuardError exception."""

    def test_inherits_from_base(self) -> None:
        """Test GuardError inherits from ChaosClusterError."""
        assert issubclass(GuardError, ChaosClusterError)

    def test_raised_by_enumeration(self) -> None:
        """Test graph enumeration past its guard raises GuardError."""
        from chaoscluster.graphs import enumerate_connected

        with pytest.raises(GuardError, match="k"):
            list(enumerate_connected(9))


class TestGraphError:
    """Test GraphError exception."""

    def test_inherits_from_base(self) -> None:
        """Test GraphError inherits from ChaosClusterError."""
        assert issubclass(GraphError, ChaosClusterError)

    def test_caught_as_base_exception(self) -> None:
        """Test GraphError can be caught as ChaosClusterError."""
        with pytest.raises(ChaosClusterError):
            raise GraphError("not a tree")


class TestExceptionHierarchy:
    """Test exception hierarchy."""

    def test_all_inherit_from_base(self) -> None:
        """Test all custom exceptions inherit from ChaosClusterError."""
        exceptions = [ConfigError, GuardError, GraphError, QuadratureError, RegimeError]

        for exc in exceptions:
            assert issubclass(exc, ChaosClusterError)

    def test_catch_all_with_base(self) -> None:
        """Test all exceptions can be caught with base exception."""
        exceptions = [
            ConfigError("test"),
            GuardError("test"),
            GraphError("test"),
            QuadratureError("test"),
            RegimeError("test"),
        ]

        for exc in exceptions:
            with pytest.raises(ChaosClusterError):
                raise exc

    def test_siblings_are_distinct(self) -> None:
        """Test a GuardError is not caught as a ConfigError."""
        assert not issubclass(GuardError, ConfigError)
        assert not issubclass(RegimeError, GraphError)
