"""
Tests for logging setup and run context binding.
"""

import logging

import pytest
import structlog

from src.utils.logging import get_logger, run_context, setup_logging


class TestRunContext:
    """Test context binding for command and campaign keys."""

    def test_keys_bound_inside_block(self):
        """Test bound keys are visible while the block runs."""
        with run_context(command="run", seed=7):
            bound = structlog.contextvars.get_contextvars()
            assert bound["command"] == "run"
            assert bound["seed"] == 7

    def test_keys_removed_after_block(self):
        """Test keys are unbound on exit."""
        with run_context(scenario="default"):
            pass
        assert "scenario" not in structlog.contextvars.get_contextvars()

    def test_keys_removed_on_error(self):
        """Test keys are unbound when the block raises."""
        with pytest.raises(RuntimeError):
            with run_context(control="off"):
                raise RuntimeError("boom")
        assert "control" not in structlog.contextvars.get_contextvars()

    def test_nested_blocks_keep_outer_keys(self):
        """Test an inner block leaves outer keys in place."""
        with run_context(command="run"):
            with run_context(seed=3):
                assert structlog.contextvars.get_contextvars() == {"command": "run", "seed": 3}
            assert structlog.contextvars.get_contextvars() == {"command": "run"}


class TestSetupLogging:
    """Test logger configuration."""

    def test_level_override(self):
        """Test explicit level wins over settings."""
        setup_logging(log_level="warning", log_format="json")
        assert logging.getLogger().level == logging.WARNING
        setup_logging(log_level="INFO", log_format="console")

    def test_unknown_level_falls_back_to_info(self):
        """Test an unknown level name maps to INFO."""
        setup_logging(log_level="chatty")
        assert logging.getLogger().level == logging.INFO

    def test_named_logger_binds_name(self):
        """Test get_logger binds logger_name."""
        logger = get_logger("thermal")
        assert logger is not None
