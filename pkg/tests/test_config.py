"""
Tests for configuration, logging and the error hierarchy
"""

import json
import logging

import pytest

from src.config import JsonFormatter, LabConfig, runtime_snapshot, setup_logging, timed
from src.errors import (
    BodyIntegrityError,
    BoundViolationError,
    ConditioningError,
    ConfigError,
    DegenerateBodyError,
    DensityIntegrityError,
    InputDomainError,
    LabError,
    QuadratureError,
    ResolutionError,
)


def _record(message="hello", **extra):
    record = logging.LogRecord("isobp", logging.INFO, __file__, 10, message, None, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


@pytest.mark.unit
class TestJsonFormatter:
    """Tests for structured log lines"""

    def test_base_fields(self):
        """Test the standard fields"""
        data = json.loads(JsonFormatter().format(_record()))
        assert data["level"] == "INFO"
        assert data["logger"] == "isobp"
        assert data["message"] == "hello"
        assert set(data) == {"timestamp", "level", "logger", "message"}

    def test_timestamp_from_record(self):
        """Test the time is the record creation time in UTC"""
        record = _record()
        record.created = 0.0
        data = json.loads(JsonFormatter().format(record))
        assert data["timestamp"] == "1970-01-01T00:00:00+00:00"

    def test_extra_fields_merged(self):
        """Test extra_fields land at the top level"""
        line = JsonFormatter().format(_record(extra_fields={"kind": "bp-check", "index": 3}))
        data = json.loads(line)
        assert data["kind"] == "bp-check"
        assert data["index"] == 3

    def test_non_serializable_extra(self):
        """Test unknown objects are stringified"""
        data = json.loads(JsonFormatter().format(_record(extra_fields={"obj": object()})))
        assert data["obj"].startswith("<object")


@pytest.mark.unit
class TestSetupLogging:
    """Tests for logger construction"""

    def test_single_handler(self):
        """Test repeated setup does not stack handlers"""
        setup_logging("isobp.test")
        logger = setup_logging("isobp.test")
        assert len(logger.handlers) == 1
        assert not logger.propagate

    def test_text_format(self, monkeypatch):
        """Test the plain text formatter"""
        monkeypatch.setattr(LabConfig, "LOG_FORMAT", "text")
        logger = setup_logging("isobp.text")
        assert not isinstance(logger.handlers[0].formatter, JsonFormatter)


@pytest.mark.unit
class TestTimed:
    """Tests for the timing decorator"""

    def test_returns_result(self):
        """Test the wrapped value passes through"""

        @timed
        def double(x):
            return 2 * x

        assert double(4) == 8
        assert double.__name__ == "double"

    def test_reraises(self):
        """Test exceptions are logged and re-raised unchanged"""

        @timed
        def broken():
            raise ConfigError("bad")

        with pytest.raises(ConfigError, match="bad"):
            broken()


@pytest.mark.unit
class TestRuntimeSnapshot:
    """Tests for the runtime description embedded in reports"""

    def test_keys(self):
        """Test system and configuration sections"""
        snap = runtime_snapshot()
        assert set(snap) == {"timestamp", "system", "configuration"}
        assert {"python_version", "numpy", "scipy"} <= set(snap["system"])
        assert snap["configuration"]["seed"] == LabConfig.SEED


@pytest.mark.unit
class TestErrors:
    """Tests for the error hierarchy"""

    @pytest.mark.parametrize(
        "error",
        [
            InputDomainError,
            BodyIntegrityError,
            DensityIntegrityError,
            ConfigError,
            QuadratureError,
            ResolutionError,
            ConditioningError,
            DegenerateBodyError,
            BoundViolationError,
        ],
    )
    def test_subclasses(self, error):
        """Test every error is a LabError"""
        assert issubclass(error, LabError)

    def test_quadrature_diagnostics(self):
        """Test diagnostics travel with the error"""
        error = QuadratureError("no convergence", {"panels": 4096})
        assert error.diagnostics == {"panels": 4096}
        assert str(error) == "no convergence"
