"""
Configuration & Logging Tests
Tests for settings validation, worker resolution and the logging setup.
"""

import logging

import pytest
from pydantic import ValidationError

from bootlab.core.config import Settings
from bootlab.core.logging_config import get_logger, log_file_path, setup_logging


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("BOOTLAB_THREADS", "LOG_LEVEL", "DEFAULT_TOL", "TABLE_TOL"):
        monkeypatch.delenv(name, raising=False)


class TestThreads:
    """BOOTLAB_THREADS parsing."""

    @pytest.mark.parametrize("value", ["", "max", "AUTO", " auto "])
    def test_machine_parallelism(self, value):
        assert Settings(BOOTLAB_THREADS=value, _env_file=None).BOOTLAB_THREADS is None

    def test_explicit_count(self):
        settings = Settings(BOOTLAB_THREADS="3", _env_file=None)
        assert settings.BOOTLAB_THREADS == 3
        assert settings.worker_count == 3

    def test_from_environment(self, monkeypatch):
        monkeypatch.setenv("BOOTLAB_THREADS", "2")
        assert Settings(_env_file=None).worker_count == 2

    @pytest.mark.parametrize("value", ["0", -1, "many"])
    def test_rejected(self, value):
        with pytest.raises(ValidationError):
            Settings(BOOTLAB_THREADS=value, _env_file=None)

    def test_default_uses_cpu_count(self, monkeypatch):
        monkeypatch.setattr("os.cpu_count", lambda: 6)
        assert Settings(_env_file=None).worker_count == 6


class TestLogLevel:
    def test_normalized(self):
        assert Settings(LOG_LEVEL=" debug", _env_file=None).LOG_LEVEL == "DEBUG"

    def test_unknown(self):
        with pytest.raises(ValidationError) as excinfo:
            Settings(LOG_LEVEL="LOUD", _env_file=None)
        assert "Unknown LOG_LEVEL" in str(excinfo.value)


class TestTolerances:
    """Quadrature tolerances must lie strictly inside (0, 1)."""

    def test_defaults(self):
        settings = Settings(_env_file=None)
        assert settings.DEFAULT_TOL == 1e-8
        assert settings.TABLE_TOL == 1e-9

    @pytest.mark.parametrize("value", [0.0, 1.0, -1e-3])
    def test_rejected(self, value):
        with pytest.raises(ValidationError):
            Settings(DEFAULT_TOL=value, _env_file=None)
        with pytest.raises(ValidationError):
            Settings(TABLE_TOL=value, _env_file=None)


class TestLogging:
    """Root logger configuration."""

    @pytest.fixture(autouse=True)
    def restore_root(self):
        root = logging.getLogger()
        handlers, level = list(root.handlers), root.level
        yield
        root.handlers[:] = handlers
        root.setLevel(level)

    def test_console_on_stderr(self, capsys):
        setup_logging(level="INFO", colored_console=False)
        logging.getLogger("Bootlab.Test").info("hello")
        out, err = capsys.readouterr()
        assert out == ""
        assert "hello" in err

    def test_file_handler(self, tmp_path):
        setup_logging(level="DEBUG", log_to_file=True, log_to_console=False, log_dir=str(tmp_path))
        logging.getLogger("Bootlab.Test").warning("to file")
        for handler in logging.getLogger().handlers:
            handler.flush()
        assert "to file" in log_file_path(str(tmp_path)).read_text(encoding="utf-8")

    def test_numba_quiet(self):
        setup_logging(level="DEBUG", log_to_console=False)
        assert logging.getLogger("numba").level == logging.WARNING

    def test_get_logger_level(self):
        assert get_logger("Bootlab.Custom", "error").level == logging.ERROR
