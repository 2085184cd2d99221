import logging

import pytest

from logging_config import OperationLogger, configure_logging, get_logger, log_performance


@pytest.fixture
def log_dir(tmp_path):
    configure_logging(log_dir=tmp_path)
    yield tmp_path
    configure_logging()


class TestLoggingConfig:
    def test_component_loggers_share_namespace(self):
        assert get_logger("force").name == "casimir.force"
        assert get_logger().name == "casimir"
        assert not get_logger("force").propagate

    def test_files_receive_info_and_errors(self, log_dir):
        logger = get_logger("cli")
        with pytest.raises(RuntimeError):
            with OperationLogger(logger, "slope", workers=2):
                raise RuntimeError("bracket lost")
        for handler in logger.handlers:
            handler.flush()
        everything = (log_dir / "casimir.log").read_text()
        assert "slope: started (workers=2)" in everything
        assert "RuntimeError" in (log_dir / "errors.log").read_text()

    def test_verbose_sets_debug(self):
        configure_logging(verbose=True)
        try:
            assert get_logger("energy").level == logging.DEBUG
        finally:
            configure_logging()


class TestLogPerformance:
    def test_returns_value(self):
        @log_performance("pipeline")
        def compute(x):
            return 2 * x

        assert compute(3) == 6
        assert compute.__name__ == "compute"

    def test_reraises(self):
        @log_performance("pipeline")
        def fail():
            raise ValueError("no root")

        with pytest.raises(ValueError, match="no root"):
            fail()
