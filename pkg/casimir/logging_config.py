"""
Logging setup for the Casimir toolkit.

Every module logs through a child of the ``casimir`` logger. The CLI calls
configure_logging once per run; handlers of loggers created earlier at import
time are rebuilt so the chosen level, format and log directory apply to all.
"""

import logging
import logging.handlers
import sys
import time
from functools import wraps
from pathlib import Path
from typing import Optional

ROOT_NAME = "casimir"

_DATEFMT = '%H:%M:%S'

FORMATS = {
    'normal': logging.Formatter('%(asctime)s %(levelname)-7s %(name)s: %(message)s', _DATEFMT),
    'verbose': logging.Formatter(
        '%(asctime)s %(levelname)-7s %(name)s %(module)s:%(lineno)d %(funcName)s: %(message)s', _DATEFMT),
    'file': logging.Formatter('%(asctime)s | %(levelname)-7s | %(name)-18s | %(message)s',
                              '%Y-%m-%d %H:%M:%S'),
}

_settings = {
    "level": "WARNING",
    "verbose": False,
    "log_dir": None,
}


def configure_logging(level: str = "WARNING", verbose: bool = False, log_dir: Optional[Path] = None) -> None:
    """
    Set process-wide logging options and rebuild handlers of existing loggers

    Args:
        level: Console level name; ignored when verbose is set
        verbose: DEBUG level with source locations
        log_dir: Directory for rotating log files; None disables file logging
    """
    _settings.update(
        level="DEBUG" if verbose else level.upper(),
        verbose=verbose,
        log_dir=Path(log_dir) if log_dir is not None else None,
    )

    for name in list(logging.Logger.manager.loggerDict):
        if name == ROOT_NAME or name.startswith(ROOT_NAME + "."):
            logger = logging.getLogger(name)
            for handler in list(logger.handlers):
                logger.removeHandler(handler)
                handler.close()
            setup_logger(name)


def _rotating(path: Path, level: int, max_mb: int, backups: int) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(path, maxBytes=max_mb * 1024 * 1024, backupCount=backups)
    handler.setLevel(level)
    handler.setFormatter(FORMATS['file'])
    return handler


def setup_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """
    Attach handlers for the current settings to a named logger

    Console output goes to stderr so tables printed on stdout stay clean. With a
    log directory, casimir.log receives everything and errors.log errors only.
    """
    level = level or _settings["level"]
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG if _settings["log_dir"] else getattr(logging, level))
    logger.propagate = False
    if logger.handlers:
        return logger

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(getattr(logging, level))
    console.setFormatter(FORMATS['verbose' if _settings["verbose"] else 'normal'])
    logger.addHandler(console)

    log_dir = _settings["log_dir"]
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
        logger.addHandler(_rotating(log_dir / "casimir.log", logging.DEBUG, max_mb=10, backups=5))
        logger.addHandler(_rotating(log_dir / "errors.log", logging.ERROR, max_mb=5, backups=3))
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Logger under the toolkit namespace; None gives the toolkit root"""
    return setup_logger(ROOT_NAME if name is None else f"{ROOT_NAME}.{name}")


# Component loggers
def get_energy_logger() -> logging.Logger:
    return get_logger("energy")

def get_geometry_logger() -> logging.Logger:
    return get_logger("geometry")

def get_force_logger() -> logging.Logger:
    return get_logger("force")

def get_calibration_logger() -> logging.Logger:
    return get_logger("calibration")

def get_pipeline_logger() -> logging.Logger:
    return get_logger("pipeline")

def get_cli_logger() -> logging.Logger:
    return get_logger("cli")


class OperationLogger:
    """Logs start, outcome and wall time of one CLI subcommand"""

    def __init__(self, logger: logging.Logger, command: str, **context):
        self.logger = logger
        self.command = command
        self.context = context
        self._started = 0.0

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._started

    def __enter__(self):
        self._started = time.perf_counter()
        details = ", ".join(f"{k}={v}" for k, v in self.context.items())
        self.logger.info(f"{self.command}: started ({details})" if details else f"{self.command}: started",
                         extra={"command": self.command, **self.context})
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        elapsed = self.elapsed
        if exc_type is None:
            self.logger.info(f"{self.command}: finished in {elapsed:.3f}s",
                             extra={"command": self.command, "elapsed_s": elapsed})
        else:
            self.logger.error(f"{self.command}: {exc_type.__name__} after {elapsed:.3f}s: {exc_val}",
                              extra={"command": self.command, "elapsed_s": elapsed,
                                     "error_type": exc_type.__name__})
        return False


def log_performance(component: Optional[str] = None):
    """Time an expensive computation at DEBUG level; failures are logged and re-raised"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = get_logger(component)
            started = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(f"{func.__name__} failed after {time.perf_counter() - started:.3f}s: {e}",
                             extra={"function": func.__name__})
                raise
            logger.debug(f"{func.__name__} took {time.perf_counter() - started:.3f}s",
                         extra={"function": func.__name__})
            return result
        return wrapper
    return decorator
