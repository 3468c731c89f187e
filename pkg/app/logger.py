import logging
import logging.config
import sys
from pathlib import Path

import yaml
from rich.console import Console
from rich.logging import RichHandler

from app.config import config

# Rich wraps records at the console width (80 columns when stderr is not a
# TTY), splitting one record across multiple lines in sweep logs.
PLAIN_LOG_FORMAT = "%(levelname)s %(name)s - %(message)s"

APP_LOGGERS = ["app"]

# Logs go to stderr so JSON and CSV written to stdout stay parseable.
stderr_console = Console(stderr=True)


def should_use_rich_logs() -> bool:
    return sys.stderr.isatty()


def _plain_config(log_config: dict) -> dict:
    for formatter in log_config["formatters"].values():
        formatter["format"] = PLAIN_LOG_FORMAT
    for name, handler in log_config["handlers"].items():
        log_config["handlers"][name] = {
            "class": "logging.StreamHandler",
            "formatter": handler["formatter"],
            "stream": "ext://sys.stderr",
        }
    return log_config


def configure_logging(level: str = config.LOG_LEVEL) -> None:
    """Configure handlers from log_conf.yaml and apply the given level.

    Falls back to a single Rich (or plain) handler when the YAML file is missing.
    """
    log_config_path = Path(__file__).parent.parent / "log_conf.yaml"
    if log_config_path.exists():
        with open(log_config_path) as f:
            log_config = yaml.safe_load(f)

        if should_use_rich_logs():
            for handler in log_config["handlers"].values():
                handler["console"] = stderr_console
        else:
            log_config = _plain_config(log_config)

        logging.config.dictConfig(log_config)
    else:
        if should_use_rich_logs():
            fallback_handler: logging.Handler = RichHandler(
                console=stderr_console,
                rich_tracebacks=False,
                show_time=False,
                show_level=True,
                show_path=False,
                markup=False,
            )
        else:
            fallback_handler = logging.StreamHandler(sys.stderr)
        logging.basicConfig(
            format="%(name)s - %(message)s",
            handlers=[fallback_handler],
            force=True,
        )
    set_level(level)


def set_level(level: str) -> None:
    log_level = getattr(logging, level)
    logging.root.setLevel(log_level)
    for logger_name in APP_LOGGERS:
        logging.getLogger(logger_name).setLevel(log_level)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


configure_logging()

logger = get_logger(__name__)
