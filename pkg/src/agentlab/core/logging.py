"""Logging setup for the command-line entrypoint."""

import logging

PLAIN_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
KEYVALUE_FORMAT = "ts=%(asctime)s level=%(levelname)s logger=%(name)s msg=%(message)r"


def configure_logging(level: str = "INFO", fmt: str = "plain") -> None:
    """Configure the root logger once per process."""
    logging.basicConfig(
        level=level.upper(),
        format=KEYVALUE_FORMAT if fmt == "keyvalue" else PLAIN_FORMAT,
        force=True,
    )
    # joblib workers are chatty at DEBUG
    logging.getLogger("joblib").setLevel(logging.WARNING)
