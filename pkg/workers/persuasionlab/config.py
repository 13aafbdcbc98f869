"""Process settings read from ``PERSUASIONLAB_*`` environment variables."""

from __future__ import annotations

import os

from persuasionlab.logger import LogFormat

_TRUE = {"1", "true", "yes", "on"}


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in _TRUE


class LabSettings:
    """Settings shared by every command.

    Experiment parameters live in ``models.ExperimentConfig``; these only tune
    the process: log output, trial parallelism and the vertex bit-bound
    assertion.
    """

    log_level: str
    log_service: str
    log_format: LogFormat
    workers: int
    assertions: bool

    def __init__(self) -> None:
        self.log_level = os.environ.get("PERSUASIONLAB_LOG_LEVEL", "info")
        self.log_service = os.environ.get("PERSUASIONLAB_LOG_SERVICE", "persuasionlab")
        self.log_format = LogFormat(os.environ.get("PERSUASIONLAB_LOG_FORMAT", LogFormat.JSON).strip().lower())
        self.workers = max(1, int(os.environ.get("PERSUASIONLAB_WORKERS", "1")))
        self.assertions = _flag("PERSUASIONLAB_ASSERTIONS")
