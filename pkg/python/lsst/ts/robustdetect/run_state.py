# This file is part of ts_robustdetect.
#
# Developed for the Vera C. Rubin Observatory Telescope and Site Systems.
# This product includes software developed by the LSST Project
# (https://www.lsst.org).
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

from __future__ import annotations

__all__ = [
    "DEFAULT_LOG_LEVEL",
    "OutputFormat",
    "RunState",
    "configure_logging",
    "get_env",
]

import enum
import logging
import os
import pathlib
import sys

import structlog

from .errors import ConfigError

DEFAULT_LOG_LEVEL = "WARNING"


class OutputFormat(str, enum.Enum):
    json = "json"
    csv = "csv"


def get_env(name: str, default: None | str = None) -> str:
    """Get a value from an environment variable.

    Parameters
    ----------
    name : `str`
        The name of the environment variable.
    default : `str` | `None`
        The default value; if None then raise ValueError if absent.

    Returns
    -------
    value : `str`
        The value of the environment variable.
    """
    if default is not None and not isinstance(default, str):
        raise ValueError(f"default={default!r} must be a str or None")
    value = os.environ.get(name, default)
    if value is None:
        raise ValueError(f"You must specify environment variable {name}")
    return value


class _StderrProxy:
    """Write to whatever sys.stderr is at the time of the call."""

    def write(self, text: str) -> int:
        return sys.stderr.write(text)

    def flush(self) -> None:
        sys.stderr.flush()


def configure_logging(level: str) -> None:
    """Send key-value structlog output at or above ``level`` to stderr.

    Raises
    ------
    ConfigError
        If ``level`` is not a standard logging level name.
    """
    level_num = logging.getLevelName(level.upper())
    if not isinstance(level_num, int):
        raise ConfigError(f"Unknown log level {level!r}")
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level_num),
        logger_factory=structlog.PrintLoggerFactory(file=_StderrProxy()),
        cache_logger_on_first_use=False,
    )


class RunState:
    """Run-wide settings handed to every command.

    Parameters
    ----------
    seed : `int` | `None`
        Seed that overrides the seed of the command config, if not None.
    out_dir : `pathlib.Path` | `None`
        Directory for result files and the run manifest.
        If None, results go to stdout only.
    output_format : `OutputFormat`
        Format of the results on stdout.
    log_level : `str` | `None`
        Log level; if None use $ROBUSTDETECT_LOG_LEVEL, else "WARNING".
    workers : `int` | `None`
        Monte Carlo worker threads; if None use $ROBUSTDETECT_WORKERS,
        else 1.

    Raises
    ------
    ConfigError
        If a value is invalid.
    """

    def __init__(
        self,
        seed: int | None = None,
        out_dir: pathlib.Path | None = None,
        output_format: OutputFormat = OutputFormat.json,
        log_level: str | None = None,
        workers: int | None = None,
    ) -> None:
        self.seed = seed
        self.out_dir = out_dir
        self.output_format = OutputFormat(output_format)
        self.log_level = (
            log_level
            if log_level is not None
            else get_env("ROBUSTDETECT_LOG_LEVEL", DEFAULT_LOG_LEVEL)
        )
        if workers is None:
            workers_str = get_env("ROBUSTDETECT_WORKERS", "1")
            try:
                workers = int(workers_str)
            except ValueError:
                raise ConfigError(
                    f"ROBUSTDETECT_WORKERS={workers_str!r} is not an integer"
                ) from None
        if workers < 1:
            raise ConfigError(f"workers={workers} must be >= 1")
        self.workers = workers

    def __repr__(self) -> str:
        return (
            f"RunState(seed={self.seed}, out_dir={self.out_dir}, "
            f"output_format={self.output_format.value}, "
            f"log_level={self.log_level}, workers={self.workers})"
        )
