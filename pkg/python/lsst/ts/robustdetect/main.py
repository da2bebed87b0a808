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

__all__ = [
    "ExitCode",
    "Command",
    "COMMANDS",
    "make_parser",
    "load_config",
    "run",
]

import argparse
import collections.abc
import enum
import json
import pathlib
import sys
import typing

import pydantic
import structlog

from . import __version__
from .commands import bounds, detect, inverse, kl, membership, simulate, spectral
from .commands.command_config import CommandConfig
from .errors import ConfigError, MathDomainError
from .output import CommandOutput, write_outputs
from .run_state import OutputFormat, RunState, configure_logging


class ExitCode(enum.IntEnum):
    ok = 0
    config = 2
    math_domain = 3
    internal = 4


class Command(typing.NamedTuple):
    config_class: type[CommandConfig]
    func: collections.abc.Callable[[typing.Any, RunState], CommandOutput]
    help: str


COMMANDS: dict[str, Command] = {
    "kl": Command(kl.KlConfig, kl.cmd_kl, "Kullback-Leibler divergences."),
    "membership": Command(
        membership.MembershipConfig,
        membership.cmd_membership,
        "Is V in the maximal robust set of M?",
    ),
    "bounds": Command(
        bounds.BoundsConfig,
        bounds.cmd_bounds,
        "Bounds on the miss probability of the optimal test.",
    ),
    "detect": Command(
        detect.DetectConfig,
        detect.cmd_detect,
        "Calibrate a detector and decide on observations.",
    ),
    "simulate": Command(
        simulate.SimulateConfig,
        simulate.cmd_simulate,
        "Monte Carlo error probabilities.",
    ),
    "spectral": Command(
        spectral.SpectralConfig,
        spectral.cmd_spectral,
        "Robustness of stationary signal spectra.",
    ),
    "inverse": Command(
        inverse.InverseConfig,
        inverse.cmd_inverse,
        "Can one detector serve a family of covariances?",
    ),
}


def make_parser() -> argparse.ArgumentParser:
    """Make the command-line parser: one subcommand per entry of
    `COMMANDS`, each taking a JSON config path and the global flags."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=None, help="Override the seed of the config."
    )
    common.add_argument(
        "--out",
        type=pathlib.Path,
        default=None,
        help="Directory for result files and the run manifest.",
    )
    common.add_argument(
        "--format",
        choices=[item.value for item in OutputFormat],
        default=OutputFormat.json.value,
        help="Format of the results on stdout.",
    )
    common.add_argument(
        "--log-level",
        default=None,
        help="Log level; default $ROBUSTDETECT_LOG_LEVEL or WARNING.",
    )
    common.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Monte Carlo worker threads; default $ROBUSTDETECT_WORKERS or 1.",
    )

    parser = argparse.ArgumentParser(
        prog="run_robustdetect",
        description="Minimax detection of Gaussian sequences.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparser = subparsers.add_parser(name, parents=[common], help=command.help)
        subparser.add_argument("config", help="Path of the JSON config file.")
    return parser


def _format_validation_error(error: pydantic.ValidationError) -> str:
    problems = []
    for item in error.errors():
        key_path = ".".join(str(part) for part in item["loc"]) or "<root>"
        problems.append(f"{key_path}: {item['msg']}")
    return "; ".join(problems)


def load_config(
    config_class: type[CommandConfig], path: str, seed: int | None = None
) -> CommandConfig:
    """Read and validate a command config.

    Parameters
    ----------
    config_class : `type` [`CommandConfig`]
        The config model.
    path : `str`
        Path of the JSON file.
    seed : `int` | `None`
        If not None, override the ``seed`` field of the config.

    Raises
    ------
    ConfigError
        If the file cannot be read or is not valid JSON, or ``seed`` is
        given but the config has no seed.
    pydantic.ValidationError
        If the data do not match the model.
    """
    try:
        text = pathlib.Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path!r}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"Config {path!r} is not valid JSON: {e.msg} "
            f"at line {e.lineno} column {e.colno}"
        ) from e
    if seed is not None:
        if "seed" not in config_class.model_fields:
            raise ConfigError(f"--seed is not supported by {config_class.__name__}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path!r} must be a JSON object")
        data = {**data, "seed": seed}
    return config_class.model_validate(data)


def run(argv: list[str] | None = None) -> int:
    """Run the command line and return the exit code."""
    args = make_parser().parse_args(argv)
    log = structlog.get_logger("run_robustdetect")
    try:
        state = RunState(
            seed=args.seed,
            out_dir=args.out,
            output_format=OutputFormat(args.format),
            log_level=args.log_level,
            workers=args.workers,
        )
        configure_logging(state.log_level)
        command = COMMANDS[args.command]
        config = load_config(command.config_class, args.config, seed=state.seed)
        log.debug("Run command", command=args.command, state=repr(state))
        output = command.func(config, state)
        write_outputs(
            state,
            command=args.command,
            config=config,
            config_path=args.config,
            output=output,
            tool_version=__version__,
        )
    except pydantic.ValidationError as e:
        print(f"config error: {_format_validation_error(e)}", file=sys.stderr)
        return ExitCode.config
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return ExitCode.config
    except MathDomainError as e:
        print(f"math domain error: {type(e).__name__}: {e}", file=sys.stderr)
        return ExitCode.math_domain
    except Exception as e:
        log.exception("Internal error")
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return ExitCode.internal
    return ExitCode.ok
