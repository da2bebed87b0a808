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
    "CSV_COLUMNS",
    "MetricRow",
    "CommandOutput",
    "RunManifest",
    "to_jsonable",
    "dumps_result",
    "canonical_json",
    "config_hash",
    "rows_to_table",
    "write_outputs",
    "print_table",
]

import enum
import hashlib
import io
import json
import math
import pathlib
import sys
import typing

import astropy.table
import astropy.time
import numpy as np
import pydantic
import structlog

from .run_state import OutputFormat, RunState

CSV_COLUMNS = (
    "command",
    "config_hash",
    "n",
    "alpha",
    "metric",
    "value",
    "ci_lo",
    "ci_hi",
    "seed",
)

_log = structlog.get_logger("output")


class MetricRow(pydantic.BaseModel):
    """One scalar result, as written to a CSV row."""

    model_config = pydantic.ConfigDict(frozen=True)

    metric: str
    value: float | bool
    n: int | None = None
    alpha: float | None = None
    ci_lo: float | None = None
    ci_hi: float | None = None
    seed: int | None = None


class CommandOutput(pydantic.BaseModel):
    """What a command produces: a JSON payload and its scalar rows."""

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True)

    payload: typing.Any
    rows: list[MetricRow] = pydantic.Field(default_factory=list)


class RunManifest(pydantic.BaseModel):
    """Provenance record of one command run."""

    command: str = pydantic.Field(title="Subcommand name.")
    config_path: str = pydantic.Field(title="Path of the config file as given.")
    config_hash: str = pydantic.Field(
        title="SHA-256 of the canonical (sorted-key, compact) effective config."
    )
    tool_version: str
    timestamp: str = pydantic.Field(title="ISO-8601 UTC time of the run.")
    outputs: list[str] = pydantic.Field(title="Paths of the files written.")


def to_jsonable(value: typing.Any) -> typing.Any:
    """Convert a result to plain JSON data.

    Pydantic models are dumped, numpy values become Python values and
    non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(value, pydantic.BaseModel):
        return to_jsonable(value.model_dump())
    elif isinstance(value, enum.Enum):
        return to_jsonable(value.value)
    elif isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    elif isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    elif isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    elif isinstance(value, (bool, np.bool_)):
        return bool(value)
    elif isinstance(value, (int, np.integer)):
        return int(value)
    elif isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    elif isinstance(value, pathlib.Path):
        return str(value)
    return value


def dumps_result(value: typing.Any) -> str:
    """Format a result as sorted-key JSON text ending in a newline."""
    return json.dumps(to_jsonable(value), sort_keys=True, indent=2) + "\n"


def canonical_json(config: typing.Any) -> str:
    """Format a config as compact sorted-key JSON."""
    return json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))


def config_hash(config: typing.Any) -> str:
    """Return the SHA-256 hex digest of the canonical config JSON."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def _cell(value: typing.Any) -> str:
    if value is None:
        return ""
    value = to_jsonable(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def rows_to_table(
    command: str, digest: str, rows: list[MetricRow]
) -> astropy.table.Table:
    """Make a string-valued table with columns `CSV_COLUMNS`."""
    data = [
        [
            command,
            digest,
            _cell(row.n),
            _cell(row.alpha),
            row.metric,
            _cell(row.value),
            _cell(row.ci_lo),
            _cell(row.ci_hi),
            _cell(row.seed),
        ]
        for row in rows
    ]
    if not data:
        return astropy.table.Table(
            names=CSV_COLUMNS, dtype=[str] * len(CSV_COLUMNS)
        )
    return astropy.table.Table(
        rows=data, names=CSV_COLUMNS, dtype=[str] * len(CSV_COLUMNS)
    )


def _table_csv(table: astropy.table.Table, header: bool = True) -> str:
    buffer = io.StringIO()
    table.write(buffer, format="ascii.csv")
    text = buffer.getvalue()
    if not header:
        text = text.split("\n", 1)[1]
    return text


def print_table(table: astropy.table.Table, file: typing.TextIO | None = None) -> None:
    """Print a human-readable table to stderr."""
    file = sys.stderr if file is None else file
    for line in table.pformat(max_lines=-1, max_width=-1):
        print(line, file=file)


def _append_csv(table: astropy.table.Table, path: pathlib.Path) -> None:
    text = _table_csv(table, header=not path.exists())
    with path.open("a") as file:
        file.write(text)


def write_outputs(
    state: RunState,
    command: str,
    config: pydantic.BaseModel,
    config_path: str,
    output: CommandOutput,
    tool_version: str,
    stdout: typing.TextIO | None = None,
) -> RunManifest | None:
    """Write the results of a command.

    The result goes to stdout as JSON or CSV. If ``state.out_dir`` is
    set, also write ``<command>.json``, the effective config
    ``<command>_config.json``, append to ``results.csv`` and write the
    run manifest ``<command>_manifest.json`` there.

    Returns
    -------
    manifest : `RunManifest` | `None`
        The manifest, or None if no output directory is set.
    """
    stdout = sys.stdout if stdout is None else stdout
    digest = config_hash(config)
    table = rows_to_table(command, digest, output.rows)
    if state.output_format == OutputFormat.csv:
        stdout.write(_table_csv(table))
    else:
        stdout.write(dumps_result(output.payload))
    if len(table) > 0:
        print_table(table)

    if state.out_dir is None:
        return None
    out_dir = pathlib.Path(state.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result_path = out_dir / f"{command}.json"
    result_path.write_text(dumps_result(output.payload))
    effective_config_path = out_dir / f"{command}_config.json"
    effective_config_path.write_text(dumps_result(config))
    csv_path = out_dir / "results.csv"
    _append_csv(table, csv_path)
    manifest = RunManifest(
        command=command,
        config_path=config_path,
        config_hash=digest,
        tool_version=tool_version,
        timestamp=astropy.time.Time.now().utc.isot + "Z",
        outputs=[str(result_path), str(effective_config_path), str(csv_path)],
    )
    manifest_path = out_dir / f"{command}_manifest.json"
    manifest_path.write_text(dumps_result(manifest))
    _log.info("Wrote outputs", command=command, out_dir=str(out_dir))
    return manifest
