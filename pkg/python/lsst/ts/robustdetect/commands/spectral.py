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

__all__ = ["SpectralConfig", "cmd_spectral"]

import pydantic

from ..output import CommandOutput, MetricRow
from ..run_state import RunState
from ..spectral import (
    discretized_rate,
    spectral_assumptions,
    spectral_functional,
    spectral_membership,
    szego_log_det_rate,
)
from ..spectral_density import DEFAULT_GRID_POINTS, MIN_GRID_POINTS, SpectralDensity
from .command_config import CommandConfig


class SpectralConfig(CommandConfig):
    signal: SpectralDensity = pydantic.Field(title="Nominal signal density fS.")
    candidate: SpectralDensity = pydantic.Field(title="Candidate signal density fK.")
    tol: float = pydantic.Field(default=0.0, title="Membership tolerance.", ge=0)
    grid_points: int = pydantic.Field(
        default=DEFAULT_GRID_POINTS,
        title="Number of Simpson subintervals; even.",
        ge=MIN_GRID_POINTS,
    )
    delta: float = pydantic.Field(
        default=0.5, title="Exponent offset of the regularity integral.", gt=0
    )
    n: int | None = pydantic.Field(
        default=None,
        title="If set, also report the Szego rates of fS and the "
        "n-point discretized rate.",
        ge=2,
    )

    @pydantic.field_validator("grid_points")
    @classmethod
    def _check_grid_points(cls, value: int) -> int:
        if value % 2 != 0:
            raise ValueError(f"grid_points={value} must be even")
        return value


def cmd_spectral(config: SpectralConfig, state: RunState) -> CommandOutput:
    """Evaluate the spectral robustness functional of (fS, fK)."""
    functional = spectral_functional(
        config.signal, config.candidate, config.grid_points
    )
    member = spectral_membership(
        config.signal, config.candidate, config.tol, config.grid_points
    )
    assumptions = spectral_assumptions(
        config.candidate, config.delta, config.grid_points
    )
    payload: dict[str, object] = dict(
        functional=functional,
        member=member,
        tol=config.tol,
        assumptions=assumptions,
        szego=None,
        discretized_rate=None,
    )
    rows = [
        MetricRow(metric="functional", value=functional),
        MetricRow(metric="member", value=member),
        MetricRow(metric="a5_value", value=assumptions.a5_value),
        MetricRow(metric="a6_value", value=assumptions.a6_value),
    ]
    if config.n is not None:
        szego = szego_log_det_rate(config.signal, config.n, config.grid_points)
        rate = discretized_rate(config.signal, config.candidate, config.n)
        payload["szego"] = szego
        payload["discretized_rate"] = rate
        rows += [
            MetricRow(metric="matrix_rate", value=szego.matrix_rate, n=config.n),
            MetricRow(metric="spectral_rate", value=szego.spectral_rate, n=config.n),
            MetricRow(metric="discretized_rate", value=rate, n=config.n),
        ]
    return CommandOutput(payload=payload, rows=rows)
