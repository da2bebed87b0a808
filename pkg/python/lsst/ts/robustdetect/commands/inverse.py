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

__all__ = ["InverseConfig", "cmd_inverse"]

import pydantic

from ..matgauss import CovarianceSpec, build
from ..output import CommandOutput, MetricRow
from ..robustset import (
    SlackPolicy,
    SqrtSlack,
    check_assumptions,
    proposition1_check,
)
from ..run_state import RunState
from .command_config import CommandConfig


class InverseConfig(CommandConfig):
    m0: CovarianceSpec = pydantic.Field(title="Covariance of the common detector.")
    family: list[CovarianceSpec] = pydantic.Field(
        title="Covariances the detector must serve.", min_length=1
    )
    slack: SlackPolicy = pydantic.Field(default_factory=SqrtSlack)
    delta: float = pydantic.Field(
        default=0.5, title="Exponent offset of the regularity sum.", gt=0
    )


def cmd_inverse(config: InverseConfig, state: RunState) -> CommandOutput:
    """Can the likelihood ratio test of M0 serve every covariance
    of the family?"""
    m0 = build(config.m0)
    family = [build(spec) for spec in config.family]
    report = proposition1_check(m0, family, config.slack)
    assumptions = check_assumptions(family, config.delta)
    rows = [
        MetricRow(metric="max_log_moment", value=report.max_log_moment, n=report.n),
        MetricRow(metric="slack_budget", value=report.slack_budget, n=report.n),
        MetricRow(metric="satisfied", value=report.satisfied, n=report.n),
        MetricRow(metric="max_a1_value", value=assumptions.max_a1_value, n=report.n),
        MetricRow(metric="max_a2_value", value=assumptions.max_a2_value, n=report.n),
    ]
    return CommandOutput(
        payload=dict(report=report, assumptions=assumptions), rows=rows
    )
