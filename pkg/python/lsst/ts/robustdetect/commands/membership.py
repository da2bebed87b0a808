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

__all__ = ["MembershipModel", "MembershipConfig", "cmd_membership"]

import enum

import pydantic

from ..matgauss import CovarianceSpec, build
from ..output import CommandOutput, MetricRow
from ..robustset import SlackPolicy, SqrtSlack, membership, model2_membership
from ..run_state import RunState
from .command_config import CommandConfig


class MembershipModel(str, enum.Enum):
    """Which observation model the covariances describe."""

    lrt = "lrt"
    signal = "signal"


class MembershipConfig(CommandConfig):
    model: MembershipModel = pydantic.Field(
        default=MembershipModel.lrt,
        title="lrt: m and v are H1 covariances; "
        "signal: m and v are signal covariances S and V in noise I.",
    )
    m: CovarianceSpec = pydantic.Field(title="Nominal covariance.")
    v: CovarianceSpec = pydantic.Field(title="Candidate covariance.")
    slack: SlackPolicy = pydantic.Field(default_factory=SqrtSlack)


def cmd_membership(config: MembershipConfig, state: RunState) -> CommandOutput:
    """Test whether v is in the maximal robust set of m."""
    m = build(config.m)
    v = build(config.v)
    if config.model == MembershipModel.signal:
        report = model2_membership(m, v, config.slack)
    else:
        report = membership(m, v, config.slack)
    rows = [
        MetricRow(metric="log_moment", value=report.log_moment, n=report.n),
        MetricRow(metric="slack_budget", value=report.slack_budget, n=report.n),
        MetricRow(metric="member", value=report.member, n=report.n),
        MetricRow(metric="core_member", value=report.core_member, n=report.n),
    ]
    return CommandOutput(payload=report, rows=rows)
