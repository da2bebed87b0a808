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

__all__ = ["KlConfig", "cmd_kl"]

import pydantic

from ..divergence import kl_general, kl_identity
from ..matgauss import CovarianceSpec, build
from ..output import CommandOutput, MetricRow
from ..run_state import RunState
from .command_config import CommandConfig


class KlConfig(CommandConfig):
    m: CovarianceSpec = pydantic.Field(title="Nominal covariance M.")
    v: CovarianceSpec | None = pydantic.Field(
        default=None, title="Optional covariance V for D(V || M)."
    )


def cmd_kl(config: KlConfig, state: RunState) -> CommandOutput:
    """Compute D(I || M) and, if V is given, D(V || M)."""
    m = build(config.m)
    payload: dict[str, float | int | None] = dict(
        n=m.n, kl_identity=kl_identity(m), kl_general=None
    )
    rows = [MetricRow(metric="kl_identity", value=payload["kl_identity"], n=m.n)]
    if config.v is not None:
        payload["kl_general"] = kl_general(build(config.v), m)
        rows.append(MetricRow(metric="kl_general", value=payload["kl_general"], n=m.n))
    return CommandOutput(payload=payload, rows=rows)
