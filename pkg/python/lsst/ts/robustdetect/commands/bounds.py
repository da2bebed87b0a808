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

__all__ = ["BoundsConfig", "cmd_bounds"]

import pydantic

from ..bounds import cp_constant, exponent_bracket, mu0_upper_bound, stein_bounds
from ..detector import DEFAULT_CALIBRATION_SAMPLES, MIN_CALIBRATION_SAMPLES, calibrate
from ..matgauss import MAX_SEED, CovarianceSpec, build
from ..output import CommandOutput, MetricRow
from ..run_state import RunState
from .command_config import CommandConfig


class BoundsConfig(CommandConfig):
    m: CovarianceSpec = pydantic.Field(title="Covariance M under H1.")
    alpha: float = pydantic.Field(title="False alarm probability.", gt=0, lt=1)
    p: float = pydantic.Field(
        default=2.0, title="Exponent of the mu0 upper bound.", gt=1, le=2
    )
    calibration_samples: int = pydantic.Field(
        default=DEFAULT_CALIBRATION_SAMPLES, ge=MIN_CALIBRATION_SAMPLES
    )
    seed: int = pydantic.Field(default=0, ge=0, le=MAX_SEED)


def cmd_bounds(config: BoundsConfig, state: RunState) -> CommandOutput:
    """Bounds on ln beta of the optimal test and on mu0.

    mu0 comes from a detector calibrated with the config seed.
    """
    m = build(config.m)
    detector = calibrate(
        m,
        config.alpha,
        mc_samples=config.calibration_samples,
        seed=config.seed,
        workers=state.workers,
    )
    bounds = stein_bounds(m, config.alpha, detector.mu0)
    bracket = exponent_bracket(m, config.alpha, detector.mu0)
    mu0_bound = mu0_upper_bound(m, config.alpha, config.p)
    payload = dict(
        bounds=bounds,
        exponent_bracket=bracket,
        cp=cp_constant(m, config.p),
        p=config.p,
        mu0_upper_bound=mu0_bound,
        mu0_within_bound=detector.mu0 <= mu0_bound,
        gamma=detector.gamma,
    )
    common = dict(n=m.n, alpha=config.alpha, seed=config.seed)
    rows = [
        MetricRow(metric="lower_log_beta", value=bounds.lower_log_beta, **common),
        MetricRow(metric="upper_log_beta", value=bounds.upper_log_beta, **common),
        MetricRow(metric="mu0", value=detector.mu0, **common),
        MetricRow(metric="mu0_upper_bound", value=mu0_bound, **common),
        MetricRow(
            metric="exponent",
            value=bounds.D / m.n,
            ci_lo=bracket[0],
            ci_hi=bracket[1],
            **common,
        ),
    ]
    return CommandOutput(payload=payload, rows=rows)
