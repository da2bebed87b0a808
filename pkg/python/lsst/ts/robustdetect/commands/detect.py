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

__all__ = ["DetectConfig", "cmd_detect"]

import pydantic

from ..detector import (
    DEFAULT_CALIBRATION_SAMPLES,
    MIN_CALIBRATION_SAMPLES,
    Hypothesis,
    calibrate,
    decide,
)
from ..divergence import log_likelihood_ratios
from ..matgauss import MAX_SEED, CovarianceSpec, build
from ..output import CommandOutput, MetricRow
from ..run_state import RunState
from .command_config import CommandConfig


class DetectConfig(CommandConfig):
    m: CovarianceSpec = pydantic.Field(title="Covariance M under H1.")
    alpha: float = pydantic.Field(title="False alarm probability.", gt=0, lt=1)
    calibration_samples: int = pydantic.Field(
        default=DEFAULT_CALIBRATION_SAMPLES, ge=MIN_CALIBRATION_SAMPLES
    )
    seed: int = pydantic.Field(default=0, ge=0, le=MAX_SEED)
    observations: list[list[float]] = pydantic.Field(
        default=[], title="Observation vectors to decide on."
    )

    @pydantic.field_validator("observations")
    @classmethod
    def _check_observations(cls, value: list[list[float]]) -> list[list[float]]:
        if len({len(y) for y in value}) > 1:
            raise ValueError("observation vectors must all have the same length")
        return value


def cmd_detect(config: DetectConfig, state: RunState) -> CommandOutput:
    """Calibrate the likelihood ratio test and apply it to observations."""
    m = build(config.m)
    detector = calibrate(
        m,
        config.alpha,
        mc_samples=config.calibration_samples,
        seed=config.seed,
        workers=state.workers,
    )
    statistics: list[float] = []
    decisions: list[Hypothesis] = []
    if config.observations:
        statistics = log_likelihood_ratios(m, config.observations).tolist()
        decisions = [decide(detector, y) for y in config.observations]
    payload = dict(
        n=m.n,
        detector=detector,
        statistics=statistics,
        decisions=decisions,
    )
    common = dict(n=m.n, alpha=config.alpha, seed=config.seed)
    rows = [
        MetricRow(metric="gamma", value=detector.gamma, **common),
        MetricRow(metric="mu0", value=detector.mu0, **common),
        MetricRow(metric="kl_identity", value=detector.kl, **common),
    ]
    return CommandOutput(payload=payload, rows=rows)
