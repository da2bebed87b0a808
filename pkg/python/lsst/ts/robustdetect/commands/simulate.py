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

__all__ = ["SimulateConfig", "cmd_simulate"]

import math

import pydantic

from ..bounds import exponent_bracket, stein_bounds
from ..detector import DEFAULT_CALIBRATION_SAMPLES, MIN_CALIBRATION_SAMPLES
from ..matgauss import MAX_SEED, CovarianceSpec, build
from ..mcsim import (
    MIN_TRIALS,
    DetectorSpec,
    ExperimentConfig,
    ExperimentResult,
    calibrate_detector,
    estimate_false_alarm,
    estimate_miss,
    robustness_experiment,
)
from ..output import CommandOutput, MetricRow
from ..run_state import RunState
from .command_config import CommandConfig


class SimulateConfig(CommandConfig):
    m: CovarianceSpec = pydantic.Field(title="Nominal covariance M under H1.")
    v: CovarianceSpec | None = pydantic.Field(
        default=None,
        title="Covariance of the H1 data; if None, use M.",
    )
    alpha: float = pydantic.Field(title="False alarm probability.", gt=0, lt=1)
    trials: int = pydantic.Field(title="Trials per estimate.", ge=MIN_TRIALS)
    calibration_samples: int = pydantic.Field(
        default=DEFAULT_CALIBRATION_SAMPLES, ge=MIN_CALIBRATION_SAMPLES
    )
    seed: int = pydantic.Field(default=0, ge=0, le=MAX_SEED)
    robustness: bool = pydantic.Field(
        default=False,
        title="Also compare the miss rates under M and V (needs v).",
    )

    @pydantic.model_validator(mode="after")
    def _check_robustness(self) -> "SimulateConfig":
        if self.robustness and self.v is None:
            raise ValueError("robustness=true requires v")
        return self


def _result_row(result: ExperimentResult, alpha: float) -> MetricRow:
    return MetricRow(
        metric=result.metric,
        value=result.rate,
        n=result.n,
        alpha=alpha,
        ci_lo=result.wilson_ci_95[0],
        ci_hi=result.wilson_ci_95[1],
        seed=result.seeds.trial_seed,
    )


def cmd_simulate(config: SimulateConfig, state: RunState) -> CommandOutput:
    """Estimate the error probabilities of the M-calibrated detector.

    The Monte Carlo miss rate is reported next to the bounds on ln beta.
    """
    experiment = ExperimentConfig(
        detector=DetectorSpec(
            covariance=config.m,
            alpha=config.alpha,
            calibration_samples=config.calibration_samples,
            seed=config.seed,
        ),
        truth=config.v,
        trials=config.trials,
        seed=config.seed,
        workers=state.workers,
    )
    detector = calibrate_detector(experiment)
    m = detector.covariance
    false_alarm = estimate_false_alarm(experiment, detector=detector)
    miss = estimate_miss(experiment, detector=detector)
    bounds = stein_bounds(m, config.alpha, detector.mu0)
    lower, upper = exponent_bracket(m, config.alpha, detector.mu0)
    sigma = miss.log_rate_std_err
    payload: dict[str, object] = dict(
        false_alarm=false_alarm,
        miss=miss,
        bounds=bounds,
        exponent_bracket=(
            lower - 3 * sigma / m.n,
            upper + 3 * sigma / m.n,
        ),
        within_bounds=(
            bounds.lower_log_beta <= miss.log_rate <= bounds.upper_log_beta + 3 * sigma
            if not math.isinf(miss.log_rate)
            else False
        ),
        robustness=None,
    )
    rows = [
        _result_row(false_alarm, config.alpha),
        _result_row(miss, config.alpha),
        MetricRow(
            metric="log_miss",
            value=miss.log_rate,
            n=m.n,
            alpha=config.alpha,
            ci_lo=bounds.lower_log_beta,
            ci_hi=bounds.upper_log_beta,
            seed=config.seed,
        ),
    ]
    if config.robustness:
        assert config.v is not None
        robustness = robustness_experiment(
            m,
            build(config.v),
            config.alpha,
            config.trials,
            config.seed,
            calibration_samples=config.calibration_samples,
            workers=state.workers,
        )
        payload["robustness"] = robustness
        rows.append(
            MetricRow(
                metric="robustness_holds",
                value=robustness.holds,
                n=m.n,
                alpha=config.alpha,
                seed=config.seed,
            )
        )
    return CommandOutput(payload=payload, rows=rows)
