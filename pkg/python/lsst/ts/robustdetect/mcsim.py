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
    "MIN_TRIALS",
    "DetectorSpec",
    "ExperimentConfig",
    "SeedRecord",
    "ExperimentResult",
    "RobustnessResult",
    "MomentEstimate",
    "wilson_interval",
    "calibrate_detector",
    "estimate_false_alarm",
    "estimate_miss",
    "estimate_signal_miss",
    "robustness_experiment",
    "moment_mc_estimate",
]

import math

import numpy as np
import pydantic
import structlog
from astropy.stats import binom_conf_interval

from .detector import (
    DEFAULT_CALIBRATION_SAMPLES,
    MIN_CALIBRATION_SAMPLES,
    Detector,
    calibrate,
    decide_many,
)
from .divergence import log_density_ratio
from .errors import BadParameter, MomentInfinite, check_same_dimension
from .matgauss import (
    MAX_SEED,
    CovarianceMatrix,
    CovarianceSpec,
    StreamPurpose,
    build,
    check_seed,
    run_blocks,
)
from .robustset import log_lrt_moment

MIN_TRIALS = 1000

_log = structlog.get_logger("mcsim")


class DetectorSpec(pydantic.BaseModel):
    """How to build and calibrate the detector of an experiment."""

    model_config = pydantic.ConfigDict(frozen=True)

    covariance: CovarianceSpec = pydantic.Field(title="Nominal covariance M.")
    alpha: float = pydantic.Field(title="False alarm probability.", gt=0, lt=1)
    calibration_samples: int = pydantic.Field(
        default=DEFAULT_CALIBRATION_SAMPLES,
        title="Monte Carlo samples for the threshold.",
        ge=MIN_CALIBRATION_SAMPLES,
    )
    seed: int = pydantic.Field(
        default=0, title="Seed of the calibration.", ge=0, le=MAX_SEED
    )


class ExperimentConfig(pydantic.BaseModel):
    """A Monte Carlo error-probability experiment."""

    model_config = pydantic.ConfigDict(frozen=True)

    detector: DetectorSpec
    truth: CovarianceSpec | None = pydantic.Field(
        default=None,
        title="Covariance V of the data under H1; None for the nominal M.",
    )
    trials: int = pydantic.Field(title="Number of trials.", ge=MIN_TRIALS)
    seed: int = pydantic.Field(title="Seed of the trials.", ge=0, le=MAX_SEED)
    workers: int = pydantic.Field(default=1, title="Worker threads.", ge=1)


class SeedRecord(pydantic.BaseModel):
    """Provenance of the random numbers behind a result."""

    model_config = pydantic.ConfigDict(frozen=True)

    calibration_seed: int
    calibration_samples: int
    trial_seed: int
    purpose: str


class ExperimentResult(pydantic.BaseModel):
    """An estimated error probability with its uncertainty."""

    model_config = pydantic.ConfigDict(frozen=True)

    metric: str = pydantic.Field(title="false_alarm, miss or signal_miss.")
    n: int = pydantic.Field(title="Dimension.")
    trials: int
    hit_count: int = pydantic.Field(title="Number of errors.")
    rate: float = pydantic.Field(title="hit_count / trials.")
    wilson_ci_95: tuple[float, float] = pydantic.Field(
        title="95% Wilson interval; (0, 3/trials) if hit_count = 0."
    )
    log_rate: float = pydantic.Field(title="ln rate; -inf if hit_count = 0.")
    log_rate_std_err: float = pydantic.Field(
        title="Binomial standard error of log_rate (delta method)."
    )
    exponent: float = pydantic.Field(title="-log_rate / n.")
    seeds: SeedRecord


class RobustnessResult(pydantic.BaseModel):
    """Miss rates of the M-calibrated detector under M and under V."""

    model_config = pydantic.ConfigDict(frozen=True)

    n: int
    alpha: float
    log_beta_m: float
    log_beta_v: float
    log_moment: float = pydantic.Field(title="ln f(M, V).")
    mu0: float
    budget: float = pydantic.Field(title="ln f(M, V) + 2 mu0.")
    sigma: float = pydantic.Field(title="Combined standard error of the log rates.")
    holds: bool = pydantic.Field(
        title="log_beta_v <= log_beta_m + budget + 3 sigma."
    )


class MomentEstimate(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    trials: int
    mean: float
    std_err: float


def wilson_interval(hit_count: int, trials: int) -> tuple[float, float]:
    """Return the 95% Wilson score interval of a binomial rate.

    With no hits the rule-of-three interval (0, 3/trials) is returned.
    """
    if hit_count == 0:
        return (0.0, 3 / trials)
    low, high = binom_conf_interval(
        hit_count, trials, confidence_level=0.95, interval="wilson"
    )
    return (float(low), float(high))


def _make_result(
    metric: str, n: int, hit_count: int, trials: int, seeds: SeedRecord
) -> ExperimentResult:
    rate = hit_count / trials
    if hit_count == 0:
        _log.warning("No errors observed", metric=metric, trials=trials)
        log_rate = -math.inf
        log_rate_std_err = math.inf
    else:
        log_rate = math.log(rate)
        log_rate_std_err = math.sqrt((1 - rate) / hit_count)
    return ExperimentResult(
        metric=metric,
        n=n,
        trials=trials,
        hit_count=hit_count,
        rate=rate,
        wilson_ci_95=wilson_interval(hit_count, trials),
        log_rate=log_rate,
        log_rate_std_err=log_rate_std_err,
        exponent=-log_rate / n,
        seeds=seeds,
    )


def _count_decisions(
    detector: Detector,
    factor: np.ndarray,
    want_h0: bool,
    seed: int,
    trials: int,
    purpose: StreamPurpose,
    workers: int,
    signal_factor: np.ndarray | None = None,
) -> int:
    """Count trials where the decision is H0 (want_h0) or H1.

    Each observation is factor @ z, plus signal_factor @ z' if given,
    with z, z' standard normal.
    """
    n = detector.n

    def count(rng: np.random.Generator, start: int, size: int) -> int:
        observations = rng.standard_normal((size, n)) @ factor.T
        if signal_factor is not None:
            observations += rng.standard_normal((size, n)) @ signal_factor.T
        h0 = decide_many(detector, observations)
        return int(np.count_nonzero(h0 if want_h0 else ~h0))

    return sum(run_blocks(count, seed, trials, purpose, workers))


def _seed_record(
    cfg: ExperimentConfig, detector: Detector, purpose: StreamPurpose
) -> SeedRecord:
    return SeedRecord(
        calibration_seed=detector.calibration.seed,
        calibration_samples=detector.calibration.samples,
        trial_seed=cfg.seed,
        purpose=purpose.name,
    )


def calibrate_detector(cfg: ExperimentConfig) -> Detector:
    """Build and calibrate the detector of an experiment."""
    spec = cfg.detector
    return calibrate(
        build(spec.covariance),
        spec.alpha,
        mc_samples=spec.calibration_samples,
        seed=spec.seed,
        workers=cfg.workers,
    )


def estimate_false_alarm(
    cfg: ExperimentConfig, detector: Detector | None = None
) -> ExperimentResult:
    """Estimate the false alarm probability on N(0, I) data.

    Parameters
    ----------
    cfg : `ExperimentConfig`
        The experiment. ``cfg.truth`` is not used.
    detector : `Detector` | `None`
        Calibrated detector; if None, calibrate it from ``cfg.detector``.

    Returns
    -------
    result : `ExperimentResult`
        hit_count is the number of trials decided H1.
    """
    if detector is None:
        detector = calibrate_detector(cfg)
    purpose = StreamPurpose.false_alarm
    hit_count = _count_decisions(
        detector,
        np.eye(detector.n),
        want_h0=False,
        seed=cfg.seed,
        trials=cfg.trials,
        purpose=purpose,
        workers=cfg.workers,
    )
    return _make_result(
        "false_alarm",
        detector.n,
        hit_count,
        cfg.trials,
        _seed_record(cfg, detector, purpose),
    )


def estimate_miss(
    cfg: ExperimentConfig,
    v: CovarianceMatrix | None = None,
    detector: Detector | None = None,
) -> ExperimentResult:
    """Estimate the miss probability on N(0, V) data.

    Parameters
    ----------
    cfg : `ExperimentConfig`
        The experiment.
    v : `CovarianceMatrix` | `None`
        Covariance of the data. If None, use ``cfg.truth``, or the
        nominal M if that is also None.
    detector : `Detector` | `None`
        Calibrated detector; if None, calibrate it from ``cfg.detector``.

    Returns
    -------
    result : `ExperimentResult`
        hit_count is the number of trials decided H0.

    Raises
    ------
    DimensionMismatch
        If V and M differ in dimension.
    """
    if detector is None:
        detector = calibrate_detector(cfg)
    if v is None:
        v = detector.covariance if cfg.truth is None else build(cfg.truth)
    check_same_dimension(detector.covariance, v)
    purpose = StreamPurpose.miss
    hit_count = _count_decisions(
        detector,
        v.sampling_factor,
        want_h0=True,
        seed=cfg.seed,
        trials=cfg.trials,
        purpose=purpose,
        workers=cfg.workers,
    )
    return _make_result(
        "miss", detector.n, hit_count, cfg.trials, _seed_record(cfg, detector, purpose)
    )


def estimate_signal_miss(
    cfg: ExperimentConfig,
    s: CovarianceMatrix,
    detector: Detector | None = None,
) -> ExperimentResult:
    """Estimate the miss probability for signal-plus-noise data.

    Observations are y = xi + s with xi ~ N(0, I) and s ~ N(0, S)
    drawn independently. The detector should be calibrated on I + S.
    """
    if detector is None:
        detector = calibrate_detector(cfg)
    check_same_dimension(detector.covariance, s)
    purpose = StreamPurpose.signal
    hit_count = _count_decisions(
        detector,
        np.eye(detector.n),
        want_h0=True,
        seed=cfg.seed,
        trials=cfg.trials,
        purpose=purpose,
        workers=cfg.workers,
        signal_factor=s.sampling_factor,
    )
    return _make_result(
        "signal_miss",
        detector.n,
        hit_count,
        cfg.trials,
        _seed_record(cfg, detector, purpose),
    )


def robustness_experiment(
    m: CovarianceMatrix,
    v: CovarianceMatrix,
    alpha: float,
    trials: int,
    seed: int,
    calibration_samples: int = DEFAULT_CALIBRATION_SAMPLES,
    workers: int = 1,
) -> RobustnessResult:
    """Compare the miss rates of the M-detector under M and under V.

    The miss probability under V is bounded by
    beta(alpha, M) f(M, V) e^{2 mu0}, so the experiment checks
    ln beta_V <= ln beta_M + ln f(M, V) + 2 mu0 + 3 sigma.
    Both rates use the same trial seed.

    Raises
    ------
    MomentInfinite
        If f(M, V) is infinite.
    DimensionMismatch
        If the dimensions differ.
    """
    check_same_dimension(m, v)
    log_moment = log_lrt_moment(m, v)
    if math.isinf(log_moment):
        raise MomentInfinite("I + V^-1 - M^-1 is not positive definite")
    seed = check_seed(seed)
    detector = calibrate(
        m, alpha, mc_samples=calibration_samples, seed=seed, workers=workers
    )
    cfg = ExperimentConfig(
        detector=DetectorSpec(
            covariance={"kind": "dense", "entries": m.entries.tolist()},
            alpha=alpha,
            calibration_samples=calibration_samples,
            seed=seed,
        ),
        trials=trials,
        seed=seed,
        workers=workers,
    )
    miss_m = estimate_miss(cfg, m, detector=detector)
    miss_v = estimate_miss(cfg, v, detector=detector)
    budget = log_moment + 2 * detector.mu0
    sigma = math.hypot(miss_m.log_rate_std_err, miss_v.log_rate_std_err)
    if miss_v.hit_count == 0:
        holds = True
    elif miss_m.hit_count == 0:
        # No finite reference rate to compare against.
        holds = False
    else:
        holds = miss_v.log_rate <= miss_m.log_rate + budget + 3 * sigma
    return RobustnessResult(
        n=m.n,
        alpha=alpha,
        log_beta_m=miss_m.log_rate,
        log_beta_v=miss_v.log_rate,
        log_moment=log_moment,
        mu0=detector.mu0,
        budget=budget,
        sigma=sigma,
        holds=holds,
    )


def moment_mc_estimate(
    m: CovarianceMatrix,
    v: CovarianceMatrix,
    trials: int,
    seed: int,
    workers: int = 1,
) -> MomentEstimate:
    """Estimate E[p_V / p_M] over N(0, I) by a sample mean.

    Ratios are formed in log space and exponentiated per sample. Block
    means and sums of squares are combined in block order, so the
    result does not depend on the number of workers. If f(M, V) is
    infinite the estimate grows with trials; this is only logged.

    Returns
    -------
    estimate : `MomentEstimate`
        Sample mean and its standard error.

    Raises
    ------
    DimensionMismatch
        If the dimensions differ.
    """
    n = check_same_dimension(m, v)
    if trials < 2:
        raise BadParameter(f"trials={trials} must be >= 2")
    if math.isinf(log_lrt_moment(m, v)):
        _log.warning("Moment is infinite; the estimate will not converge", n=n)

    def block_stats(
        rng: np.random.Generator, start: int, size: int
    ) -> tuple[int, float, float]:
        ratios = np.exp(log_density_ratio(v, m, rng.standard_normal((size, n))))
        mean = math.fsum(ratios) / size
        return size, mean, math.fsum((ratios - mean) ** 2)

    count = 0
    mean = 0.0
    sum_squares = 0.0
    for size, block_mean, block_sum_squares in run_blocks(
        block_stats, seed, trials, StreamPurpose.moment, workers
    ):
        total = count + size
        delta = block_mean - mean
        mean += delta * size / total
        sum_squares += block_sum_squares + delta * delta * count * size / total
        count = total
    std_err = math.sqrt(sum_squares / (count - 1) / count)
    return MomentEstimate(trials=count, mean=mean, std_err=std_err)
