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

import math
import random

import numpy as np
import pydantic
import pytest
from lsst.ts.robustdetect.bounds import exponent_bracket, stein_lower, stein_upper
from lsst.ts.robustdetect.detector import calibrate
from lsst.ts.robustdetect.errors import DimensionMismatch, MomentInfinite
from lsst.ts.robustdetect.matgauss import CovarianceMatrix, DiagonalSpec
from lsst.ts.robustdetect.mcsim import (
    MIN_TRIALS,
    DetectorSpec,
    ExperimentConfig,
    MomentEstimate,
    calibrate_detector,
    estimate_false_alarm,
    estimate_miss,
    estimate_signal_miss,
    moment_mc_estimate,
    robustness_experiment,
    wilson_interval,
)
from lsst.ts.robustdetect.robustset import commuting_moment, lrt_moment
from lsst.ts.robustdetect.testutils import random_commuting_pair, random_covariance

random.seed(31)
rng = np.random.default_rng(31)


def make_config(
    eigenvalues: list[float],
    alpha: float,
    trials: int,
    seed: int = 0,
    calibration_samples: int = 100_000,
    workers: int = 1,
) -> ExperimentConfig:
    return ExperimentConfig(
        detector=DetectorSpec(
            covariance=DiagonalSpec(eigenvalues=eigenvalues),
            alpha=alpha,
            calibration_samples=calibration_samples,
            seed=seed,
        ),
        trials=trials,
        seed=seed,
        workers=workers,
    )


def test_wilson_interval() -> None:
    assert wilson_interval(0, 1000) == (0, 0.003)
    z = 1.959963984540054
    for hit_count, trials in ((1, 1000), (50, 100), (990, 1000), (1000, 1000)):
        p = hit_count / trials
        center = (p + z * z / (2 * trials)) / (1 + z * z / trials)
        half_width = (
            z
            / (1 + z * z / trials)
            * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
        )
        low, high = wilson_interval(hit_count, trials)
        assert low == pytest.approx(center - half_width, abs=1e-6)
        assert high == pytest.approx(center + half_width, abs=1e-6)
        assert low <= p <= high


def test_experiment_config() -> None:
    with pytest.raises(pydantic.ValidationError):
        make_config([2], 0.1, trials=MIN_TRIALS - 1)
    with pytest.raises(pydantic.ValidationError):
        make_config([2], 1.0, trials=MIN_TRIALS)
    with pytest.raises(pydantic.ValidationError):
        make_config([2], 0.1, trials=MIN_TRIALS, calibration_samples=10)
    with pytest.raises(pydantic.ValidationError):
        make_config([2], 0.1, trials=MIN_TRIALS, workers=0)


def test_estimate_false_alarm() -> None:
    cfg = make_config([2, 0.5, 3], 0.1, trials=100_000, seed=5)
    result = estimate_false_alarm(cfg)
    assert result.metric == "false_alarm"
    assert result.n == 3
    assert result.trials == 100_000
    assert result.rate == result.hit_count / result.trials
    assert result.rate == pytest.approx(0.1, abs=0.009)
    low, high = result.wilson_ci_95
    assert low <= result.rate <= high
    assert result.log_rate == pytest.approx(math.log(result.rate))
    assert result.exponent == pytest.approx(-result.log_rate / 3)
    assert result.seeds.trial_seed == 5
    assert result.seeds.calibration_seed == 5
    assert result.seeds.calibration_samples == 100_000
    assert result.seeds.purpose == "false_alarm"

    # Same config, same result, however many workers.
    assert estimate_false_alarm(cfg) == result
    cfg3 = cfg.model_copy(update=dict(workers=3))
    assert estimate_false_alarm(cfg3).hit_count == result.hit_count

    cfg = make_config(
        [2], 0.5, trials=1_000_000, seed=2, calibration_samples=1_000_000
    )
    assert estimate_false_alarm(cfg).rate == pytest.approx(0.5, abs=0.0047)


def test_confidence_interval_coverage() -> None:
    cfg = make_config(
        [2, 0.5, 3, 1.5], 0.2, trials=2000, seed=0, calibration_samples=1_000_000
    )
    detector = calibrate_detector(cfg)
    covered = 0
    for seed in range(100):
        low, high = estimate_false_alarm(
            cfg.model_copy(update=dict(seed=seed)), detector=detector
        ).wilson_ci_95
        covered += low <= 0.2 <= high
    assert covered >= 90


def test_estimate_miss() -> None:
    cfg = make_config([2, 0.5, 3], 0.1, trials=100_000, seed=6)
    detector = calibrate_detector(cfg)
    result = estimate_miss(cfg, CovarianceMatrix.identity(3), detector=detector)
    assert result.metric == "miss"
    assert result.seeds.purpose == "miss"
    assert result.rate == pytest.approx(0.9, abs=0.01)

    # v defaults to the truth of the config, then to M.
    nominal = estimate_miss(cfg, detector=detector)
    assert nominal == estimate_miss(cfg, detector.covariance, detector=detector)
    truth_cfg = cfg.model_copy(update=dict(truth=DiagonalSpec(eigenvalues=[1, 1, 1])))
    assert estimate_miss(truth_cfg, detector=detector) == result

    with pytest.raises(DimensionMismatch):
        estimate_miss(cfg, CovarianceMatrix.identity(2), detector=detector)


def test_miss_within_bounds() -> None:
    for n in (8, 16):
        for alpha in (0.05, 0.2):
            cfg = make_config(
                [2] * n, alpha, trials=1_000_000, seed=n, calibration_samples=200_000
            )
            detector = calibrate_detector(cfg)
            m = detector.covariance
            result = estimate_miss(cfg, detector=detector)
            sigma = result.log_rate_std_err
            assert result.hit_count > 0
            assert stein_lower(m, alpha) <= result.log_rate
            assert result.log_rate <= stein_upper(m, alpha, detector.mu0) + 3 * sigma


def test_miss_exponent() -> None:
    for n in (16, 32):
        cfg = make_config(
            [2] * n, 0.1, trials=1_000_000, seed=n, calibration_samples=200_000
        )
        detector = calibrate_detector(cfg)
        m = detector.covariance
        result = estimate_miss(cfg, detector=detector)
        sigma = result.log_rate_std_err
        lower, upper = exponent_bracket(m, 0.1, detector.mu0)
        assert lower - 3 * sigma / n <= result.exponent <= upper + 3 * sigma / n
        assert detector.kl / n == pytest.approx(0.09657, abs=1e-5)


def test_estimate_miss_no_hits() -> None:
    cfg = make_config([50] * 16, 0.5, trials=1000, seed=1)
    result = estimate_miss(cfg)
    assert result.hit_count == 0
    assert result.rate == 0
    assert result.wilson_ci_95 == (0, 0.003)
    assert result.log_rate == -math.inf
    assert result.log_rate_std_err == math.inf
    assert result.exponent == math.inf


def test_estimate_signal_miss() -> None:
    s = random_covariance(3, rng)
    shifted = s.shifted()
    cfg = ExperimentConfig(
        detector=DetectorSpec(
            covariance={"kind": "dense", "entries": shifted.entries.tolist()},
            alpha=0.1,
            calibration_samples=100_000,
            seed=3,
        ),
        trials=100_000,
        seed=3,
    )
    detector = calibrate_detector(cfg)
    signal_miss = estimate_signal_miss(cfg, s, detector=detector)
    assert signal_miss.metric == "signal_miss"
    assert signal_miss.seeds.purpose == "signal"
    miss = estimate_miss(cfg, shifted, detector=detector)
    assert signal_miss.rate == pytest.approx(miss.rate, abs=0.01)

    with pytest.raises(DimensionMismatch):
        estimate_signal_miss(cfg, CovarianceMatrix.identity(2), detector=detector)


def test_robustness_experiment() -> None:
    m = CovarianceMatrix.diagonal([2] * 16)
    result = robustness_experiment(
        m, m, 0.2, trials=100_000, seed=4, calibration_samples=100_000
    )
    assert result.log_beta_v == result.log_beta_m
    assert result.log_moment == pytest.approx(0, abs=1e-12)
    assert result.budget >= 0
    assert result.holds

    for nu in (2.5, 1.2):
        v = CovarianceMatrix.diagonal([nu] * 16)
        result = robustness_experiment(
            m, v, 0.2, trials=1_000_000, seed=5, calibration_samples=100_000
        )
        assert result.n == 16
        assert result.alpha == 0.2
        assert result.budget == pytest.approx(result.log_moment + 2 * result.mu0)
        assert result.log_moment == pytest.approx(math.log(lrt_moment(m, v)))
        assert result.holds
        assert result.log_beta_v <= (
            result.log_beta_m + result.budget + 3 * result.sigma
        )
        if nu < 2:
            assert result.log_moment > 0
            assert result.budget > 0

    with pytest.raises(MomentInfinite):
        robustness_experiment(
            CovarianceMatrix.diagonal([0.5, 0.5]),
            CovarianceMatrix.diagonal([4, 4]),
            0.1,
            trials=1000,
            seed=0,
        )
    with pytest.raises(DimensionMismatch):
        robustness_experiment(m, CovarianceMatrix.identity(3), 0.1, 1000, 0)


def test_moment_mc_estimate() -> None:
    m = random_covariance(3, rng)
    estimate = moment_mc_estimate(m, m, trials=10_000, seed=0)
    assert isinstance(estimate, MomentEstimate)
    assert estimate.trials == 10_000
    assert estimate.mean == 1
    assert estimate.std_err == 0

    for lam, nu in (([2], [3]), ([2], [4]), ([2, 3], [1, 1])):
        estimate = moment_mc_estimate(
            CovarianceMatrix.diagonal(lam),
            CovarianceMatrix.diagonal(nu),
            trials=1_000_000,
            seed=1,
        )
        assert estimate.mean == pytest.approx(
            commuting_moment(lam, nu), abs=4 * estimate.std_err
        )

    v = random_covariance(3, rng)
    assert moment_mc_estimate(m, v, 20_000, seed=2) == moment_mc_estimate(
        m, v, 20_000, seed=2, workers=4
    )
    with pytest.raises(DimensionMismatch):
        moment_mc_estimate(m, CovarianceMatrix.identity(2), 1000, seed=0)


def test_moment_identity() -> None:
    # Pairs with a finite fourth moment of the density ratio,
    # so the standard error is reliable.
    passed = 0
    pairs = 0
    while pairs < 20:
        n = int(rng.integers(1, 7))
        m, v, lam, nu = random_commuting_pair(n, rng)
        if np.any(1 + 4 / nu - 4 / lam <= 0.2):
            continue
        pairs += 1
        estimate = moment_mc_estimate(m, v, trials=1_000_000, seed=pairs)
        expected = lrt_moment(m, v)
        assert expected == pytest.approx(commuting_moment(lam, nu), rel=1e-9)
        passed += abs(estimate.mean - expected) <= 3 * estimate.std_err
    assert passed >= 18


def test_calibrate_detector() -> None:
    cfg = make_config([2, 3], 0.05, trials=1000, seed=9, calibration_samples=20_000)
    detector = calibrate_detector(cfg)
    expected = calibrate(
        CovarianceMatrix.diagonal([2, 3]), 0.05, mc_samples=20_000, seed=9
    )
    assert detector.model_dump() == expected.model_dump()
    np.testing.assert_array_equal(
        detector.covariance.entries, expected.covariance.entries
    )
