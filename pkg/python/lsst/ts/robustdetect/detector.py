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
    "DEFAULT_CALIBRATION_SAMPLES",
    "MIN_CALIBRATION_SAMPLES",
    "Hypothesis",
    "Calibration",
    "Detector",
    "llr_null_samples",
    "empirical_quantile",
    "calibrate",
    "decide",
    "decide_many",
    "mu0_quantile",
]

import enum
import math
import typing

import numpy as np
import pydantic
import structlog

from .divergence import kl_identity, log_likelihood_ratio, log_likelihood_ratios
from .errors import BadParameter, DegenerateStatistic, check_alpha
from .matgauss import CovarianceMatrix, StreamPurpose, check_seed, run_blocks

DEFAULT_CALIBRATION_SAMPLES = 100_000

MIN_CALIBRATION_SAMPLES = 10_000

# |1/lambda - 1| below this for every eigenvalue means M = I.
DEGENERATE_TOL = 1e-12

_log = structlog.get_logger("detector")


class Hypothesis(str, enum.Enum):
    h0 = "H0"
    h1 = "H1"


class Calibration(pydantic.BaseModel):
    """Provenance of a threshold calibration."""

    model_config = pydantic.ConfigDict(frozen=True)

    samples: int = pydantic.Field(title="Number of Monte Carlo samples.")
    seed: int = pydantic.Field(title="Seed of the calibration sub-streams.")


class Detector(pydantic.BaseModel):
    """A likelihood ratio test calibrated to a false alarm level.

    The test decides H0 (noise only) when f_M(y) >= gamma,
    where gamma + mu0 = D(I || M).
    """

    model_config = pydantic.ConfigDict(frozen=True, arbitrary_types_allowed=True)

    covariance: CovarianceMatrix = pydantic.Field(
        title="Nominal covariance M under H1.", exclude=True
    )
    alpha: float = pydantic.Field(title="Target false alarm probability.")
    gamma: float = pydantic.Field(title="Threshold on the LLR (nats).")
    mu0: float = pydantic.Field(title="D(I || M) - gamma (nats).")
    kl: float = pydantic.Field(title="D(I || M) (nats).")
    calibration: Calibration

    @property
    def n(self) -> int:
        return self.covariance.n


def llr_null_samples(
    m: CovarianceMatrix, count: int, seed: int, workers: int = 1
) -> np.ndarray:
    """Sample f_M(xi) with xi ~ N(0, I).

    The statistic is drawn in the eigenbasis of M, where it is
    1/2 [sum ln lambda_i + sum (1/lambda_i - 1) z_i^2] with z standard
    normal; this has the same distribution as f_M(xi).

    Returns
    -------
    samples : `numpy.ndarray`
        Array of length count.
    """
    weights = 1 / m.eigenvalues - 1
    log_det = m.log_det

    def draw(rng: np.random.Generator, start: int, size: int) -> np.ndarray:
        z = rng.standard_normal((size, m.n))
        return 0.5 * (log_det + (z * z) @ weights)

    return np.concatenate(
        run_blocks(draw, seed, count, StreamPurpose.calibrate, workers)
    )


def empirical_quantile(samples: np.ndarray, alpha: float) -> float:
    """Return the order statistic of 1-based rank ceil(alpha * N)."""
    count = len(samples)
    # Round first so that e.g. 0.05 * 10**6 does not become 50001.
    rank = max(1, math.ceil(round(alpha * count, 9)))
    return float(np.partition(samples, rank - 1)[rank - 1])


def calibrate(
    m: CovarianceMatrix,
    alpha: float,
    mc_samples: int = DEFAULT_CALIBRATION_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> Detector:
    """Calibrate the likelihood ratio test of I against M.

    Parameters
    ----------
    m : `CovarianceMatrix`
        Covariance under H1.
    alpha : `float`
        False alarm probability.
    mc_samples : `int`
        Number of Monte Carlo samples of the statistic under H0.
    seed : `int`
        64-bit seed.
    workers : `int`
        Number of worker threads.

    Returns
    -------
    detector : `Detector`
        The calibrated detector. gamma is the empirical alpha-quantile
        of f_M under H0.

    Raises
    ------
    BadAlpha
        If alpha is not in (0, 1).
    BadParameter
        If mc_samples < `MIN_CALIBRATION_SAMPLES` or the seed is invalid.
    DegenerateStatistic
        If M = I, so the statistic is constant.
    """
    alpha = check_alpha(alpha)
    seed = check_seed(seed)
    if mc_samples < MIN_CALIBRATION_SAMPLES:
        raise BadParameter(
            f"mc_samples={mc_samples} must be >= {MIN_CALIBRATION_SAMPLES}"
        )
    if np.all(np.abs(1 / m.eigenvalues - 1) <= DEGENERATE_TOL):
        raise DegenerateStatistic("M = I: the log-likelihood ratio is constant")
    samples = llr_null_samples(m, mc_samples, seed, workers)
    gamma = empirical_quantile(samples, alpha)
    kl = kl_identity(m)
    _log.debug("Calibrated detector", n=m.n, alpha=alpha, gamma=gamma, seed=seed)
    return Detector(
        covariance=m,
        alpha=alpha,
        gamma=gamma,
        mu0=kl - gamma,
        kl=kl,
        calibration=Calibration(samples=mc_samples, seed=seed),
    )


def decide(detector: Detector, y: typing.Any) -> Hypothesis:
    """Decide between H0 and H1 for one observation.

    Ties f_M(y) = gamma go to H0.

    Raises
    ------
    DimensionMismatch
        If y does not have length n.
    """
    if log_likelihood_ratio(detector.covariance, y) >= detector.gamma:
        return Hypothesis.h0
    return Hypothesis.h1


def decide_many(detector: Detector, y: typing.Any) -> np.ndarray:
    """Vectorized `decide`: True where the decision is H0."""
    return log_likelihood_ratios(detector.covariance, y) >= detector.gamma


def mu0_quantile(
    m: CovarianceMatrix,
    alpha: float,
    mc_samples: int = DEFAULT_CALIBRATION_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """Return mu0 = D(I || M) minus the empirical alpha-quantile of f_M.

    Errors are as for `calibrate`.
    """
    return calibrate(m, alpha, mc_samples=mc_samples, seed=seed, workers=workers).mu0
