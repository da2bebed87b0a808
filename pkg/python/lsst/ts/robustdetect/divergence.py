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
    "LlrStatistic",
    "kl_general",
    "kl_identity",
    "log_likelihood_ratio",
    "log_likelihood_ratios",
    "log_density_ratio",
]

import math
import typing

import numpy as np

from .errors import DimensionMismatch, check_same_dimension
from .matgauss import CovarianceMatrix

# Value of ln p_I(y) / p_M(y), in nats.
LlrStatistic: typing.TypeAlias = float


def _as_observations(matrix: CovarianceMatrix, y: typing.Any) -> np.ndarray:
    array = np.asarray(y, dtype=float)
    if array.shape[-1:] != (matrix.n,) or array.ndim > 2:
        raise DimensionMismatch(
            f"Observation shape {array.shape} does not match dimension {matrix.n}"
        )
    return array


def kl_general(v: CovarianceMatrix, m: CovarianceMatrix) -> float:
    """Kullback-Leibler divergence D(N(0, V) || N(0, M)).

    D = 1/2 ln(|M| / |V|) + 1/2 tr(V M^-1) - n/2.

    Parameters
    ----------
    v : `CovarianceMatrix`
        Covariance of the first distribution.
    m : `CovarianceMatrix`
        Covariance of the second distribution.

    Returns
    -------
    divergence : `float`
        The divergence in nats.

    Raises
    ------
    DimensionMismatch
        If the dimensions differ.
    """
    n = check_same_dimension(v, m)
    return 0.5 * (m.log_det - v.log_det) + 0.5 * m.trace_product_inverse(v) - n / 2


def kl_identity(m: CovarianceMatrix) -> float:
    """Kullback-Leibler divergence D(N(0, I) || N(0, M)).

    D = 1/2 sum_i (ln lambda_i + 1/lambda_i - 1), over the eigenvalues of M.
    """
    eigenvalues = m.eigenvalues
    return 0.5 * math.fsum(np.log(eigenvalues) + 1 / eigenvalues - 1)


def log_likelihood_ratio(m: CovarianceMatrix, y: typing.Any) -> LlrStatistic:
    """Log-likelihood ratio f_M(y) = ln p_I(y) / p_M(y).

    f_M(y) = 1/2 [ln |M| + (y, (M^-1 - I) y)].

    Parameters
    ----------
    m : `CovarianceMatrix`
        Covariance under the alternative.
    y : `numpy.typing.ArrayLike`
        Observation vector of length n.

    Returns
    -------
    statistic : `LlrStatistic`
        The statistic in nats.

    Raises
    ------
    DimensionMismatch
        If y does not have length n.
    """
    array = _as_observations(m, y)
    if array.ndim != 1:
        raise DimensionMismatch(f"Expected one observation; shape={array.shape}")
    return float(log_likelihood_ratios(m, array))


def log_likelihood_ratios(m: CovarianceMatrix, y: typing.Any) -> np.ndarray:
    """Vectorized `log_likelihood_ratio` over the rows of y."""
    array = _as_observations(m, y)
    coords = array @ m.eigenvectors
    weights = 1 / m.eigenvalues - 1
    return 0.5 * (m.log_det + np.sum(coords * coords * weights, axis=-1))


def log_density_ratio(
    v: CovarianceMatrix, m: CovarianceMatrix, y: typing.Any
) -> np.ndarray:
    """Log density ratio ln p_V(y) / p_M(y) of two zero-mean Gaussians.

    ln p_V/p_M = 1/2 [ln(|M| / |V|) + (y, (M^-1 - V^-1) y)].
    Works on one observation or on each row of a matrix.
    """
    check_same_dimension(v, m)
    array = _as_observations(m, y)
    return 0.5 * (
        (m.log_det - v.log_det)
        + m.quadratic_inverse(array)
        - v.quadratic_inverse(array)
    )
