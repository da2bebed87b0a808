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
    "SteinBounds",
    "binary_entropy",
    "stein_lower",
    "stein_upper",
    "stein_bounds",
    "exponent_bracket",
    "cp_constant",
    "mu0_upper_bound",
]

import math

import numpy as np
import pydantic
import scipy.special

from .divergence import kl_identity
from .errors import BadExponent, check_alpha
from .matgauss import CovarianceMatrix


class SteinBounds(pydantic.BaseModel):
    """Lower and upper bounds on ln beta(alpha) of the optimal test."""

    model_config = pydantic.ConfigDict(frozen=True)

    n: int = pydantic.Field(title="Dimension.")
    alpha: float = pydantic.Field(title="False alarm probability.")
    lower_log_beta: float = pydantic.Field(title="-(D + h(alpha)) / (1 - alpha).")
    upper_log_beta: float = pydantic.Field(title="-D + mu0.")
    D: float = pydantic.Field(title="D(I || M) (nats).")
    h_alpha: float = pydantic.Field(title="Binary entropy of alpha (nats).")
    mu0: float = pydantic.Field(title="mu0 of the calibrated detector (nats).")


def binary_entropy(alpha: float) -> float:
    """h(alpha) = -alpha ln alpha - (1 - alpha) ln(1 - alpha), in nats.

    Raises
    ------
    BadAlpha
        If alpha is not in (0, 1).
    """
    alpha = check_alpha(alpha)
    return float(scipy.special.entr(alpha) + scipy.special.entr(1 - alpha))


def stein_lower(m: CovarianceMatrix, alpha: float) -> float:
    """Lower bound -(D(I || M) + h(alpha)) / (1 - alpha) on ln beta."""
    h_alpha = binary_entropy(alpha)
    return -(kl_identity(m) + h_alpha) / (1 - alpha)


def stein_upper(m: CovarianceMatrix, alpha: float, mu0: float) -> float:
    """Upper bound -D(I || M) + mu0 on ln beta, with mu0 from the
    detector calibrated at level alpha."""
    check_alpha(alpha)
    return -kl_identity(m) + mu0


def stein_bounds(m: CovarianceMatrix, alpha: float, mu0: float) -> SteinBounds:
    """Return both bounds on ln beta(alpha) together with their inputs."""
    return SteinBounds(
        n=m.n,
        alpha=alpha,
        lower_log_beta=stein_lower(m, alpha),
        upper_log_beta=stein_upper(m, alpha, mu0),
        D=kl_identity(m),
        h_alpha=binary_entropy(alpha),
        mu0=mu0,
    )


def exponent_bracket(
    m: CovarianceMatrix, alpha: float, mu0: float
) -> tuple[float, float]:
    """Interval for the exponent -(1/n) ln beta implied by the bounds.

    Returns
    -------
    bracket : `tuple[float, float]`
        ((D - mu0) / n, (D + h(alpha)) / ((1 - alpha) n)).
    """
    return (
        -stein_upper(m, alpha, mu0) / m.n,
        -stein_lower(m, alpha) / m.n,
    )


def cp_constant(m: CovarianceMatrix, p: float) -> float:
    """C_p = (1/n) sum_i |1/lambda_i - 1|^p.

    Raises
    ------
    BadExponent
        If p is not in (1, 2].
    """
    if not 1 < p <= 2:
        raise BadExponent(f"p={p!r} must be in (1, 2]")
    return math.fsum(np.abs(1 / m.eigenvalues - 1) ** p) / m.n


def mu0_upper_bound(m: CovarianceMatrix, alpha: float, p: float = 2.0) -> float:
    """Upper bound (3 C_p n / alpha)^(1/p) on mu0."""
    alpha = check_alpha(alpha)
    return (3 * cp_constant(m, p) * m.n / alpha) ** (1 / p)
