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
    "RobustDetectError",
    "ConfigError",
    "MathDomainError",
    "NotPositiveDefinite",
    "AsymmetricInput",
    "BadParameter",
    "DimensionMismatch",
    "LengthMismatch",
    "DegenerateStatistic",
    "BadAlpha",
    "BadExponent",
    "EmptyFamily",
    "IntegrandNonpositive",
    "MomentInfinite",
    "check_alpha",
    "check_same_dimension",
]

import typing


class RobustDetectError(Exception):
    """Base class for errors raised by ts_robustdetect."""


class ConfigError(RobustDetectError):
    """A command configuration could not be read or is invalid."""


class MathDomainError(RobustDetectError, ValueError):
    """Inputs are outside the domain of a mathematical operation."""


class NotPositiveDefinite(MathDomainError):
    """A covariance matrix is not positive definite."""


class AsymmetricInput(MathDomainError):
    """A matrix that must be symmetric is not."""


class BadParameter(MathDomainError):
    """A scalar parameter is out of range."""


class DimensionMismatch(MathDomainError):
    """Matrices or vectors have incompatible dimensions."""


class LengthMismatch(MathDomainError):
    """Eigenvalue lists have different lengths."""


class DegenerateStatistic(MathDomainError):
    """The log-likelihood ratio is constant, so it has no quantile."""


class BadAlpha(MathDomainError):
    """A false alarm level is not in the open interval (0, 1)."""


class BadExponent(MathDomainError):
    """A moment exponent p is not in (1, 2]."""


class EmptyFamily(MathDomainError):
    """A family of covariance matrices is empty."""


class IntegrandNonpositive(MathDomainError):
    """The spectral integrand argument is not positive.

    Parameters
    ----------
    omega : `float`
        Frequency (rad) at which the argument is not positive.
    value : `float`
        The argument value at ``omega``.
    """

    def __init__(self, omega: float, value: float) -> None:
        self.omega = omega
        self.value = value
        super().__init__(
            f"Spectral integrand argument {value!r} <= 0 at omega={omega!r}"
        )


class MomentInfinite(MathDomainError):
    """The moment E[p_V/p_M] is infinite (the PD guard fails)."""


def check_alpha(alpha: typing.Any) -> float:
    """Check a false alarm level and return it as a float.

    Parameters
    ----------
    alpha : `float`
        False alarm level.

    Returns
    -------
    alpha : `float`
        The same level, as a float.

    Raises
    ------
    BadAlpha
        If alpha is not in (0, 1).
    """
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise BadAlpha(f"alpha={alpha!r} must be in (0, 1)")
    return alpha


def check_same_dimension(*args: typing.Any) -> int:
    """Check that covariance matrices share a dimension.

    Parameters
    ----------
    args : `CovarianceMatrix`
        Matrices to check; each must have an ``n`` attribute.

    Returns
    -------
    n : `int`
        The common dimension.

    Raises
    ------
    DimensionMismatch
        If the dimensions differ.
    """
    dims = {arg.n for arg in args}
    if len(dims) != 1:
        raise DimensionMismatch(f"Dimensions differ: {sorted(dims)}")
    return dims.pop()
