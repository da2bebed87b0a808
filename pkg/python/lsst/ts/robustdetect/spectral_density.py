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
    "MAX_AR1",
    "DEFAULT_GRID_POINTS",
    "MIN_GRID_POINTS",
    "GRID_SYMMETRY_TOL",
    "MAX_GRID_POINTS",
    "REFINEMENT_TOL",
    "Ar1Spectrum",
    "GridSpectrum",
    "SpectralDensity",
    "check_grid_points",
    "aligned_grid_points",
    "frequency_grid",
    "integrate_over_frequency",
    "integrate_refined",
    "autocovariances",
]

import collections.abc
import math
import typing

import numpy as np
import pydantic
import scipy.integrate
import structlog

from .errors import BadParameter

# Largest AR(1) coefficient; the Poisson kernel is unbounded at omega=0
# as a -> 1.
MAX_AR1 = 0.999

# Default number of Simpson subintervals over [-pi, pi].
DEFAULT_GRID_POINTS = 4096

# Smallest allowed number of Simpson subintervals.
MIN_GRID_POINTS = 64

# Tolerance on value(omega) == value(-omega) for grid densities.
GRID_SYMMETRY_TOL = 1e-9

# Largest number of Simpson subintervals reached by `integrate_refined`.
MAX_GRID_POINTS = 2**20

# `integrate_refined` stops once doubling the grid changes the integral
# by no more than this.
REFINEMENT_TOL = 1e-9

_log = structlog.get_logger("spectral_density")


class Ar1Spectrum(pydantic.BaseModel):
    """Power spectral density of a unit-variance AR(1) process.

    f(omega) = (1 - a^2) / (1 - 2 a cos(omega) + a^2), the Poisson kernel.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["ar1"] = "ar1"
    a: float = pydantic.Field(title="AR(1) coefficient.", ge=0, le=MAX_AR1)

    def __call__(self, omega: typing.Any) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        a = self.a
        return (1 - a * a) / (1 - 2 * a * np.cos(omega) + a * a)


class GridSpectrum(pydantic.BaseModel):
    """Power spectral density sampled on a uniform closed grid
    over [-pi, pi].

    Values between nodes are linearly interpolated; frequencies
    outside [-pi, pi] are wrapped periodically.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["grid"] = "grid"
    values: tuple[float, ...] = pydantic.Field(
        title="Density values at equally spaced frequencies from -pi to pi.",
        min_length=2,
    )

    @pydantic.field_validator("values")
    @classmethod
    def _check_values(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        array = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(array)) or np.any(array <= 0):
            raise BadParameter("grid density values must be finite and > 0")
        asymmetry = np.max(np.abs(array - array[::-1]))
        if asymmetry > GRID_SYMMETRY_TOL:
            raise BadParameter(
                f"grid density is not symmetric: max |f(w) - f(-w)|={asymmetry}"
            )
        return values

    def __call__(self, omega: typing.Any) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        # +pi wraps to -pi; the values there agree by symmetry.
        wrapped = np.mod(omega + np.pi, 2 * np.pi) - np.pi
        nodes = np.linspace(-np.pi, np.pi, len(self.values))
        return np.interp(wrapped, nodes, np.asarray(self.values, dtype=float))


SpectralDensity = typing.Annotated[
    Ar1Spectrum | GridSpectrum, pydantic.Field(discriminator="kind")
]


def check_grid_points(grid_points: int) -> int:
    """Return grid_points if it is a valid number of Simpson subintervals.

    Raises
    ------
    BadParameter
        If grid_points is odd or less than `MIN_GRID_POINTS`.
    """
    if grid_points < MIN_GRID_POINTS or grid_points % 2 != 0:
        raise BadParameter(
            f"grid_points={grid_points} must be even and >= {MIN_GRID_POINTS}"
        )
    return grid_points


def aligned_grid_points(
    grid_points: int, *densities: Ar1Spectrum | GridSpectrum
) -> int:
    """Round grid_points up so no Simpson panel straddles a node of a
    grid density.

    Within each panel the integrand is then smooth, and Simpson keeps its
    fourth-order convergence under grid doubling. If the common multiple
    exceeds `MAX_GRID_POINTS` grid_points is returned unchanged.
    """
    check_grid_points(grid_points)
    step = 2
    for density in densities:
        if isinstance(density, GridSpectrum):
            step = math.lcm(step, 2 * (len(density.values) - 1))
    aligned = -(-grid_points // step) * step
    return aligned if aligned <= MAX_GRID_POINTS else grid_points


def frequency_grid(grid_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Return the closed Simpson grid over [-pi, pi].

    Parameters
    ----------
    grid_points : `int`
        Number of subintervals; must be even and >= `MIN_GRID_POINTS`.

    Returns
    -------
    omega : `numpy.ndarray`
        ``grid_points + 1`` equally spaced frequencies.

    Raises
    ------
    BadParameter
        If grid_points is odd or too small.
    """
    check_grid_points(grid_points)
    return np.linspace(-np.pi, np.pi, grid_points + 1)


def integrate_over_frequency(values: np.ndarray, omega: np.ndarray) -> float:
    """Composite Simpson integral of sampled values over the grid."""
    return float(scipy.integrate.simpson(values, x=omega))


def integrate_refined(
    integrand: collections.abc.Callable[[np.ndarray], np.ndarray],
    grid_points: int = DEFAULT_GRID_POINTS,
    tol: float = REFINEMENT_TOL,
) -> float:
    """Simpson integral over [-pi, pi] with grid doubling.

    Start with ``grid_points`` subintervals and double them until two
    successive results differ by at most ``tol``. Sharply peaked
    densities, such as AR(1) with a near 1, need far finer grids than
    the default.

    Parameters
    ----------
    integrand : `callable`
        Function of the frequency array returning the integrand values.
        It may raise to reject the integrand at any grid.
    grid_points : `int`
        Initial number of subintervals; must be even and
        >= `MIN_GRID_POINTS`.
    tol : `float`
        Absolute convergence tolerance.

    Returns
    -------
    integral : `float`
        The integral on the finest grid used.

    Raises
    ------
    BadParameter
        If grid_points is odd or too small.
    """
    omega = frequency_grid(grid_points)
    result = integrate_over_frequency(integrand(omega), omega)
    while grid_points < MAX_GRID_POINTS:
        grid_points *= 2
        omega = frequency_grid(grid_points)
        refined = integrate_over_frequency(integrand(omega), omega)
        change = abs(refined - result)
        result = refined
        if change <= tol:
            return result
    _log.warning(
        "Simpson refinement stopped before converging",
        grid_points=grid_points,
        tol=tol,
    )
    return result


def autocovariances(
    density: Ar1Spectrum | GridSpectrum,
    n: int,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> np.ndarray:
    """Compute autocovariances r_0 ... r_{n-1} of a spectral density.

    r_k = (1/2pi) integral of f(omega) cos(k omega) over [-pi, pi].
    For `Ar1Spectrum` this is exactly a^k.

    Parameters
    ----------
    density : `Ar1Spectrum` | `GridSpectrum`
        The power spectral density.
    n : `int`
        Number of lags.
    grid_points : `int`
        Number of Simpson subintervals; unused for `Ar1Spectrum`.

    Returns
    -------
    r : `numpy.ndarray`
        Autocovariance sequence of length n.
    """
    omega = frequency_grid(grid_points)
    if isinstance(density, Ar1Spectrum):
        return density.a ** np.arange(n, dtype=float)
    values = density(omega)
    lags = np.arange(n)[:, np.newaxis]
    integrands = values[np.newaxis, :] * np.cos(lags * omega[np.newaxis, :])
    return scipy.integrate.simpson(integrands, x=omega, axis=1) / (2 * np.pi)
