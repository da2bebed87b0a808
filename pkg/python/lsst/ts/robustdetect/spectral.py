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

"""Robust detection of stationary signals in white noise.

Signals are described by their power spectral densities on [-pi, pi].
The spectral functional

    J(fS, fK) = integral of ln[1 + fS (fK - fS) / (1 + fS)^2] d omega

plays the role of ln t(S, V) per unit length: fK is in the robust set
of fS when J(fS, fK) <= tol.
"""

__all__ = [
    "SzegoRates",
    "SpectralAssumptions",
    "ar1_spectrum",
    "constant_spectrum",
    "spectral_functional",
    "spectral_membership",
    "toeplitz_from_spectrum",
    "szego_log_det_rate",
    "spectral_assumptions",
    "fourier_samples",
    "discretized_rate",
]

import math

import numpy as np
import pydantic
import structlog

from .errors import BadParameter, IntegrandNonpositive
from .matgauss import CovarianceMatrix, ToeplitzSpectrumSpec, build
from .robustset import log_model2_commuting_moment
from .spectral_density import (
    DEFAULT_GRID_POINTS,
    MAX_AR1,
    Ar1Spectrum,
    GridSpectrum,
    aligned_grid_points,
    integrate_refined,
)

_log = structlog.get_logger("spectral")


class SzegoRates(pydantic.BaseModel):
    """Log-determinant rate of a Toeplitz matrix and its spectral limit."""

    model_config = pydantic.ConfigDict(frozen=True)

    n: int = pydantic.Field(title="Matrix dimension.")
    matrix_rate: float = pydantic.Field(title="(1/n) ln |T_n(f)|.")
    spectral_rate: float = pydantic.Field(title="(1/2pi) integral of ln f.")


class SpectralAssumptions(pydantic.BaseModel):
    """Regularity integrals of a signal spectral density."""

    model_config = pydantic.ConfigDict(frozen=True)

    delta: float
    a5_value: float = pydantic.Field(
        title="integral of ln(fK + 1) + 1/(fK + 1) - 1."
    )
    a6_value: float = pydantic.Field(title="integral of |fK/(fK + 1)|^(1+delta).")


def ar1_spectrum(a: float) -> Ar1Spectrum:
    """Return the spectral density of a unit-variance AR(1) signal.

    Raises
    ------
    BadParameter
        If a is not in [0, `MAX_AR1`].
    """
    if not 0 <= a <= MAX_AR1:
        raise BadParameter(f"a={a!r} must be in [0, {MAX_AR1}]")
    return Ar1Spectrum(a=a)


def constant_spectrum(c: float) -> GridSpectrum:
    """Return the flat spectral density f(omega) = c.

    Raises
    ------
    BadParameter
        If c is not positive.
    """
    if not c > 0:
        raise BadParameter(f"c={c!r} must be positive")
    return GridSpectrum(values=(c, c))


def spectral_functional(
    signal: Ar1Spectrum | GridSpectrum,
    candidate: Ar1Spectrum | GridSpectrum,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> float:
    """Compute J(fS, fK) by composite Simpson quadrature, doubling the
    grid until the integral changes by at most `REFINEMENT_TOL`.

    Parameters
    ----------
    signal : `SpectralDensity`
        Nominal signal density fS.
    candidate : `SpectralDensity`
        Candidate signal density fK.
    grid_points : `int`
        Initial number of Simpson subintervals.

    Returns
    -------
    functional : `float`
        The integral, in nats.

    Raises
    ------
    IntegrandNonpositive
        If 1 + fS (fK - fS) / (1 + fS)^2 <= 0 at some grid frequency.
    BadParameter
        If grid_points is invalid.
    """

    def integrand(omega: np.ndarray) -> np.ndarray:
        fs = signal(omega)
        argument = 1 + fs * (candidate(omega) - fs) / (1 + fs) ** 2
        bad = np.flatnonzero(argument <= 0)
        if bad.size > 0:
            raise IntegrandNonpositive(
                omega=float(omega[bad[0]]), value=float(argument[bad[0]])
            )
        return np.log(argument)

    return integrate_refined(
        integrand, aligned_grid_points(grid_points, signal, candidate)
    )


def spectral_membership(
    signal: Ar1Spectrum | GridSpectrum,
    candidate: Ar1Spectrum | GridSpectrum,
    tol: float = 0.0,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> bool:
    """Is fK in the robust set of fS, i.e. J(fS, fK) <= tol?

    Errors are as for `spectral_functional`, plus `BadParameter`
    if tol is negative.
    """
    if tol < 0:
        raise BadParameter(f"tol={tol!r} must be >= 0")
    return spectral_functional(signal, candidate, grid_points) <= tol


def toeplitz_from_spectrum(
    density: Ar1Spectrum | GridSpectrum,
    n: int,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> CovarianceMatrix:
    """Return the n x n Toeplitz covariance T_n(f) of a density.

    Raises
    ------
    NotPositiveDefinite
        If truncation of a rough density breaks positive definiteness.
    """
    return build(ToeplitzSpectrumSpec(density=density, n=n, grid_points=grid_points))


def szego_log_det_rate(
    density: Ar1Spectrum | GridSpectrum,
    n: int,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> SzegoRates:
    """Compare (1/n) ln |T_n(f)| with its Szego limit (1/2pi) int ln f.

    Raises
    ------
    BadParameter
        If n < 2.
    """
    if n < 2:
        raise BadParameter(f"n={n} must be >= 2")
    matrix = toeplitz_from_spectrum(density, n, grid_points)
    spectral_rate = integrate_refined(
        lambda omega: np.log(density(omega)),
        aligned_grid_points(grid_points, density),
    ) / (2 * math.pi)
    rates = SzegoRates(
        n=n, matrix_rate=matrix.log_det / n, spectral_rate=spectral_rate
    )
    _log.debug("Szego rates", **rates.model_dump())
    return rates


def spectral_assumptions(
    candidate: Ar1Spectrum | GridSpectrum,
    delta: float,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> SpectralAssumptions:
    """Evaluate the two regularity integrals of a signal density."""
    if delta <= 0:
        raise BadParameter(f"delta={delta!r} must be positive")
    grid_points = aligned_grid_points(grid_points, candidate)

    def a5_integrand(omega: np.ndarray) -> np.ndarray:
        shifted = candidate(omega) + 1
        return np.log(shifted) + 1 / shifted - 1

    def a6_integrand(omega: np.ndarray) -> np.ndarray:
        shifted = candidate(omega) + 1
        return ((shifted - 1) / shifted) ** (1 + delta)

    return SpectralAssumptions(
        delta=delta,
        a5_value=integrate_refined(a5_integrand, grid_points),
        a6_value=integrate_refined(a6_integrand, grid_points),
    )


def fourier_samples(density: Ar1Spectrum | GridSpectrum, n: int) -> np.ndarray:
    """Sample a density at the n Fourier frequencies 2 pi k / n."""
    if n < 1:
        raise BadParameter(f"n={n} must be positive")
    return density(2 * np.pi * np.arange(n) / n)


def discretized_rate(
    signal: Ar1Spectrum | GridSpectrum,
    candidate: Ar1Spectrum | GridSpectrum,
    n: int,
) -> float:
    """(1/n) ln t(S, V) for circulant S, V sampled at n Fourier frequencies.

    As n grows this tends to J(fS, fK) / 2pi.
    """
    return (
        log_model2_commuting_moment(
            fourier_samples(signal, n), fourier_samples(candidate, n)
        )
        / n
    )
