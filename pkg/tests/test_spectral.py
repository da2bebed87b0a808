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

import numpy as np
import pydantic
import pytest
from lsst.ts.robustdetect.errors import BadParameter, IntegrandNonpositive
from lsst.ts.robustdetect.matgauss import Ar1Spec, build
from lsst.ts.robustdetect.robustset import log_model2_commuting_moment
from lsst.ts.robustdetect.spectral import (
    SzegoRates,
    ar1_spectrum,
    constant_spectrum,
    discretized_rate,
    fourier_samples,
    spectral_assumptions,
    spectral_functional,
    spectral_membership,
    szego_log_det_rate,
    toeplitz_from_spectrum,
)
from lsst.ts.robustdetect.spectral_density import (
    MAX_AR1,
    Ar1Spectrum,
    GridSpectrum,
    aligned_grid_points,
    autocovariances,
    frequency_grid,
    integrate_over_frequency,
    integrate_refined,
)


def test_ar1_spectrum() -> None:
    omega = np.linspace(-np.pi, np.pi, 11)
    np.testing.assert_allclose(ar1_spectrum(0)(omega), np.ones(11))
    density = ar1_spectrum(0.5)
    assert density(0) == pytest.approx(3)
    assert density(np.pi) == pytest.approx(1 / 3)
    np.testing.assert_allclose(density(omega), density(-omega))
    assert ar1_spectrum(MAX_AR1).a == MAX_AR1
    for bad_a in (-0.1, 1, MAX_AR1 + 1e-6):
        with pytest.raises(BadParameter):
            ar1_spectrum(bad_a)
    with pytest.raises(pydantic.ValidationError):
        Ar1Spectrum(a=1)


def test_grid_spectrum() -> None:
    density = GridSpectrum(values=(1, 3, 1))
    assert density(0) == pytest.approx(3)
    assert density(np.pi / 2) == pytest.approx(2)
    assert density(np.pi) == pytest.approx(1)
    # Periodic wrap.
    assert density(2 * np.pi) == pytest.approx(3)
    assert density(-np.pi / 2) == pytest.approx(density(3 * np.pi / 2))

    for bad_values in ((1, 2), (1, 0, 1), (1, -1, 1), (1,), (1, math.inf, 1)):
        with pytest.raises(pydantic.ValidationError):
            GridSpectrum(values=bad_values)

    density = constant_spectrum(2.5)
    np.testing.assert_allclose(density(np.linspace(-4, 4, 9)), 2.5)
    for bad_c in (0, -1):
        with pytest.raises(BadParameter):
            constant_spectrum(bad_c)


def test_frequency_grid() -> None:
    omega = frequency_grid(64)
    assert len(omega) == 65
    assert omega[0] == -np.pi
    assert omega[-1] == np.pi
    for bad_points in (62, 65, 0):
        with pytest.raises(BadParameter):
            frequency_grid(bad_points)
    assert integrate_over_frequency(np.ones(65), omega) == pytest.approx(2 * np.pi)


def test_autocovariances() -> None:
    np.testing.assert_allclose(
        autocovariances(ar1_spectrum(0.5), 10), 0.5 ** np.arange(10), atol=1e-15
    )
    np.testing.assert_allclose(
        autocovariances(constant_spectrum(2), 4), [2, 0, 0, 0], atol=1e-12
    )


def test_spectral_functional() -> None:
    density = ar1_spectrum(0.7)
    assert spectral_functional(density, density) == pytest.approx(0, abs=1e-15)
    one = constant_spectrum(1)
    assert spectral_functional(one, constant_spectrum(3)) == pytest.approx(
        2 * np.pi * math.log(1.5), abs=1e-10
    )
    assert spectral_functional(one, constant_spectrum(3)) == pytest.approx(
        2.5476, abs=1e-4
    )
    assert spectral_functional(one, constant_spectrum(0.5)) == pytest.approx(
        -0.839006, abs=1e-5
    )
    with pytest.raises(BadParameter):
        spectral_functional(one, one, grid_points=63)


def test_spectral_functional_nonpositive() -> None:
    negative = GridSpectrum.model_construct(values=(-5.0, -5.0))
    with pytest.raises(IntegrandNonpositive) as excinfo:
        spectral_functional(constant_spectrum(1), negative, grid_points=64)
    assert excinfo.value.omega == pytest.approx(-np.pi)
    assert excinfo.value.value == pytest.approx(-0.5)


def test_spectral_functional_quadrature() -> None:
    signal = ar1_spectrum(0.5)
    candidate = ar1_spectrum(0.3)
    for grid_points in (1024, 2048):
        assert spectral_functional(
            signal, candidate, grid_points=grid_points
        ) == pytest.approx(
            spectral_functional(signal, candidate, grid_points=2 * grid_points),
            abs=1e-8,
        )


def test_spectral_functional_grid_density() -> None:
    one = constant_spectrum(1)
    candidate = GridSpectrum(values=(1, 3, 2, 3, 1))
    assert spectral_functional(one, candidate, grid_points=1024) == pytest.approx(
        spectral_functional(one, candidate, grid_points=2048), abs=1e-8
    )


def test_integrate_refined() -> None:
    assert integrate_refined(lambda omega: np.cos(omega) ** 2) == pytest.approx(
        np.pi, abs=1e-12
    )
    peaked = ar1_spectrum(MAX_AR1)
    # A unit-variance density integrates to 2pi however sharp its peak.
    assert integrate_refined(peaked, grid_points=64) == pytest.approx(
        2 * np.pi, abs=1e-8
    )
    with pytest.raises(BadParameter):
        integrate_refined(np.cos, grid_points=66 + 1)

    assert aligned_grid_points(4096) == 4096
    assert aligned_grid_points(4096, ar1_spectrum(0.5)) == 4096
    assert aligned_grid_points(4096, GridSpectrum(values=(1, 2, 2, 1))) == 4098
    assert (
        aligned_grid_points(
            64, GridSpectrum(values=(1, 2, 1)), GridSpectrum(values=(1, 2, 2, 1))
        )
        == 72
    )
    huge = GridSpectrum.model_construct(values=(1.0,) * 600_001)
    assert aligned_grid_points(4096, huge) == 4096
    with pytest.raises(BadParameter):
        aligned_grid_points(63)


def test_near_unit_root_ar1() -> None:
    candidate = ar1_spectrum(0.5)
    for a in (0.995, MAX_AR1):
        density = ar1_spectrum(a)
        np.testing.assert_allclose(
            autocovariances(density, 64), a ** np.arange(64), rtol=0, atol=1e-15
        )
        np.testing.assert_allclose(
            toeplitz_from_spectrum(density, 4).entries,
            build(Ar1Spec(a=a, n=4)).entries,
            rtol=0,
            atol=1e-12,
        )
        assert spectral_functional(
            density, candidate, grid_points=4096
        ) == pytest.approx(
            spectral_functional(density, candidate, grid_points=8192), abs=1e-8
        )
        # (1/2pi) integral of ln f is the log innovation variance 1 - a^2.
        rates = szego_log_det_rate(density, 64)
        assert rates.spectral_rate == pytest.approx(math.log(1 - a * a), abs=1e-8)
        assert rates.matrix_rate == pytest.approx(
            math.log(1 - a * a) * 63 / 64, abs=1e-7
        )


def test_spectral_membership() -> None:
    density = ar1_spectrum(0.4)
    one = constant_spectrum(1)
    assert spectral_membership(density, density)
    assert not spectral_membership(one, constant_spectrum(3))
    assert spectral_membership(one, constant_spectrum(3), tol=3)
    assert spectral_membership(one, constant_spectrum(0.5))
    with pytest.raises(BadParameter):
        spectral_membership(one, one, tol=-0.1)


def test_toeplitz_from_spectrum() -> None:
    np.testing.assert_allclose(
        toeplitz_from_spectrum(constant_spectrum(1), 5).entries,
        np.eye(5),
        atol=1e-12,
    )
    np.testing.assert_allclose(
        toeplitz_from_spectrum(ar1_spectrum(0.5), 4).entries,
        build(Ar1Spec(a=0.5, n=4)).entries,
        atol=1e-6,
    )
    matrix = toeplitz_from_spectrum(ar1_spectrum(0.3), 8)
    assert math.exp(matrix.log_det) == pytest.approx(0.91**7, rel=1e-4)


def test_szego_log_det_rate() -> None:
    rates = szego_log_det_rate(constant_spectrum(1), 8)
    assert isinstance(rates, SzegoRates)
    assert rates.matrix_rate == pytest.approx(0, abs=1e-12)
    assert rates.spectral_rate == pytest.approx(0, abs=1e-12)

    density = ar1_spectrum(0.5)
    rates64 = szego_log_det_rate(density, 64)
    rates512 = szego_log_det_rate(density, 512)
    assert rates512.n == 512
    assert rates512.spectral_rate == pytest.approx(math.log(0.75), abs=1e-10)
    assert rates512.matrix_rate == pytest.approx(
        math.log(0.75) * 511 / 512, abs=1e-6
    )
    gap64 = abs(rates64.matrix_rate - rates64.spectral_rate)
    gap512 = abs(rates512.matrix_rate - rates512.spectral_rate)
    assert gap512 < 0.002
    assert gap512 < gap64

    with pytest.raises(BadParameter):
        szego_log_det_rate(density, 1)


def test_spectral_assumptions() -> None:
    report = spectral_assumptions(constant_spectrum(1), delta=1)
    assert report.delta == 1
    assert report.a5_value == pytest.approx(1.213592, abs=1e-6)
    assert report.a6_value == pytest.approx(2 * np.pi * 0.25, abs=1e-10)

    # Nearly zero density gives nearly zero integrals.
    report = spectral_assumptions(constant_spectrum(1e-12), delta=0.5)
    assert report.a5_value == pytest.approx(0, abs=1e-10)
    assert report.a6_value == pytest.approx(0, abs=1e-10)

    report = spectral_assumptions(ar1_spectrum(0.5), delta=1)
    assert 0 < report.a5_value < math.inf
    assert 0 < report.a6_value < 2 * np.pi

    with pytest.raises(BadParameter):
        spectral_assumptions(constant_spectrum(1), delta=0)


def test_fourier_samples() -> None:
    samples = fourier_samples(ar1_spectrum(0.5), 4)
    np.testing.assert_allclose(samples, [3, 0.6, 1 / 3, 0.6])
    with pytest.raises(BadParameter):
        fourier_samples(ar1_spectrum(0.5), 0)


def test_discretized_rate() -> None:
    one = constant_spectrum(1)
    assert discretized_rate(one, constant_spectrum(3), 16) == pytest.approx(
        math.log(1.5)
    )
    signal = ar1_spectrum(0.5)
    candidate = ar1_spectrum(0.3)
    assert discretized_rate(signal, candidate, 8) == pytest.approx(
        log_model2_commuting_moment(
            fourier_samples(signal, 8), fourier_samples(candidate, 8)
        )
        / 8
    )

    # The Riemann sums converge to the spectral functional.
    limit = spectral_functional(signal, candidate) / (2 * np.pi)
    gaps = [
        abs(discretized_rate(signal, candidate, n) - limit) for n in (64, 256, 1024)
    ]
    for previous, gap in zip(gaps, gaps[1:]):
        assert gap <= previous + 1e-12
    assert gaps[-1] < 1e-9


def test_matched_signal_spectrum() -> None:
    density = ar1_spectrum(0.8)
    omega = frequency_grid(256)
    fs = density(omega)
    np.testing.assert_allclose(1 + fs * (fs - fs) / (1 + fs) ** 2, 1)
    assert spectral_functional(density, density, grid_points=256) == 0
