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
from lsst.ts.robustdetect.errors import (
    AsymmetricInput,
    BadParameter,
    DimensionMismatch,
    NotPositiveDefinite,
)
from lsst.ts.robustdetect.matgauss import (
    BLOCK_TRIALS,
    Ar1Spec,
    CovarianceMatrix,
    DenseSpec,
    DiagonalSpec,
    ScaledIdentitySpec,
    StreamPurpose,
    ToeplitzSpectrumSpec,
    block_generator,
    build,
    check_seed,
    is_positive_definite,
    sample_ar1_signal,
    sample_gaussian,
    sample_signal_plus_noise,
)
from lsst.ts.robustdetect.spectral_density import Ar1Spectrum
from lsst.ts.robustdetect.testutils import random_covariance

random.seed(31)
rng = np.random.default_rng(31)


def test_build_scaled_identity() -> None:
    matrix = build(ScaledIdentitySpec(c=1, n=3))
    np.testing.assert_array_equal(matrix.entries, np.eye(3))
    np.testing.assert_array_equal(matrix.eigenvalues, [1, 1, 1])
    assert matrix.n == 3
    assert matrix.log_det == 0


def test_build_ar1() -> None:
    np.testing.assert_array_equal(build(Ar1Spec(a=0, n=4)).entries, np.eye(4))

    matrix = build(Ar1Spec(a=0.5, n=2))
    np.testing.assert_allclose(matrix.entries, [[1, 0.5], [0.5, 1]])
    np.testing.assert_allclose(matrix.eigenvalues, [1.5, 0.5], rtol=1e-12)

    for a in (0.3, 0.7):
        for n in (2, 8, 32):
            matrix = build(Ar1Spec(a=a, n=n))
            i, j = np.indices((n, n))
            np.testing.assert_allclose(matrix.entries, a ** np.abs(i - j))
            # Classical AR(1) determinant.
            expected_log_det = (n - 1) * math.log(1 - a * a)
            assert matrix.log_det == pytest.approx(expected_log_det, abs=1e-8)

    with pytest.raises(pydantic.ValidationError):
        Ar1Spec(a=1.0, n=3)
    with pytest.raises(BadParameter):
        build(Ar1Spec.model_construct(a=1.0, n=3))


def test_build_ar1_matches_toeplitz_from_spectrum() -> None:
    for a in (0, 0.3, 0.7, 0.995, 0.999):
        for n in (4, 64):
            direct = build(Ar1Spec(a=a, n=n))
            from_spectrum = build(
                ToeplitzSpectrumSpec(density=Ar1Spectrum(a=a), n=n)
            )
            np.testing.assert_allclose(
                from_spectrum.entries, direct.entries, rtol=0, atol=1e-12
            )


def test_build_dense_and_diagonal() -> None:
    matrix = build(DenseSpec(entries=[[2, 1], [1, 2]]))
    np.testing.assert_allclose(matrix.eigenvalues, [3, 1])

    matrix = build(DiagonalSpec(eigenvalues=[1, 3, 2]))
    np.testing.assert_array_equal(matrix.eigenvalues, [3, 2, 1])
    np.testing.assert_array_equal(matrix.entries, np.diag([1, 3, 2]))

    with pytest.raises(AsymmetricInput):
        build(DenseSpec(entries=[[2, 1], [1.5, 2]]))
    with pytest.raises(NotPositiveDefinite):
        build(DenseSpec(entries=[[1, 2], [2, 1]]))
    with pytest.raises(DimensionMismatch):
        CovarianceMatrix([[1, 2, 3], [2, 1, 3]])
    for bad_entries in ([[1, 2, 3], [2, 1, 3]], [[1, 0], [0]], [[1], [0, 1]]):
        with pytest.raises(pydantic.ValidationError, match="square"):
            DenseSpec(entries=bad_entries)
    with pytest.raises(pydantic.ValidationError):
        DiagonalSpec(eigenvalues=[1, 0])


def test_covariance_matrix_invariants() -> None:
    for n in (1, 2, 5, 9):
        matrix = random_covariance(n, rng)
        eigenvalues = matrix.eigenvalues
        eigenvectors = matrix.eigenvectors
        assert np.all(np.diff(eigenvalues) <= 0)
        reconstructed = (eigenvectors * eigenvalues) @ eigenvectors.T
        error = np.linalg.norm(reconstructed - matrix.entries) / np.linalg.norm(
            matrix.entries
        )
        assert error < 1e-8
        np.testing.assert_allclose(
            eigenvectors.T @ eigenvectors, np.eye(n), rtol=0, atol=1e-10
        )
        np.testing.assert_allclose(
            matrix.inverse() @ matrix.entries, np.eye(n), rtol=0, atol=1e-9
        )
        sign, log_det = np.linalg.slogdet(matrix.entries)
        assert sign == 1
        assert matrix.log_det == pytest.approx(log_det, abs=1e-9)
        with pytest.raises(ValueError):
            matrix.entries[0, 0] = 5


def test_covariance_matrix_helpers() -> None:
    matrix = CovarianceMatrix.diagonal([1, 2])
    shifted = matrix.shifted()
    np.testing.assert_array_equal(shifted.eigenvalues, [3, 2])
    np.testing.assert_array_equal(shifted.entries, np.diag([2, 3]))

    identity = CovarianceMatrix.identity(2)
    np.testing.assert_array_equal(identity.entries, np.eye(2))
    assert matrix.commutes_with(identity)
    assert matrix.commutes_with(CovarianceMatrix.diagonal([5, 0.1]))
    assert not matrix.commutes_with(CovarianceMatrix([[1, 0.5], [0.5, 1]]))

    y = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(matrix.quadratic_inverse(y), [1 + 2, 0.25 + 0.5])
    assert matrix.trace_product_inverse(identity) == pytest.approx(1.5)

    with pytest.raises(DimensionMismatch):
        CovarianceMatrix([1, 2])
    with pytest.raises(BadParameter):
        CovarianceMatrix([[math.nan]])


def test_is_positive_definite() -> None:
    assert is_positive_definite(np.eye(3))
    assert not is_positive_definite(np.diag([1, -0.5]))
    # Scalar guard 1 + 1/V - 1/M for M = 0.5, V = 4.
    assert not is_positive_definite([[1 + 1 / 4 - 1 / 0.5]])
    with pytest.raises(AsymmetricInput):
        is_positive_definite([[1, 0], [0.5, 1]])


def test_check_seed() -> None:
    assert check_seed(0) == 0
    assert check_seed(2**64 - 1) == 2**64 - 1
    for bad_seed in (-1, 2**64, 1.5, True):
        with pytest.raises(BadParameter):
            check_seed(bad_seed)


def test_block_generator_streams() -> None:
    first = block_generator(5, StreamPurpose.sample, 0).standard_normal(4)
    again = block_generator(5, StreamPurpose.sample, 0).standard_normal(4)
    np.testing.assert_array_equal(first, again)
    for other in (
        block_generator(6, StreamPurpose.sample, 0),
        block_generator(5, StreamPurpose.miss, 0),
        block_generator(5, StreamPurpose.sample, 1),
    ):
        assert not np.array_equal(first, other.standard_normal(4))


def test_sample_gaussian() -> None:
    samples = sample_gaussian(CovarianceMatrix.identity(2), seed=1, count=100_000)
    assert samples.shape == (100_000, 2)
    assert np.all(np.abs(samples.mean(axis=0)) < 0.02)

    samples = sample_gaussian(CovarianceMatrix.diagonal([4]), seed=2, count=100_000)
    assert 3.9 <= samples.var() <= 4.1

    matrix = random_covariance(3, rng)
    count = 3 * BLOCK_TRIALS + 17
    first = sample_gaussian(matrix, seed=3, count=count)
    np.testing.assert_array_equal(first, sample_gaussian(matrix, seed=3, count=count))
    np.testing.assert_array_equal(
        first, sample_gaussian(matrix, seed=3, count=count, workers=4)
    )
    assert not np.array_equal(first, sample_gaussian(matrix, seed=4, count=count))


def test_sample_ar1_signal() -> None:
    a = 0.5
    n = 4
    signals = sample_ar1_signal(a, n, seed=5, count=200_000)
    assert signals.shape == (200_000, n)
    sample_covariance = signals.T @ signals / len(signals)
    np.testing.assert_allclose(
        sample_covariance, build(Ar1Spec(a=a, n=n)).entries, rtol=0, atol=0.02
    )
    with pytest.raises(BadParameter):
        sample_ar1_signal(1.0, n, seed=5, count=10)


def test_sample_signal_plus_noise() -> None:
    signal_covariance = CovarianceMatrix.diagonal([1, 2])
    observations = sample_signal_plus_noise(signal_covariance, seed=6, count=200_000)
    np.testing.assert_allclose(observations.var(axis=0), [2, 3], rtol=0, atol=0.05)
    assert abs(np.corrcoef(observations.T)[0, 1]) < 0.01
