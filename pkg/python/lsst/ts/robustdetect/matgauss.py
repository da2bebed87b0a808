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

from __future__ import annotations

__all__ = [
    "SYM_TOL",
    "PD_TOL",
    "RECONSTRUCTION_TOL",
    "ORTHOGONALITY_TOL",
    "BLOCK_TRIALS",
    "MAX_SEED",
    "StreamPurpose",
    "DenseSpec",
    "DiagonalSpec",
    "ScaledIdentitySpec",
    "Ar1Spec",
    "ToeplitzSpectrumSpec",
    "CovarianceSpec",
    "CovarianceMatrix",
    "build",
    "check_symmetric",
    "is_positive_definite",
    "check_seed",
    "block_generator",
    "run_blocks",
    "sample_gaussian",
    "sample_ar1_signal",
    "sample_signal_plus_noise",
]

import collections.abc
import concurrent.futures
import enum
import math
import typing

import numpy as np
import pydantic
import scipy.linalg
import structlog

from .errors import (
    AsymmetricInput,
    BadParameter,
    DimensionMismatch,
    NotPositiveDefinite,
)
from .spectral_density import (
    DEFAULT_GRID_POINTS,
    MAX_AR1,
    SpectralDensity,
    autocovariances,
)

# Symmetry tolerance on |A_ij - A_ji| / max(1, |A_ij|).
SYM_TOL = 1e-10

# Relative positive-definiteness tolerance on the smallest eigenvalue.
PD_TOL = 1e-10

# Relative Frobenius tolerance of T diag(lambda) T' against the entries.
RECONSTRUCTION_TOL = 1e-8

# Entrywise tolerance of T'T against the identity.
ORTHOGONALITY_TOL = 1e-10

# Number of trials per random sub-stream.
BLOCK_TRIALS = 4096

MAX_SEED = 2**64 - 1

_log = structlog.get_logger("matgauss")


class StreamPurpose(enum.IntEnum):
    """Tag that separates the random sub-streams of one seed."""

    sample = 0
    calibrate = 1
    false_alarm = 2
    miss = 3
    moment = 4
    signal = 5


class DenseSpec(pydantic.BaseModel):
    """A covariance matrix given entry by entry."""

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["dense"] = "dense"
    entries: list[list[float]] = pydantic.Field(
        title="Matrix entries, row-major.", min_length=1
    )

    @pydantic.field_validator("entries")
    @classmethod
    def _check_square(cls, entries: list[list[float]]) -> list[list[float]]:
        n = len(entries)
        bad_lengths = sorted({len(row) for row in entries if len(row) != n})
        if bad_lengths:
            raise ValueError(
                f"entries must be a square {n} x {n} matrix; "
                f"found rows of length {bad_lengths}"
            )
        return entries


class DiagonalSpec(pydantic.BaseModel):
    """A diagonal covariance matrix."""

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["diagonal"] = "diagonal"
    eigenvalues: list[pydantic.PositiveFloat] = pydantic.Field(
        title="Diagonal entries (the eigenvalues).", min_length=1
    )


class ScaledIdentitySpec(pydantic.BaseModel):
    """The matrix c I_n."""

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["scaled_identity"] = "scaled_identity"
    c: float = pydantic.Field(title="Scale factor.", gt=0)
    n: int = pydantic.Field(title="Dimension.", ge=1)


class Ar1Spec(pydantic.BaseModel):
    """Autocovariance matrix of a unit-variance AR(1) process:
    entries a^|i-j|.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["ar1"] = "ar1"
    a: float = pydantic.Field(title="AR(1) coefficient.", ge=0, le=MAX_AR1)
    n: int = pydantic.Field(title="Dimension.", ge=1)


class ToeplitzSpectrumSpec(pydantic.BaseModel):
    """Toeplitz matrix of the autocovariances of a spectral density."""

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["toeplitz_from_spectrum"] = "toeplitz_from_spectrum"
    density: SpectralDensity
    n: int = pydantic.Field(title="Dimension.", ge=1)
    grid_points: int = pydantic.Field(
        default=DEFAULT_GRID_POINTS,
        title="Number of Simpson subintervals for the autocovariances.",
    )


CovarianceSpec = typing.Annotated[
    DenseSpec | DiagonalSpec | ScaledIdentitySpec | Ar1Spec | ToeplitzSpectrumSpec,
    pydantic.Field(discriminator="kind"),
]


class CovarianceMatrix:
    """Symmetric positive-definite matrix with a cached eigendecomposition.

    Eigenvalues are sorted in descending order; ties keep the order
    returned by the symmetric eigensolver. The arrays are read-only,
    so instances may be shared between threads.

    Parameters
    ----------
    entries : `numpy.typing.ArrayLike`
        Square symmetric matrix.

    Raises
    ------
    DimensionMismatch
        If entries is not a non-empty square matrix.
    AsymmetricInput
        If entries is not symmetric within `SYM_TOL`.
    NotPositiveDefinite
        If the smallest eigenvalue is not above ``PD_TOL`` times
        the largest.
    """

    def __init__(self, entries: typing.Any) -> None:
        array = np.array(entries, dtype=float)
        if array.ndim != 2 or array.shape[0] != array.shape[1] or array.size == 0:
            raise DimensionMismatch(
                f"Covariance entries must be a square matrix; shape={array.shape}"
            )
        if not np.all(np.isfinite(array)):
            raise BadParameter("Covariance entries must be finite")
        check_symmetric(array)
        array = (array + array.T) / 2
        eigenvalues, eigenvectors = scipy.linalg.eigh(array)
        self._set(array, eigenvalues, eigenvectors)

    @classmethod
    def from_eigendecomposition(
        cls, eigenvalues: typing.Any, eigenvectors: typing.Any
    ) -> CovarianceMatrix:
        """Make a matrix T diag(lambda) T' from known eigenpairs.

        Parameters
        ----------
        eigenvalues : `numpy.typing.ArrayLike`
            Eigenvalues, in any order.
        eigenvectors : `numpy.typing.ArrayLike`
            Orthogonal matrix whose columns are the eigenvectors.
        """
        eigenvalues = np.array(eigenvalues, dtype=float)
        eigenvectors = np.array(eigenvectors, dtype=float)
        if eigenvectors.shape != (eigenvalues.size, eigenvalues.size):
            raise DimensionMismatch(
                f"eigenvectors shape {eigenvectors.shape} does not match "
                f"{eigenvalues.size} eigenvalues"
            )
        entries = (eigenvectors * eigenvalues) @ eigenvectors.T
        entries = (entries + entries.T) / 2
        self = cls.__new__(cls)
        self._set(entries, eigenvalues, eigenvectors)
        return self

    @classmethod
    def diagonal(cls, values: typing.Any) -> CovarianceMatrix:
        """Make diag(values) with an exact eigendecomposition."""
        values = np.array(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DimensionMismatch("diagonal values must be a non-empty vector")
        return cls.from_eigendecomposition(values, np.eye(values.size))

    @classmethod
    def identity(cls, n: int) -> CovarianceMatrix:
        """Make the n x n identity matrix."""
        return cls.diagonal(np.ones(n))

    def _set(
        self, entries: np.ndarray, eigenvalues: np.ndarray, eigenvectors: np.ndarray
    ) -> None:
        order = np.argsort(-eigenvalues, kind="stable")
        eigenvalues = eigenvalues[order]
        eigenvectors = eigenvectors[:, order]
        if not (eigenvalues[0] > 0 and eigenvalues[-1] > PD_TOL * eigenvalues[0]):
            raise NotPositiveDefinite(
                f"Smallest eigenvalue {eigenvalues[-1]!r} is not positive "
                f"relative to the largest {eigenvalues[0]!r}"
            )
        n = eigenvalues.size
        reconstructed = (eigenvectors * eigenvalues) @ eigenvectors.T
        error = np.linalg.norm(reconstructed - entries) / np.linalg.norm(entries)
        if error >= RECONSTRUCTION_TOL:
            raise RuntimeError(f"Bug: eigendecomposition reconstruction error {error}")
        orthogonality = np.max(np.abs(eigenvectors.T @ eigenvectors - np.eye(n)))
        if orthogonality > ORTHOGONALITY_TOL:
            raise RuntimeError(f"Bug: eigenvectors not orthogonal: {orthogonality}")
        for array in (entries, eigenvalues, eigenvectors):
            array.flags.writeable = False
        self._entries = entries
        self._eigenvalues = eigenvalues
        self._eigenvectors = eigenvectors
        self._log_det = math.fsum(np.log(eigenvalues))

    @property
    def n(self) -> int:
        """Dimension."""
        return self._eigenvalues.size

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues, descending."""
        return self._eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        """Orthogonal matrix T whose columns match `eigenvalues`."""
        return self._eigenvectors

    @property
    def log_det(self) -> float:
        """ln |M|, as the sum of the log eigenvalues."""
        return self._log_det

    @property
    def sampling_factor(self) -> np.ndarray:
        """T diag(sqrt(lambda)), so that factor @ z ~ N(0, M)."""
        return self._eigenvectors * np.sqrt(self._eigenvalues)

    def inverse(self) -> np.ndarray:
        """Return M^-1 as T diag(1/lambda) T'."""
        inverse = (self._eigenvectors / self._eigenvalues) @ self._eigenvectors.T
        return (inverse + inverse.T) / 2

    def quadratic_inverse(self, y: typing.Any) -> np.ndarray:
        """Return (y, M^-1 y) for a vector or for each row of a matrix."""
        coords = np.asarray(y, dtype=float) @ self._eigenvectors
        return np.sum(coords * coords / self._eigenvalues, axis=-1)

    def trace_product_inverse(self, other: CovarianceMatrix) -> float:
        """Return tr(other M^-1)."""
        rotated = self._eigenvectors.T @ other.entries @ self._eigenvectors
        return math.fsum(np.diag(rotated) / self._eigenvalues)

    def shifted(self, c: float = 1.0) -> CovarianceMatrix:
        """Return c I + M, sharing the eigenvectors of M."""
        return CovarianceMatrix.from_eigendecomposition(
            self._eigenvalues + c, self._eigenvectors
        )

    def commutes_with(self, other: CovarianceMatrix, tol: float = 1e-9) -> bool:
        """Does M V = V M, within ``tol`` relative to |M| |V|?"""
        commutator = self._entries @ other.entries - other.entries @ self._entries
        scale = np.linalg.norm(self._entries) * np.linalg.norm(other.entries)
        return bool(np.linalg.norm(commutator) <= tol * scale)

    def __repr__(self) -> str:
        return f"CovarianceMatrix(n={self.n}, eigenvalues={self._eigenvalues!r})"


def check_symmetric(array: np.ndarray) -> None:
    """Raise `AsymmetricInput` unless a square array is symmetric
    within `SYM_TOL`."""
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionMismatch(f"Matrix must be square; shape={array.shape}")
    scale = np.maximum(1.0, np.abs(array))
    asymmetry = np.max(np.abs(array - array.T) / scale)
    if asymmetry > SYM_TOL:
        raise AsymmetricInput(
            f"Matrix is not symmetric: relative asymmetry={asymmetry}"
        )


def build(spec: CovarianceSpec) -> CovarianceMatrix:
    """Build a covariance matrix from its description.

    Parameters
    ----------
    spec : `CovarianceSpec`
        The matrix description.

    Returns
    -------
    matrix : `CovarianceMatrix`
        The covariance matrix.

    Raises
    ------
    NotPositiveDefinite
        If the matrix is not positive definite.
    AsymmetricInput
        If dense entries are not symmetric.
    BadParameter
        If the AR(1) coefficient is out of range.
    """
    _log.debug("Build covariance", kind=spec.kind)
    if isinstance(spec, DenseSpec):
        return CovarianceMatrix(spec.entries)
    elif isinstance(spec, DiagonalSpec):
        return CovarianceMatrix.diagonal(spec.eigenvalues)
    elif isinstance(spec, ScaledIdentitySpec):
        return CovarianceMatrix.diagonal(np.full(spec.n, float(spec.c)))
    elif isinstance(spec, Ar1Spec):
        if not 0 <= spec.a <= MAX_AR1:
            raise BadParameter(f"a={spec.a!r} must be in [0, {MAX_AR1}]")
        return CovarianceMatrix(
            scipy.linalg.toeplitz(float(spec.a) ** np.arange(spec.n))
        )
    elif isinstance(spec, ToeplitzSpectrumSpec):
        lags = autocovariances(spec.density, spec.n, spec.grid_points)
        return CovarianceMatrix(scipy.linalg.toeplitz(lags))
    raise RuntimeError(f"Bug: unrecognized covariance spec {spec!r}")


def is_positive_definite(matrix: typing.Any) -> bool:
    """Is a symmetric matrix positive definite?

    Parameters
    ----------
    matrix : `numpy.typing.ArrayLike`
        Symmetric matrix.

    Returns
    -------
    positive_definite : `bool`
        True if the smallest eigenvalue exceeds
        ``PD_TOL * max(|largest eigenvalue|, 1)``.

    Raises
    ------
    AsymmetricInput
        If the matrix is not symmetric within `SYM_TOL`.
    """
    array = np.atleast_2d(np.asarray(matrix, dtype=float))
    check_symmetric(array)
    eigenvalues = scipy.linalg.eigvalsh((array + array.T) / 2)
    return bool(eigenvalues[0] > PD_TOL * max(abs(eigenvalues[-1]), 1.0))


def check_seed(seed: typing.Any) -> int:
    """Check that a seed is a 64-bit unsigned integer and return it."""
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= MAX_SEED:
        raise BadParameter(f"seed={seed!r} must be an integer in [0, 2**64)")
    return int(seed)


def block_generator(
    seed: int, purpose: StreamPurpose, block: int
) -> np.random.Generator:
    """Return the generator of one block of trials.

    The sub-stream depends only on (seed, purpose, block).
    """
    sequence = np.random.SeedSequence(
        entropy=check_seed(seed), spawn_key=(int(purpose), block)
    )
    return np.random.Generator(np.random.PCG64(sequence))


BlockFuncT = collections.abc.Callable[[np.random.Generator, int, int], typing.Any]


def run_blocks(
    func: BlockFuncT,
    seed: int,
    count: int,
    purpose: StreamPurpose,
    workers: int = 1,
) -> list[typing.Any]:
    """Run a function over fixed blocks of trials.

    Parameters
    ----------
    func : `collections.abc.Callable`
        Called as ``func(rng, start, size)`` for each block, where
        ``rng`` is the generator of the block, ``start`` the index of its
        first trial and ``size`` its number of trials.
    seed : `int`
        Seed.
    count : `int`
        Total number of trials.
    purpose : `StreamPurpose`
        Sub-stream tag.
    workers : `int`
        Number of worker threads.

    Returns
    -------
    results : `list`
        The return values of ``func``, in block order, so results do not
        depend on the number of workers.
    """
    if count < 1:
        raise BadParameter(f"count={count} must be positive")
    blocks = [
        (block, start, min(BLOCK_TRIALS, count - start))
        for block, start in enumerate(range(0, count, BLOCK_TRIALS))
    ]

    def run_one(block_info: tuple[int, int, int]) -> typing.Any:
        block, start, size = block_info
        return func(block_generator(seed, purpose, block), start, size)

    if workers <= 1 or len(blocks) == 1:
        return [run_one(block_info) for block_info in blocks]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run_one, blocks))


def sample_gaussian(
    matrix: CovarianceMatrix,
    seed: int,
    count: int,
    purpose: StreamPurpose = StreamPurpose.sample,
    workers: int = 1,
) -> np.ndarray:
    """Draw samples from N(0, M).

    Each sample is T diag(sqrt(lambda)) z with z standard normal.

    Parameters
    ----------
    matrix : `CovarianceMatrix`
        Covariance M.
    seed : `int`
        64-bit seed.
    count : `int`
        Number of samples.
    purpose : `StreamPurpose`
        Sub-stream tag.
    workers : `int`
        Number of worker threads.

    Returns
    -------
    samples : `numpy.ndarray`
        Array of shape (count, n).
    """
    factor = matrix.sampling_factor
    n = matrix.n

    def draw(rng: np.random.Generator, start: int, size: int) -> np.ndarray:
        return rng.standard_normal((size, n)) @ factor.T

    return np.concatenate(run_blocks(draw, seed, count, purpose, workers))


def sample_ar1_signal(
    a: float, n: int, seed: int, count: int, workers: int = 1
) -> np.ndarray:
    """Draw AR(1) signals by the time-domain recursion.

    s_1 ~ N(0, 1) and s_{i+1} = a s_i + sqrt(1 - a^2) u_i with u_i ~ N(0, 1),
    so each signal has covariance a^|i-j|.

    Returns
    -------
    signals : `numpy.ndarray`
        Array of shape (count, n).
    """
    if not 0 <= a <= MAX_AR1:
        raise BadParameter(f"a={a!r} must be in [0, {MAX_AR1}]")
    innovation = math.sqrt(1 - a * a)

    def draw(rng: np.random.Generator, start: int, size: int) -> np.ndarray:
        noise = rng.standard_normal((size, n))
        signal = np.empty_like(noise)
        signal[:, 0] = noise[:, 0]
        for i in range(1, n):
            signal[:, i] = a * signal[:, i - 1] + innovation * noise[:, i]
        return signal

    return np.concatenate(
        run_blocks(draw, seed, count, StreamPurpose.signal, workers)
    )


def sample_signal_plus_noise(
    signal_covariance: CovarianceMatrix,
    seed: int,
    count: int,
    purpose: StreamPurpose = StreamPurpose.signal,
    workers: int = 1,
) -> np.ndarray:
    """Draw observations y = xi + s with xi ~ N(0, I) and s ~ N(0, S)
    independent.

    Returns
    -------
    observations : `numpy.ndarray`
        Array of shape (count, n).
    """
    factor = signal_covariance.sampling_factor
    n = signal_covariance.n

    def draw(rng: np.random.Generator, start: int, size: int) -> np.ndarray:
        noise = rng.standard_normal((size, n))
        signal = rng.standard_normal((size, n)) @ factor.T
        return noise + signal

    return np.concatenate(run_blocks(draw, seed, count, purpose, workers))
