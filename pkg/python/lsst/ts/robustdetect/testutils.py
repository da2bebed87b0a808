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
    "ConfigDictT",
    "modify_environ",
    "random_orthogonal",
    "random_eigenvalues",
    "random_covariance",
    "random_commuting_pair",
    "write_config",
    "run_command",
]

import collections.abc
import contextlib
import json
import os
import pathlib
import typing
import unittest.mock

import numpy as np
import pytest
import scipy.stats

from .main import run
from .matgauss import CovarianceMatrix

# Type annotation aliases
ConfigDictT = dict[str, typing.Any]


@contextlib.contextmanager
def modify_environ(**kwargs: typing.Any) -> collections.abc.Iterator:
    """Context manager to temporarily patch os.environ.

    This calls `unittest.mock.patch` and is only intended for unit tests.

    Parameters
    ----------
    kwargs : `dict` [`str`, `str` or `None`]
        Environment variables to set or clear.
        Each key is the name of an environment variable (with correct case);
        it need not already exist. Each value must be one of:

        * A string value to set the env variable.
        * None to delete the env variable, if present.

    Raises
    ------
    RuntimeError
        If any value in kwargs is not of type `str` or `None`.

    Notes
    -----
    Example of use::

        ...
        def test_foo(self):
            with modify_environ(
                ROBUSTDETECT_WORKERS=None,  # Delete this env var
                ROBUSTDETECT_LOG_LEVEL="DEBUG",  # Set this env var
            ):
                assert "ROBUSTDETECT_WORKERS" not in os.environ
                assert os.environ["ROBUSTDETECT_LOG_LEVEL"] == "DEBUG"
    """
    bad_value_strs = [
        f"{name}: {value!r}"
        for name, value in kwargs.items()
        if not isinstance(value, str) and value is not None
    ]
    if bad_value_strs:
        raise RuntimeError(
            "The following arguments are not of type str or None: "
            + ", ".join(bad_value_strs)
        )

    new_environ = os.environ.copy()
    for name, value in kwargs.items():
        if value is None:
            new_environ.pop(name, None)
        else:
            new_environ[name] = value
    with unittest.mock.patch("os.environ", new_environ):
        yield


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Return a random n x n orthogonal matrix (Haar measure)."""
    if n == 1:
        return np.array([[1.0 if rng.random() < 0.5 else -1.0]])
    return scipy.stats.ortho_group.rvs(dim=n, random_state=rng)


def random_eigenvalues(
    n: int, rng: np.random.Generator, low: float = 0.5, high: float = 4.0
) -> np.ndarray:
    """Return n eigenvalues drawn uniformly from [low, high]."""
    return rng.uniform(low, high, size=n)


def random_covariance(
    n: int, rng: np.random.Generator, low: float = 0.5, high: float = 4.0
) -> CovarianceMatrix:
    """Return a random covariance matrix with eigenvalues in [low, high]
    and a random eigenbasis."""
    basis = random_orthogonal(n, rng)
    eigenvalues = random_eigenvalues(n, rng, low, high)
    return CovarianceMatrix((basis * eigenvalues) @ basis.T)


def random_commuting_pair(
    n: int, rng: np.random.Generator, low: float = 0.5, high: float = 4.0
) -> tuple[CovarianceMatrix, CovarianceMatrix, np.ndarray, np.ndarray]:
    """Return commuting M, V with a shared random eigenbasis.

    Returns
    -------
    pair : `tuple`
        (M, V, lambda, nu) where lambda[i] and nu[i] are the eigenvalues
        of M and V on the same eigenvector.
    """
    basis = random_orthogonal(n, rng)
    lam = random_eigenvalues(n, rng, low, high)
    nu = random_eigenvalues(n, rng, low, high)
    m = CovarianceMatrix((basis * lam) @ basis.T)
    v = CovarianceMatrix((basis * nu) @ basis.T)
    return m, v, lam, nu


def write_config(directory: pathlib.Path, data: ConfigDictT | str) -> pathlib.Path:
    """Write a command config to ``directory/config.json``.

    ``data`` is written as JSON, or verbatim if it is a str.
    """
    path = directory / "config.json"
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return path


def run_command(
    capsys: pytest.CaptureFixture[str], *args: str
) -> tuple[int, str, str]:
    """Run the command line and return (exit code, stdout, stderr)."""
    capsys.readouterr()
    code = run(list(args))
    captured = capsys.readouterr()
    return int(code), captured.out, captured.err
