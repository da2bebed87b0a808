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

"""Maximal robust covariance sets of the likelihood ratio test.

A covariance V can replace the nominal M without loss of error exponent
when the moment f(M, V) = E_I[p_V / p_M] is finite (the PD guard
I + V^-1 - M^-1 > 0) and grows at most like e^{o(n)}. The o(n) slack
is made explicit by a `SlackPolicy`; the "core" set uses zero slack.

For commuting M, V the moment is
prod lambda_i / [lambda_i + nu_i (lambda_i - 1)]^(1/2), the scalar case of
the determinant formula. The commuting inner set is
{V : f(M, V) <= e^{o(n)}}, which contains the core set.
"""

from __future__ import annotations

__all__ = [
    "ExplicitSlack",
    "SqrtSlack",
    "SlackPolicy",
    "MembershipReport",
    "Proposition1Report",
    "AssumptionEntry",
    "AssumptionReport",
    "slack_budget",
    "log_lrt_moment",
    "lrt_moment",
    "log_commuting_moment",
    "commuting_moment",
    "membership",
    "commuting_membership",
    "proposition1_check",
    "log_model2_moment",
    "model2_moment",
    "log_model2_commuting_moment",
    "model2_commuting_moment",
    "model2_membership",
    "check_assumptions",
    "check_model2_assumptions",
]

import math
import typing

import numpy as np
import pydantic
import structlog

from .errors import BadParameter, EmptyFamily, LengthMismatch, check_same_dimension
from .matgauss import CovarianceMatrix, is_positive_definite

_log = structlog.get_logger("robustset")


class ExplicitSlack(pydantic.BaseModel):
    """Slack budget given directly, in nats."""

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["explicit"] = "explicit"
    epsilon: float = pydantic.Field(default=0.0, title="Budget (nats).", ge=0)


class SqrtSlack(pydantic.BaseModel):
    """Slack budget c sqrt(n), in nats."""

    model_config = pydantic.ConfigDict(frozen=True)

    kind: typing.Literal["default_sqrt"] = "default_sqrt"
    c: float = pydantic.Field(default=1.0, title="Scale of sqrt(n).", gt=0)


SlackPolicy = typing.Annotated[
    ExplicitSlack | SqrtSlack, pydantic.Field(discriminator="kind")
]


class MembershipReport(pydantic.BaseModel):
    """Outcome of a maximal-set membership test."""

    model_config = pydantic.ConfigDict(frozen=True)

    n: int = pydantic.Field(title="Dimension.")
    pd_guard_ok: bool = pydantic.Field(title="Is the PD guard satisfied?")
    log_moment: float = pydantic.Field(
        title="ln of the moment (nats); +inf if the guard fails."
    )
    slack_budget: float = pydantic.Field(title="Slack budget (nats).")
    member: bool = pydantic.Field(title="Guard ok and log_moment <= slack_budget.")
    core_member: bool = pydantic.Field(title="Guard ok and log_moment <= 0.")


class Proposition1Report(pydantic.BaseModel):
    """Outcome of the inverse check: can M0 replace a whole family?"""

    model_config = pydantic.ConfigDict(frozen=True)

    n: int = pydantic.Field(title="Dimension.")
    all_guards_ok: bool = pydantic.Field(title="PD guard holds for every member.")
    max_log_moment: float = pydantic.Field(title="max over the family of ln f(M0, V).")
    slack_budget: float = pydantic.Field(title="Slack budget (nats).")
    satisfied: bool = pydantic.Field(title="all_guards_ok and max <= budget.")
    log_moments: list[float] = pydantic.Field(title="ln f(M0, V) per member.")


class AssumptionEntry(pydantic.BaseModel):
    """Finite-n values of the two regularity assumptions for one matrix.

    For a covariance M, a1_value = (1/n) sum (ln lambda + 1/lambda - 1)
    and a2_value = (1/n) sum |1/lambda - 1|^(1+delta). For a signal
    covariance S the same fields hold the analogs in its eigenvalues mu.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    n: int
    a1_value: float
    a2_value: float


class AssumptionReport(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    delta: float
    entries: list[AssumptionEntry]
    max_a1_value: float
    max_a2_value: float


def slack_budget(policy: ExplicitSlack | SqrtSlack, n: int) -> float:
    """Return the slack budget of a policy at dimension n, in nats."""
    if isinstance(policy, ExplicitSlack):
        return float(policy.epsilon)
    elif isinstance(policy, SqrtSlack):
        return policy.c * math.sqrt(n)
    raise RuntimeError(f"Bug: unrecognized slack policy {policy!r}")


def _guard_log_det(m: CovarianceMatrix, v: CovarianceMatrix) -> float | None:
    """Return ln |I + V^-1 - M^-1|, or None if that matrix is not PD."""
    guard = np.eye(m.n) + v.inverse() - m.inverse()
    guard = (guard + guard.T) / 2
    if not is_positive_definite(guard):
        return None
    return math.fsum(np.log(np.linalg.eigvalsh(guard)))


def log_lrt_moment(m: CovarianceMatrix, v: CovarianceMatrix) -> float:
    """ln f(M, V), where f(M, V) = E_I[p_V / p_M].

    f(M, V) = |M|^(1/2) / |I + V (I - M^-1)|^(1/2), evaluated as
    exp(1/2 [ln |M| - ln |V| - ln |I + V^-1 - M^-1|]).

    Returns
    -------
    log_moment : `float`
        The log moment; +inf if I + V^-1 - M^-1 is not positive definite.

    Raises
    ------
    DimensionMismatch
        If the dimensions differ.
    """
    check_same_dimension(m, v)
    guard_log_det = _guard_log_det(m, v)
    if guard_log_det is None:
        return math.inf
    return 0.5 * (m.log_det - v.log_det - guard_log_det)


def lrt_moment(m: CovarianceMatrix, v: CovarianceMatrix) -> float:
    """f(M, V) = E_I[p_V / p_M]; +inf if the PD guard fails."""
    return math.exp(log_lrt_moment(m, v))


def _as_eigenvalue_pair(
    first: typing.Any, second: typing.Any
) -> tuple[np.ndarray, np.ndarray]:
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    if first.ndim != 1 or first.shape != second.shape:
        raise LengthMismatch(
            f"Eigenvalue lists differ in shape: {first.shape} != {second.shape}"
        )
    if np.any(first <= 0) or np.any(second <= 0):
        raise BadParameter("Eigenvalues must be positive")
    return first, second


def log_commuting_moment(lam: typing.Any, nu: typing.Any) -> float:
    """ln f(M, V) for commuting M, V from paired eigenvalues.

    f = prod lambda_i / [lambda_i + nu_i (lambda_i - 1)]^(1/2), or +inf
    unless every lambda_i + nu_i (lambda_i - 1) > 0.

    Raises
    ------
    LengthMismatch
        If the lists differ in length.
    """
    lam, nu = _as_eigenvalue_pair(lam, nu)
    denominators = lam + nu * (lam - 1)
    if np.any(denominators <= 0):
        return math.inf
    return math.fsum(np.log(lam) - 0.5 * np.log(denominators))


def commuting_moment(lam: typing.Any, nu: typing.Any) -> float:
    """f(M, V) for commuting M, V; see `log_commuting_moment`."""
    return math.exp(log_commuting_moment(lam, nu))


def _report(n: int, log_moment: float, budget: float) -> MembershipReport:
    pd_guard_ok = not math.isinf(log_moment)
    return MembershipReport(
        n=n,
        pd_guard_ok=pd_guard_ok,
        log_moment=log_moment,
        slack_budget=budget,
        member=pd_guard_ok and log_moment <= budget,
        core_member=pd_guard_ok and log_moment <= 0,
    )


def membership(
    m: CovarianceMatrix,
    v: CovarianceMatrix,
    policy: ExplicitSlack | SqrtSlack,
) -> MembershipReport:
    """Is V in the maximal robust set of M?

    Parameters
    ----------
    m : `CovarianceMatrix`
        Nominal covariance.
    v : `CovarianceMatrix`
        Candidate covariance.
    policy : `SlackPolicy`
        How to turn e^{o(n)} into a finite budget.

    Returns
    -------
    report : `MembershipReport`
        The report, with log_moment = ln f(M, V).
    """
    return _report(m.n, log_lrt_moment(m, v), slack_budget(policy, m.n))


def commuting_membership(
    lam: typing.Any, nu: typing.Any, policy: ExplicitSlack | SqrtSlack
) -> MembershipReport:
    """Membership test for commuting M, V from paired eigenvalues."""
    log_moment = log_commuting_moment(lam, nu)
    n = len(lam)
    return _report(n, log_moment, slack_budget(policy, n))


def proposition1_check(
    m0: CovarianceMatrix,
    family: list[CovarianceMatrix],
    policy: ExplicitSlack | SqrtSlack,
) -> Proposition1Report:
    """Can the likelihood ratio test of M0 serve a whole family?

    The conditions are the PD guard for every V in the family and
    max_V ln f(M0, V) <= slack budget.

    Raises
    ------
    EmptyFamily
        If the family is empty.
    DimensionMismatch
        If the dimensions differ.
    """
    if not family:
        raise EmptyFamily("The family of covariance matrices is empty")
    check_same_dimension(m0, *family)
    log_moments = [log_lrt_moment(m0, v) for v in family]
    all_guards_ok = not any(math.isinf(value) for value in log_moments)
    max_log_moment = max(log_moments)
    budget = slack_budget(policy, m0.n)
    return Proposition1Report(
        n=m0.n,
        all_guards_ok=all_guards_ok,
        max_log_moment=max_log_moment,
        slack_budget=budget,
        satisfied=all_guards_ok and max_log_moment <= budget,
        log_moments=log_moments,
    )


def log_model2_moment(s: CovarianceMatrix, v: CovarianceMatrix) -> float:
    """ln t(S, V) for the signal-plus-noise model.

    t(S, V) = |I + S + (V - S) S (I + S)^-1| / |I + S|, defined when
    I + (I + V)^-1 - (I + S)^-1 > 0.

    Returns
    -------
    log_moment : `float`
        ln t(S, V), or +inf if the guard fails.
    """
    n = check_same_dimension(s, v)
    shifted_s = s.shifted()
    if _guard_log_det(shifted_s, v.shifted()) is None:
        return math.inf
    identity = np.eye(n)
    numerator = (
        identity + s.entries + (v.entries - s.entries) @ s.entries @ shifted_s.inverse()
    )
    sign, log_det = np.linalg.slogdet(numerator)
    if sign <= 0:
        _log.warning("Model-2 numerator determinant is not positive", sign=sign)
        return math.inf
    return float(log_det) - shifted_s.log_det


def model2_moment(s: CovarianceMatrix, v: CovarianceMatrix) -> float:
    """t(S, V); see `log_model2_moment`."""
    return math.exp(log_model2_moment(s, v))


def log_model2_commuting_moment(mu: typing.Any, nu: typing.Any) -> float:
    """ln t(S, V) for commuting S, V from paired eigenvalues.

    t = prod [1 + (nu_i - mu_i) mu_i / (1 + mu_i)^2], or +inf if any
    factor is not positive.
    """
    mu, nu = _as_eigenvalue_pair(mu, nu)
    factors = 1 + (nu - mu) * mu / (1 + mu) ** 2
    if np.any(factors <= 0):
        return math.inf
    return math.fsum(np.log(factors))


def model2_commuting_moment(mu: typing.Any, nu: typing.Any) -> float:
    """t(S, V) for commuting S, V; see `log_model2_commuting_moment`."""
    return math.exp(log_model2_commuting_moment(mu, nu))


def model2_membership(
    s: CovarianceMatrix,
    v: CovarianceMatrix,
    policy: ExplicitSlack | SqrtSlack,
) -> MembershipReport:
    """Is the signal covariance V in the maximal robust set of S?"""
    return _report(s.n, log_model2_moment(s, v), slack_budget(policy, s.n))


def _assumption_report(
    entries: list[AssumptionEntry], delta: float
) -> AssumptionReport:
    return AssumptionReport(
        delta=delta,
        entries=entries,
        max_a1_value=max(entry.a1_value for entry in entries),
        max_a2_value=max(entry.a2_value for entry in entries),
    )


def check_assumptions(
    family: list[CovarianceMatrix], delta: float
) -> AssumptionReport:
    """Finite-n values of the regularity assumptions on covariances M.

    No limit is asserted; uniform convergence cannot be checked at
    finite n.

    Raises
    ------
    EmptyFamily
        If the family is empty.
    """
    if not family:
        raise EmptyFamily("The family of covariance matrices is empty")
    if delta <= 0:
        raise BadParameter(f"delta={delta!r} must be positive")
    entries = []
    for matrix in family:
        lam = matrix.eigenvalues
        entries.append(
            AssumptionEntry(
                n=matrix.n,
                a1_value=math.fsum(np.log(lam) + 1 / lam - 1) / matrix.n,
                a2_value=math.fsum(np.abs(1 / lam - 1) ** (1 + delta)) / matrix.n,
            )
        )
    return _assumption_report(entries, delta)


def check_model2_assumptions(
    family: list[CovarianceMatrix], delta: float
) -> AssumptionReport:
    """Finite-n values of the regularity assumptions on signal covariances.

    For signal covariances S with eigenvalues mu:
    a1_value = (1/n) sum [ln(mu + 1) + 1/(mu + 1) - 1] and
    a2_value = (1/n) sum [mu / (mu + 1)]^(1+delta).
    """
    if not family:
        raise EmptyFamily("The family of covariance matrices is empty")
    if delta <= 0:
        raise BadParameter(f"delta={delta!r} must be positive")
    entries = []
    for matrix in family:
        shifted = matrix.eigenvalues + 1
        entries.append(
            AssumptionEntry(
                n=matrix.n,
                a1_value=math.fsum(np.log(shifted) + 1 / shifted - 1) / matrix.n,
                a2_value=math.fsum((matrix.eigenvalues / shifted) ** (1 + delta))
                / matrix.n,
            )
        )
    return _assumption_report(entries, delta)
