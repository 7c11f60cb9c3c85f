"""Deterministic quantities of the limit theorem for the variance estimator."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import IndeterminateThetaError, QuadratureError, ValidationError
from .estimate import Estimate
from .models import ImmigrationModel, OffspringModel, ThetaClass, offspring_moments, validate_regime
from .regvar import compare, n_term

QUAD_EPSABS = 1e-10


class RateWarning(RuntimeWarning):
    """theta_n * n does not diverge, so the normalization has no growing rate."""


@dataclass(frozen=True)
class AsymptoticParams:
    n: int
    A_n: float
    tau_sq_n: float
    H_sq_n: float
    theta_n: float
    theta: float
    sigma_sq: float
    alpha: float
    gamma: float
    b_sq: float
    theta_source: str = "symbolic"

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def mean_sequence(imm: ImmigrationModel, n) -> float:
    """A_n = E Z_n = alpha_1 + ... + alpha_n (critical offspring, Z_0 = 0)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    alpha, _, _ = imm.moments(np.arange(1, int(n) + 1))
    return math.fsum(alpha)


def mean_path(imm: ImmigrationModel, n) -> np.ndarray:
    """A_0..A_n as an array (A_0 = 0)."""
    alpha, _, _ = imm.moments(np.arange(1, int(n) + 1))
    return np.concatenate([[0.0], np.cumsum(alpha)])


def theta_n_value(n, A_n, tau_sq):
    """n A_n^2 / (n A_n^2 + tau_n^2)."""
    na2 = n * A_n * A_n
    return na2 / (na2 + tau_sq)


def sigma_squared(theta, alpha, gamma, b_sq):
    """Limit variance (2a+3)^2 (theta 2b^4/(4a+5) + (1-theta)(g+1)/(2a+3+g))."""
    return (2 * alpha + 3) ** 2 * (
        theta * 2 * b_sq**2 / (4 * alpha + 5)
        + (1 - theta) * (gamma + 1) / (2 * alpha + 3 + gamma)
    )


def zeta_variance(theta, alpha, gamma, b_sq):
    """Closed-form E zeta^2 for zeta = int_0^1 (V(1) - V(u)) u^alpha du."""
    return (
        theta * 2 * b_sq**2 / (4 * alpha + 5)
        + (1 - theta) * (gamma + 1) / (2 * alpha + gamma + 3)
    ) / (alpha + 1) ** 2


def _rate_diverges(imm: ImmigrationModel, theta_class) -> bool:
    if theta_class in (ThetaClass.ONE, ThetaClass.INTERIOR):
        return True
    lead = imm.leading_terms()
    if lead is None:
        return True
    a, _, g4 = lead
    # theta = 0: n * theta_n grows like n^3 alpha_n^2 / gamma_n^4
    return compare(n_term(3) * a**2, g4) > 0


def theta_params(off: OffspringModel, imm: ImmigrationModel, n, theta=None) -> AsymptoticParams:
    """All deterministic limit-theorem quantities at horizon n.

    theta defaults to the symbolic classification; pass it explicitly when the
    classification is indeterminate or to override it.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    b_sq = offspring_moments(off)[1]
    report = validate_regime(off, imm)
    k = np.arange(1, n + 1)
    alpha_k, _, gamma4_k = imm.moments(k)
    A_n = math.fsum(alpha_k)
    tau_sq = math.fsum(gamma4_k)
    H_sq = n * A_n * A_n + tau_sq
    theta_n = theta_n_value(n, A_n, tau_sq)
    alpha, _, gamma = imm.exponents()
    if theta is None:
        if report.theta_class == ThetaClass.INDETERMINATE:
            raise IndeterminateThetaError(
                "theta cannot be classified for this immigration model; pass theta explicitly"
            )
        if not report.theorem_applies:
            raise ValidationError(f"moment conditions not satisfied: {report.to_dict()}")
        theta = report.theta
        source = "symbolic"
    else:
        theta = float(theta)
        if not 0.0 <= theta <= 1.0:
            raise ValidationError("theta must lie in [0, 1]")
        source = "manual"
        if report.theta is not None and not math.isclose(theta, report.theta, abs_tol=1e-12):
            warnings.warn(
                f"manual theta={theta} differs from the symbolic value {report.theta}",
                stacklevel=2,
            )
    cls = report.theta_class
    if source == "manual":
        cls = ThetaClass.ZERO if theta == 0 else ThetaClass.ONE
    if not _rate_diverges(imm, cls):
        warnings.warn("theta_n * n does not diverge for this model", RateWarning, stacklevel=2)
    return AsymptoticParams(
        n=n,
        A_n=A_n,
        tau_sq_n=tau_sq,
        H_sq_n=H_sq,
        theta_n=theta_n,
        theta=theta,
        sigma_sq=sigma_squared(theta, alpha, gamma, b_sq),
        alpha=alpha,
        gamma=gamma,
        b_sq=b_sq,
        theta_source=source,
    )


def normalized_statistic(est: Estimate, b_sq_true, params: AsymptoticParams) -> float:
    """(theta_n n)^{1/2} (bhat^2_n - b^2)."""
    if est.n != params.n:
        raise ValidationError(f"estimate horizon {est.n} != params horizon {params.n}")
    return math.sqrt(params.theta_n * params.n) * (est.value - b_sq_true)


def limit_covariance(t, params: AsymptoticParams, b_sq=None):
    """C(t) = theta 2b^4 t^(2a+3)/(2a+3) + (1-theta) t^(g+1)."""
    if b_sq is None:
        b_sq = params.b_sq
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValidationError("t must be >= 0")
    a, g, th = params.alpha, params.gamma, params.theta
    out = th * 2 * b_sq**2 * t_arr ** (2 * a + 3) / (2 * a + 3) + (1 - th) * t_arr ** (g + 1)
    return float(out) if out.ndim == 0 else out


def zeta_variance_crosscheck(params: AsymptoticParams, b_sq=None, epsabs=QUAD_EPSABS):
    """Closed-form E zeta^2 and the same quantity by adaptive double quadrature.

    The integrand s^a t^a K(max(s, t)) is integrated separately over the two
    triangles s < t and s > t so neither piece crosses the diagonal kink.
    """
    if b_sq is None:
        b_sq = params.b_sq
    a, g, th = params.alpha, params.gamma, params.theta
    closed = zeta_variance(th, a, g, b_sq)

    def kernel(u):
        return th * 2 * b_sq**2 * (1 - u ** (2 * a + 3)) / (2 * a + 3) + (1 - th) * (1 - u ** (g + 1))

    # dblquad integrates f(y, x) with y inner
    lower, err1 = integrate.dblquad(
        lambda s, t: s**a * t**a * kernel(t), 0, 1, 0, lambda t: t,
        epsabs=epsabs, epsrel=1e-12,
    )
    upper, err2 = integrate.dblquad(
        lambda s, t: s**a * t**a * kernel(s), 0, 1, lambda t: t, 1,
        epsabs=epsabs, epsrel=1e-12,
    )
    err = err1 + err2
    numeric = lower + upper
    if not math.isfinite(numeric) or err > max(10 * epsabs, 1e-8 * abs(numeric)):
        raise QuadratureError(err, epsabs)
    return closed, numeric


def population_moments(off: OffspringModel, imm: ImmigrationModel, n):
    """Exact E Z_k and E Z_k^2 for k = 0..n.

    Uses E Z_k = E Z_{k-1} + alpha_k and
    Var Z_k = Var Z_{k-1} + b^2 E Z_{k-1} + beta_k^2.
    """
    b_sq = offspring_moments(off)[1]
    alpha, beta2, _ = imm.moments(np.arange(1, int(n) + 1))
    mean = np.zeros(n + 1)
    var = np.zeros(n + 1)
    for k in range(1, n + 1):
        mean[k] = mean[k - 1] + alpha[k - 1]
        var[k] = var[k - 1] + b_sq * mean[k - 1] + beta2[k - 1]
    return mean, var + mean * mean


def error_second_moments(off: OffspringModel, imm: ImmigrationModel, n):
    """Exact E V_k^2 for k = 1..n.

    E_{k-1} V_k^2 = 2b^4 Z(Z-1) + gamma_k^4 + (4 b^2 beta_k^2 + E Ytilde^2) Z
    with Z = Z_{k-1}; the three parts of V_k are conditionally uncorrelated.
    """
    _, b_sq, _, _, ey2 = offspring_moments(off)
    _, beta2, gamma4 = imm.moments(np.arange(1, int(n) + 1))
    m, s = population_moments(off, imm, n)
    m, s = m[:-1], s[:-1]
    return 2 * b_sq**2 * (s - m) + gamma4 + (4 * b_sq * beta2 + ey2) * m
