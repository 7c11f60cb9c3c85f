import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from branchimm import asymptotics
from branchimm.asymptotics import (
    RateWarning,
    error_second_moments,
    limit_covariance,
    mean_path,
    mean_sequence,
    normalized_statistic,
    population_moments,
    sigma_squared,
    theta_n_value,
    theta_params,
    zeta_variance,
    zeta_variance_crosscheck,
)
from branchimm.errors import IndeterminateThetaError, QuadratureError, ValidationError
from branchimm.estimate import Estimate
from branchimm.models import ImmigrationModel, OffspringModel
from branchimm.regvar import RegVarSeq

from conftest import neyman_a_pmf_grid

thetas = st.floats(0.0, 1.0)
alphas = st.floats(0.0, 3.0)
gammas = st.floats(0.0, 6.0)
bsqs = st.floats(0.05, 5.0)


def test_trivial_substitutions():
    p = theta_params(OffspringModel.poisson1(), ImmigrationModel.poisson_seq(RegVarSeq(1.0)), 10)
    assert limit_covariance(0.0, p) == 0.0
    one = asymptotics.AsymptoticParams(1, 1, 1, 1, 0.5, 1.0, 0.0, 0.0, 1.0, 1.0)
    assert limit_covariance(1.0, one) == pytest.approx(2 / 3)
    assert zeta_variance(1.0, 0.0, 1.0, 1.0) == pytest.approx(2 / 5)
    # (gamma + 1) / (2 alpha + gamma + 3) = 2 / 4
    assert zeta_variance(0.0, 0.0, 1.0, 1.0) == pytest.approx(1 / 2)
    assert sigma_squared(1.0, 0.5, 1.0, 2.0) == pytest.approx(128 / 7)
    with pytest.raises(ValidationError):
        limit_covariance(-0.1, p)


def test_geometric_sqrt_poisson_params(geometric_sqrt_models):
    off, imm = geometric_sqrt_models
    p = theta_params(off, imm, 2000)
    assert p.theta == 1.0 and p.theta_source == "symbolic"
    assert p.sigma_sq == pytest.approx(128 / 7)
    A = math.fsum(k**0.5 for k in range(1, 2001))
    tau2 = math.fsum(k**0.5 + 2 * k for k in range(1, 2001))
    assert p.A_n == pytest.approx(A, rel=1e-14)
    assert p.tau_sq_n == pytest.approx(tau2, rel=1e-14)
    assert p.theta_n == pytest.approx(2000 * A * A / (2000 * A * A + tau2), rel=1e-14)
    assert mean_sequence(imm, 2000) == pytest.approx(A, rel=1e-14)
    assert mean_path(imm, 5)[0] == 0.0
    assert json.loads(p.dumps())["sigma_sq"] == p.sigma_sq


@given(thetas, alphas, gammas, bsqs)
def test_sigma_equals_scaled_zeta_variance(th, a, g, b2):
    lhs = (2 * a + 3) ** 2 * (a + 1) ** 2 * zeta_variance(th, a, g, b2)
    assert lhs == pytest.approx(sigma_squared(th, a, g, b2), rel=1e-12)


@given(alphas, gammas, bsqs)
def test_sigma_interpolates_endpoints(a, g, b2):
    s0 = sigma_squared(0.0, a, g, b2)
    s1 = sigma_squared(1.0, a, g, b2)
    assert s1 == pytest.approx((2 * a + 3) ** 2 * 2 * b2**2 / (4 * a + 5))
    assert s0 == pytest.approx((2 * a + 3) ** 2 * (g + 1) / (2 * a + 3 + g))
    for th in (0.0, 0.25, 0.5, 1.0):
        assert sigma_squared(th, a, g, b2) == pytest.approx((1 - th) * s0 + th * s1, rel=1e-12)
    eps = 1e-9
    assert abs(sigma_squared(0.5 + eps, a, g, b2) - sigma_squared(0.5, a, g, b2)) < 1e-6 * (1 + s0 + s1)


@given(alphas, bsqs)
def test_covariance_at_one_with_theta_one(a, b2):
    p = asymptotics.AsymptoticParams(1, 1, 1, 1, 1, 1.0, 0.0, a, 2.0, b2)
    assert limit_covariance(1.0, p) == pytest.approx(2 * b2**2 / (2 * a + 3))


@given(st.integers(1, 10**6), st.floats(1.0, 1e6), st.floats(1.0, 1e12), st.floats(1e-3, 0.5))
def test_theta_n_monotone(n, A, tau2, bump):
    base = theta_n_value(n, A, tau2)
    assert 0 < base <= 1
    assert theta_n_value(n, A * (1 + bump), tau2) >= base
    assert theta_n_value(n, A, tau2 * (1 + bump)) <= base
    # strict unless the ratio has saturated in floating point
    if 1e-6 < base < 1 - 1e-6:
        assert theta_n_value(n, A * (1 + bump), tau2) > base
        assert theta_n_value(n, A, tau2 * (1 + bump)) < base


@settings(max_examples=20, deadline=None)
@given(thetas, alphas, gammas, bsqs)
def test_quadrature_agrees_with_closed_form(th, a, g, b2):
    p = asymptotics.AsymptoticParams(1, 1, 1, 1, 1, th, 0.0, a, g, b2)
    closed, numeric = zeta_variance_crosscheck(p)
    assert abs(closed - numeric) / closed < 1e-6


def test_quadrature_error_is_reported(monkeypatch):
    p = asymptotics.AsymptoticParams(1, 1, 1, 1, 1, 1.0, 0.0, 0.0, 1.0, 1.0)
    monkeypatch.setattr(asymptotics.integrate, "dblquad", lambda *a, **k: (0.1, 1.0))
    with pytest.raises(QuadratureError) as info:
        zeta_variance_crosscheck(p)
    assert info.value.achieved > info.value.requested


def test_theta_params_errors():
    off = OffspringModel.poisson1()
    with pytest.raises(IndeterminateThetaError):
        theta_params(off, ImmigrationModel.homogeneous_poisson(5), 100)
    p = theta_params(off, ImmigrationModel.homogeneous_poisson(5), 100, theta=0.3)
    assert p.theta_source == "manual" and p.theta == 0.3
    with pytest.raises(ValidationError, match="moment conditions"):
        theta_params(off, ImmigrationModel.poisson_seq(RegVarSeq(0.0, 3.0)), 100)
    with pytest.raises(ValidationError):
        theta_params(off, ImmigrationModel.poisson_seq(RegVarSeq(0.5)), 100, theta=1.5)
    with pytest.raises(ValidationError):
        theta_params(off, ImmigrationModel.poisson_seq(RegVarSeq(0.5)), 0)


def test_manual_theta_disagreeing_with_symbolic_warns(geometric_sqrt_models):
    off, imm = geometric_sqrt_models
    with pytest.warns(UserWarning, match="differs"):
        p = theta_params(off, imm, 100, theta=0.0)
    assert p.sigma_sq == pytest.approx(sigma_squared(0.0, 0.5, 1.0, 2.0))


def test_rate_warning_when_theta_n_times_n_stays_bounded():
    imm = ImmigrationModel.neyman_a(RegVarSeq(0.1), RegVarSeq(2.0))
    with pytest.warns(RateWarning):
        p = theta_params(OffspringModel.poisson1(), imm, 500)
    assert p.theta == 0.0
    assert p.theta_n * p.n < 10
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        theta_params(OffspringModel.poisson1(), ImmigrationModel.neyman_a(RegVarSeq(0.1), RegVarSeq(1.1)), 500)


def test_normalized_statistic(geometric_sqrt_models):
    off, imm = geometric_sqrt_models
    p = theta_params(off, imm, 50)
    est = Estimate(2.5, 50, 0.0, 1.0, "clse")
    assert normalized_statistic(est, 2.0, p) == pytest.approx(math.sqrt(p.theta_n * 50) * 0.5)
    with pytest.raises(ValidationError):
        normalized_statistic(Estimate(2.5, 49, 0.0, 1.0, "clse"), 2.0, p)


# --------------------------------------------------------------------------
# exact finite-n moments against brute-force distribution propagation
# --------------------------------------------------------------------------


def _conditional_rows(off, imm, k, top):
    """T[i, j] = P(Z_k = j | Z_{k-1} = i) on 0..top."""
    x = np.arange(top + 1)
    if imm.family == "poisson_seq":
        imm_pmf = stats.poisson.pmf(x, imm.alpha(k))
    else:
        imm_pmf = neyman_a_pmf_grid(imm.lam(k), imm.phi(k), top)[1]
    T = np.zeros((top + 1, top + 1))
    for i in range(top + 1):
        if i == 0:
            off_pmf = (x == 0).astype(float)
        elif off.family == "poisson1":
            off_pmf = stats.poisson.pmf(x, i)
        else:
            off_pmf = stats.nbinom.pmf(x, i, 0.5)
        T[i] = np.convolve(off_pmf, imm_pmf)[: top + 1]
    return T


def _propagate(off, imm, n, top):
    b2 = off.b_sq
    alpha, beta2, _ = imm.moments(np.arange(1, n + 1))
    x = np.arange(top + 1, dtype=float)
    p = (x == 0).astype(float)
    ez, ez2, ev2 = [0.0], [0.0], []
    for k in range(1, n + 1):
        T = _conditional_rows(off, imm, k, top)
        v = ((x[None, :] - x[:, None] - alpha[k - 1]) ** 2 - b2 * x[:, None] - beta2[k - 1]) ** 2
        ev2.append(float(p @ (T * v).sum(axis=1)))
        p = p @ T
        ez.append(float(p @ x))
        ez2.append(float(p @ (x * x)))
    return np.array(ez), np.array(ez2), np.array(ev2)


@pytest.mark.parametrize(
    "off, imm, n",
    [
        (OffspringModel.poisson1(), ImmigrationModel.poisson_seq(RegVarSeq(0.5)), 8),
        (OffspringModel.geometric1(), ImmigrationModel.neyman_a(RegVarSeq(0.5), RegVarSeq(0.5)), 6),
    ],
)
def test_exact_moments_against_pmf_propagation(off, imm, n):
    ez, ez2, ev2 = _propagate(off, imm, n, top=260)
    mean, second = population_moments(off, imm, n)
    assert mean == pytest.approx(ez, rel=1e-9)
    assert second == pytest.approx(ez2, rel=1e-9)
    assert error_second_moments(off, imm, n) == pytest.approx(ev2, rel=1e-9)


def test_error_second_moments_against_ensemble(geometric_sqrt_models, short_ensemble):
    off, imm = geometric_sqrt_models
    z = short_ensemble.astype(float)
    alpha, beta2, _ = imm.moments(np.arange(1, 21))
    v = (np.diff(z, axis=1) - alpha) ** 2 - off.b_sq * z[:, :-1] - beta2
    emp = (v * v).mean(axis=0)
    se = (v * v).std(axis=0, ddof=1) / math.sqrt(len(z))
    assert np.all(np.abs(emp - error_second_moments(off, imm, 20)) < 5 * se)
