"""Martingale residuals, least squares variance estimators and the error decomposition."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DecompositionError, DegenerateEstimatorError, ValidationError
from .models import ImmigrationModel, OffspringModel, offspring_moments
from .simulate import Trajectory

DECOMPOSITION_RTOL = 1e-9


@dataclass
class ResidualSeries:
    """M_1..M_n and optionally V_1..V_n with its three parts."""

    m: np.ndarray
    v: Optional[np.ndarray] = None
    parts: Optional[tuple] = None


@dataclass(frozen=True)
class Estimate:
    value: float
    n: int
    numerator: float
    denominator: float
    kind: str

    def to_row(self, seed="", replication=""):
        return {
            "n": self.n,
            "kind": self.kind,
            "value": repr(self.value),
            "numerator": repr(self.numerator),
            "denominator": repr(self.denominator),
            "seed": seed,
            "replication": replication,
        }


ESTIMATE_COLUMNS = ("n", "kind", "value", "numerator", "denominator", "seed", "replication")


def _z(traj):
    z = traj.z if isinstance(traj, Trajectory) else np.asarray(traj)
    if len(z) < 2:
        raise ValidationError("trajectory needs at least Z_0 and Z_1")
    return np.asarray(z, dtype=np.int64)


def residuals(traj, imm: ImmigrationModel) -> ResidualSeries:
    """M_k = Z_k - Z_{k-1} - alpha_k for k = 1..n."""
    z = _z(traj)
    n = len(z) - 1
    alpha, _, _ = imm.moments(np.arange(1, n + 1))
    return ResidualSeries(m=(z[1:] - z[:-1]).astype(float) - alpha)


def variance_residuals(traj, off: OffspringModel, imm: ImmigrationModel) -> ResidualSeries:
    """M_k together with V_k = M_k^2 - b^2 Z_{k-1} - beta_k^2, using the true b^2."""
    z = _z(traj)
    n = len(z) - 1
    alpha, beta2, _ = imm.moments(np.arange(1, n + 1))
    b_sq = offspring_moments(off)[1]
    m = (z[1:] - z[:-1]).astype(float) - alpha
    return ResidualSeries(m=m, v=m * m - b_sq * z[:-1] - beta2)


def clse_variance(traj, imm: ImmigrationModel) -> Estimate:
    """Conditional least squares estimate of the offspring variance.

    ``sum((M_k^2 - beta_k^2) Z_{k-1}) / sum(Z_{k-1}^2)`` over k = 1..n, with
    alpha_k and beta_k^2 taken as known. The true b^2 is never used.
    """
    z = _z(traj)
    n = len(z) - 1
    alpha, beta2, _ = imm.moments(np.arange(1, n + 1))
    zprev = z[:-1].astype(float)
    m = (z[1:] - z[:-1]).astype(float) - alpha
    num = math.fsum((m * m - beta2) * zprev)
    den = math.fsum(zprev * zprev)
    if den == 0:
        raise DegenerateEstimatorError("all Z_{k-1} are zero; the estimator is undefined")
    return Estimate(num / den, n, num, den, "clse")


def clse_variance_homogeneous(traj, offspring_mean=1.0, imm_mean=None) -> Estimate:
    """Centered least squares estimator for homogeneous immigration with known means.

    ``sum(M*_k^2 (Z_{k-1} - Zbar)) / sum((Z_{k-1} - Zbar)^2)`` where
    ``M*_k = Z_k - m Z_{k-1} - imm_mean`` and Zbar is the mean of Z_0..Z_{n-1}.
    """
    if imm_mean is None:
        raise ValidationError("imm_mean is required")
    z = _z(traj)
    n = len(z) - 1
    zprev = z[:-1].astype(float)
    zbar = math.fsum(zprev) / n
    centered = zprev - zbar
    m = z[1:].astype(float) - offspring_mean * zprev - imm_mean
    num = math.fsum(m * m * centered)
    den = math.fsum(centered * centered)
    if den == 0:
        raise DegenerateEstimatorError("Z_{k-1} is constant; the centered regression is degenerate")
    return Estimate(num / den, n, num, den, "homogeneous")


def decompose_error(traj: Trajectory, off: OffspringModel, imm: ImmigrationModel) -> ResidualSeries:
    """Split V_k into the three martingale-difference parts from per-individual records.

    With Xt = X - 1, S_j the partial sums of Xt, xit = xi_k - alpha_k:

    * V1 = 2 sum_{j=2}^{Z_{k-1}} Xt_j S_{j-1} + (xit^2 - beta_k^2)
    * V2 = 2 xit sum_i Xt_i
    * V3 = sum_i (Xt_i^2 - b^2)

    Raises DecompositionError if V1 + V2 + V3 departs from V_k by more than
    1e-9 relative to 1 + |V_k|.
    """
    if traj.offspring is None or traj.xi is None:
        raise ValidationError("decompose_error needs offspring records and immigration values")
    z = _z(traj)
    n = len(z) - 1
    alpha, beta2, _ = imm.moments(np.arange(1, n + 1))
    b_sq = offspring_moments(off)[1]
    base = variance_residuals(traj, off, imm)
    v1 = np.empty(n)
    v2 = np.empty(n)
    v3 = np.empty(n)
    for k in range(n):
        xt = traj.offspring[k] - 1
        xit = float(traj.xi[k]) - alpha[k]
        eta = xit * xit - beta2[k]
        if xt.size:
            s = np.cumsum(xt)
            # integer arithmetic keeps the double sum exact
            cross = int(xt[1:] @ s[:-1])
            tot = int(s[-1])
            sq = int(xt @ xt)
        else:
            cross = tot = sq = 0
        v1[k] = 2.0 * cross + eta
        v2[k] = 2.0 * xit * tot
        v3[k] = sq - b_sq * xt.size
    gap = np.abs(base.v - (v1 + v2 + v3)) / (1.0 + np.abs(base.v))
    if gap.size and gap.max() > DECOMPOSITION_RTOL:
        k = int(gap.argmax()) + 1
        raise DecompositionError(f"decomposition off by {gap.max():.3g} at k={k}")
    return ResidualSeries(m=base.m, v=base.v, parts=(v1, v2, v3))
