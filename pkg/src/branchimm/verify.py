"""Monte Carlo checks of the limit theorem and its supporting limit laws.

Every experiment fans replications out over a process pool. Replication ``r``
depends only on ``(master_seed, r)``, so results do not depend on the worker
count; rows are always returned in replication order.
"""
from __future__ import annotations

import csv
import io
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import __version__
from .asymptotics import (
    error_second_moments,
    limit_covariance,
    mean_path,
    normalized_statistic,
    theta_params,
)
from .errors import (
    DegenerateEstimatorError,
    ExperimentError,
    PopulationOverflowError,
    ValidationError,
)
from .estimate import clse_variance, variance_residuals
from .models import ImmigrationModel, OffspringModel, sample_immigration, validate_regime
from .regvar import RegVarSeq, compare, n_term
from .simulate import SimConfig, replication_stream, simulate

MIN_REPLICATIONS = 100
MAX_FAILURE_FRACTION = 0.10
TOLERANCE_NOTE = (
    "convergence holds in distribution with no rate; Monte Carlo tolerances "
    "are engineering choices"
)
REPLICATION_COLUMNS = ("replication", "seed", "b2hat", "statistic", "status")


def floor_index(n, t):
    """[nt] as an integer, robust to representation error in t."""
    return int(math.floor(round(n * t, 9)))


def run_replications(worker, payloads, workers=1):
    """Apply ``worker`` to each payload, in order, optionally over a process pool."""
    payloads = list(payloads)
    if workers is None or workers <= 1 or len(payloads) < 2:
        return [worker(p) for p in payloads]
    chunk = max(1, len(payloads) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, payloads, chunksize=chunk))


# --------------------------------------------------------------------------
# goodness of fit
# --------------------------------------------------------------------------


def ks_distance(x, sigma):
    """Kolmogorov-Smirnov distance and p-value of ``x`` against N(0, sigma^2)."""
    res = stats.kstest(np.asarray(x, dtype=float), "norm", args=(0.0, sigma))
    return float(res.statistic), float(res.pvalue)


def anderson_darling(x, sigma):
    """Anderson-Darling A^2 of ``x`` against the fully specified N(0, sigma^2)."""
    u = np.sort(np.asarray(x, dtype=float)) / sigma
    m = len(u)
    i = np.arange(1, m + 1)
    logcdf = special.log_ndtr(u)
    logsf = special.log_ndtr(-u[::-1])
    return float(-m - np.sum((2 * i - 1) * (logcdf + logsf)) / m)


# --------------------------------------------------------------------------
# normality experiment
# --------------------------------------------------------------------------


@dataclass
class McSummary:
    replications: int
    horizon: int
    sigma_sq: float
    statistics: np.ndarray
    b2hat: np.ndarray
    rows: list
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    ks_pvalue: float
    anderson_darling: float
    failures: dict
    elapsed: float
    provenance: dict
    params: dict
    warnings: list = field(default_factory=list)

    def replication_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPLICATION_COLUMNS)
        for r in sorted(self.rows, key=lambda r: r[0]):
            w.writerow([r[0], r[1], "" if r[2] is None else repr(r[2]),
                        "" if r[3] is None else repr(r[3]), r[4]])
        return buf.getvalue()

    def report(self) -> dict:
        return {
            "replications": self.replications,
            "horizon": self.horizon,
            "sigma_sq": self.sigma_sq,
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "ks_distance": self.ks_distance,
            "ks_pvalue": self.ks_pvalue,
            "anderson_darling": self.anderson_darling,
            "failures": dict(self.failures),
            "elapsed_seconds": self.elapsed,
            "params": self.params,
            "provenance": self.provenance,
            "warnings": list(self.warnings),
            "note": TOLERANCE_NOTE,
        }


def _normality_rep(payload):
    off, imm, seed, r, params = payload
    try:
        traj = simulate(off, imm, SimConfig(params.n, seed, r))
        est = clse_variance(traj, imm)
    except DegenerateEstimatorError:
        return (r, seed, None, None, "degenerate")
    except PopulationOverflowError:
        return (r, seed, None, None, "overflow")
    return (r, seed, est.value, normalized_statistic(est, params.b_sq, params), "ok")


def normality_experiment(
    off: OffspringModel,
    imm: ImmigrationModel,
    n,
    R,
    master_seed,
    workers=1,
    theta=None,
) -> McSummary:
    """Simulate R trajectories and compare the normalized estimator to N(0, sigma^2).

    The statistic is (theta_n n)^{1/2}(bhat^2_n - b^2) with the exact finite-n
    theta_n; sigma^2 uses the limiting theta (symbolic unless ``theta`` is given).
    """
    if R < MIN_REPLICATIONS:
        raise ValidationError(f"need at least {MIN_REPLICATIONS} replications, got {R}")
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        params = theta_params(off, imm, n, theta=theta)
    notes = [str(w.message) for w in caught]
    b_sq = params.b_sq
    payloads = [(off, imm, master_seed, r, params) for r in range(R)]
    rows = run_replications(_normality_rep, payloads, workers)
    rows.sort(key=lambda r: r[0])
    ok = [r for r in rows if r[4] == "ok"]
    failures = {
        "degenerate": sum(r[4] == "degenerate" for r in rows),
        "overflow": sum(r[4] == "overflow" for r in rows),
    }
    if sum(failures.values()) > MAX_FAILURE_FRACTION * R:
        raise ExperimentError(f"{sum(failures.values())} of {R} replications failed: {failures}")
    x = np.array([r[3] for r in ok], dtype=float)
    b2 = np.array([r[2] for r in ok], dtype=float)
    sigma = math.sqrt(params.sigma_sq)
    if b_sq == 0 or np.ptp(x) == 0:
        notes.append("degenerate model: the statistic has no randomness")
    if sigma > 0:
        ks, ks_p = ks_distance(x, sigma)
        ad = anderson_darling(x, sigma)
    else:
        notes.append("sigma^2 = 0; goodness of fit against N(0, 0) is undefined")
        ks = ks_p = ad = math.nan
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        skew = float(stats.skew(x)) if len(x) > 2 else math.nan
        kurt = float(stats.kurtosis(x)) if len(x) > 3 else math.nan
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    provenance = {
        "offspring": off.to_dict(),
        "immigration": imm.to_dict(),
        "horizon": int(n),
        "replications": int(R),
        "master_seed": int(master_seed),
        "theta_override": theta,
        "stream": "PCG64(SeedSequence(master_seed, spawn_key=(replication,)))",
        "version": __version__,
    }
    return McSummary(
        replications=R,
        horizon=n,
        sigma_sq=params.sigma_sq,
        statistics=x,
        b2hat=b2,
        rows=rows,
        mean=float(x.mean()) if len(x) else math.nan,
        variance=float(x.var(ddof=1)) if len(x) > 1 else math.nan,
        skewness=skew,
        excess_kurtosis=kurt,
        ks_distance=ks,
        ks_pvalue=ks_p,
        anderson_darling=ad,
        failures=failures,
        elapsed=time.perf_counter() - start,
        provenance=provenance,
        params=params.to_dict(),
        warnings=notes,
    )


# --------------------------------------------------------------------------
# tabular checks
# --------------------------------------------------------------------------


@dataclass
class CheckTable:
    name: str
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        return buf.getvalue()

    def format(self) -> str:
        lines = [self.name, "  ".join(f"{c:>16}" for c in self.columns)]
        for r in self.rows:
            lines.append("  ".join(f"{v:>16.8g}" if isinstance(v, (float, np.floating, int)) else f"{v:>16}" for v in r))
        return "\n".join(lines)


def _rel_error(empirical, limit):
    if limit == 0:
        return abs(empirical - limit)
    return abs(empirical - limit) / abs(limit)


def _phi_power(phi, power):
    if phi == "identity":
        return 1.0
    if phi == "square":
        return 2.0
    if phi == "power":
        if power is None or not 0 <= power <= 4:
            raise ValidationError("power(p) needs 0 <= p <= 4")
        return float(power)
    raise ValidationError(f"unsupported Phi {phi!r}; use identity, square or power")


def _lemma1_rep(payload):
    off, imm, n, seed, r, idx, p, c, A_n = payload
    z = simulate(off, imm, SimConfig(n, seed, r)).z.astype(float)
    u = z / A_n
    k = np.arange(n + 1)
    ck = c(np.maximum(k, 1))
    terms = ck * u**p
    csum = np.cumsum(terms)
    vals = [csum[i] / (n * c(n)) for i in idx]
    # sum_{k=0}^{n} (Z_k/A_n)^2 / n minus the last term is the estimator
    # denominator sum_{k=1}^{n} Z_{k-1}^2 scaled by n A_n^2
    full = math.fsum(u * u) / n
    den = math.fsum(z[:-1] ** 2) / (n * A_n * A_n)
    if abs(full - u[-1] ** 2 / n - den) > 1e-12 * max(1.0, full):
        raise RuntimeError("weighted path sum and estimator denominator disagree")
    return vals


def lemma1_limit(t, alpha, rho, p):
    """int_0^t u^rho (u^(alpha+1))^p du."""
    e = rho + p * (alpha + 1) + 1
    return t**e / e


def lemma1_check(
    off,
    imm,
    n,
    t_grid,
    phi="square",
    c_seq=None,
    R=200,
    master_seed=0,
    workers=1,
    power=None,
) -> CheckTable:
    """Empirical (1/(n c_n)) sum_{k<=[nt]} c_k Phi(Z_k/A_n) against its integral limit.

    ``c_0`` is taken equal to ``c_1``. Columns: t, empirical (mean over
    replications), limit, rel_error (of the mean), median_rel_error (median of
    per-replication relative errors).
    """
    if c_seq is None:
        c_seq = RegVarSeq(0.0, 1.0, 0.0)
    p = _phi_power(phi, power)
    lead = imm.leading_terms()
    if lead is None:
        raise ValidationError("weighted-sum check needs a diverging immigration mean")
    a, b2, _ = lead
    if not (validate_regime(off, imm).mean_diverges and compare(b2, n_term(1) * a**2) < 0):
        raise ValidationError("weighted-sum limit needs alpha_n -> inf and beta_n^2/(n alpha_n^2) -> 0")
    alpha = a.exponent
    A = mean_path(imm, n)
    idx = [floor_index(n, t) for t in t_grid]
    payloads = [(off, imm, n, master_seed, r, idx, p, c_seq, A[-1]) for r in range(R)]
    per = np.array(run_replications(_lemma1_rep, payloads, workers))
    rows = []
    for j, t in enumerate(t_grid):
        lim = lemma1_limit(t, alpha, c_seq.exponent, p)
        emp = float(per[:, j].mean())
        med = float(np.median([_rel_error(v, lim) for v in per[:, j]]))
        rows.append((float(t), emp, lim, _rel_error(emp, lim), med))
    return CheckTable(
        "lemma1",
        ("t", "empirical", "limit", "rel_error", "median_rel_error"),
        rows,
        {"n": n, "R": R, "master_seed": master_seed, "phi": phi, "power": p,
         "rho": c_seq.exponent, "alpha": alpha, "note": TOLERANCE_NOTE},
    )


def _fluct_rep(payload):
    off, imm, n, seed, r, idx = payload
    z = simulate(off, imm, SimConfig(n, seed, r)).z
    return [float(z[i]) for i in idx]


def fluctuation_check(off, imm, n, t_grid, R=200, master_seed=0, workers=1) -> CheckTable:
    """Mean of Z_[nt]/A_n over replications against t^(alpha+1).

    The ``exact`` column is A_[nt]/A_n, the finite-n expectation.
    """
    report = validate_regime(off, imm)
    if not report.mean_diverges:
        raise ValidationError("fluctuation check needs a diverging immigration mean")
    alpha = imm.exponents()[0]
    A = mean_path(imm, n)
    idx = [floor_index(n, t) for t in t_grid]
    payloads = [(off, imm, n, master_seed, r, idx) for r in range(R)]
    per = np.array(run_replications(_fluct_rep, payloads, workers)) / A[-1]
    rows = []
    for j, t in enumerate(t_grid):
        lim = float(t) ** (alpha + 1)
        emp = float(per[:, j].mean())
        rows.append((float(t), emp, lim, _rel_error(emp, lim), float(A[idx[j]] / A[-1])))
    return CheckTable(
        "fluctuation",
        ("t", "empirical", "limit", "rel_error", "exact"),
        rows,
        {"n": n, "R": R, "master_seed": master_seed, "alpha": alpha, "note": TOLERANCE_NOTE},
    )


def _varproc_rep(payload):
    off, imm, n, seed, r, idx, H = payload
    traj = simulate(off, imm, SimConfig(n, seed, r))
    v = variance_residuals(traj, off, imm).v
    cs = np.concatenate([[0.0], np.cumsum(v)])
    return [cs[i] / H for i in idx]


def variance_process_check(off, imm, n, t_grid, R=1000, master_seed=0, workers=1, theta=None) -> CheckTable:
    """Variance over replications of H_n^{-1} sum_{k<=[nt]} V_k against C(t).

    V_k uses the true b^2 and beta_k^2. The ``exact`` column is the finite-n
    value H_n^{-2} sum_{k<=[nt]} E V_k^2.
    """
    params = theta_params(off, imm, n, theta=theta)
    H = math.sqrt(params.H_sq_n)
    idx = [floor_index(n, t) for t in t_grid]
    payloads = [(off, imm, n, master_seed, r, idx, H) for r in range(R)]
    per = np.array(run_replications(_varproc_rep, payloads, workers))
    ev2 = np.concatenate([[0.0], np.cumsum(error_second_moments(off, imm, n))])
    rows = []
    for j, t in enumerate(t_grid):
        lim = limit_covariance(float(t), params)
        emp = float(per[:, j].var(ddof=1))
        rows.append((float(t), emp, lim, _rel_error(emp, lim), float(ev2[idx[j]] / params.H_sq_n)))
    return CheckTable(
        "varprocess",
        ("t", "empirical", "limit", "rel_error", "exact"),
        rows,
        {"n": n, "R": R, "master_seed": master_seed, "params": params.to_dict(),
         "note": TOLERANCE_NOTE},
    )


# --------------------------------------------------------------------------
# Lindeberg diagnostic
# --------------------------------------------------------------------------


def _poisson_logpmf(x, mu):
    if mu == 0:
        return np.where(x == 0, 0.0, -np.inf)
    return x * math.log(mu) - mu - special.gammaln(x + 1)


def _grid_pmf(imm: ImmigrationModel, k, max_support):
    """(support, pmf) of xi_k on a truncated grid, or None when the grid is too large."""
    fam = imm.family
    if fam == "homogeneous" and imm.law == "finite":
        return (np.array([v for v, _ in imm.pmf], dtype=float),
                np.array([p for _, p in imm.pmf]))
    if fam == "poisson_seq" or fam == "homogeneous":
        mu = float(imm.alpha(k)) if fam == "poisson_seq" else imm.rate
        top = int(math.ceil(mu + 12 * math.sqrt(mu) + 40))
        if top > max_support:
            return None
        x = np.arange(top + 1, dtype=float)
        return x, np.exp(_poisson_logpmf(x, mu))
    lam, phi = float(imm.lam(k)), float(imm.phi(k))
    n_top = int(math.ceil(lam + 10 * math.sqrt(lam) + 20))
    mu_top = n_top * phi
    top = int(math.ceil(mu_top + 10 * math.sqrt(mu_top) + 20))
    if (n_top + 1) * (top + 1) > max_support:
        return None
    x = np.arange(top + 1, dtype=float)
    clusters = np.arange(1, n_top + 1, dtype=float)
    w = np.exp(_poisson_logpmf(clusters, lam))
    mus = clusters * phi
    logp = x[None, :] * np.log(mus)[:, None] - mus[:, None] - special.gammaln(x + 1)[None, :]
    pmf = w @ np.exp(logp)
    pmf[0] += math.exp(-lam)
    return x, pmf


def lindeberg_diagnostic(
    imm: ImmigrationModel,
    n,
    eps_grid,
    tail_tol=1e-12,
    max_support=2_000_000,
    mc_samples=20_000,
    seed=0,
) -> CheckTable:
    """sum_{k<=n} E(eta_k^2 1{|eta_k| > eps tau_n}) / tau_n^2 for each eps.

    eta_k = (xi_k - alpha_k)^2 - beta_k^2. Expectations come from exact pmf
    sums on a truncated grid; when the grid would exceed ``max_support`` cells
    the term is estimated from ``mc_samples`` draws instead.
    """
    eps = np.asarray(list(eps_grid), dtype=float)
    k_all = np.arange(1, n + 1)
    alpha, beta2, gamma4 = imm.moments(k_all)
    tau2 = math.fsum(gamma4)
    if tau2 == 0:
        return CheckTable("lindeberg", ("eps", "estimate"), [(float(e), 0.0) for e in eps],
                          {"n": n, "tau_sq": 0.0, "missing_mass": 0.0, "mc_terms": 0})
    thr = eps * math.sqrt(tau2)
    parts = [[] for _ in eps]
    worst_missing = 0.0
    mc_terms = 0
    rng = replication_stream(seed, 0)
    for j, k in enumerate(k_all):
        grid = _grid_pmf(imm, int(k), max_support)
        if grid is None:
            mc_terms += 1
            xs = np.array([sample_immigration(imm, int(k), rng) for _ in range(mc_samples)], dtype=float)
            eta = (xs - alpha[j]) ** 2 - beta2[j]
            for i, th in enumerate(thr):
                parts[i].append(float(np.mean(eta**2 * (np.abs(eta) > th))))
            continue
        x, pmf = grid
        worst_missing = max(worst_missing, abs(1.0 - math.fsum(pmf)))
        eta = (x - alpha[j]) ** 2 - beta2[j]
        w = pmf * eta**2
        for i, th in enumerate(thr):
            parts[i].append(math.fsum(w[np.abs(eta) > th]))
    if worst_missing > tail_tol:
        warnings.warn(
            f"pmf truncation left mass {worst_missing:.3g} > {tail_tol:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    rows = [(float(e), math.fsum(p) / tau2) for e, p in zip(eps, parts)]
    return CheckTable(
        "lindeberg",
        ("eps", "estimate"),
        rows,
        {"n": n, "tau_sq": tau2, "missing_mass": worst_missing, "mc_terms": mc_terms},
    )
