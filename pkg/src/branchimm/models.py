"""Offspring and immigration laws, their exact moments, and regime classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import PopulationOverflowError, ValidationError
from .regvar import Asym, RegVarSeq, Term, compare, diverges, n_term, summed

POPULATION_CAP = 2**62 - 1
PMF_TOL = 1e-12

OFFSPRING_FAMILIES = ("poisson1", "geometric1", "two_point", "custom")
IMMIGRATION_FAMILIES = ("poisson_seq", "neyman_a", "homogeneous")


def _normalize_pmf(pairs, what):
    """Sort and merge (value, prob) pairs, checking they form a pmf on the integers >= 0."""
    acc: dict = {}
    for item in pairs:
        try:
            v, p = item
        except (TypeError, ValueError):
            raise ValidationError(f"{what}: pmf entries must be (value, probability) pairs")
        if int(v) != v or v < 0:
            raise ValidationError(f"{what}: support values must be non-negative integers, got {v}")
        p = float(p)
        if not (p >= 0 and math.isfinite(p)):
            raise ValidationError(f"{what}: probabilities must be finite and >= 0, got {p}")
        acc[int(v)] = acc.get(int(v), 0.0) + p
    if not acc:
        raise ValidationError(f"{what}: empty pmf")
    total = math.fsum(acc.values())
    if abs(total - 1.0) > PMF_TOL:
        raise ValidationError(f"{what}: pmf sums to {total!r}, not 1 (tolerance {PMF_TOL})")
    return tuple(sorted((v, p) for v, p in acc.items() if p > 0))


def _central_moments(pmf):
    v = np.array([x for x, _ in pmf], dtype=float)
    p = np.array([q for _, q in pmf], dtype=float)
    mean = math.fsum(v * p)
    d = v - mean
    return (
        mean,
        math.fsum(p * d**2),
        math.fsum(p * d**3),
        math.fsum(p * d**4),
    )


# --------------------------------------------------------------------------
# offspring
# --------------------------------------------------------------------------

# (variance, third central, fourth central) of the built-in mean-1 laws.
_OFFSPRING_CENTRAL = {
    "poisson1": (1.0, 1.0, 4.0),
    # failures before first success, p = 1/2: cumulants 2, 6, 26
    "geometric1": (2.0, 6.0, 38.0),
    "two_point": (1.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class OffspringModel:
    """A critical (mean one) offspring law with finite fourth moment.

    Use the named constructors ``poisson1()``, ``geometric1()``,
    ``two_point()`` and ``custom(pmf)``.
    """

    family: str
    pmf: Optional[tuple] = None
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.family not in OFFSPRING_FAMILIES:
            raise ValidationError(f"unknown offspring family {self.family!r}")
        if self.family == "custom":
            if self.pmf is None:
                raise ValidationError("custom offspring law needs a pmf")
            pmf = _normalize_pmf(self.pmf, "offspring")
            object.__setattr__(self, "pmf", pmf)
            mean, var, _, _ = _central_moments(pmf)
            if abs(mean - 1.0) > PMF_TOL:
                raise ValidationError(f"offspring mean must be 1, got {mean!r}")
            if var <= 0 and not self.allow_degenerate:
                raise ValidationError(
                    "degenerate offspring law (variance 0); pass allow_degenerate=True"
                )
        elif self.pmf is not None:
            raise ValidationError(f"{self.family} does not take a pmf")

    @classmethod
    def poisson1(cls):
        return cls("poisson1")

    @classmethod
    def geometric1(cls):
        return cls("geometric1")

    @classmethod
    def two_point(cls):
        return cls("two_point")

    @classmethod
    def custom(cls, pmf, allow_degenerate=False):
        return cls("custom", tuple(tuple(x) for x in pmf), allow_degenerate)

    @property
    def b_sq(self) -> float:
        return offspring_moments(self)[1]

    # sampling ----------------------------------------------------------

    def sum_sampler(self, rng, cap=POPULATION_CAP):
        """Return ``f(count)`` drawing the sum of ``count`` i.i.d. offspring."""
        fam = self.family
        if fam == "poisson1":
            draw = rng.poisson
        elif fam == "geometric1":
            nb = rng.negative_binomial

            def draw(c):
                return nb(c, 0.5)

        elif fam == "two_point":
            binom = rng.binomial

            def draw(c):
                return 2 * binom(c, 0.5)

        else:
            values = np.array([v for v, _ in self.pmf], dtype=np.int64)
            probs = np.array([p for _, p in self.pmf])
            multinomial = rng.multinomial

            def draw(c):
                return int(multinomial(c, probs) @ values)

        def sampler(count):
            if count == 0:
                return 0
            if count > cap:
                raise PopulationOverflowError(None, count, cap)
            return int(draw(count))

        return sampler

    def sample_individuals(self, count, rng):
        """Draw ``count`` individual offspring numbers as an int64 array."""
        fam = self.family
        if fam == "poisson1":
            x = rng.poisson(1.0, size=count)
        elif fam == "geometric1":
            x = rng.geometric(0.5, size=count) - 1
        elif fam == "two_point":
            x = 2 * rng.integers(0, 2, size=count)
        else:
            values = np.array([v for v, _ in self.pmf], dtype=np.int64)
            probs = np.array([p for _, p in self.pmf])
            x = rng.choice(values, size=count, p=probs)
        return np.asarray(x, dtype=np.int64)

    def to_dict(self):
        d = {"family": self.family}
        if self.pmf is not None:
            d["pmf"] = [list(x) for x in self.pmf]
        if self.allow_degenerate:
            d["allow_degenerate"] = True
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        fam = d.pop("family", None)
        pmf = d.pop("pmf", None)
        allow = bool(d.pop("allow_degenerate", False))
        if d:
            raise ValidationError(f"unknown offspring keys: {sorted(d)}")
        if pmf is not None:
            pmf = tuple(tuple(x) for x in pmf)
        return cls(fam, pmf, allow)


def offspring_moments(model: OffspringModel):
    """Exact ``(mean, b^2, mu_3, mu_4, E Ytilde^2)`` of the offspring law.

    ``E Ytilde^2`` is ``Var((X - 1)^2) = mu_4 - b^4``.
    """
    if model.family == "custom":
        mean, var, m3, m4 = _central_moments(model.pmf)
    else:
        mean = 1.0
        var, m3, m4 = _OFFSPRING_CENTRAL[model.family]
    return mean, var, m3, m4, m4 - var * var


# --------------------------------------------------------------------------
# immigration
# --------------------------------------------------------------------------


def _poisson_raw_moments(phi):
    """Raw moments 1..4 of Poisson(phi) (Touchard polynomials)."""
    return (
        phi,
        phi + phi**2,
        phi + 3 * phi**2 + phi**3,
        phi + 7 * phi**2 + 6 * phi**3 + phi**4,
    )


@dataclass(frozen=True)
class ImmigrationModel:
    """Time-indexed immigration law.

    ``poisson_seq``: xi_n ~ Poisson(alpha_n).
    ``neyman_a``: xi_n = sum of N ~ Poisson(lam_n) independent Poisson(phi_n).
    ``homogeneous``: a fixed law, either Poisson(rate) or a finite pmf.
    """

    family: str
    alpha: Optional[RegVarSeq] = None
    lam: Optional[RegVarSeq] = None
    phi: Optional[RegVarSeq] = None
    law: Optional[str] = None
    rate: Optional[float] = None
    pmf: Optional[tuple] = None
    allow_degenerate: bool = False
    _fixed: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        fam = self.family
        if fam not in IMMIGRATION_FAMILIES:
            raise ValidationError(f"unknown immigration family {fam!r}")
        if fam == "poisson_seq":
            if not isinstance(self.alpha, RegVarSeq):
                raise ValidationError("poisson_seq needs alpha as a RegVarSeq")
        elif fam == "neyman_a":
            if not (isinstance(self.lam, RegVarSeq) and isinstance(self.phi, RegVarSeq)):
                raise ValidationError("neyman_a needs lam and phi as RegVarSeq")
        else:
            if self.law == "poisson":
                if self.rate is None or not (self.rate > 0 and math.isfinite(self.rate)):
                    raise ValidationError("homogeneous Poisson immigration needs rate > 0")
                r = float(self.rate)
                fixed = (r, r, r + 2 * r * r)
            elif self.law == "finite":
                if self.pmf is None:
                    raise ValidationError("homogeneous finite immigration needs a pmf")
                pmf = _normalize_pmf(self.pmf, "immigration")
                object.__setattr__(self, "pmf", pmf)
                mean, var, _, m4 = _central_moments(pmf)
                fixed = (mean, var, m4 - var * var)
            else:
                raise ValidationError("homogeneous law must be 'poisson' or 'finite'")
            if min(fixed[:2]) <= 0 and not self.allow_degenerate:
                raise ValidationError(
                    "immigration mean and variance must be positive; pass allow_degenerate=True "
                    "for deterministic or zero immigration"
                )
            object.__setattr__(self, "_fixed", fixed)

    @classmethod
    def poisson_seq(cls, alpha: RegVarSeq):
        return cls("poisson_seq", alpha=alpha)

    @classmethod
    def neyman_a(cls, lam: RegVarSeq, phi: RegVarSeq):
        return cls("neyman_a", lam=lam, phi=phi)

    @classmethod
    def homogeneous_poisson(cls, rate):
        return cls("homogeneous", law="poisson", rate=float(rate))

    @classmethod
    def homogeneous_finite(cls, pmf, allow_degenerate=False):
        return cls(
            "homogeneous",
            law="finite",
            pmf=tuple(tuple(x) for x in pmf),
            allow_degenerate=allow_degenerate,
        )

    # moments -----------------------------------------------------------

    def moments(self, n):
        """``(alpha_n, beta_n^2, gamma_n^4)`` at n (scalar or array, n >= 1)."""
        n_arr = np.asarray(n)
        if np.any(n_arr < 1):
            raise ValidationError("immigration moments are defined for n >= 1")
        fam = self.family
        if fam == "poisson_seq":
            a = self.alpha(n_arr)
            return a, a, a + 2 * a * a
        if fam == "neyman_a":
            lam, phi = self.lam(n_arr), self.phi(n_arr)
            m1, m2, _, m4 = _poisson_raw_moments(phi)
            k2 = lam * m2
            return lam * m1, k2, lam * m4 + 2 * k2 * k2
        a, b2, g4 = self._fixed
        if n_arr.ndim == 0:
            return a, b2, g4
        ones = np.ones(n_arr.shape)
        return a * ones, b2 * ones, g4 * ones

    def asymptotic_moments(self):
        """Leading-order Asym expansions of (alpha_n, beta_n^2, gamma_n^4), or None."""
        fam = self.family
        if fam == "poisson_seq":
            a = self.alpha.asym
            return a, a, a + a * a * 2.0
        if fam == "neyman_a":
            lam, phi = self.lam.asym, self.phi.asym
            m1 = phi
            m2 = phi + phi**2
            m4 = phi + phi**2 * 7.0 + phi**3 * 6.0 + phi**4
            k2 = lam * m2
            return lam * m1, k2, lam * m4 + k2 * k2 * 2.0
        return None

    def leading_terms(self):
        asy = self.asymptotic_moments()
        if asy is None:
            return None
        return tuple(x.leading for x in asy)

    def exponents(self):
        """Regular-variation exponents (alpha, beta, gamma) of the moment sequences."""
        lead = self.leading_terms()
        if lead is None:
            return 0.0, 0.0, 0.0
        return tuple(t.exponent for t in lead)

    # sampling ----------------------------------------------------------

    def sample_path(self, horizon, rng):
        """Draw xi_1..xi_horizon as an int64 array."""
        k = np.arange(1, horizon + 1)
        fam = self.family
        if fam == "poisson_seq":
            xi = rng.poisson(self.alpha(k))
        elif fam == "neyman_a":
            clusters = rng.poisson(self.lam(k))
            xi = rng.poisson(clusters * self.phi(k))
        elif self.law == "poisson":
            xi = rng.poisson(self.rate, size=horizon)
        else:
            values = np.array([v for v, _ in self.pmf], dtype=np.int64)
            probs = np.array([p for _, p in self.pmf])
            xi = rng.choice(values, size=horizon, p=probs)
        return np.asarray(xi, dtype=np.int64)

    def to_dict(self):
        d = {"family": self.family}
        if self.family == "poisson_seq":
            d["alpha"] = self.alpha.to_dict()
        elif self.family == "neyman_a":
            d["lam"] = self.lam.to_dict()
            d["phi"] = self.phi.to_dict()
        else:
            d["law"] = self.law
            if self.law == "poisson":
                d["rate"] = self.rate
            else:
                d["pmf"] = [list(x) for x in self.pmf]
        if self.allow_degenerate:
            d["allow_degenerate"] = True
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        fam = d.pop("family", None)
        allow = bool(d.pop("allow_degenerate", False))
        try:
            if fam == "poisson_seq":
                out = cls.poisson_seq(RegVarSeq.from_dict(d.pop("alpha")))
            elif fam == "neyman_a":
                out = cls.neyman_a(
                    RegVarSeq.from_dict(d.pop("lam")), RegVarSeq.from_dict(d.pop("phi"))
                )
            elif fam == "homogeneous":
                law = d.pop("law", None)
                if law == "poisson":
                    out = cls.homogeneous_poisson(d.pop("rate"))
                else:
                    out = cls.homogeneous_finite(d.pop("pmf"), allow_degenerate=allow)
            else:
                raise ValidationError(f"unknown immigration family {fam!r}")
        except KeyError as exc:
            raise ValidationError(f"immigration config missing key {exc}") from None
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        if d:
            raise ValidationError(f"unknown immigration keys: {sorted(d)}")
        return out


def immigration_moments(model: ImmigrationModel, n):
    """Exact ``(alpha_n, beta_n^2, gamma_n^4)`` as floats."""
    if int(n) != n or n < 1:
        raise ValidationError("n must be an integer >= 1")
    return tuple(float(x) for x in model.moments(int(n)))


def sample_immigration(model: ImmigrationModel, n, rng) -> int:
    """One draw of xi_n."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    fam = model.family
    if fam == "poisson_seq":
        return int(rng.poisson(model.alpha(n)))
    if fam == "neyman_a":
        clusters = rng.poisson(model.lam(n))
        return int(rng.poisson(clusters * model.phi(n))) if clusters else 0
    if model.law == "poisson":
        return int(rng.poisson(model.rate))
    values = [v for v, _ in model.pmf]
    probs = [p for _, p in model.pmf]
    return int(rng.choice(values, p=probs))


def sample_offspring_sum(model: OffspringModel, count, rng, cap=POPULATION_CAP) -> int:
    """Sum of ``count`` i.i.d. offspring numbers, drawn from the closed-form aggregate law."""
    if count < 0:
        raise ValidationError("count must be >= 0")
    return model.sum_sampler(rng, cap)(int(count))


# --------------------------------------------------------------------------
# regime classification
# --------------------------------------------------------------------------


class ThetaClass(str, Enum):
    ZERO = "theta_zero"
    ONE = "theta_one"
    INTERIOR = "theta_interior"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class RegimeReport:
    mean_diverges: bool
    condition_i: bool
    condition_ii: bool
    theta_class: ThetaClass
    theta: Optional[float]
    exponents: tuple
    offspring_variance: float

    @property
    def theorem_applies(self) -> bool:
        """Moment hypotheses of the asymptotic normality result hold."""
        return (
            self.mean_diverges
            and (self.condition_i or self.condition_ii)
            and self.offspring_variance > 0
        )

    def to_dict(self):
        return {
            "mean_diverges": self.mean_diverges,
            "condition_i": self.condition_i,
            "condition_ii": self.condition_ii,
            "theta_class": self.theta_class.value,
            "theta": self.theta,
            "exponents": list(self.exponents),
            "offspring_variance": self.offspring_variance,
        }


def theta_limit(alpha: Term, gamma4: Term):
    """Classify lim n A_n^2 / (n A_n^2 + tau_n^2) from leading terms of alpha_n, gamma_n^4."""
    c = compare(n_term(2) * alpha**2, gamma4)
    if c < 0:
        return ThetaClass.ZERO, 0.0
    if c > 0:
        return ThetaClass.ONE, 1.0
    # same order: ratio of the leading scales of n A_n^2 and tau_n^2
    na2 = n_term(1) * summed(alpha) ** 2
    tau2 = summed(gamma4)
    a, c_ = na2.scale, tau2.scale
    return ThetaClass.INTERIOR, a / (a + c_)


def validate_regime(off: OffspringModel, imm: ImmigrationModel) -> RegimeReport:
    """Decide the moment conditions and the theta class symbolically from the exponents."""
    b_sq = offspring_moments(off)[1]
    lead = imm.leading_terms()
    if lead is None:
        return RegimeReport(
            mean_diverges=False,
            condition_i=False,
            condition_ii=False,
            theta_class=ThetaClass.INDETERMINATE,
            theta=None,
            exponents=(0.0, 0.0, 0.0),
            offspring_variance=b_sq,
        )
    a, b2, g4 = lead
    cond_i = compare(b2, n_term(1) * a) < 0
    cond_ii = compare(b2, n_term(1) * a**2) < 0 and compare(n_term(1) * a * b2, g4) < 0
    tclass, theta = theta_limit(a, g4)
    return RegimeReport(
        mean_diverges=diverges(a),
        condition_i=cond_i,
        condition_ii=cond_ii,
        theta_class=tclass,
        theta=theta,
        exponents=(a.exponent, b2.exponent, g4.exponent),
        offspring_variance=b_sq,
    )
