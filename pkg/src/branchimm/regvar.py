"""Regularly varying sequences and their asymptotic algebra.

A sequence here has the form ``scale * n**exponent * (1 + ln n)**log_power``.
Products and sums of such sequences are tracked symbolically so that limits
like ``beta_n**2 / (n * alpha_n)`` can be classified without numerics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

EXP_TOL = 1e-12


@dataclass(frozen=True)
class Term:
    """Leading asymptotic term ``scale * n**exponent * (ln n)**log_power``."""

    scale: float
    exponent: float
    log_power: float = 0.0

    def __mul__(self, other):
        if isinstance(other, Term):
            return Term(
                self.scale * other.scale,
                self.exponent + other.exponent,
                self.log_power + other.log_power,
            )
        return Term(self.scale * float(other), self.exponent, self.log_power)

    __rmul__ = __mul__

    def __pow__(self, p):
        return Term(self.scale**p, self.exponent * p, self.log_power * p)

    def __truediv__(self, other):
        return self * Term(1.0 / other.scale, -other.exponent, -other.log_power)

    def key(self):
        return (self.exponent, self.log_power)


def n_term(power=1.0):
    """The sequence n**power as a Term."""
    return Term(1.0, power, 0.0)


def compare(a: Term, b: Term) -> int:
    """Limit of a/b: -1 if it tends to 0, 0 if to a positive constant, 1 if to infinity."""
    de = a.exponent - b.exponent
    if abs(de) > EXP_TOL:
        return 1 if de > 0 else -1
    dl = a.log_power - b.log_power
    if abs(dl) > EXP_TOL:
        return 1 if dl > 0 else -1
    return 0


def ratio_limit(a: Term, b: Term) -> float:
    c = compare(a, b)
    if c < 0:
        return 0.0
    if c > 0:
        return math.inf
    return a.scale / b.scale


def diverges(a: Term) -> bool:
    return compare(a, Term(1.0, 0.0, 0.0)) > 0


def summed(a: Term) -> Term:
    """Leading term of the partial sums sum_{k<=n} a_k (needs exponent > -1)."""
    if a.exponent <= -1.0:
        raise ValueError("partial sums only tracked for exponent > -1")
    return Term(a.scale / (a.exponent + 1.0), a.exponent + 1.0, a.log_power)


class Asym:
    """A finite sum of positive Terms; ``leading`` picks the dominant one.

    Ties in (exponent, log_power) are merged by adding scales.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Term]):
        merged: dict = {}
        for t in terms:
            if t.scale <= 0:
                raise ValueError("Asym terms must have positive scale")
            k = (round(t.exponent, 12), round(t.log_power, 12))
            merged[k] = merged.get(k, 0.0) + t.scale
        self.terms = tuple(Term(s, e, lp) for (e, lp), s in merged.items())

    @classmethod
    def of(cls, t: Term):
        return cls([t])

    def __add__(self, other):
        if isinstance(other, Term):
            other = Asym.of(other)
        return Asym(self.terms + other.terms)

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Term):
            other = Asym.of(other)
        if isinstance(other, Asym):
            return Asym(a * b for a in self.terms for b in other.terms)
        return Asym(t * float(other) for t in self.terms)

    __rmul__ = __mul__

    def __pow__(self, p: int):
        out = Asym.of(Term(1.0, 0.0, 0.0))
        for _ in range(int(p)):
            out = out * self
        return out

    @property
    def leading(self) -> Term:
        return max(self.terms, key=Term.key)

    def __repr__(self):
        return f"Asym({list(self.terms)!r})"


@dataclass(frozen=True)
class RegVarSeq:
    """``scale * n**exponent * (1 + ln n)**log_power`` for n >= 1."""

    exponent: float = 0.0
    scale: float = 1.0
    log_power: float = 0.0

    def __post_init__(self):
        if not (self.exponent >= 0 and math.isfinite(self.exponent)):
            raise ValueError(f"exponent must be finite and >= 0, got {self.exponent}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")
        if not (self.log_power >= 0 and math.isfinite(self.log_power)):
            raise ValueError(f"log_power must be finite and >= 0, got {self.log_power}")

    def value(self, n):
        """Evaluate at integer n >= 1 (scalar or array)."""
        n_arr = np.asarray(n, dtype=float)
        if np.any(n_arr < 1):
            raise ValueError("RegVarSeq is defined for n >= 1")
        out = self.scale * n_arr**self.exponent
        if self.log_power:
            out = out * (1.0 + np.log(n_arr)) ** self.log_power
        return float(out) if out.ndim == 0 else out

    __call__ = value

    @property
    def term(self) -> Term:
        return Term(self.scale, self.exponent, self.log_power)

    @property
    def asym(self) -> Asym:
        return Asym.of(self.term)

    def to_dict(self):
        return {"exponent": self.exponent, "scale": self.scale, "log_power": self.log_power}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, (int, float)):
            return cls(0.0, float(d), 0.0)
        unknown = set(d) - {"exponent", "scale", "log_power"}
        if unknown:
            raise ValueError(f"unknown RegVarSeq keys: {sorted(unknown)}")
        return cls(
            float(d.get("exponent", 0.0)),
            float(d.get("scale", 1.0)),
            float(d.get("log_power", 0.0)),
        )
