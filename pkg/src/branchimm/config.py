"""Experiment configuration: a single JSON document.

Schema (all keys except ``offspring``/``immigration`` optional)::

    {
      "offspring":   {"family": "poisson1" | "geometric1" | "two_point" | "custom",
                      "pmf": [[value, prob], ...], "allow_degenerate": false},
      "immigration": {"family": "poisson_seq", "alpha": {"exponent": .5, "scale": 1, "log_power": 0}}
                   | {"family": "neyman_a", "lam": {...}, "phi": {...}}
                   | {"family": "homogeneous", "law": "poisson", "rate": 5}
                   | {"family": "homogeneous", "law": "finite", "pmf": [[v, p], ...]},
      "horizon": 2000, "replications": 1000, "master_seed": 0, "workers": 1,
      "theta": null,
      "mode": "aggregate", "record_offspring": false,
      "estimator": {"kind": "clse" | "homogeneous", "offspring_mean": 1.0, "imm_mean": null},
      "t_grid": [0.5, 1.0], "eps_grid": [1.0], "phi": "square", "power": null,
      "c_seq": {"exponent": 0, "scale": 1, "log_power": 0},
      "plots": false
    }

A RegVarSeq may also be given as a bare number, meaning a constant sequence.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import ValidationError
from .models import ImmigrationModel, OffspringModel
from .regvar import RegVarSeq


@dataclass
class ExperimentConfig:
    offspring: dict
    immigration: dict
    horizon: int = 100
    replications: int = 1
    master_seed: int = 0
    workers: int = 1
    theta: Optional[float] = None
    mode: str = "aggregate"
    record_offspring: bool = False
    estimator: dict = field(default_factory=lambda: {"kind": "clse"})
    t_grid: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    eps_grid: list = field(default_factory=lambda: [1.0])
    phi: str = "square"
    power: Optional[float] = None
    c_seq: dict = field(default_factory=lambda: {"exponent": 0.0, "scale": 1.0, "log_power": 0.0})
    plots: bool = False

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        for key in ("offspring", "immigration"):
            if key not in d:
                raise ValidationError(f"config needs an {key!r} section")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self):
        self.offspring_model()
        self.immigration_model()
        try:
            RegVarSeq.from_dict(self.c_seq)
        except ValueError as exc:
            raise ValidationError(f"c_seq: {exc}") from None
        for name in ("horizon", "replications", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        if self.estimator.get("kind", "clse") not in ("clse", "homogeneous"):
            raise ValidationError("estimator.kind must be 'clse' or 'homogeneous'")

    def offspring_model(self) -> OffspringModel:
        try:
            return OffspringModel.from_dict(self.offspring)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"offspring: {exc}") from None

    def immigration_model(self) -> ImmigrationModel:
        try:
            return ImmigrationModel.from_dict(self.immigration)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"immigration: {exc}") from None

    def c_sequence(self) -> RegVarSeq:
        return RegVarSeq.from_dict(self.c_seq)

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(d)
