"""Trajectory generation for branching processes with time-dependent immigration.

Random streams: replication ``r`` under master seed ``s`` uses
``numpy.random.Generator(PCG64(SeedSequence(s, spawn_key=(r,))))``, the same
stream as ``SeedSequence(s).spawn(r + 1)[r]``. Within one trajectory the
immigration path xi_1..xi_n is drawn first in one call, then offspring
generation by generation.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CappedModeError, PopulationOverflowError, ValidationError
from .models import POPULATION_CAP, ImmigrationModel, OffspringModel

MODES = ("aggregate", "per_individual")


@dataclass(frozen=True)
class SimConfig:
    horizon: int
    master_seed: int = 0
    replication_index: int = 0
    mode: str = "aggregate"
    record_immigration: bool = True
    per_individual_cap: int = 1_000_000
    population_cap: int = POPULATION_CAP

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValidationError("horizon must be a positive integer")
        if not 0 <= self.master_seed < 2**64:
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        if self.replication_index < 0:
            raise ValidationError("replication_index must be >= 0")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.mode == "per_individual" and not self.record_immigration:
            raise ValidationError("per_individual mode requires record_immigration=True")
        if self.per_individual_cap < 1:
            raise ValidationError("per_individual_cap must be positive")


@dataclass
class Trajectory:
    """One path Z_0..Z_n; ``xi[k-1]`` is xi_k and ``offspring[k-1]`` holds X_{k,1..Z_{k-1}}."""

    z: np.ndarray
    xi: Optional[np.ndarray] = None
    offspring: Optional[list] = None
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.z) - 1

    def check(self):
        """Raise if the path violates Z_0 = 0, integrality or the exact recursion."""
        z = self.z
        if z[0] != 0:
            raise ValidationError("Z_0 must be 0")
        if np.any(z < 0):
            raise ValidationError("population sizes must be non-negative")
        if self.offspring is not None:
            for k, x in enumerate(self.offspring, start=1):
                if len(x) != z[k - 1]:
                    raise ValidationError(f"generation {k}: {len(x)} records for Z={z[k-1]}")
                if int(x.sum()) + int(self.xi[k - 1]) != z[k]:
                    raise ValidationError(f"generation {k}: recursion does not close")


def replication_stream(master_seed: int, replication_index: int) -> np.random.Generator:
    """Independent, reproducible generator for one replication."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(replication_index),))
    return np.random.Generator(np.random.PCG64(ss))


def simulate(off: OffspringModel, imm: ImmigrationModel, cfg: SimConfig, rng=None) -> Trajectory:
    """Run the recursion Z_k = sum_{i<=Z_{k-1}} X_{k,i} + xi_k from Z_0 = 0."""
    if rng is None:
        rng = replication_stream(cfg.master_seed, cfg.replication_index)
    n = cfg.horizon
    cap = cfg.population_cap
    xi = imm.sample_path(n, rng)
    z = np.zeros(n + 1, dtype=np.int64)
    records = None
    prev = 0
    if cfg.mode == "aggregate":
        draw = off.sum_sampler(rng, cap)
        for k in range(1, n + 1):
            cur = draw(prev) + int(xi[k - 1])
            if cur > cap:
                raise PopulationOverflowError(k, cur, cap)
            z[k] = prev = cur
    else:
        records = []
        for k in range(1, n + 1):
            if prev > cfg.per_individual_cap:
                raise CappedModeError(k, prev, cfg.per_individual_cap)
            x = off.sample_individuals(prev, rng)
            records.append(x)
            cur = int(x.sum()) + int(xi[k - 1])
            if cur > cap:
                raise PopulationOverflowError(k, cur, cap)
            z[k] = prev = cur
    meta = {
        "offspring": off.to_dict(),
        "immigration": imm.to_dict(),
        "master_seed": int(cfg.master_seed),
        "replication": int(cfg.replication_index),
        "mode": cfg.mode,
    }
    return Trajectory(z=z, xi=xi if cfg.record_immigration else None, offspring=records, meta=meta)


# --------------------------------------------------------------------------
# CSV serialization
# --------------------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    """Rows ``k,Z,xi``; xi is blank at k = 0 and when not recorded."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "Z", "xi"])
    for k, zk in enumerate(traj.z):
        x = "" if (k == 0 or traj.xi is None) else str(int(traj.xi[k - 1]))
        w.writerow([k, int(zk), x])
    return buf.getvalue()


def offspring_to_csv(traj: Trajectory) -> str:
    """Sidecar rows ``k,i,X`` for every recorded individual."""
    if traj.offspring is None:
        raise ValidationError("trajectory has no offspring records")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "i", "X"])
    for k, x in enumerate(traj.offspring, start=1):
        for i, v in enumerate(x, start=1):
            w.writerow([k, i, int(v)])
    return buf.getvalue()


def trajectory_from_csv(text: str) -> Trajectory:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["k", "Z", "xi"]:
        raise ValidationError("trajectory CSV must start with header k,Z,xi")
    body = [r for r in rows[1:] if r]
    try:
        ks = [int(r[0]) for r in body]
        z = np.array([int(r[1]) for r in body], dtype=np.int64)
        xis = [r[2].strip() if len(r) > 2 else "" for r in body]
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"malformed trajectory CSV: {exc}") from None
    if ks != list(range(len(ks))):
        raise ValidationError("trajectory rows must be k = 0, 1, 2, ... in order")
    xi = None
    if len(xis) > 1 and all(xis[1:]):
        xi = np.array([int(v) for v in xis[1:]], dtype=np.int64)
    traj = Trajectory(z=z, xi=xi)
    traj.check()
    return traj


def read_trajectory_csv(path) -> Trajectory:
    return trajectory_from_csv(Path(path).read_text())
