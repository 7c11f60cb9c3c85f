import numpy as np
import pytest

from branchimm.asymptotics import population_moments
from branchimm.errors import CappedModeError, PopulationOverflowError, ValidationError
from branchimm.models import ImmigrationModel, OffspringModel
from branchimm.regvar import RegVarSeq
from branchimm.simulate import (
    SimConfig,
    Trajectory,
    offspring_to_csv,
    read_trajectory_csv,
    replication_stream,
    simulate,
    trajectory_from_csv,
    trajectory_to_csv,
)


def test_same_seed_same_path(geometric_sqrt_models):
    off, imm = geometric_sqrt_models
    a = simulate(off, imm, SimConfig(200, 42, 3))
    b = simulate(off, imm, SimConfig(200, 42, 3))
    c = simulate(off, imm, SimConfig(200, 42, 4))
    assert np.array_equal(a.z, b.z) and np.array_equal(a.xi, b.xi)
    assert not np.array_equal(a.z, c.z)


def test_streams_are_independent_of_order():
    g1 = replication_stream(1, 5).random(3)
    replication_stream(1, 4).random(100)
    assert np.array_equal(g1, replication_stream(1, 5).random(3))


def test_trajectory_invariants(geometric_sqrt_models):
    off, imm = geometric_sqrt_models
    t = simulate(off, imm, SimConfig(60, 1, 0, mode="per_individual"))
    assert t.z[0] == 0 and t.z.dtype == np.int64 and np.all(t.z >= 0)
    t.check()
    assert len(t.offspring) == 60
    assert all(len(x) == z for x, z in zip(t.offspring, t.z[:-1]))
    broken = Trajectory(t.z.copy(), t.xi, t.offspring)
    broken.z[10] += 1
    with pytest.raises(ValidationError):
        broken.check()


def test_ensemble_moments_match_exact_recursion(geometric_sqrt_models, short_ensemble):
    off, imm = geometric_sqrt_models
    mean, second = population_moments(off, imm, 20)
    var = second - mean**2
    R = len(short_ensemble)
    emp_mean = short_ensemble.mean(axis=0)
    emp_var = short_ensemble.var(axis=0, ddof=1)
    k = np.arange(1, 21)
    assert np.all(np.abs(emp_mean[k] - mean[k]) < 5 * np.sqrt(var[k] / R))
    assert emp_var[k] == pytest.approx(var[k], rel=0.05)


def test_per_individual_mode_has_the_same_law():
    off = OffspringModel.custom([[0, 0.3], [1, 0.5], [2, 0.1], [3, 0.1]])
    imm = ImmigrationModel.poisson_seq(RegVarSeq(0.5))
    agg = np.array([simulate(off, imm, SimConfig(15, 2, r)).z[-1] for r in range(3000)])
    ind = np.array([simulate(off, imm, SimConfig(15, 3, r, mode="per_individual")).z[-1]
                    for r in range(3000)])
    mean, second = population_moments(off, imm, 15)
    sd = np.sqrt(second[-1] - mean[-1] ** 2)
    for sample in (agg, ind):
        assert abs(sample.mean() - mean[-1]) < 5 * sd / np.sqrt(len(sample))


def test_overflow_and_capped_mode():
    off, imm = OffspringModel.poisson1(), ImmigrationModel.poisson_seq(RegVarSeq(1.0, 50.0))
    with pytest.raises(PopulationOverflowError) as info:
        simulate(off, imm, SimConfig(100, 0, 0, population_cap=1000))
    assert info.value.generation >= 1
    with pytest.raises(CappedModeError, match="aggregate"):
        simulate(off, imm, SimConfig(100, 0, 0, mode="per_individual", per_individual_cap=100))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"horizon": 0},
        {"horizon": 5, "master_seed": -1},
        {"horizon": 5, "mode": "fast"},
        {"horizon": 5, "mode": "per_individual", "record_immigration": False},
        {"horizon": 5, "replication_index": -2},
    ],
)
def test_simconfig_validation(kwargs):
    with pytest.raises(ValidationError):
        SimConfig(**kwargs)


def test_csv_roundtrip(tmp_path, geometric_sqrt_models):
    off, imm = geometric_sqrt_models
    t = simulate(off, imm, SimConfig(30, 9, 0, mode="per_individual"))
    text = trajectory_to_csv(t)
    lines = text.split("\n")
    assert lines[0] == "k,Z,xi" and lines[1] == "0,0," and text.endswith("\n")
    assert "\r" not in text
    back = trajectory_from_csv(text)
    assert np.array_equal(back.z, t.z) and np.array_equal(back.xi, t.xi)
    path = tmp_path / "t.csv"
    path.write_text(text)
    assert np.array_equal(read_trajectory_csv(path).z, t.z)
    off_lines = offspring_to_csv(t).splitlines()
    assert off_lines[0] == "k,i,X"
    assert len(off_lines) - 1 == int(t.z[:-1].sum())


def test_csv_without_immigration():
    off, imm = OffspringModel.poisson1(), ImmigrationModel.poisson_seq(RegVarSeq(0.5))
    t = simulate(off, imm, SimConfig(5, 0, 0, record_immigration=False))
    assert t.xi is None
    back = trajectory_from_csv(trajectory_to_csv(t))
    assert np.array_equal(back.z, t.z) and back.xi is None


def test_csv_rejects_bad_input():
    with pytest.raises(ValidationError):
        trajectory_from_csv("k,Z\n0,0\n")
    with pytest.raises(ValidationError):
        trajectory_from_csv("k,Z,xi\n0,1,\n1,2,1\n")
