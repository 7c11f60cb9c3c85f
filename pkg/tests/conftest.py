import numpy as np
import pytest
from scipy import stats

from branchimm.models import ImmigrationModel, OffspringModel
from branchimm.regvar import RegVarSeq
from branchimm.simulate import SimConfig, simulate

# the one documented seed for every Monte Carlo tolerance check; never tuned per test
MASTER_SEED = 20240601

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def record(k, passed, detail):
        line = f"CRITERION {k}: {'PASS' if passed else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def poisson_pmf_grid(mu, top):
    x = np.arange(top + 1)
    return x, stats.poisson.pmf(x, mu)


def neyman_a_pmf_grid(lam, phi, top, max_clusters=None):
    """Truncated pmf of a Neyman Type A variable by summing over the cluster count."""
    if max_clusters is None:
        max_clusters = int(lam + 15 * np.sqrt(lam) + 30)
    x = np.arange(top + 1)
    pmf = np.zeros(top + 1)
    pmf[0] += stats.poisson.pmf(0, lam)
    for c in range(1, max_clusters + 1):
        pmf += stats.poisson.pmf(c, lam) * stats.poisson.pmf(x, c * phi)
    return x, pmf


@pytest.fixture(scope="session")
def geometric_sqrt_models():
    return OffspringModel.geometric1(), ImmigrationModel.poisson_seq(RegVarSeq(0.5))


@pytest.fixture(scope="session")
def short_ensemble(geometric_sqrt_models):
    """Z paths (R x 21) of the Geometric1 / Poisson(n^{1/2}) process at horizon 20."""
    off, imm = geometric_sqrt_models
    R = 50_000
    z = np.empty((R, 21), dtype=np.int64)
    for r in range(R):
        z[r] = simulate(off, imm, SimConfig(20, 777, r)).z
    return z
