"""
Functional limits on a time grid
================================

The population path, weighted sums of it and the error partial sums all have
deterministic or Gaussian limits. Each check prints empirical against limit.
"""

from branchimm import ImmigrationModel, OffspringModel, RegVarSeq
from branchimm.verify import (
    fluctuation_check,
    lemma1_check,
    lindeberg_diagnostic,
    variance_process_check,
)

off = OffspringModel.geometric1()
linear = ImmigrationModel.poisson_seq(RegVarSeq(1.0))
sqrt = ImmigrationModel.poisson_seq(RegVarSeq(0.5))
seed = 20240601

# Z_[nt] / A_n -> t^{alpha+1}
print(fluctuation_check(off, linear, 5000, [0.25, 0.5, 1.0], R=200, master_seed=seed).format())

# (1/n) sum (Z_k/A_n)^2 -> 1/(2 alpha + 3); the error shrinks with n
for n in (500, 2000, 5000):
    tab = lemma1_check(off, linear, n, [1.0], "square", R=200, master_seed=seed)
    print(f"n={n}: median relative error {tab.column('median_rel_error')[0]:.4f}")

# variance of the error partial sums against C(t); 'exact' is the finite-n value
print(variance_process_check(off, sqrt, 2000, [0.25, 0.5, 1.0], R=1000, master_seed=seed).format())

# Lindeberg sums shrink as n grows
for n in (250, 1000, 4000):
    print(lindeberg_diagnostic(sqrt, n, [0.5, 1.0]).format())
