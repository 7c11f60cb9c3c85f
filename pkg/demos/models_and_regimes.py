"""
Immigration laws and their regimes
==================================

Builds a few immigration sequences, prints their exact moments and the
symbolic regime classification that decides theta.
"""

import numpy as np

from branchimm import ImmigrationModel, OffspringModel, RegVarSeq, validate_regime

# Poisson immigration with mean n^{1/2}: beta^2 grows like the mean,
# gamma^4 like its square
off = OffspringModel.geometric1()
imm = ImmigrationModel.poisson_seq(RegVarSeq(0.5))
n = np.array([1, 10, 100, 1000])
alpha, beta2, gamma4 = imm.moments(n)
print("poisson n^0.5")
for row in zip(n, alpha, beta2, gamma4):
    print("  n=%5d  alpha=%9.3f  beta^2=%9.3f  gamma^4=%11.3f" % row)
print(" ", validate_regime(off, imm).to_dict())

# Neyman Type A: Poisson(lam_n) clusters of Poisson(phi_n) immigrants.
# Which term of gamma^4 wins decides whether immigration noise matters.
for lam, phi in [(0.1, 1.1), (0.5, 1.0), (0.7, 0.5)]:
    imm = ImmigrationModel.neyman_a(RegVarSeq(lam), RegVarSeq(phi))
    rep = validate_regime(off, imm)
    print(f"neyman_a lam=n^{lam} phi=n^{phi}: exponents {rep.exponents} "
          f"-> {rep.theta_class.value}, theta={rep.theta:.4f}")

# homogeneous immigration has no diverging mean, so theta is left open
rep = validate_regime(off, ImmigrationModel.homogeneous_poisson(5))
print("homogeneous poisson(5):", rep.theta_class.value)
