"""
Is the normalized estimator Gaussian?
=====================================

Runs the Monte Carlo experiment for geometric offspring and Poisson n^{1/2}
immigration, where sigma^2 = 128/7, and writes a histogram and QQ plot.
"""

import sys
from pathlib import Path

from branchimm import ImmigrationModel, OffspringModel, RegVarSeq, normality_experiment
from branchimm.plots import histogram_svg, qq_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

off = OffspringModel.geometric1()
imm = ImmigrationModel.poisson_seq(RegVarSeq(0.5))
s = normality_experiment(off, imm, n=2000, R=1000, master_seed=20240601)

print(f"sigma^2 {s.sigma_sq:.4f}")
print(f"mean {s.mean:.4f}  variance {s.variance:.4f}")
print(f"skew {s.skewness:.3f}  excess kurtosis {s.excess_kurtosis:.3f}")
print(f"KS {s.ks_distance:.4f} (p = {s.ks_pvalue:.3f})  AD {s.anderson_darling:.3f}")
print(f"failures {s.failures}  {s.elapsed:.1f}s")

sigma = s.sigma_sq ** 0.5
(out / "histogram.svg").write_text(histogram_svg(s.statistics, sigma))
(out / "qq.svg").write_text(qq_svg(s.statistics, sigma))
(out / "replications.csv").write_text(s.replication_csv())
print("wrote", sorted(p.name for p in out.iterdir()))
