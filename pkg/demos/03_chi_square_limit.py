"""The normalised Levene statistic has a chi-square limit.

Under equal dispersion, (k - 1) * Ltilde is close to chi-square with k - 1
degrees of freedom, so a p-value needs no permutations. This script draws
null datasets, compares their quantiles with the chi-square ones and then
tests one dataset both ways.
"""

import numpy as np

from metric_anova import GroupLayout, MetricParams, distance_matrix, levene_l, levene_ltilde
from metric_anova.perm_engine import chi2_pvalue, permutation_test
from metric_anova.simulate import sample_csr
from metric_anova.study import null_statistic_samples

null = null_statistic_samples(n_per_group=30, model="csr", replicates=150, seed=3)
print(f"KS distance to chi2_1 over {len(null.values)} null datasets: {null.ks:.3f}")
print("rank  value   chi2 quantile")
for rank, value, q in null.quantile_table()[::30]:
    print(f"{rank:4d}  {value:6.3f}  {q:6.3f}")

rng = np.random.default_rng(4)
pats = [sample_csr(35, rng=rng) for _ in range(30)] + [sample_csr(15, rng=rng) for _ in range(30)]
layout = GroupLayout.from_sizes([30, 30])
D = distance_matrix(pats, MetricParams(C=0.25))
value, est = levene_ltilde(D, layout)
print(f"\nCSR(35) vs CSR(15): Ltilde = {value.value:.2f}, chi2 p = {chi2_pvalue(value.value, 1):.2e}")
print(f"  covariance estimate {est.gamma_sq_hat:.4f}, variance estimate {est.sigma_sq_hat:.4f}")
print(f"  permutation p for L = {permutation_test(levene_l, D, layout, M=199, seed=0).p_value:.3f}")
