"""Two crossed factors, then a picture of pattern space.

Factor A changes the intensity, factor B the interaction strength. The
two-way Levene family reports an overall test and one per factor plus the
interaction. Classical MDS then places every pattern in the plane.
"""

import numpy as np

from metric_anova import MetricParams, TwoWayLayout, classical_mds, distance_matrix, two_way_levene
from metric_anova.perm_engine import permutation_test_multi
from metric_anova.simulate import Strauss, sample

rng = np.random.default_rng(5)
cells, a_labels, b_labels, patterns = 6, [], [], []
for a, beta in enumerate((30.0, 60.0)):
    for b, gamma in enumerate((1.0, 0.0)):
        model = Strauss(beta=beta, gamma=gamma, R=0.08)
        for _ in range(cells):
            patterns.append(sample(model, rng, sweeps=30_000))
            a_labels.append(a)
            b_labels.append(b)

layout = TwoWayLayout(a_labels, b_labels)
D = distance_matrix(patterns, MetricParams(C=0.25))
for name, res in permutation_test_multi(two_way_levene, D, layout, M=299, seed=1).items():
    print(f"{name:3s} observed {res.observed:8.3f}  p = {res.p_value:.3f}")

emb = classical_mds(D, dims=2)
print(f"\nshare of negative eigenvalue mass: {emb.negative_mass:.3f}")
for a in (0, 1):
    for b in (0, 1):
        idx = [i for i in range(len(patterns)) if a_labels[i] == a and b_labels[i] == b]
        centre = emb.coordinates[idx].mean(axis=0)
        print(f"cell (A={a}, B={b}) centre: ({centre[0]:+.3f}, {centre[1]:+.3f})")
