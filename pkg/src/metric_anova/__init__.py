"""ANOVA-type group comparisons for data in metric spaces.

The package works from pairwise distances, so any metric can be used; point
patterns under the transport-transform (TT) metric are supported directly.
"""

from .classic_oracle import ScalarSample, levene_f, one_way_f, two_way_f
from .core import GroupLayout, StatisticValue, TwoWayLayout
from .dist_stats import (NullEstimates, anderson_bf, anderson_f, half_distances, levene_l,
                         levene_ltilde, two_way_anderson, two_way_levene)
from .frechet_stats import BarycenterResult, FrechetEvaluator, frechet_mean, frechet_statistics
from .mds import Embedding, classical_mds
from .pattern_space import (DistanceMatrix, MetricParams, PointPattern, adaptive_cutoff,
                            distance_matrix, rtt_distance, solve_assignment, tt_distance)
from .perm_engine import PermutationTestResult, chi2_pvalue, permutation_test
from .simulate import (CSR, ExponentialTilt, GaussianMixture, Strauss, Window,
                       calibrate_strauss_beta, sample_csr, sample_inhomogeneous, sample_strauss,
                       strauss_s_R)

__version__ = "0.1.0"

__all__ = [
    "BarycenterResult", "CSR", "DistanceMatrix", "Embedding", "ExponentialTilt",
    "FrechetEvaluator", "GaussianMixture", "GroupLayout", "MetricParams", "NullEstimates",
    "PermutationTestResult", "PointPattern", "ScalarSample", "StatisticValue", "Strauss",
    "TwoWayLayout", "Window", "adaptive_cutoff", "anderson_bf", "anderson_f",
    "calibrate_strauss_beta", "chi2_pvalue", "classical_mds", "distance_matrix",
    "frechet_mean", "frechet_statistics", "half_distances", "levene_f", "levene_l",
    "levene_ltilde", "one_way_f", "permutation_test", "rtt_distance", "sample_csr",
    "sample_inhomogeneous", "sample_strauss", "solve_assignment", "strauss_s_R",
    "tt_distance", "two_way_anderson", "two_way_f", "two_way_levene",
]
