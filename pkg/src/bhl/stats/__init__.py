from .build import TestRegistry, UnsupportedTest, build_test, const_value, needs_seed
from .dists import MarginalDist, NormalDist, dist_close
from .kernels import (
    bayes_factor, likelihood_ratio_statistic, log_bayes_factor, log_likelihood_ratio,
    normal_log_marginal, std_normal_cdf, std_normal_sf, two_sided_tail, z1_statistic,
    z_statistic,
)
from .testdefs import (
    CONJUNCTIVE, DISJUNCTIVE, STD_NORMAL, Empirical, ProductCoupling, PValue, StdNormal,
    Tail, TestDef, combine, combine_p_values, list_tests, mc_null_p_value, p_value,
)
