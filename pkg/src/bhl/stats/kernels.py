"""Numeric kernels: normal CDF, test statistics, likelihood ratios, Bayes factors."""
from __future__ import annotations

import math
from typing import Sequence, Tuple

from .dists import NormalDist

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(x: float) -> float:
    """Phi(x) through the complementary error function.

    ``math.erfc`` is accurate to a few ulps over the whole real line, so the
    absolute error of Phi is far below 1e-12, including the far tails where
    ``1 - erf`` would cancel.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("std_normal_cdf of NaN")
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_sf(x: float) -> float:
    """1 - Phi(x) without cancellation."""
    x = float(x)
    if math.isnan(x):
        raise ValueError("std_normal_sf of NaN")
    return 0.5 * math.erfc(x / _SQRT2)


def two_sided_tail(x: float) -> float:
    """Pr[|Z| >= |x|] for standard normal Z."""
    return math.erfc(abs(float(x)) / _SQRT2)


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def z_statistic(y1: Sequence[float], y2: Sequence[float], sigma: float) -> float:
    """Two-sample Z statistic with known common standard deviation."""
    if len(y1) == 0 or len(y2) == 0:
        raise ValueError("empty dataset")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return (_mean(y1) - _mean(y2)) / (sigma * math.sqrt(1.0 / len(y1) + 1.0 / len(y2)))


def z1_statistic(y: Sequence[float], mu0: float, sigma: float) -> float:
    """One-sample Z statistic against a known mean."""
    if len(y) == 0:
        raise ValueError("empty dataset")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return (_mean(y) - mu0) / (sigma / math.sqrt(len(y)))


def log_likelihood_ratio(y: Sequence[float], p: NormalDist, q: NormalDist) -> float:
    """log(prod q(y_i) / prod p(y_i))."""
    if len(y) == 0:
        raise ValueError("empty dataset")
    return math.fsum(q.logpdf(v) - p.logpdf(v) for v in y)


def likelihood_ratio_statistic(y: Sequence[float], p: NormalDist, q: NormalDist) -> float:
    """prod q(y_i) / prod p(y_i), accumulated in log space."""
    return math.exp(log_likelihood_ratio(y, p, q))


def normal_log_marginal(y: Sequence[float], mu0: float, tau2: float, sigma2: float) -> float:
    """log of the integral of N(z; mu0, tau2) * prod N(y_i; z, sigma2) dz.

    The data are jointly normal with mean mu0 and covariance sigma2*I + tau2*11^T;
    the determinant and quadratic form reduce to the sample mean and the
    within-sample sum of squares.
    """
    n = len(y)
    if n == 0:
        raise ValueError("empty dataset")
    if not (tau2 > 0 and sigma2 > 0):
        raise ValueError("variances must be positive")
    ybar = _mean(y)
    ss = math.fsum((v - ybar) ** 2 for v in y)
    total = sigma2 + n * tau2
    return (-0.5 * n * math.log(2.0 * math.pi * sigma2)
            - 0.5 * math.log(total / sigma2)
            - ss / (2.0 * sigma2)
            - n * (ybar - mu0) ** 2 / (2.0 * total))


def log_bayes_factor(y: Sequence[float], q_prior: Tuple[float, float],
                     p_prior: Tuple[float, float], sigma2: float,
                     p_sigma2: float = None) -> float:
    """log of m_q(y) / m_p(y) for conjugate normal-normal candidates."""
    if p_sigma2 is None:
        p_sigma2 = sigma2
    return (normal_log_marginal(y, q_prior[0], q_prior[1], sigma2)
            - normal_log_marginal(y, p_prior[0], p_prior[1], p_sigma2))


def bayes_factor(y: Sequence[float], q_prior: Tuple[float, float],
                 p_prior: Tuple[float, float], sigma2: float,
                 p_sigma2: float = None) -> float:
    """Ratio of the marginal likelihoods of two conjugate normal candidates."""
    return math.exp(log_bayes_factor(y, q_prior, p_prior, sigma2, p_sigma2))
