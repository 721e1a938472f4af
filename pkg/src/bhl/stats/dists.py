"""Distribution values used as populations and null-sampling generators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NormalDist:
    mean: float
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError("normal variance must be positive")

    def logpdf(self, x: float) -> float:
        return -0.5 * (_LOG_2PI + math.log(self.var) + (x - self.mean) ** 2 / self.var)

    def logpdf_array(self, x: np.ndarray) -> np.ndarray:
        return -0.5 * (_LOG_2PI + math.log(self.var) + (x - self.mean) ** 2 / self.var)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.normal(self.mean, math.sqrt(self.var), size=shape)

    def __str__(self) -> str:
        return f"Normal({self.mean!r}, {self.var!r})"


@dataclass(frozen=True)
class MarginalDist:
    """Data y_i ~ Normal(z, sigma2) sharing one draw z ~ Normal(mean0, tau2)."""
    mean0: float
    tau2: float
    sigma2: float

    def __post_init__(self):
        if not (self.tau2 > 0 and self.sigma2 > 0):
            raise ValueError("variances must be positive")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        rows, n = shape
        z = rng.normal(self.mean0, math.sqrt(self.tau2), size=(rows, 1))
        return z + rng.normal(0.0, math.sqrt(self.sigma2), size=(rows, n))

    def __str__(self) -> str:
        return f"Marginal({self.mean0!r}, {self.tau2!r}, {self.sigma2!r})"


def dist_close(a, b, tol: float = 1e-9) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, NormalDist):
        return _close(a.mean, b.mean, tol) and _close(a.var, b.var, tol)
    if isinstance(a, MarginalDist):
        return (_close(a.mean0, b.mean0, tol) and _close(a.tau2, b.tau2, tol)
                and _close(a.sigma2, b.sigma2, tol))
    return a == b


def _close(x: float, y: float, tol: float) -> bool:
    return math.isclose(x, y, rel_tol=tol, abs_tol=tol)
