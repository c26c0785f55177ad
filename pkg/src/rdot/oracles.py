"""Closed-form references for the standard normal case.

Independent ground truth for the solvers: when both marginals are N(0, 1),
the optimal coupling of the regularized inner-product problem is jointly
Gaussian with correlation solving rho^2 + beta*rho - 1 = 0, and every
quantity below follows in closed form. The test suite corroborates the
jointly-Gaussian optimality claim by checking that Sinkhorn on fine
quantizations converges to these values from below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class GaussianRegularizedValue:
    rho: float
    f_value: float
    mutual_info: float


def gaussian_f(beta: float) -> GaussianRegularizedValue:
    """Regularized inner-product transport value for N(0,1) vs N(0,1).

    Maximizes rho + (beta/2) ln(1 - rho^2) over the correlation rho of a
    jointly Gaussian coupling; the stationary point is
    rho* = (sqrt(beta^2 + 4) - beta) / 2.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    rho = (math.sqrt(beta * beta + 4.0) - beta) / 2.0
    # 1 - rho^2 = beta * rho at the stationary point; use it to avoid
    # cancellation for small beta
    mutual_info = -0.5 * math.log(beta * rho)
    f_value = rho - beta * mutual_info
    return GaussianRegularizedValue(rho=rho, f_value=f_value, mutual_info=mutual_info)


def gaussian_w(rate: float) -> float:
    """Constrained inner-product transport value for N(0,1) vs N(0,1).

    The jointly Gaussian coupling with correlation rho has mutual information
    -(1/2) ln(1 - rho^2); inverting at the rate budget gives
    sqrt(1 - exp(-2 R)).
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    return math.sqrt(-math.expm1(-2.0 * rate))


def gaussian_rate_distortion(variance: float, distortion: float) -> float:
    """Classical quadratic rate-distortion value for N(0, variance), in nats."""
    if variance <= 0 or distortion <= 0:
        raise ValueError("variance and distortion must be positive")
    return max(0.0, 0.5 * math.log(variance / distortion))
