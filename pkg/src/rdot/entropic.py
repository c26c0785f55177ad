"""Entropic inner-product transport against a fixed pair of marginals.

Two solvers share one log-domain Sinkhorn core:

* :func:`sinkhorn_f` -- regularized form: maximize E<Y,Z> - beta * I(Y;Z)
  over couplings. With fixed marginals the mutual information equals the
  divergence from the product coupling, so this is exactly entropic optimal
  transport with cost -<y,z> and regularization beta.
* :func:`w_constrained` -- constrained form: maximize E<Y,Z> subject to
  I(Y;Z) <= R, solved as inf_beta {f(beta) + beta R} by bisection on beta.
  Strong duality holds because the feasible set is convex and the objective
  linear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, xlogy

from .errors import BisectionStall, NoConvergence, NumericalUnderflow
from .measures import (
    CouplingMatrix,
    DiscreteMeasure,
    inner_product_matrix,
    second_moment,
)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 20000
_ANNEAL_SPREAD = 50.0
_BETA_BRACKET = (1e-4, 1e4)


def _round_to_marginals(plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project an almost-feasible plan onto exact marginals.

    Scale rows down to a, then columns down to b, then patch the leftover
    mass with a rank-one nonnegative correction. Objective perturbation is
    bounded by the L1 marginal violation times the cost range.
    """
    rows = plan.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(rows > 0, np.minimum(a / rows, 1.0), 0.0)
    plan = plan * scale[:, None]
    cols = plan.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(cols > 0, np.minimum(b / cols, 1.0), 0.0)
    plan = plan * scale[None, :]
    da = np.clip(a - plan.sum(axis=1), 0.0, None)
    db = np.clip(b - plan.sum(axis=0), 0.0, None)
    total = da.sum()
    if total > 0:
        plan = plan + np.outer(da, db) / total
    return plan


def _sinkhorn_core(cost, loga, logb, reg, tol, max_iter, f=None, g=None):
    """Log-domain Sinkhorn for min <P, cost> + reg * KL(P || a x b).

    Potentials f, g are kept in cost units so they can warm-start a solve at
    a different regularization. Returns (f, g, lnP, iterations, col_err).
    """
    kernel = -cost / reg
    if not np.isfinite(kernel).all():
        raise NumericalUnderflow(
            "cost / regularization overflows doubles; rescale the beta range"
        )
    m, k = cost.shape
    F = np.zeros(m) if f is None else f / reg
    G = np.zeros(k) if g is None else g / reg
    row_kernel = kernel + loga[:, None]
    col_kernel = kernel + logb[None, :]
    b = np.exp(logb)
    err = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        col_log_mass = logsumexp(row_kernel + F[:, None], axis=0)
        err = np.abs(np.exp(col_log_mass + G + logb) - b).sum()
        if err <= tol:
            break
        G = -col_log_mass
        F = -logsumexp(col_kernel + G[None, :], axis=1)
    lnP = row_kernel + logb[None, :] + F[:, None] + G[None, :]
    return F * reg, G * reg, lnP, it, err


def _solve_entropic(cost, a, b, reg, tol, max_iter, warm=None):
    """Anneal from a loose regularization when reg is small against the cost.

    Returns (plan_rounded, f, g, iterations, marginal_err, dual_gap).
    """
    with np.errstate(divide="ignore"):
        loga = np.log(a)
        logb = np.log(b)
    spread = float(cost.max() - cost.min()) if cost.size else 0.0
    f = g = None
    if warm is not None:
        f, g = warm
    total_iters = 0
    if f is None and spread > _ANNEAL_SPREAD * reg:
        stage = spread / 8.0
        while stage > 3.0 * reg:
            f, g, _, it, _ = _sinkhorn_core(
                cost, loga, logb, stage, tol=1e-4, max_iter=2000, f=f, g=g
            )
            total_iters += it
            stage /= 3.0
    f, g, lnP, it, err = _sinkhorn_core(
        cost, loga, logb, reg, tol=tol, max_iter=max_iter, f=f, g=g
    )
    total_iters += it
    if err > tol:
        raise NoConvergence(
            f"marginal violation {err:.3e} > {tol:.3e} after {total_iters} iterations",
            iterations=total_iters,
        )
    raw = np.exp(lnP)
    plan = _round_to_marginals(raw, a, b)
    # dual certificate: any potentials are dual feasible for the entropic
    # problem, so primal(plan) - dual(f, g) brackets the suboptimality
    dual = float(f @ a + g @ b - reg * (raw.sum() - 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = np.outer(a, b)
        mask = plan > 0
        kl = float(xlogy(plan[mask], plan[mask] / outer[mask]).sum())
    primal = float((plan * cost).sum() + reg * kl)
    gap = primal - dual
    return plan, f, g, total_iters, err, gap


@dataclass(frozen=True)
class EotSolution:
    """One regularized transport solve.

    ``f_value = inner_product - beta * mutual_info`` by construction; it is
    nonnegative whenever the first marginal is centered (the product coupling
    already achieves 0 there).
    """

    plan: CouplingMatrix
    inner_product: float
    mutual_info: float
    f_value: float
    beta: float
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.mutual_info < 0:
            raise ValueError(f"mutual_info must be nonnegative: {self.mutual_info}")
        resid = abs(self.f_value - (self.inner_product - self.beta * self.mutual_info))
        if resid > 1e-9:
            raise ValueError(f"f_value inconsistent with plan by {resid:.3e}")
        if self.f_value < -1e-9:
            raise ValueError(
                f"negative objective {self.f_value:.3e}: first marginal not centered?"
            )


def sinkhorn_f(
    gamma_d: DiscreteMeasure,
    mu: DiscreteMeasure,
    beta: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    warm_start=None,
) -> EotSolution:
    """Solve max E<Y,Z> - beta * I(Y;Z) over couplings of (gamma_d, mu).

    Parameters
    ----------
    gamma_d, mu : DiscreteMeasure
        Marginals with matching dimension; gamma_d should be centered for
        the value to be nonnegative.
    beta : float
        Positive information price.
    tol : float
        L1 marginal violation at which the fixed-point iteration stops.
    warm_start : optional (f, g) dual potentials in cost units.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    gain = inner_product_matrix(gamma_d, mu)
    plan, f, g, iters, err, gap = _solve_entropic(
        -gain, gamma_d.weights, mu.weights, beta, tol, max_iter, warm=warm_start
    )
    coupling = CouplingMatrix(gamma_d, mu, plan)
    info = coupling.mutual_information()
    inner = float((plan * gain).sum())
    return EotSolution(
        plan=coupling,
        inner_product=inner,
        mutual_info=info,
        f_value=inner - beta * info,
        beta=beta,
        diagnostics={
            "iterations": iters,
            "marginal_error": err,
            "dual_gap": abs(gap),
            "potentials": (f, g),
        },
    )


def f_curve(
    gamma_d: DiscreteMeasure,
    mu: DiscreteMeasure,
    beta_grid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[EotSolution]:
    """Batch of regularized solves over a positive, sorted beta grid.

    Solves run from the largest beta down so each warm-starts the next,
    harder one; results come back in grid order.
    """
    grid = [float(b) for b in beta_grid]
    if not grid:
        raise ValueError("beta grid must be nonempty")
    if any(b <= 0 for b in grid) or sorted(grid) != grid:
        raise ValueError("beta grid must be positive and sorted ascending")
    out: list[EotSolution] = []
    warm = None
    for beta in reversed(grid):
        sol = sinkhorn_f(gamma_d, mu, beta, tol=tol, max_iter=max_iter, warm_start=warm)
        warm = sol.diagnostics["potentials"]
        out.append(sol)
    return out[::-1]


@dataclass(frozen=True)
class ConstrainedSolution:
    """Result of the information-constrained transport solve."""

    value: float
    beta: float
    mutual_info: float
    lower_bound: float
    upper_bound: float
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)


def _product_value(gamma_d: DiscreteMeasure, mu: DiscreteMeasure) -> float:
    return float(gamma_d.mean() @ mu.mean())


def w_constrained(
    gamma_d: DiscreteMeasure,
    mu: DiscreteMeasure,
    rate: float,
    tol: float = 1e-4,
    sinkhorn_tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ConstrainedSolution:
    """Maximize E<Y,Z> over couplings with mutual information at most ``rate``.

    Computed as inf_beta {f(beta) + beta * rate}: the optimizer's mutual
    information is monotone in beta, so bisection brackets the beta whose
    plan meets the rate budget. The returned value is the best Lagrangian
    upper bound; ``lower_bound`` is the inner product of the best feasible
    plan found, and their difference is driven below ``tol``.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if rate == 0.0:
        value = _product_value(gamma_d, mu)
        return ConstrainedSolution(
            value=value,
            beta=math.inf,
            mutual_info=0.0,
            lower_bound=value,
            upper_bound=value,
            diagnostics={"solves": 0, "gap": 0.0},
        )
    scale = math.sqrt(second_moment(gamma_d) * second_moment(mu))
    if scale == 0.0:
        value = _product_value(gamma_d, mu)
        return ConstrainedSolution(
            value=value,
            beta=math.inf,
            mutual_info=0.0,
            lower_bound=value,
            upper_bound=value,
            diagnostics={"solves": 0, "gap": 0.0},
        )
    beta_floor = _BETA_BRACKET[0] * scale
    beta_cap = _BETA_BRACKET[1] * scale
    info_cap = min(
        -float((gamma_d.weights * np.log(gamma_d.weights.clip(1e-300))).sum()),
        -float((mu.weights * np.log(mu.weights.clip(1e-300))).sum()),
    )

    solves = []
    warm = None

    def solve(beta):
        nonlocal warm
        best = None
        for b, sol in solves:
            if best is None or abs(math.log(b / beta)) < abs(math.log(best[0] / beta)):
                best = (b, sol)
        warm_pot = best[1].diagnostics["potentials"] if best else None
        sol = sinkhorn_f(
            gamma_d, mu, beta, tol=sinkhorn_tol, max_iter=max_iter, warm_start=warm_pot
        )
        solves.append((beta, sol))
        return sol

    def bounds():
        upper = math.inf
        lower = -math.inf
        for b, sol in solves:
            upper = min(upper, sol.f_value + b * rate)
            # I <= info_cap for any coupling, so this caps the unconstrained value
            upper = min(upper, sol.inner_product + b * max(info_cap - sol.mutual_info, 0.0))
            if sol.mutual_info <= rate:
                lower = max(lower, sol.inner_product)
        lower = max(lower, _product_value(gamma_d, mu))
        return lower, upper

    lo, hi = 0.02 * scale, 50.0 * scale
    sol_lo = solve(lo)
    sol_hi = solve(hi)
    steps = 2
    # expand the bracket outward until the rate is straddled or the dual
    # bounds already close
    while sol_lo.mutual_info < rate and lo > beta_floor * 1.0001:
        lower, upper = bounds()
        if upper - lower <= tol:
            break
        lo = max(lo / 8.0, beta_floor)
        sol_lo = solve(lo)
        steps += 1
    while sol_hi.mutual_info > rate and hi < beta_cap * 0.9999:
        hi = min(hi * 8.0, beta_cap)
        sol_hi = solve(hi)
        steps += 1

    if sol_lo.mutual_info >= rate >= sol_hi.mutual_info:
        blo, bhi = lo, hi
        while steps < 200:
            lower, upper = bounds()
            if upper - lower <= tol:
                break
            mid = math.sqrt(blo * bhi)
            sol_mid = solve(mid)
            steps += 1
            if sol_mid.mutual_info > rate:
                blo = mid
            else:
                bhi = mid
        else:
            raise BisectionStall(
                f"gap {bounds()[1] - bounds()[0]:.3e} > {tol:.3e} after 200 solves"
            )

    lower, upper = bounds()
    if not math.isfinite(upper):
        raise BisectionStall("no usable dual bound found")
    best_beta, best_sol = min(
        ((b, s) for b, s in solves),
        key=lambda bs: bs[1].f_value + bs[0] * rate,
    )
    return ConstrainedSolution(
        value=upper,
        beta=best_beta,
        mutual_info=best_sol.mutual_info,
        lower_bound=lower,
        upper_bound=upper,
        diagnostics={"solves": len(solves), "gap": upper - lower},
    )
