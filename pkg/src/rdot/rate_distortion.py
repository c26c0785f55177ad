"""Rate-distortion solves for finitely supported sources.

Two related quantities, both under squared Euclidean distortion and natural
logarithms:

* :func:`ba_rate` / :func:`r_mu` -- the classical rate-distortion value
  min I(U;Z) s.t. E[d2] <= budget, restricted to a finite reproduction
  alphabet (the source support plus its barycenter by default). Restriction
  only raises the value, so downstream sandwich checks use it consistently
  on both sides.
* :func:`i_mu_curve` -- the double-marginal variant where both coupling
  endpoints carry the source law. For each multiplier the Lagrangian
  min I + lambda * E[d2] is exactly entropic transport with cost d2 and
  regularization 1/lambda, so a Sinkhorn sweep traces the curve; the value
  function is convex in the squared budget, making each sweep point exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, xlogy

from .entropic import _solve_entropic
from .errors import (
    DegenerateGrid,
    EmptyReproduction,
    InfeasibleDistortion,
    NoConvergence,
)
from .measures import (
    DiscreteMeasure,
    MonotoneCurve,
    second_moment,
    squared_distance_matrix,
    validate_measure,
)


@dataclass(frozen=True)
class RDSolveDiagnostics:
    """Convergence metadata for one rate-distortion solve."""

    iterations: int
    final_gap: float
    lagrange_multiplier: float

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        object.__setattr__(self, "final_gap", max(float(self.final_gap), 0.0))
        if self.lagrange_multiplier < 0:
            raise ValueError("multiplier must be nonnegative")


def default_reproduction(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Source support augmented with its barycenter (deduplicated)."""
    bary = mu.mean()
    points = [p for p in mu.points]
    if not any(np.array_equal(bary, p) for p in points):
        points.append(bary)
    k = len(points)
    return validate_measure(np.array(points), np.full(k, 1.0 / k))


def _ba_fixed_slope(logp, dmat, slope, tol, max_iter, logq=None):
    """Alternating minimization of I + slope * E[d2] over test channels.

    Returns (rate, distortion, value, gap, logq, iterations) where
    ``value - gap`` lower-bounds min_channel {I + slope * E[d2]} and the
    (rate, distortion) pair is achieved by an explicit channel.
    """
    m, k = dmat.shape
    kernel = -slope * dmat
    if logq is None:
        logq = np.full(k, -np.log(k))
    p = np.exp(logp)
    gap = np.inf
    value = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        logc = logsumexp(kernel + logq[None, :], axis=1)
        log_t = logsumexp(kernel + (logp - logc)[:, None], axis=0)
        value = float(-(p @ logc))
        gap = float(np.expm1(log_t.max()))
        if gap <= tol:
            break
        logq = logq + log_t
        logq = logq - logsumexp(logq)
    log_channel = kernel + logq[None, :] - logc[:, None]
    channel = np.exp(log_channel)
    distortion = float(p @ (channel * dmat).sum(axis=1))
    rate = float(value - slope * distortion)
    return rate, distortion, value, max(gap, 0.0), logq, it


def ba_rate(
    mu: DiscreteMeasure,
    distortion_budget: float,
    reproduction: DiscreteMeasure | None = None,
    tol: float = 1e-6,
    max_iter: int = 5000,
) -> tuple[float, RDSolveDiagnostics]:
    """Rate (nats) of the best test channel meeting a squared-distortion budget.

    The reproduction alphabet is finite, so the result upper-bounds the
    unrestricted optimum; the certified duality gap against the restricted
    optimum is driven below ``tol`` by bisection on the distortion slope.
    """
    if distortion_budget < 0:
        raise ValueError("distortion budget must be nonnegative")
    if not 0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")
    rep = default_reproduction(mu) if reproduction is None else reproduction
    if rep.size == 0:
        raise EmptyReproduction("reproduction support is empty")
    dmat = squared_distance_matrix(mu, rep)
    p = mu.weights
    single_point = float((p @ dmat).min())
    if distortion_budget >= single_point - 1e-15:
        return 0.0, RDSolveDiagnostics(1, 0.0, 0.0)
    reachable = float(p @ dmat.min(axis=1))
    if distortion_budget < reachable - 1e-12:
        raise InfeasibleDistortion(
            f"budget {distortion_budget} below reachable distortion {reachable}"
        )
    with np.errstate(divide="ignore"):
        logp = np.log(p)

    scale = 1.0 / max(float((p @ dmat) @ np.full(rep.size, 1.0 / rep.size)), 1e-300)
    inner_tol = tol / 4.0

    evaluated = []  # (slope, rate, distortion, value, gap)
    logq = None

    def run(slope):
        nonlocal logq
        rate, dist, value, gap, logq, _ = _ba_fixed_slope(
            logp, dmat, slope, inner_tol, max_iter, logq=logq
        )
        evaluated.append((slope, rate, dist, value, gap))
        return rate, dist

    def bounds():
        lower = 0.0
        upper = np.inf
        bracket_lo = None  # tightest distortion above budget
        bracket_hi = None  # tightest distortion at or below budget
        for slope, rate, dist, value, gap in evaluated:
            lower = max(lower, value - gap - slope * distortion_budget)
            if dist <= distortion_budget:
                upper = min(upper, rate)
                if bracket_hi is None or dist > bracket_hi[2]:
                    bracket_hi = (slope, rate, dist)
            elif bracket_lo is None or dist < bracket_lo[2]:
                bracket_lo = (slope, rate, dist)
        if bracket_lo and bracket_hi and bracket_hi[2] < distortion_budget:
            # time-share the two bracketing channels to hit the budget exactly;
            # mutual information is convex in the channel so the mix is feasible
            lam = (distortion_budget - bracket_lo[2]) / (bracket_hi[2] - bracket_lo[2])
            upper = min(upper, lam * bracket_hi[1] + (1 - lam) * bracket_lo[1])
        return max(lower, 0.0), upper

    s_lo = 1e-3 * scale
    rate_lo, dist_lo = run(s_lo)
    while dist_lo < distortion_budget and s_lo > 1e-12 * scale:
        s_lo /= 8.0
        rate_lo, dist_lo = run(s_lo)
    s_hi = max(s_lo, 1e-3 * scale)
    rate_hi, dist_hi = run(s_hi)
    doubles = 0
    while dist_hi > distortion_budget:
        s_hi *= 2.0
        doubles += 1
        if doubles > 200:
            raise NoConvergence("slope search exhausted", iterations=len(evaluated))
        rate_hi, dist_hi = run(s_hi)

    for _ in range(200):
        lower, upper = bounds()
        if upper - lower <= tol:
            break
        mid = np.sqrt(s_lo * s_hi) if s_lo > 0 else s_hi / 2.0
        _, dist_mid = run(mid)
        if dist_mid > distortion_budget:
            s_lo = mid
        else:
            s_hi = mid
    else:
        raise NoConvergence(
            f"gap {bounds()[1] - bounds()[0]:.3e} > {tol:.3e}",
            iterations=len(evaluated),
        )

    lower, upper = bounds()
    best_slope = min(
        (e for e in evaluated),
        key=lambda e: abs(e[2] - distortion_budget),
    )[0]
    diag = RDSolveDiagnostics(
        iterations=len(evaluated),
        final_gap=upper - lower,
        lagrange_multiplier=best_slope,
    )
    return float(upper), diag


def r_mu(
    mu: DiscreteMeasure,
    sigma: float,
    reproduction: DiscreteMeasure | None = None,
    tol: float = 1e-6,
    max_iter: int = 5000,
) -> tuple[float, RDSolveDiagnostics]:
    """Rate-distortion value at root-mean-square budget ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return ba_rate(mu, sigma * sigma, reproduction=reproduction, tol=tol, max_iter=max_iter)


def default_multiplier_grid(mu: DiscreteMeasure, count: int = 40) -> np.ndarray:
    """Log-spaced Lagrange multipliers covering near-identity to near-independent."""
    m2 = max(second_moment(mu), 1e-300)
    return np.geomspace(1e-2, 1e4, count) / m2


def i_mu_curve(
    mu: DiscreteMeasure,
    multiplier_grid=None,
    tol: float = 1e-9,
    max_iter: int = 20000,
) -> MonotoneCurve:
    """Distortion-information curve with both coupling marginals equal to mu.

    Sweeps multipliers lambda, solving min I + lambda * E[d2] over couplings
    in Pi(mu, mu) by Sinkhorn with cost d2 and regularization 1/lambda, and
    collects (sqrt(E[d2]), I) knots. The left limit is the source entropy
    (identity coupling) and the support ends at the root of the independent
    coupling's distortion.
    """
    if mu.size == 1:
        return MonotoneCurve(np.array([]), np.array([]), 0.0, 0.0)
    if multiplier_grid is None:
        multiplier_grid = default_multiplier_grid(mu)
    lams = np.asarray(multiplier_grid, dtype=float).ravel()
    if lams.size == 0:
        raise DegenerateGrid("multiplier grid is empty")
    if (lams <= 0).any() or (np.diff(lams) <= 0).any():
        raise ValueError("multiplier grid must be positive and strictly increasing")

    dmat = squared_distance_matrix(mu, mu)
    w = mu.weights
    support_end = float(np.sqrt(w @ dmat @ w))
    entropy = mu.entropy()

    knots = []
    warm = None
    for lam in lams:
        plan, f, g, _, _, _ = _solve_entropic(
            dmat, w, w, 1.0 / lam, tol, max_iter, warm=warm
        )
        warm = (f, g)
        dist = float((plan * dmat).sum())
        outer = np.outer(w, w)
        mask = plan > 0
        info = max(float(xlogy(plan[mask], plan[mask] / outer[mask]).sum()), 0.0)
        knots.append((np.sqrt(max(dist, 0.0)), info, lam))

    knots.sort(key=lambda t: t[0])
    xs, vs = [], []
    for sigma, info, _ in knots:
        if sigma >= support_end - 1e-12:
            continue
        if xs and sigma <= xs[-1] + 1e-12:
            continue
        xs.append(sigma)
        vs.append(info)
    if len(xs) < 2:
        raise DegenerateGrid("multiplier grid produced no distortion spread")
    return MonotoneCurve(np.array(xs), np.array(vs), entropy, support_end)


def eval_curve(curve: MonotoneCurve, x: float) -> float:
    """Clamped monotone interpolation of a sampled curve at ``x > 0``."""
    if x <= 0:
        raise ValueError("abscissa must be positive")
    return curve.evaluate(x)
