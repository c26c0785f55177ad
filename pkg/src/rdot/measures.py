"""Discrete measures, couplings, and sampled monotone curves.

The data model shared by every solver in the package:

* :class:`DiscreteMeasure` -- a finitely supported probability measure on
  d-dimensional points.
* :class:`CouplingMatrix` -- a joint table over two supports whose marginals
  are pinned to two measures.
* :class:`MonotoneCurve` -- a sampled nonincreasing function on a positive
  grid, used for distortion-rate style curves.

All values are immutable after construction and safe to share across workers.
Probabilities live in double precision; exact integer counts belong to the
types engine, not here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import (
    DimensionMismatch,
    DuplicatePoint,
    EmptySupport,
    NegativeWeight,
    SupportTooLarge,
    WeightSumMismatch,
)

WEIGHT_SUM_TOL = 1e-12
MARGINAL_TOL = 1e-10
MAX_SUPPORT = 10**6

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _normal_pdf(x: np.ndarray) -> np.ndarray:
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure.

    Attributes
    ----------
    points : (m, d) float array
        Pairwise-distinct support points.
    weights : (m,) float array
        Nonnegative weights summing to 1 within 1e-12.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        if points.shape[0] == 0 or weights.shape[0] == 0:
            raise EmptySupport("measure needs at least one support point")
        if points.shape[0] != weights.shape[0]:
            raise WeightSumMismatch(
                f"{points.shape[0]} points but {weights.shape[0]} weights"
            )
        if not (np.isfinite(points).all() and np.isfinite(weights).all()):
            raise WeightSumMismatch("points and weights must be finite")
        if (weights < -WEIGHT_SUM_TOL).any():
            raise NegativeWeight(f"negative weight: {weights.min()}")
        total = weights.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise WeightSumMismatch(f"weights sum to {total!r}, not 1")
        weights = np.clip(weights, 0.0, None) / total
        # exact comparison on raw coordinates: merging near-duplicates silently
        # would move mass, so that is left to the caller
        seen = set()
        for row in points:
            key = row.tobytes()
            if key in seen:
                raise DuplicatePoint(f"duplicate support point {row.tolist()}")
            seen.add(key)
        points = points.copy()
        weights = weights.copy()
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def entropy(self) -> float:
        """Shannon entropy in nats."""
        w = self.weights[self.weights > 0]
        return float(-(w * np.log(w)).sum())

    def mean(self) -> np.ndarray:
        return self.weights @ self.points


def validate_measure(points, weights) -> DiscreteMeasure:
    """Build a :class:`DiscreteMeasure`, renormalizing only sub-1e-12 drift."""
    return DiscreteMeasure(points, weights)


def second_moment(m: DiscreteMeasure) -> float:
    """E[|X|^2] under the measure."""
    return float(m.weights @ (m.points * m.points).sum(axis=1))


def quantize_gaussian(dim: int, bins_per_axis: int) -> DiscreteMeasure:
    """Equal-weight quantile quantization of the standard normal on R^dim.

    Each axis is split into ``bins_per_axis`` equiprobable bins; each bin is
    represented by its conditional mean under N(0, 1), and the axes are
    tensorized. Equal weights keep the measure rational at N = bins^dim so the
    types engine can consume the same object.
    """
    if dim < 1 or bins_per_axis < 1:
        raise EmptySupport("dim and bins_per_axis must be positive")
    if bins_per_axis**dim > MAX_SUPPORT:
        raise SupportTooLarge(
            f"{bins_per_axis}^{dim} support points exceed {MAX_SUPPORT}"
        )
    edges = ndtri(np.linspace(0.0, 1.0, bins_per_axis + 1))
    # conditional mean over (a, b]: (pdf(a) - pdf(b)) / mass, with mass = 1/bins
    pdf_vals = np.where(np.isinf(edges), 0.0, _normal_pdf(edges))
    reps = (pdf_vals[:-1] - pdf_vals[1:]) * bins_per_axis
    axis = DiscreteMeasure(
        reps.reshape(-1, 1), np.full(bins_per_axis, 1.0 / bins_per_axis)
    )
    out = axis
    for _ in range(dim - 1):
        out = product_measure(out, axis)
    return out


def product_measure(a: DiscreteMeasure, b: DiscreteMeasure) -> DiscreteMeasure:
    """Product measure on the Cartesian product with concatenated coordinates."""
    if a.size * b.size > MAX_SUPPORT:
        raise SupportTooLarge(f"product support {a.size}*{b.size} exceeds {MAX_SUPPORT}")
    pa = np.repeat(a.points, b.size, axis=0)
    pb = np.tile(b.points, (a.size, 1))
    points = np.hstack([pa, pb])
    weights = np.outer(a.weights, b.weights).ravel()
    return DiscreteMeasure(points, weights)


def squared_distance_matrix(a: DiscreteMeasure, b: DiscreteMeasure) -> np.ndarray:
    """Pairwise squared Euclidean distances between two supports."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dim {a.dim} vs {b.dim}")
    diff = a.points[:, None, :] - b.points[None, :, :]
    return (diff * diff).sum(axis=2)


def inner_product_matrix(a: DiscreteMeasure, b: DiscreteMeasure) -> np.ndarray:
    """Pairwise inner products between two supports."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dim {a.dim} vs {b.dim}")
    return a.points @ b.points.T


@dataclass(frozen=True)
class CouplingMatrix:
    """Joint probability table whose marginals match two fixed measures."""

    row_measure: DiscreteMeasure
    col_measure: DiscreteMeasure
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.shape != (self.row_measure.size, self.col_measure.size):
            raise DimensionMismatch(
                f"table shape {table.shape} vs "
                f"({self.row_measure.size}, {self.col_measure.size})"
            )
        if (table < -MARGINAL_TOL).any():
            raise NegativeWeight(f"negative coupling entry: {table.min()}")
        row_err = np.abs(table.sum(axis=1) - self.row_measure.weights).max()
        col_err = np.abs(table.sum(axis=0) - self.col_measure.weights).max()
        if row_err > MARGINAL_TOL or col_err > MARGINAL_TOL:
            raise WeightSumMismatch(
                f"marginal violation: rows {row_err:.3e}, cols {col_err:.3e}"
            )
        table = np.clip(table, 0.0, None)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def mutual_information(self) -> float:
        """I of the coupling in nats, with 0 ln 0 := 0."""
        from scipy.special import xlogy

        outer = np.outer(self.row_measure.weights, self.col_measure.weights)
        mask = self.table > 0
        val = xlogy(self.table[mask], self.table[mask] / outer[mask]).sum()
        return float(max(val, 0.0))


@dataclass(frozen=True)
class MonotoneCurve:
    """Sampled nonincreasing nonnegative function on a positive grid.

    ``left_limit`` is the value at 0+; the function is exactly 0 for
    abscissas at or beyond ``support_end``. Evaluation clamps to
    ``left_limit`` below the first knot and interpolates linearly between
    knots.
    """

    abscissas: np.ndarray
    values: np.ndarray
    left_limit: float
    support_end: float

    def __post_init__(self):
        x = np.asarray(self.abscissas, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if x.shape != v.shape:
            raise DimensionMismatch("abscissas and values must match")
        if x.size and ((x <= 0).any() or (np.diff(x) <= 0).any()):
            raise WeightSumMismatch("abscissas must be strictly increasing and positive")
        if (v < -1e-12).any():
            raise NegativeWeight("curve values must be nonnegative")
        if v.size and (np.diff(v) > 1e-9).any():
            raise WeightSumMismatch("curve values must be nonincreasing")
        v = np.maximum.accumulate(np.clip(v, 0.0, None)[::-1])[::-1]
        if self.left_limit < 0 or self.support_end < 0:
            raise NegativeWeight("left_limit and support_end must be nonnegative")
        bad = x >= self.support_end
        if bad.any() and v[bad].max() > 0:
            raise WeightSumMismatch("values must vanish at and beyond support_end")
        x = x.copy()
        v = v.copy()
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "abscissas", x)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "left_limit", float(self.left_limit))
        object.__setattr__(self, "support_end", float(self.support_end))

    def is_zero(self) -> bool:
        return self.left_limit == 0.0 or self.support_end == 0.0

    def evaluate(self, x: float) -> float:
        """Clamped piecewise-linear evaluation at ``x > 0``."""
        if x >= self.support_end:
            return 0.0
        knots_x = self.abscissas
        if knots_x.size == 0:
            return self.left_limit
        if x < knots_x[0]:
            return self.left_limit
        if x >= knots_x[-1]:
            # between last knot and support_end: line down to zero
            x0, v0 = knots_x[-1], self.values[-1]
            if self.support_end <= x0:
                return 0.0
            t = (x - x0) / (self.support_end - x0)
            return float(v0 * (1.0 - t))
        return float(np.interp(x, knots_x, self.values))


# -- JSON measure files -------------------------------------------------------
# {"dim": d, "points": [[...], ...], "weights": [...]} shared by all CLI I/O.

def measure_to_dict(m: DiscreteMeasure) -> dict:
    return {
        "dim": m.dim,
        "points": [list(map(float, p)) for p in m.points],
        "weights": [float(w) for w in m.weights],
    }


def measure_from_dict(payload: dict) -> DiscreteMeasure:
    points = payload["points"]
    m = validate_measure(points, payload["weights"])
    if "dim" in payload and int(payload["dim"]) != m.dim:
        raise DimensionMismatch(
            f"declared dim {payload['dim']} but points have dim {m.dim}"
        )
    return m


def save_measure(m: DiscreteMeasure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measure_to_dict(m), fh)


def load_measure(path) -> DiscreteMeasure:
    with open(path, encoding="utf-8") as fh:
        return measure_from_dict(json.load(fh))
