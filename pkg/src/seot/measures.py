"""Empirical measures over sample matrices and pairwise transport costs.

Conventions: a data matrix is a float64 array of shape (n, d) with one sample
per row; a discrete measure attaches probability-simplex weights to the rows.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInput, ShapeError

# Constructing a measure from weights whose sum is further than this from 1
# signals a caller bug rather than float rounding.
WEIGHT_SUM_SLACK = 1e-6


def as_data_matrix(values) -> np.ndarray:
    """Validate and return a float64 (n, d) sample matrix.

    Requires n >= 1, d >= 1 and finite entries.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidInput(f"expected a 2-D sample matrix, got ndim={x.ndim}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidInput(f"sample matrix must be at least 1x1, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("sample matrix contains NaN or Inf")
    return x


@dataclass(frozen=True)
class DiscreteMeasure:
    """Support points plus simplex weights for one empirical distribution."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_data_matrix(self.points)
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.shape[0] != pts.shape[0]:
            raise ShapeError(
                f"{w.shape[0]} weights for {pts.shape[0]} points"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidInput("weights must be finite and nonnegative")
        total = w.sum()
        if abs(total - 1.0) > WEIGHT_SUM_SLACK:
            raise InvalidInput(f"weights sum to {total!r}, expected 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w / total)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class LabeledDomain:
    """A discrete measure with optional integer class labels per sample."""

    measure: DiscreteMeasure
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.labels is None:
            return
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != len(self.measure):
            raise ShapeError(
                f"{y.shape} labels for {len(self.measure)} samples"
            )
        if not np.issubdtype(y.dtype, np.integer):
            yi = y.astype(np.int64)
            if np.any(yi != y):
                raise InvalidInput("labels must be integers")
            y = yi
        if np.any(y < 0):
            raise InvalidInput("class ids must be nonnegative")
        object.__setattr__(self, "labels", y.astype(np.int64))

    @property
    def points(self) -> np.ndarray:
        return self.measure.points

    @property
    def dim(self) -> int:
        return self.measure.dim

    def __len__(self) -> int:
        return len(self.measure)


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise transport costs, entry (i, j) = ||x_i - z_j||^p."""

    values: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise InvalidInput("cost matrix must be 2-D")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidInput("cost entries must be finite and nonnegative")
        if self.p < 1:
            raise InvalidInput(f"cost exponent must be >= 1, got {self.p}")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def uniform_measure(points) -> DiscreteMeasure:
    """Empirical measure putting weight 1/n on each row of `points`."""
    pts = as_data_matrix(points)
    n = pts.shape[0]
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


def squared_distances(xs: np.ndarray, xt: np.ndarray) -> np.ndarray:
    """Exact pairwise squared Euclidean distances.

    Accumulates per-coordinate squared differences, so identical rows give an
    exact zero (no cancellation from the Gram-matrix shortcut).
    """
    xs = as_data_matrix(xs)
    xt = as_data_matrix(xt)
    if xs.shape[1] != xt.shape[1]:
        raise ShapeError(f"feature dims differ: {xs.shape[1]} vs {xt.shape[1]}")
    out = np.zeros((xs.shape[0], xt.shape[0]))
    for k in range(xs.shape[1]):
        diff = xs[:, k, None] - xt[None, :, k]
        out += diff * diff
    return out


def cost_matrix(xs, xt, p: float = 2.0) -> CostMatrix:
    """Transport cost between two sample matrices, Euclidean distance to the p."""
    if p < 1:
        raise InvalidInput(f"cost exponent must be >= 1, got {p}")
    sq = squared_distances(np.asarray(xs, dtype=np.float64), np.asarray(xt, dtype=np.float64))
    if p == 2.0:
        vals = sq
    elif p == 1.0:
        vals = np.sqrt(sq)
    else:
        vals = sq ** (p / 2.0)
    return CostMatrix(vals, p)


def standardize(domains: list[LabeledDomain]) -> list[LabeledDomain]:
    """Shift/scale each feature using mean and std pooled over all domains.

    Uses the population std (ddof=0). Columns whose pooled variance is zero
    pass through unchanged. Labels and row counts are preserved.
    """
    if not domains:
        raise InvalidInput("need at least one domain to standardize")
    dims = {dom.dim for dom in domains}
    if len(dims) > 1:
        raise ShapeError(f"domains disagree on feature dim: {sorted(dims)}")
    pooled = np.vstack([dom.points for dom in domains])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    degenerate = std <= 1e-12 * (1.0 + np.abs(mean))
    shift = np.where(degenerate, 0.0, mean)
    scale = np.where(degenerate, 1.0, std)
    out = []
    for dom in domains:
        pts = (dom.points - shift) / scale
        measure = replace(dom.measure, points=pts)
        out.append(replace(dom, measure=measure))
    return out
