"""Core data types and cluster-geometry measurements.

Matrix orientation is fixed across the package: features are rows, points are
columns, so a dataset with P features and N points is a P x N array.  All
types are immutable value objects; the arrays they hold are copied on
construction and marked read-only, so instances are safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _frozen_array(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ObservedDataset:
    """A P x N feature matrix together with a boolean observation mask.

    ``mask[p, i]`` is True when feature ``p`` of point ``i`` was observed.
    Values at unobserved positions are carried verbatim (they may be NaN or
    garbage) and must never influence any computation; use
    :meth:`observed_values` to get a NaN-safe zero-filled view.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, float)
        mask = _frozen_array(self.mask, bool)
        if values.ndim != 2:
            raise ValueError("values must be a P x N matrix")
        if mask.shape != values.shape:
            raise ValueError("mask shape must match values shape")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("need P >= 1 features and N >= 1 points")
        observed = np.where(mask, values, 0.0)
        if not np.all(np.isfinite(observed)):
            raise ValueError("observed entries must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def feature_count(self) -> int:
        return self.values.shape[0]

    @property
    def point_count(self) -> int:
        return self.values.shape[1]

    @property
    def fully_observed(self) -> bool:
        return bool(self.mask.all())

    def observed_values(self) -> np.ndarray:
        """Values with unobserved positions replaced by exact zeros."""
        return np.where(self.mask, self.values, 0.0)

    @staticmethod
    def full(values) -> "ObservedDataset":
        """Wrap a fully observed matrix."""
        values = np.asarray(values, dtype=float)
        return ObservedDataset(values, np.ones_like(values, dtype=bool))


@dataclass(frozen=True)
class Partition:
    """Cluster labels for N points; labels are a surjection onto 0..K-1."""

    labels: np.ndarray

    def __post_init__(self):
        labels = _frozen_array(self.labels, np.int64)
        if labels.ndim != 1 or labels.size < 1:
            raise ValueError("labels must be a non-empty 1-D integer array")
        if labels.min() < 0:
            raise ValueError("labels must be non-negative")
        k = int(labels.max()) + 1
        if len(np.unique(labels)) != k:
            raise ValueError("labels must use every value in 0..K-1")
        object.__setattr__(self, "labels", labels)

    @property
    def point_count(self) -> int:
        return self.labels.size

    @property
    def cluster_count(self) -> int:
        return int(self.labels.max()) + 1

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.cluster_count)

    def canonical(self) -> "Partition":
        """Relabel clusters in order of first occurrence."""
        mapping: dict[int, int] = {}
        out = np.empty_like(self.labels)
        for i, lab in enumerate(self.labels):
            out[i] = mapping.setdefault(int(lab), len(mapping))
        return Partition(out)

    def same_clustering(self, other: "Partition") -> bool:
        """Equality as equivalence relations (up to label permutation)."""
        if self.labels.size != other.labels.size:
            raise ValueError("partitions must label the same number of points")
        return bool(
            np.array_equal(self.canonical().labels, other.canonical().labels)
        )


@dataclass(frozen=True)
class ClusterGeometry:
    """Measured separation/spread/coherence summary of a labeled dataset.

    ``kappa = epsilon * sqrt(P) / delta`` ties the within-cluster spread
    (sup-norm diameter ``epsilon``) to the between-cluster gap (``delta``);
    small values mean an easier clustering problem.  A single-cluster dataset
    takes ``delta = inf`` and ``kappa = 0`` so downstream formulas degenerate
    gracefully.
    """

    delta: float
    epsilon: float
    mu0: float
    kappa: float
    P: int

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("P must be positive")
        if self.epsilon < 0 or self.kappa < 0:
            raise ValueError("epsilon and kappa must be non-negative")
        if not (1.0 <= self.mu0 <= self.P):
            raise ValueError("mu0 must lie in [1, P]")
        if self.delta <= 0:
            raise ValueError("delta must be positive (inf for one cluster)")
        if math.isfinite(self.delta):
            expected = self.epsilon * math.sqrt(self.P) / self.delta
            if not math.isclose(self.kappa, expected, rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError("kappa must equal epsilon*sqrt(P)/delta")
        elif self.kappa != 0.0:
            raise ValueError("kappa must be 0 when delta is infinite")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for K clusters of M points around explicit centers in R^P.

    ``noise`` selects the perturbation model: ``("gaussian", variance)`` or
    ``("uniform", half_width)`` with a scalar or per-feature half width.
    Generation is deterministic given ``seed``.
    """

    K: int
    M: int
    P: int
    centers: np.ndarray
    noise: tuple = ("gaussian", 0.1)
    seed: int = 0

    def __post_init__(self):
        centers = _frozen_array(self.centers, float)
        if self.K < 1 or self.M < 1 or self.P < 1:
            raise ValueError("K, M, P must be positive")
        if centers.shape != (self.K, self.P):
            raise ValueError("centers must have shape (K, P)")
        kind, param = self.noise
        if kind not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise model: {kind!r}")
        if np.any(np.asarray(param) < 0):
            raise ValueError("noise parameter must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        object.__setattr__(self, "centers", centers)

    @property
    def point_count(self) -> int:
        return self.K * self.M


def coherence(y) -> float:
    """Energy concentration of a vector: P * ||y||_inf^2 / ||y||_2^2.

    Ranges from 1 (flat vector) to P (one-hot); scale-invariant.  The vector
    is normalized by its sup-norm first so extreme magnitudes neither
    underflow nor overflow the squares.
    """
    y = np.asarray(y, dtype=float).ravel()
    peak = float(np.abs(y).max())
    if peak == 0.0:
        raise ValueError("coherence undefined for zero vector")
    scaled = y / peak
    return y.size / float(scaled @ scaled)


def _pairwise_sq_dists(values: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between columns (Gram trick, clipped)."""
    g = values.T @ values
    sq = np.einsum("pi,pi->i", values, values)
    d2 = sq[:, None] + sq[None, :] - 2.0 * g
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _pairwise_linf(values: np.ndarray) -> np.ndarray:
    """Sup-norm distances between columns, accumulated one feature row at a
    time to keep memory at O(N^2)."""
    n = values.shape[1]
    out = np.zeros((n, n))
    for row in values:
        np.maximum(out, np.abs(row[:, None] - row[None, :]), out=out)
    return out


def estimate_geometry(data: ObservedDataset, truth: Partition) -> ClusterGeometry:
    """Measure delta (min inter-cluster l2 gap), epsilon (max intra-cluster
    sup-norm diameter), mu0 (max coherence of inter-cluster differences) and
    kappa on a fully observed, labeled dataset.
    """
    if not data.fully_observed:
        raise ValueError("geometry requires full observation")
    if truth.point_count != data.point_count:
        raise ValueError("partition length must match point count")

    values = data.values
    p_dim = data.feature_count
    labels = truth.labels
    same = labels[:, None] == labels[None, :]
    off_diag = ~np.eye(data.point_count, dtype=bool)

    linf = _pairwise_linf(values)
    intra = same & off_diag
    epsilon = float(linf[intra].max()) if intra.any() else 0.0

    inter = ~same
    if not inter.any():
        return ClusterGeometry(
            delta=math.inf, epsilon=epsilon, mu0=1.0, kappa=0.0, P=p_dim
        )

    sq = _pairwise_sq_dists(values)
    delta = math.sqrt(float(sq[inter].min()))
    if delta == 0.0:
        raise ValueError("coincident points in different clusters (delta = 0)")

    # mu = P * linf^2 / l2^2 per inter-cluster difference; delta > 0 rules
    # out the zero-difference case.  Clamp rounding spill back into [1, P].
    ii, jj = np.nonzero(np.triu(inter))
    mu0 = float(np.max(p_dim * linf[ii, jj] ** 2 / sq[ii, jj]))
    mu0 = min(max(mu0, 1.0), float(p_dim))
    kappa = epsilon * math.sqrt(p_dim) / delta
    return ClusterGeometry(delta=delta, epsilon=epsilon, mu0=mu0, kappa=kappa, P=p_dim)
