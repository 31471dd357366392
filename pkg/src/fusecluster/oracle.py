"""Exhaustive solver of the constrained pairwise-coalescence problem.

On a tiny instance this enumerates every set partition of the points, keeps
those whose groups can share a common centroid within the per-coordinate
tolerance, and returns the partitions minimizing the number of ordered
cross-group pairs (``N^2 - sum_g n_g^2``).  It is ground truth for the
iterative solver and for Monte-Carlo checks of the recovery bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ObservedDataset, Partition, estimate_geometry
from .theory import eta0, log_beta0, log_delta0, log_gamma0

ENUMERATION_MAX_POINTS = 12  # Bell(12) ~ 4.2M partitions


@dataclass(frozen=True)
class OracleResult:
    minimizers: tuple[Partition, ...]
    min_cost: int
    feasible_partition_count: int


def group_feasible(data: ObservedDataset, point_indices, epsilon: float) -> bool:
    """True when one centroid can sit within epsilon/2 of every member on
    every coordinate the member observes.

    Per feature this is an interval intersection: the observed values must
    span at most epsilon.  Features nobody in the group observes impose no
    constraint, which is exactly how two points with disjoint observations
    always remain mergeable.
    """
    idx = np.asarray(list(point_indices), dtype=int)
    if idx.size == 0:
        raise ValueError("group must be non-empty")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    vals = data.values[:, idx]
    m = data.mask[:, idx]
    vmax = np.where(m, vals, -np.inf).max(axis=1)
    vmin = np.where(m, vals, np.inf).min(axis=1)
    return bool(np.all(vmax - vmin <= epsilon))


def partition_cost(labels: np.ndarray) -> int:
    """Ordered cross-group pair count: N^2 - sum of squared group sizes."""
    n = labels.size
    sizes = np.bincount(labels)
    return int(n * n - np.sum(sizes * sizes))


def l0_solve(data: ObservedDataset, epsilon: float) -> OracleResult:
    """Enumerate all partitions of the points (depth-first over restricted
    growth strings), prune blocks that become infeasible (feasibility is
    monotone under taking subsets), and collect every minimum-cost feasible
    partition."""
    n = data.point_count
    if n > ENUMERATION_MAX_POINTS:
        raise ValueError(
            f"oracle enumeration bound exceeded (N = {n} > {ENUMERATION_MAX_POINTS})"
        )
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")

    values = data.values
    mask = data.mask
    p_dim = data.feature_count

    labels = np.zeros(n, dtype=np.int64)
    block_mins: list[np.ndarray] = []
    block_maxs: list[np.ndarray] = []
    block_sizes: list[int] = []

    state = {
        "best_cost": n * n + 1,
        "minimizers": [],
        "feasible_count": 0,
    }

    def visit_leaf():
        state["feasible_count"] += 1
        cost = n * n - sum(s * s for s in block_sizes)
        if cost < state["best_cost"]:
            state["best_cost"] = cost
            state["minimizers"] = [labels.copy()]
        elif cost == state["best_cost"]:
            state["minimizers"].append(labels.copy())

    def dfs(i: int):
        if i == n:
            visit_leaf()
            return
        x = values[:, i]
        m = mask[:, i]
        for b in range(len(block_mins)):
            new_min = np.where(m, np.minimum(block_mins[b], x), block_mins[b])
            new_max = np.where(m, np.maximum(block_maxs[b], x), block_maxs[b])
            if np.all(new_max - new_min <= epsilon):
                old_min, old_max = block_mins[b], block_maxs[b]
                block_mins[b], block_maxs[b] = new_min, new_max
                block_sizes[b] += 1
                labels[i] = b
                dfs(i + 1)
                block_mins[b], block_maxs[b] = old_min, old_max
                block_sizes[b] -= 1
        # Open a fresh block for point i (always feasible on its own).
        block_mins.append(np.where(m, x, np.inf))
        block_maxs.append(np.where(m, x, -np.inf))
        block_sizes.append(1)
        labels[i] = len(block_mins) - 1
        dfs(i + 1)
        block_mins.pop()
        block_maxs.pop()
        block_sizes.pop()

    dfs(0)
    minimizers = tuple(Partition(lab).canonical() for lab in state["minimizers"])
    return OracleResult(
        minimizers=minimizers,
        min_cost=state["best_cost"],
        feasible_partition_count=state["feasible_count"],
    )


@dataclass(frozen=True)
class BoundCheckReport:
    """Empirical escape/defeat rates next to their theoretical bounds."""

    p0: float
    trials: int
    kappa: float
    mu0: float
    epsilon: float
    gamma0: float
    beta0: float
    eta0: float
    common_obs_deficit_rate: float
    pair_feasible_rate: float
    truth_defeat_rate: float
    common_obs_deficit_ok: bool
    pair_feasible_ok: bool
    truth_defeat_ok: bool

    @property
    def all_ok(self) -> bool:
        return (
            self.common_obs_deficit_ok
            and self.pair_feasible_ok
            and self.truth_defeat_ok
        )


def _within_bound(rate: float, bound: float, n: int) -> bool:
    se = math.sqrt(max(rate * (1.0 - rate), 0.0) / n) if n > 0 else 0.0
    return rate <= bound + 3.0 * se


def monte_carlo_bound_check(
    data: ObservedDataset,
    truth: Partition,
    p0: float,
    trials: int,
    seed: int,
    epsilon: float | None = None,
) -> BoundCheckReport:
    """Mask a fully observed instance repeatedly and compare three empirical
    rates against their bounds:

    (a) inter-cluster pairs sharing fewer than p0^2 P / 2 observed
        coordinates, against gamma0;
    (b) inter-cluster pairs that remain mergeable, against beta0;
    (c) trials where some wrong partition ties or beats the ground truth in
        the exhaustive solver, against eta0.

    Each rate must stay below bound + 3 binomial standard errors.
    """
    if not data.fully_observed:
        raise ValueError("bound check needs a fully observed instance")
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must lie in [0, 1]")
    if trials < 1:
        raise ValueError("trials must be positive")

    geometry = estimate_geometry(data, truth)
    if not geometry.kappa < 1.0:
        raise ValueError("bound check requires measured kappa < 1")
    eps = geometry.epsilon if epsilon is None else float(epsilon)

    sizes = truth.group_sizes()
    if len(set(sizes.tolist())) != 1:
        raise ValueError("bounds assume equal cluster sizes")
    k_clusters = truth.cluster_count
    m_per = int(sizes[0])

    p_dim, n = data.feature_count, data.point_count
    lg = log_gamma0(p0, p_dim)
    ld = log_delta0(p0, p_dim, geometry.kappa, geometry.mu0)
    lb = log_beta0(lg, ld)
    gamma0_b = math.exp(lg)
    beta0_b = math.exp(lb)
    eta0_b = eta0(k_clusters, m_per, beta0_b)

    inter_pairs = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if truth.labels[i] != truth.labels[j]
    ]
    deficit_threshold = p0 * p0 * p_dim / 2.0

    deficit_hits = 0
    feasible_hits = 0
    defeat_hits = 0
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        mask = rng.random((p_dim, n)) < p0
        masked = ObservedDataset(data.values, mask)
        for i, j in inter_pairs:
            common = int(np.sum(mask[:, i] & mask[:, j]))
            # At p0 = 0 the requirement degenerates to 0 and no pair can
            # meet it, matching the trivial bound gamma0 = 1.
            if common < deficit_threshold or deficit_threshold == 0.0:
                deficit_hits += 1
            if group_feasible(masked, (i, j), eps):
                feasible_hits += 1
        result = l0_solve(masked, eps)
        unique_truth = len(result.minimizers) == 1 and result.minimizers[
            0
        ].same_clustering(truth)
        if not unique_truth:
            defeat_hits += 1

    pair_total = trials * len(inter_pairs)
    deficit_rate = deficit_hits / pair_total
    feasible_rate = feasible_hits / pair_total
    defeat_rate = defeat_hits / trials
    return BoundCheckReport(
        p0=p0,
        trials=trials,
        kappa=geometry.kappa,
        mu0=geometry.mu0,
        epsilon=eps,
        gamma0=gamma0_b,
        beta0=beta0_b,
        eta0=eta0_b,
        common_obs_deficit_rate=deficit_rate,
        pair_feasible_rate=feasible_rate,
        truth_defeat_rate=defeat_rate,
        common_obs_deficit_ok=_within_bound(deficit_rate, gamma0_b, pair_total),
        pair_feasible_ok=_within_bound(feasible_rate, beta0_b, pair_total),
        truth_defeat_ok=_within_bound(defeat_rate, eta0_b, trials),
    )
