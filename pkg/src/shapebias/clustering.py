"""K-means in the quotient space and the cluster-separation criterion.

Assignment uses the quotient (orbit) distance; the centroid update is one
template-estimation pass per cluster (register, then average).  The
separation criterion D divides the smallest centroid gap by the largest
cluster diameter; it is the quantity whose decay with noise measures how
much validation power clustering on shapes loses.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolationError, DomainError
from .estimation import EstimationConfig, estimate_template_coords
from .generative import shape_coordinate
from .groups import orbit_distance_coords
from .seeding import substream
from .spaces import Euclidean, ManifoldPoint, Space, Sphere, stack_points


@dataclass(frozen=True, eq=False)
class ClusterResult:
    assignments: np.ndarray
    centroids: list[ManifoldPoint]
    criterion_d: float
    j_trace: list[float]
    reseeds: int = 0

    def __post_init__(self):
        assign = np.asarray(self.assignments, dtype=int)
        object.__setattr__(self, "assignments", assign)
        k = len(self.centroids)
        if k == 0:
            raise DomainError("no centroids")
        counts = np.bincount(assign, minlength=k)
        if np.any(counts == 0):
            raise ContractViolationError("empty cluster in result")
        trace = np.asarray(self.j_trace, dtype=float)
        if self.reseeds == 0 and len(trace) > 1:
            slack = 1e-12 * (1.0 + np.abs(trace[:-1]))
            if np.any(np.diff(trace) > slack):
                raise ContractViolationError("J trace is not non-increasing")


def _distance_matrix(space: Space, centroids: np.ndarray, coords: np.ndarray) -> np.ndarray:
    return np.stack([orbit_distance_coords(space, c, coords) for c in centroids])


def _farthest_point_init(
    space: Space, coords: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = coords.shape[0]
    chosen = [int(rng.integers(n))]
    min_dist = orbit_distance_coords(space, coords[chosen[0]], coords)
    while len(chosen) < k:
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, orbit_distance_coords(space, coords[nxt], coords))
    return coords[chosen].copy()


def kmeans_shapes(
    data: Sequence[ManifoldPoint],
    k: int,
    seed: int,
    max_iter: int = 100,
    estimation: EstimationConfig = EstimationConfig(),
) -> ClusterResult:
    """Coordinate descent on J(c, mu) = sum of squared quotient distances.

    Farthest-point seeding from ``seed``; stops when assignments stabilize
    or after ``max_iter`` rounds.  An emptied cluster is reseeded at the
    point farthest from its assigned centroid (counted in ``reseeds``).
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    space, coords = stack_points(data)
    n = coords.shape[0]
    if n < k:
        raise DomainError(f"need at least k={k} data points, got {n}")
    rng = substream(seed, 0)
    centroids = _farthest_point_init(space, coords, k, rng)

    assignments = np.full(n, -1, dtype=int)
    j_trace: list[float] = []
    reseeds = 0
    for _ in range(max_iter):
        dists = _distance_matrix(space, centroids, coords)
        new_assign = np.argmin(dists, axis=0)
        # reseed empty clusters from the worst-served point, which is then
        # pinned to the reseeded cluster so ties cannot re-empty it
        for j in range(k):
            if not np.any(new_assign == j):
                reseeds += 1
                worst = int(np.argmax(dists[new_assign, np.arange(n)]))
                centroids[j] = coords[worst]
                dists[j] = orbit_distance_coords(space, centroids[j], coords)
                new_assign = np.argmin(dists, axis=0)
                new_assign[worst] = j
        stable = bool(np.array_equal(new_assign, assignments))
        assignments = new_assign
        for j in range(k):
            members = coords[assignments == j]
            centroids[j], _, _, _ = estimate_template_coords(space, members, estimation)
        j_trace.append(
            float(np.sum(_distance_matrix(space, centroids, coords)[assignments, np.arange(n)] ** 2))
        )
        if stable:
            break

    centroid_points = [ManifoldPoint(space, c) for c in centroids]
    criterion = (
        _separation(space, coords, assignments, centroids) if k >= 2 else math.nan
    )
    return ClusterResult(
        assignments=assignments,
        centroids=centroid_points,
        criterion_d=criterion,
        j_trace=j_trace,
        reseeds=reseeds,
    )


def cluster_diameter(space: Space, member_coords: np.ndarray) -> float:
    """Largest pairwise quotient distance within one cluster."""
    n = member_coords.shape[0]
    if n < 2:
        return 0.0
    if space == Euclidean(2) or space == Sphere(2):
        z = shape_coordinate(space, member_coords)
        return float(z.max() - z.min())
    worst = 0.0
    for i in range(n - 1):
        d = orbit_distance_coords(space, member_coords[i], member_coords[i + 1 :])
        worst = max(worst, float(d.max()))
    return worst


def _separation(
    space: Space, coords: np.ndarray, assignments: np.ndarray, centroids: np.ndarray
) -> float:
    k = centroids.shape[0]
    if k < 2:
        raise DomainError("separation criterion needs at least 2 clusters")
    gaps = [
        float(orbit_distance_coords(space, centroids[i], centroids[j][None])[0])
        for i in range(k - 1)
        for j in range(i + 1, k)
    ]
    diam = max(
        cluster_diameter(space, coords[assignments == j]) for j in range(k)
    )
    if diam == 0.0:
        warnings.warn("zero cluster diameter: separation criterion degenerate", RuntimeWarning)
        return math.inf
    return min(gaps) / diam


def separation_criterion(result: ClusterResult, data: Sequence[ManifoldPoint]) -> float:
    """Smallest centroid gap over the largest cluster diameter (both measured
    with the quotient distance).  Returns +inf with a warning when every
    cluster is a single orbit (zero diameter)."""
    space, coords = stack_points(data)
    if len(result.centroids) < 2:
        raise DomainError("separation criterion needs at least 2 clusters")
    centroids = np.stack([c.coords for c in result.centroids])
    return _separation(space, coords, np.asarray(result.assignments, dtype=int), centroids)
