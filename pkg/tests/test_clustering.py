import math
import warnings

import numpy as np
import pytest
from scipy import optimize, stats

from shapebias import (
    ClusterResult,
    DomainError,
    Euclidean,
    ManifoldPoint,
    PlanarAngle,
    act,
    estimate_template,
    generate_dataset,
    kmeans_shapes,
    orbit_distance,
    plane_template,
    separation_criterion,
    substream,
)


def plane_points(coords):
    return [ManifoldPoint(Euclidean(2), c) for c in coords]


def two_cluster_data(r1, r2, sigma, n_per, seed):
    c1 = generate_dataset(plane_template(r1), sigma, n_per, seed=seed)
    c2 = generate_dataset(plane_template(r2), sigma, n_per, seed=seed + 1)
    truth = np.repeat([0, 1], n_per)
    return plane_points(np.vstack([c1, c2])), truth


def accuracy(assignments, truth):
    a = np.asarray(assignments)
    return max(float(np.mean(a == truth)), float(np.mean(a != truth)))


class TestKmeans:
    def test_separated_noise_free_orbits_perfect(self):
        rng = substream(83, 0)
        angles1 = rng.uniform(-math.pi, math.pi, 30)
        angles2 = rng.uniform(-math.pi, math.pi, 30)
        data = [act(PlanarAngle(a), plane_template(1.0)) for a in angles1]
        data += [act(PlanarAngle(a), plane_template(2.0)) for a in angles2]
        truth = np.repeat([0, 1], 30)
        result = kmeans_shapes(data, 2, seed=4)
        assert accuracy(result.assignments, truth) == 1.0
        assert result.j_trace[-1] == pytest.approx(0.0, abs=1e-20)

    def test_k_equal_one_matches_template_estimate(self):
        data, _ = two_cluster_data(1.0, 1.3, 0.1, 40, seed=19)
        result = kmeans_shapes(data, 1, seed=2)
        reference = estimate_template(data)
        assert orbit_distance(result.centroids[0], reference.template_hat) < 1e-10
        assert math.isnan(result.criterion_d)

    def test_accuracy_tracks_bayes_oracle(self):
        # Bayes-rule oracle from the two exact Rice densities.  At these
        # parameters the oracle accuracy is ~95.0%, which upper-bounds any
        # assignment rule; k-means should land within a point of it.
        r1, r2, sigma = 1.0, 2.0, 0.3
        f1 = lambda x: stats.rice.pdf(x, b=r1 / sigma, scale=sigma)
        f2 = lambda x: stats.rice.pdf(x, b=r2 / sigma, scale=sigma)
        boundary = optimize.brentq(lambda x: f1(x) - f2(x), 1.2, 1.9)
        bayes = 1.0 - 0.5 * (
            (1.0 - stats.rice.cdf(boundary, b=r1 / sigma, scale=sigma))
            + stats.rice.cdf(boundary, b=r2 / sigma, scale=sigma)
        )
        data, truth = two_cluster_data(r1, r2, sigma, 1000, seed=101)
        result = kmeans_shapes(data, 2, seed=5)
        acc = accuracy(result.assignments, truth)
        assert bayes == pytest.approx(0.950, abs=0.002)
        assert acc <= bayes + 0.01
        assert acc >= bayes - 0.015

    def test_j_trace_non_increasing(self):
        data, _ = two_cluster_data(1.0, 2.0, 0.5, 200, seed=23)
        result = kmeans_shapes(data, 2, seed=7)
        trace = np.asarray(result.j_trace)
        assert np.all(np.diff(trace) <= 1e-12 * (1.0 + trace[:-1]))

    def test_label_permutation_leaves_j_and_d_unchanged(self):
        data, _ = two_cluster_data(1.0, 2.0, 0.3, 100, seed=29)
        result = kmeans_shapes(data, 2, seed=3)
        flipped = ClusterResult(
            assignments=1 - np.asarray(result.assignments),
            centroids=list(reversed(result.centroids)),
            criterion_d=result.criterion_d,
            j_trace=result.j_trace,
            reseeds=result.reseeds,
        )
        assert separation_criterion(flipped, data) == pytest.approx(
            separation_criterion(result, data), rel=1e-12
        )

    def test_relabel_equivariance_under_common_rotation(self):
        data, _ = two_cluster_data(1.0, 2.0, 0.3, 100, seed=31)
        g = PlanarAngle(0.9)
        rotated = [act(g, x) for x in data]
        res_a = kmeans_shapes(data, 2, seed=11)
        res_b = kmeans_shapes(rotated, 2, seed=11)
        assert np.array_equal(res_a.assignments, res_b.assignments)
        for ca, cb in zip(res_a.centroids, res_b.centroids):
            assert orbit_distance(ca, cb) < 1e-8

    def test_k_larger_than_n_rejected(self):
        data, _ = two_cluster_data(1.0, 2.0, 0.3, 2, seed=37)
        with pytest.raises(DomainError):
            kmeans_shapes(data, 10, seed=1)

    def test_reseed_keeps_clusters_non_empty(self):
        # degenerate data: many copies of a single point still yield a
        # valid k=2 result via reseeding
        data = plane_points(np.tile([1.0, 0.0], (12, 1)))
        result = kmeans_shapes(data, 2, seed=2)
        counts = np.bincount(result.assignments, minlength=2)
        assert np.all(counts > 0)
        assert result.reseeds > 0


class TestSeparationCriterion:
    def test_singleton_clusters_give_inf_sentinel(self):
        data = plane_points(np.array([[1.0, 0.0], [2.0, 0.0]]))
        result = ClusterResult(
            assignments=np.array([0, 1]),
            centroids=[data[0], data[1]],
            criterion_d=math.inf,
            j_trace=[0.0],
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            d = separation_criterion(result, data)
        assert math.isinf(d)
        assert any("diameter" in str(w.message) for w in caught)

    def test_identical_duplicated_clusters_numerator_near_zero(self):
        rng = substream(89, 0)
        radii = 1.0 + 0.01 * rng.standard_normal(40)
        coords = np.column_stack([radii, np.zeros(40)])
        data = plane_points(coords)
        assignments = np.repeat([0, 1], 20)
        centroids = [
            estimate_template(data[:20]).template_hat,
            estimate_template(data[20:]).template_hat,
        ]
        result = ClusterResult(
            assignments=assignments, centroids=centroids, criterion_d=0.0, j_trace=[0.0]
        )
        d = separation_criterion(result, data)
        assert d < 0.2  # numerator is the tiny gap between near-identical centroids

    def test_fewer_than_two_clusters_rejected(self):
        data = plane_points(np.array([[1.0, 0.0], [1.1, 0.0]]))
        result = ClusterResult(
            assignments=np.array([0, 0]),
            centroids=[data[0]],
            criterion_d=math.nan,
            j_trace=[0.0],
        )
        with pytest.raises(DomainError):
            separation_criterion(result, data)

    def test_decays_with_noise(self):
        # clustering on shapes loses separation as measurement error grows
        values = []
        for si, sigma in enumerate((0.3, 0.6, 1.2)):
            ds = []
            for rep in range(10):
                data, _ = two_cluster_data(1.0, 2.0, sigma, 300, seed=400 + 10 * si + rep)
                truth = np.repeat([0, 1], 300)
                centroids = [
                    estimate_template(data[:300]).template_hat,
                    estimate_template(data[300:]).template_hat,
                ]
                result = ClusterResult(
                    assignments=truth, centroids=centroids, criterion_d=0.0, j_trace=[0.0]
                )
                ds.append(separation_criterion(result, data))
            values.append(np.mean(ds))
        assert values[0] > values[1] > values[2]
