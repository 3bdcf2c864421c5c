"""Plain and spherical k-means against a naive Lloyd reference."""
import itertools
import math

import numpy as np
import pytest

from esgnews.clustering import (
    ClusterModel,
    Metric,
    assign,
    elbow_scan,
    kmeans,
    load_model,
    read_assignments,
    save_model,
    silhouette,
    write_assignments,
)
from oracles import exhaustive_restart_objective, sample_cluster_instance


def best_of_all_inits(pts, k, metric):
    """Library-side exhaustive restart: one run per C(n, k) point init."""
    best = math.inf
    for combo in itertools.combinations(range(len(pts)), k):
        model, _ = kmeans(pts, k, metric=metric, init=list(combo), tol=1e-12, max_iter=300)
        hist = np.asarray(model.objective_history)
        assert np.all(np.diff(hist) <= 1e-12), f"objective increased: {hist}"
        if metric is Metric.COSINE:
            norms = np.linalg.norm(model.centroids, axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-9)
        best = min(best, model.sse)
    return best


class TestAgainstNaiveLloyd:
    @pytest.mark.parametrize("trial", range(12))
    def test_restart_minimum_matches(self, trial):
        rng = np.random.default_rng(20_000 + trial)
        pts, k, metric_name = sample_cluster_instance(rng)
        metric = Metric(metric_name)
        got = best_of_all_inits(pts, k, metric)
        want = exhaustive_restart_objective(pts, k, metric_name)
        assert got == pytest.approx(want, abs=1e-9)

    def test_k1_euclidean_objective_is_total_variance(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(7, 3))
        model, labels = kmeans(pts, 1, tol=1e-12)
        np.testing.assert_allclose(model.centroids[0], pts.mean(axis=0), atol=1e-12)
        assert model.sse == pytest.approx(((pts - pts.mean(axis=0)) ** 2).sum(), abs=1e-9)
        assert labels.tolist() == [0] * 7

    def test_k_equals_n_zero_objective(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(size=(5, 2))
        model, labels = kmeans(pts, 5, init=list(range(5)), tol=1e-12)
        assert model.sse == pytest.approx(0.0, abs=1e-12)
        assert sorted(labels.tolist()) == [0, 1, 2, 3, 4]


class TestSphericalInvariants:
    def test_centroids_unit_norm(self):
        rng = np.random.default_rng(7)
        pts = rng.normal(size=(30, 4))
        model, _ = kmeans(pts, 4, metric=Metric.COSINE, seed=1)
        np.testing.assert_allclose(np.linalg.norm(model.centroids, axis=1), 1.0, atol=1e-9)

    def test_scale_invariance_of_assignment(self):
        rng = np.random.default_rng(8)
        pts = rng.normal(size=(20, 3))
        model, labels = kmeans(pts, 3, metric=Metric.COSINE, seed=2)
        scaled = pts * rng.uniform(0.1, 10.0, size=(20, 1))
        np.testing.assert_array_equal(assign(scaled, model), assign(pts, model))
        np.testing.assert_array_equal(assign(pts, model), labels)

    def test_zero_vector_rejected(self):
        pts = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="zero vector"):
            kmeans(pts, 1, metric=Metric.COSINE)


class TestApi:
    def test_k_bounds(self):
        pts = np.eye(3)
        with pytest.raises(ValueError):
            kmeans(pts, 0)
        with pytest.raises(ValueError):
            kmeans(pts, 4)

    def test_bad_init(self):
        pts = np.eye(3)
        with pytest.raises(ValueError):
            kmeans(pts, 2, init="fancy")
        with pytest.raises(ValueError):
            kmeans(pts, 2, init=[0, 0])  # not distinct
        with pytest.raises(ValueError):
            kmeans(pts, 2, init=[0])  # wrong length

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            kmeans(np.array([[1.0, np.nan]]), 1)

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(40, 3))
        m1, a1 = kmeans(pts, 5, seed=11)
        m2, a2 = kmeans(pts, 5, seed=11)
        np.testing.assert_array_equal(m1.centroids, m2.centroids)
        np.testing.assert_array_equal(a1, a2)
        assert m1.sse == m2.sse

    def test_kmeanspp_init_runs(self):
        rng = np.random.default_rng(10)
        pts = rng.normal(size=(25, 3))
        model, labels = kmeans(pts, 4, seed=3, init="kmeans++")
        assert model.k == 4
        assert len(np.unique(labels)) <= 4
        assert model.sse >= 0.0

    def test_empty_cluster_repaired(self):
        # both centroids start on coincident points: one cluster goes empty
        # and must be handed the farthest point
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 10.0]])
        model, labels = kmeans(pts, 2, init=[0, 1], tol=1e-12)
        assert model.sse == pytest.approx(0.0, abs=1e-12)
        assert len(np.unique(labels)) == 2


class TestElbow:
    def test_objectives_per_k(self):
        rng = np.random.default_rng(12)
        pts = np.vstack([rng.normal(size=(20, 2)), rng.normal(size=(20, 2)) + 8.0])
        scan = elbow_scan(pts, range(1, 5), seed=4)
        assert [k for k, _ in scan] == [1, 2, 3, 4]
        # a clear 2-cluster structure collapses most of the objective at k=2
        sse = dict(scan)
        assert sse[2] < 0.25 * sse[1]


class TestSilhouette:
    def test_two_box_clusters_match_hand_computation(self):
        pts = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        labels = [0, 0, 1, 1]
        # each point: a = 1, b = (10 + sqrt(101)) / 2, s = 1 - a/b
        b = (10.0 + math.sqrt(101.0)) / 2.0
        assert silhouette(pts, labels) == pytest.approx(1.0 - 1.0 / b, abs=1e-12)

    def test_requires_two_clusters(self):
        with pytest.raises(ValueError):
            silhouette(np.eye(3), [0, 0, 0])

    def test_singletons_score_zero(self):
        pts = np.array([[0.0, 0.0], [5.0, 5.0]])
        assert silhouette(pts, [0, 1]) == 0.0

    def test_bounded(self):
        rng = np.random.default_rng(13)
        pts = rng.normal(size=(18, 3))
        labels = rng.integers(0, 3, size=18)
        if len(np.unique(labels)) >= 2:
            assert -1.0 <= silhouette(pts, labels) <= 1.0


class TestPersistence:
    def test_model_roundtrip(self, tmp_path):
        rng = np.random.default_rng(14)
        pts = rng.normal(size=(20, 3))
        model, _ = kmeans(pts, 3, metric=Metric.COSINE, seed=5)
        save_model(tmp_path / "model.bin", model)
        loaded = load_model(tmp_path / "model.bin")
        assert loaded.k == model.k
        assert loaded.metric is model.metric
        assert loaded.seed == model.seed
        assert loaded.iterations == model.iterations
        assert loaded.sse == model.sse
        # centroid storage is float32
        np.testing.assert_allclose(loaded.centroids, model.centroids, atol=1e-6)

    def test_loaded_model_assigns(self, tmp_path):
        rng = np.random.default_rng(15)
        pts = rng.normal(size=(20, 3))
        model, labels = kmeans(pts, 2, seed=6)
        save_model(tmp_path / "m.bin", model)
        loaded = load_model(tmp_path / "m.bin")
        np.testing.assert_array_equal(assign(pts, loaded), labels)

    def test_assignments_roundtrip(self, tmp_path):
        p = tmp_path / "assign.csv"
        write_assignments(p, ["a1", "a2"], [0, 3])
        assert read_assignments(p) == {"a1": 0, "a2": 3}

    def test_assignments_length_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            write_assignments(tmp_path / "a.csv", ["a1"], [0, 1])

    def test_assignments_bad_header(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("foo,bar\n1,2\n")
        with pytest.raises(ValueError, match="bad header"):
            read_assignments(p)
