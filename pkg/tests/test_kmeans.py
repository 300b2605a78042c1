"""Lloyd iteration, plus-plus seeding, and restart selection."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmgc.kmeans import kmeans_fit


def _blobs(seed=0, n_per=20, centers=((0.0, 0.0), (10.0, 10.0))):
    rng = np.random.default_rng(seed)
    parts, labels = [], []
    for idx, c in enumerate(centers):
        parts.append(rng.standard_normal((n_per, len(c))) * 0.2 + np.asarray(c))
        labels += [idx] * n_per
    return np.vstack(parts), np.asarray(labels)


def test_k_equals_n_gives_zero_inertia():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((7, 3))
    res = kmeans_fit(x, 7, seed=0)
    assert res.inertia == pytest.approx(0.0, abs=1e-12)
    assert len(set(res.assignments.tolist())) == 7


def test_k_equals_one_gives_mean_centroid():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((30, 4))
    res = kmeans_fit(x, 1, seed=0)
    assert np.allclose(res.centroids[0], x.mean(axis=0), atol=1e-12)
    assert np.all(res.assignments == 0)


def test_separated_blobs_recovered_exactly():
    x, labels = _blobs()
    res = kmeans_fit(x, 2, seed=3)
    a = res.assignments
    same = (a == a[0]).sum()
    assert same in (20, 40 - 20)
    # one-to-one with the generating blobs
    assert len(set(a[:20].tolist())) == 1
    assert len(set(a[20:].tolist())) == 1
    assert a[0] != a[20]


def test_inertia_history_non_increasing():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((60, 5))
    res = kmeans_fit(x, 4, seed=1, n_init=1)
    hist = np.asarray(res.inertia_history)
    assert np.all(np.diff(hist) <= 1e-9)
    assert res.inertia == pytest.approx(hist[-1])


def test_same_seed_same_result():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((50, 3))
    a = kmeans_fit(x, 3, seed=9)
    b = kmeans_fit(x, 3, seed=9)
    assert np.array_equal(a.assignments, b.assignments)
    assert np.array_equal(a.centroids, b.centroids)


def test_explicit_init_centroids_respected():
    x, _ = _blobs(seed=7)
    init = np.array([[0.0, 0.0], [10.0, 10.0]])
    res = kmeans_fit(x, 2, init_centroids=init)
    assert np.all(res.assignments[:20] == 0)
    assert np.all(res.assignments[20:] == 1)


def test_fixed_init_permutation_equivariance():
    """Relabeling the init centroids relabels the output the same way."""
    rng = np.random.default_rng(8)
    x = rng.standard_normal((40, 3))
    init = rng.standard_normal((3, 3))
    res_a = kmeans_fit(x, 3, init_centroids=init)
    res_b = kmeans_fit(x, 3, init_centroids=init[[2, 0, 1]])
    remap = np.array([1, 2, 0])  # old index -> new index under the roll
    assert np.array_equal(remap[res_a.assignments], res_b.assignments)


def test_duplicate_points_do_not_crash():
    x = np.ones((12, 2))
    res = kmeans_fit(x, 3, seed=0)
    assert res.inertia == pytest.approx(0.0, abs=1e-12)


def test_empty_cluster_refilled():
    # two tight far blobs, k=3: one centroid must end up empty then refill
    x, _ = _blobs(seed=9, n_per=10)
    res = kmeans_fit(x, 3, seed=4)
    assert res.inertia >= 0.0
    assert len(res.assignments) == 20


def test_validation_errors():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((5, 2))
    with pytest.raises(ValueError):
        kmeans_fit(np.empty((0, 2)), 1)
    with pytest.raises(ValueError):
        kmeans_fit(x.ravel(), 2)
    with pytest.raises(ValueError):
        kmeans_fit(x, 0)
    with pytest.raises(ValueError):
        kmeans_fit(x, 6)
    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        kmeans_fit(bad, 2)
    with pytest.raises(ValueError):
        kmeans_fit(x, 2, init_centroids=np.zeros((3, 2)))


def test_more_restarts_never_worse():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((80, 4))
    one = kmeans_fit(x, 5, seed=2, n_init=1)
    many = kmeans_fit(x, 5, seed=2, n_init=10)
    assert many.inertia <= one.inertia + 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_inertia_matches_assignment_definition(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((30, 3))
    res = kmeans_fit(x, k, seed=seed)
    direct = sum(
        float(np.sum((x[res.assignments == j] - res.centroids[j]) ** 2))
        for j in range(k)
    )
    assert res.inertia == pytest.approx(direct, rel=1e-9, abs=1e-9)
