"""Contrastive losses, similarity-based graph pruning, and walk sampling.

Every loss returns ``(value, gradients)`` with analytically derived
gradients, validated against central finite differences in the test
suite.  All losses expect row-L2-normalized inputs (callers normalize
and chain the normalization Jacobian), so every dot product lies in
[-1, 1] and the exponentials involved are bounded; no log-sum-exp
shifting is needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


def _sub_rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


# ---------------------------------------------------------------------------
# margin contrastive alignment between two embedding sets


def _impostor_indices(
    n: int, cap: int | None, rng: np.random.Generator
) -> np.ndarray:
    """Per row, indices of impostor rows: all others, or ``cap`` distinct draws."""
    base = np.arange(n - 1, dtype=np.int64)
    if cap is None or cap >= n - 1:
        idx = base[None, :] + (base[None, :] >= np.arange(n)[:, None])
        return np.ascontiguousarray(idx)
    if cap < 1:
        raise ValueError("negative_cap must be >= 1 when set")
    # a random cap-subset per row: the cap smallest of n-1 iid uniforms
    keys = rng.random((n, n - 1))
    draw = np.argpartition(keys, cap - 1, axis=1)[:, :cap]
    return draw + (draw >= np.arange(n)[:, None])


def mms_loss(
    z_a: np.ndarray,
    z_b: np.ndarray,
    delta: float = 0.1,
    negative_cap: int | None = None,
    seed: int = 0,
):
    """Margin contrastive loss aligning matched rows of two embedding sets.

    Row ``l`` of each input forms the positive pair; the other rows act
    as impostors against the opposite anchor, with the positive logit
    reduced by the margin ``delta``.  Both anchor directions are scored
    and the total is averaged over rows.  ``negative_cap`` bounds the
    impostor count per row by uniform sampling without replacement (all
    other rows are used when the cap is None or not binding).  Returns
    ``(value, grad_a, grad_b)``.
    """
    z_a = np.asarray(z_a, dtype=np.float64)
    z_b = np.asarray(z_b, dtype=np.float64)
    if z_a.shape != z_b.shape or z_a.ndim != 2:
        raise ValueError("mms_loss expects two equal-shape 2-d arrays")
    n = z_a.shape[0]
    grad_a = np.zeros_like(z_a)
    grad_b = np.zeros_like(z_b)
    if n == 1:
        return 0.0, grad_a, grad_b

    idx = _impostor_indices(n, negative_cap, _sub_rng(seed))
    scores = z_a @ z_b.T  # scores[l, k] = z_a[l] . z_b[k]
    pos = np.diagonal(scores).copy()
    pos_e = np.exp(pos - delta)
    # direction 1: impostor rows of z_a against anchor row l of z_b
    s1 = np.take_along_axis(scores.T, idx, axis=1)
    # direction 2: anchor row l of z_a against impostor rows of z_b
    s2 = np.take_along_axis(scores, idx, axis=1)
    e1 = np.exp(s1)
    e2 = np.exp(s2)
    d1 = pos_e + e1.sum(axis=1)
    d2 = pos_e + e2.sum(axis=1)
    value = float(np.sum(np.log(d1) + np.log(d2) - 2.0 * (pos - delta))) / n

    # positive-pair pull from both directions
    coef = ((1.0 - pos_e / d1) + (1.0 - pos_e / d2)) / n
    grad_a -= coef[:, None] * z_b
    grad_b -= coef[:, None] * z_a
    # impostor push, gathered into one row-to-row weight matrix:
    # mix[l, k] = softmax weight of impostor k against anchor l (both directions)
    omega1 = np.zeros((n, n))
    np.put_along_axis(omega1, idx, e1 / d1[:, None], axis=1)
    omega2 = np.zeros((n, n))
    np.put_along_axis(omega2, idx, e2 / d2[:, None], axis=1)
    mix = omega1.T + omega2
    grad_a += (mix @ z_b) / n
    grad_b += (mix.T @ z_a) / n
    return value, grad_a, grad_b


def cross_modality_loss(
    z_list: list[np.ndarray],
    delta: float = 0.1,
    negative_cap: int | None = None,
    seed: int = 0,
):
    """Margin loss summed over all ordered pairs of embedding sets.

    ``z_list`` typically holds the filtered embedding first, then one
    entry per modality.  The two orderings of a pair mirror each other
    exactly when they share one impostor draw, so each unordered pair is
    evaluated once and doubled.  Returns ``(value, grads)`` with one
    gradient array per input.
    """
    m = len(z_list)
    if m < 2:
        raise ValueError("cross_modality_loss needs at least two embedding sets")
    total = 0.0
    grads = [np.zeros_like(np.asarray(z, dtype=np.float64)) for z in z_list]
    for i in range(m):
        for j in range(i + 1, m):
            pair_seed = np.random.SeedSequence([int(seed), i, j]).generate_state(1)[0]
            value, g_i, g_j = mms_loss(
                z_list[i], z_list[j], delta=delta, negative_cap=negative_cap,
                seed=int(pair_seed),
            )
            total += 2.0 * value
            grads[i] += 2.0 * g_i
            grads[j] += 2.0 * g_j
    return total, grads


# ---------------------------------------------------------------------------
# cross-modal similarity and adaptive edge pruning


def _pair_scores(z_list: list[np.ndarray], us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Symmetrized cross-modal similarity for aligned node-index arrays."""
    scores = np.zeros(us.shape[0], dtype=np.float64)
    m = len(z_list)
    for i in range(m):
        for j in range(i + 1, m):
            forward = np.einsum("rd,rd->r", z_list[i][us], z_list[j][vs])
            backward = np.einsum("rd,rd->r", z_list[i][vs], z_list[j][us])
            scores += 0.5 * (forward + backward)
    return scores


def cross_modal_similarity(z_list: list[np.ndarray], u: int, v: int) -> float:
    """Symmetrized sum of cross-modality dot products between two nodes.

    Inputs are row-normalized embeddings, one per modality.  At least
    two modalities are required; the score sums over unordered modality
    pairs and averages the two node orderings.
    """
    if len(z_list) < 2:
        raise ValueError("cross_modal_similarity needs at least two modalities")
    us = np.asarray([u], dtype=np.int64)
    vs = np.asarray([v], dtype=np.int64)
    return float(_pair_scores(z_list, us, vs)[0])


@dataclass
class PrunedGraph:
    """Walk substrate produced by similarity-based edge pruning.

    ``edges`` keeps the surviving adjacency plus a unit self-loop on
    every node left without neighbors, so random walks always have a
    step to take.  ``disabled`` marks the single-modality case where
    pruning is skipped and the input graph is passed through.
    """

    edges: sp.csr_matrix
    threshold: float | None
    kept_count: int
    removed_count: int
    self_loops: int
    disabled: bool


def _walk_ready(adj: sp.csr_matrix) -> tuple[sp.csr_matrix, int]:
    adj = sp.csr_matrix(adj, dtype=np.float64)
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    isolated = degrees == 0
    if isolated.any():
        adj = (adj + sp.diags(isolated.astype(np.float64))).tocsr()
    return adj, int(isolated.sum())


def passthrough_pruned(adj: sp.csr_matrix, disabled: bool = True) -> PrunedGraph:
    """Wrap a graph unpruned (ablation path and single-modality fallback)."""
    ready, loops = _walk_ready(adj)
    kept = int(sp.triu(adj, k=1).nnz)
    return PrunedGraph(
        edges=ready, threshold=None, kept_count=kept, removed_count=0,
        self_loops=loops, disabled=disabled,
    )


def prune_graph(adj: sp.csr_matrix, z_list: list[np.ndarray], seed: int = 0) -> PrunedGraph:
    """Drop edges whose cross-modal similarity falls below an adaptive bar.

    The bar is mean + population standard deviation of the similarity
    over ``|E|`` uniformly sampled node pairs (u != v, with replacement,
    seeded).  With fewer than two modalities the graph passes through
    unchanged with ``disabled`` set.
    """
    if len(z_list) < 2:
        return passthrough_pruned(adj)
    n = adj.shape[0]
    triu = sp.triu(adj, k=1).tocoo()
    n_edges = triu.nnz
    if n_edges == 0:
        return passthrough_pruned(adj, disabled=False)

    rng = _sub_rng(seed)
    us = rng.integers(0, n, size=n_edges)
    vs = rng.integers(0, n, size=n_edges)
    clash = us == vs
    while clash.any():
        vs[clash] = rng.integers(0, n, size=int(clash.sum()))
        clash = us == vs
    sample_scores = _pair_scores(z_list, us, vs)
    threshold = float(sample_scores.mean() + sample_scores.std())

    edge_scores = _pair_scores(z_list, triu.row, triu.col)
    keep = edge_scores >= threshold
    rows = triu.row[keep]
    cols = triu.col[keep]
    data = np.ones(rows.shape[0] * 2, dtype=np.float64)
    kept_adj = sp.csr_matrix(
        (data, (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    )
    ready, loops = _walk_ready(kept_adj)
    return PrunedGraph(
        edges=ready,
        threshold=threshold,
        kept_count=int(keep.sum()),
        removed_count=int(n_edges - keep.sum()),
        self_loops=loops,
        disabled=False,
    )


# ---------------------------------------------------------------------------
# neighborhood sampling and loss


@dataclass
class SampleSet:
    """Per-anchor positive walk visits and negative draws."""

    positives: list[np.ndarray]
    negatives: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.positives)


def sample_neighborhoods(
    adj: sp.csr_matrix, walk_length: int, negatives_per_node: int, seed: int = 0
) -> SampleSet:
    """One uniform random walk plus uniform negative draws per anchor.

    Positives are the ``walk_length`` visited nodes (start excluded as a
    position, revisits kept).  Negatives are ``negatives_per_node``
    uniform draws from the nodes outside the walk and the anchor,
    resampled on collision; when no such node exists the negative list
    is empty.  Every node must have at least one neighbor (see
    ``PrunedGraph``).
    """
    adj = sp.csr_matrix(adj)
    n = adj.shape[0]
    if walk_length < 1:
        raise ValueError("walk_length must be >= 1")
    if negatives_per_node < 0:
        raise ValueError("negatives_per_node must be >= 0")
    degrees = np.diff(adj.indptr)
    if (degrees == 0).any():
        raise ValueError("every node needs a neighbor; add self-loops first")

    rng = _sub_rng(seed)
    current = np.arange(n, dtype=np.int64)
    visits = np.empty((walk_length, n), dtype=np.int64)
    for step in range(walk_length):
        offsets = rng.integers(0, degrees[current])
        current = adj.indices[adj.indptr[current] + offsets]
        visits[step] = current

    positives = [visits[:, i].copy() for i in range(n)]
    negatives: list[np.ndarray] = []
    for i in range(n):
        forbidden = set(positives[i].tolist())
        forbidden.add(i)
        if len(forbidden) >= n:
            negatives.append(np.empty(0, dtype=np.int64))
            continue
        out = np.empty(negatives_per_node, dtype=np.int64)
        filled = 0
        while filled < negatives_per_node:
            draws = rng.integers(0, n, size=negatives_per_node - filled)
            for d in draws:
                if int(d) not in forbidden:
                    out[filled] = d
                    filled += 1
        negatives.append(out)
    return SampleSet(positives=positives, negatives=negatives)


def _neighborhood_loss_rect(h, pos, neg):
    """Vectorized path for rectangular sample sets."""
    n, d = h.shape
    sp_scores = np.einsum("rcd,rd->rc", h[pos], h)
    ep = np.exp(sp_scores)
    sum_p = ep.sum(axis=1)
    if neg.shape[1]:
        sn_scores = np.einsum("rcd,rd->rc", h[neg], h)
        en = np.exp(sn_scores)
        sum_n = en.sum(axis=1)
    else:
        en = np.zeros((n, 0))
        sum_n = np.zeros(n)
    value = float(np.sum(np.log(sum_p + sum_n) - np.log(sum_p)))
    d_pos = ep * (1.0 / (sum_p + sum_n) - 1.0 / sum_p)[:, None]
    grad = np.einsum("rc,rcd->rd", d_pos, h[pos])
    anchors = np.repeat(np.arange(n), pos.shape[1])
    scatter = sp.csr_matrix(
        (d_pos.ravel(), (pos.ravel(), anchors)), shape=(n, n)
    )
    grad += scatter @ h
    if neg.shape[1]:
        d_neg = en / (sum_p + sum_n)[:, None]
        grad += np.einsum("rc,rcd->rd", d_neg, h[neg])
        anchors = np.repeat(np.arange(n), neg.shape[1])
        scatter = sp.csr_matrix(
            (d_neg.ravel(), (neg.ravel(), anchors)), shape=(n, n)
        )
        grad += scatter @ h
    return value, grad


def neighborhood_loss(h: np.ndarray, samples: SampleSet):
    """Walk-positive contrastive loss over anchors, summed (not averaged).

    Per anchor, the walk visits score against the anchor embedding in
    the numerator while the negatives only enlarge the denominator.
    Anchors without positives are skipped.  Returns ``(value, grad)``.
    """
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    if len(samples) != n:
        raise ValueError("sample set size must match the embedding rows")
    pos_lens = {p.shape[0] for p in samples.positives}
    neg_lens = {q.shape[0] for q in samples.negatives}
    if len(pos_lens) == 1 and 0 not in pos_lens and len(neg_lens) == 1:
        neg_len = next(iter(neg_lens))
        neg = (
            np.vstack(samples.negatives)
            if neg_len
            else np.empty((n, 0), dtype=np.int64)
        )
        return _neighborhood_loss_rect(h, np.vstack(samples.positives), neg)

    grad = np.zeros_like(h)
    value = 0.0
    skipped = 0
    for i in range(n):
        pos = samples.positives[i]
        neg = samples.negatives[i]
        if pos.shape[0] == 0:
            skipped += 1
            continue
        ep = np.exp(h[pos] @ h[i])
        en = np.exp(h[neg] @ h[i]) if neg.shape[0] else np.empty(0)
        sum_p = float(ep.sum())
        sum_n = float(en.sum())
        value += math.log(sum_p + sum_n) - math.log(sum_p)
        d_pos = ep * (1.0 / (sum_p + sum_n) - 1.0 / sum_p)
        grad[i] += d_pos @ h[pos]
        np.add.at(grad, pos, d_pos[:, None] * h[i][None, :])
        if neg.shape[0]:
            d_neg = en / (sum_p + sum_n)
            grad[i] += d_neg @ h[neg]
            np.add.at(grad, neg, d_neg[:, None] * h[i][None, :])
    if skipped:
        logger.debug("neighborhood_loss skipped %d anchors without positives", skipped)
    return value, grad


# ---------------------------------------------------------------------------
# community-level loss with hard positive selection


def hard_positive_sets(
    h: np.ndarray, assignments: np.ndarray, centroids: np.ndarray, theta: float
) -> list[np.ndarray]:
    """Per cluster, the member ids most cosine-aligned with the centroid.

    Keeps ``max(1, floor(size * theta))`` members per non-empty cluster,
    ranked by cosine similarity to the cluster centroid with ties broken
    by ascending node id.  Empty clusters yield empty id arrays.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    h = np.asarray(h, dtype=np.float64)
    assignments = np.asarray(assignments)
    k = centroids.shape[0]
    row_norms = np.linalg.norm(h, axis=1)
    cent_norms = np.linalg.norm(centroids, axis=1)
    sets: list[np.ndarray] = []
    for c in range(k):
        members = np.flatnonzero(assignments == c)
        if members.shape[0] == 0:
            sets.append(members)
            continue
        denom = row_norms[members] * cent_norms[c]
        raw = h[members] @ centroids[c]
        cosine = np.where(denom > 0, raw / np.where(denom > 0, denom, 1.0), 0.0)
        count = max(1, int(math.floor(members.shape[0] * theta + 1e-9)))
        order = np.lexsort((members, -cosine))
        sets.append(members[order[:count]])
    return sets


def community_loss(
    h: np.ndarray,
    assignments: np.ndarray,
    centroids: np.ndarray,
    hard_sets: list[np.ndarray],
):
    """Cluster-level contrastive loss against centroid anchors.

    Hard positives of each cluster score against their own centroid in
    the numerators; one shared denominator pools every member-to-own-
    centroid score across clusters.  ``h`` rows and ``centroids`` must
    be L2-normalized by the caller; centroids are treated as constants
    in the gradient.  Returns ``(value, grad)``.
    """
    h = np.asarray(h, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    assignments = np.asarray(assignments)
    n = h.shape[0]
    k = centroids.shape[0]
    if len(hard_sets) != k:
        raise ValueError("need one hard positive set per cluster")

    own_scores = np.einsum("ij,ij->i", h, centroids[assignments])
    own_e = np.exp(own_scores)
    den = float(own_e.sum())

    value = 0.0
    grad = np.zeros_like(h)
    active = 0
    for c in range(k):
        hs = hard_sets[c]
        if hs.shape[0] == 0:
            continue
        active += 1
        e_hard = np.exp(h[hs] @ centroids[c])
        num = float(e_hard.sum())
        value += math.log(den) - math.log(num)
        grad[hs] -= (e_hard / num)[:, None] * centroids[c][None, :]
    if active == 0:
        raise ValueError("all hard positive sets are empty")
    value /= n
    grad /= n
    grad += (active / n) * (own_e / den)[:, None] * centroids[assignments]
    return value, grad
