"""Brute-force clustering metrics in pure Python.

Everything here is written from the definitions with dicts, loops, and
math.log so the package's vectorized implementations are tested against
a structurally independent reference.
"""

from __future__ import annotations

import itertools
import math


def _canon(labels) -> tuple:
    remap: dict = {}
    out = []
    for v in labels:
        if v not in remap:
            remap[v] = len(remap)
        out.append(remap[v])
    return tuple(out)


def contingency(truth, pred) -> dict:
    table: dict = {}
    for t, p in zip(truth, pred):
        table[(t, p)] = table.get((t, p), 0) + 1
    return table


def accuracy_bruteforce(truth, pred) -> float:
    """Exhaustive search over label permutations (pad to a square map)."""
    truth = list(truth)
    pred = list(pred)
    t_vals = sorted(set(truth))
    p_vals = sorted(set(pred))
    size = max(len(t_vals), len(p_vals))
    if size > 7:
        raise ValueError("brute force capped at 7 distinct labels")
    # pad both sides with unused placeholder labels
    t_pad = t_vals + [("pad_t", i) for i in range(size - len(t_vals))]
    p_pad = p_vals + [("pad_p", i) for i in range(size - len(p_vals))]
    best = 0
    for perm in itertools.permutations(range(size)):
        mapping = {p_pad[j]: t_pad[perm[j]] for j in range(size)}
        hits = sum(1 for t, p in zip(truth, pred) if mapping[p] == t)
        best = max(best, hits)
    return best / len(truth)


def nmi_oracle(truth, pred) -> float:
    if _canon(truth) == _canon(pred):
        return 1.0
    if len(set(truth)) < 2 or len(set(pred)) < 2:
        return 0.0
    n = len(truth)
    table = contingency(truth, pred)
    t_sizes: dict = {}
    p_sizes: dict = {}
    for (t, p), c in table.items():
        t_sizes[t] = t_sizes.get(t, 0) + c
        p_sizes[p] = p_sizes.get(p, 0) + c
    h_t = -sum((c / n) * math.log(c / n) for c in t_sizes.values() if c > 0)
    h_p = -sum((c / n) * math.log(c / n) for c in p_sizes.values() if c > 0)
    if h_t <= 0.0 or h_p <= 0.0:
        return 0.0
    mi = 0.0
    for (t, p), c in table.items():
        if c > 0:
            mi += (c / n) * math.log(n * c / (t_sizes[t] * p_sizes[p]))
    return max(0.0, mi) / math.sqrt(h_t * h_p)


def _comb2(x: int) -> float:
    return x * (x - 1) / 2.0


def ari_oracle(truth, pred) -> float:
    if _canon(truth) == _canon(pred):
        return 1.0
    n = len(truth)
    table = contingency(truth, pred)
    t_sizes: dict = {}
    p_sizes: dict = {}
    for (t, p), c in table.items():
        t_sizes[t] = t_sizes.get(t, 0) + c
        p_sizes[p] = p_sizes.get(p, 0) + c
    total = _comb2(n)
    if total == 0:
        return 1.0
    sum_cells = sum(_comb2(c) for c in table.values())
    sum_t = sum(_comb2(c) for c in t_sizes.values())
    sum_p = sum(_comb2(c) for c in p_sizes.values())
    expected = sum_t * sum_p / total
    max_index = (sum_t + sum_p) / 2.0
    if max_index == expected:
        return 1.0
    return (sum_cells - expected) / (max_index - expected)


def f1_oracle(truth, pred) -> float:
    if _canon(truth) == _canon(pred):
        return 1.0
    table = contingency(truth, pred)
    t_sizes: dict = {}
    p_sizes: dict = {}
    for (t, p), c in table.items():
        t_sizes[t] = t_sizes.get(t, 0) + c
        p_sizes[p] = p_sizes.get(p, 0) + c
    both = sum(_comb2(c) for c in table.values())
    same_t = sum(_comb2(c) for c in t_sizes.values())
    same_p = sum(_comb2(c) for c in p_sizes.values())
    if same_t + same_p == 0:
        return 1.0
    return 2.0 * both / (same_t + same_p)


def completeness_oracle(truth, pred) -> float:
    if _canon(truth) == _canon(pred):
        return 1.0
    if len(set(truth)) < 2 or len(set(pred)) < 2:
        return 1.0
    n = len(truth)
    table = contingency(truth, pred)
    t_sizes: dict = {}
    p_sizes: dict = {}
    for (t, p), c in table.items():
        t_sizes[t] = t_sizes.get(t, 0) + c
        p_sizes[p] = p_sizes.get(p, 0) + c
    h_t_given_p = 0.0
    for (t, p), c in table.items():
        if c > 0:
            h_t_given_p -= (c / n) * math.log(c / p_sizes[p])
    h_t = -sum((c / n) * math.log(c / n) for c in t_sizes.values() if c > 0)
    if h_t <= 0.0:
        return 1.0
    return 1.0 - h_t_given_p / h_t
