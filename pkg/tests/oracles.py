"""Independent naive reference implementations used to check the fast paths.

Everything here is deliberately written as plain loops over scalar math so it
shares no code with the implementations under test.
"""

from __future__ import annotations

import math

import numpy as np


def naive_info_nce(S, G, Q, tau: float) -> float:
    """Double-loop InfoNCE: batch rows as positives, other rows + queue as
    negatives. Only valid for moderate tau (no log-sum-exp trick)."""
    S = np.asarray(S, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64) if Q is not None else np.zeros((0, S.shape[1]))
    k = S.shape[0]
    total = 0.0
    for i in range(k):
        num = math.exp(float(np.dot(S[i], G[i])) / tau)
        den = 0.0
        for j in range(k):
            den += math.exp(float(np.dot(S[i], G[j])) / tau)
        for q in range(Q.shape[0]):
            den += math.exp(float(np.dot(S[i], Q[q])) / tau)
        total += -math.log(num / den)
    return total / k


def naive_ranks(sim) -> list[int]:
    """Sort-based pessimistic ranks of the diagonal entries."""
    sim = np.asarray(sim, dtype=np.float64)
    out = []
    for i in range(sim.shape[0]):
        row = sorted(sim[i].tolist(), reverse=True)
        v = float(sim[i, i])
        rank = 0
        for x in row:
            if x >= v:
                rank += 1
            else:
                break
        out.append(rank)
    return out


def naive_recall_at_k(sim, k: int) -> float:
    r = naive_ranks(sim)
    return sum(1 for rank in r if rank <= k) / len(r)


def naive_median(values) -> float:
    s = sorted(values)
    n = len(s)
    if n % 2 == 1:
        return float(s[n // 2])
    return (s[n // 2 - 1] + s[n // 2]) / 2.0


def naive_median_rank(sim) -> float:
    return naive_median(naive_ranks(sim))


def naive_silhouette(points, labels) -> float:
    """Direct-definition O(n^2) silhouette with Euclidean distance."""
    points = np.asarray(points, dtype=np.float64)
    labels = list(labels)
    n = len(labels)

    def dist(i, j):
        return math.sqrt(float(((points[i] - points[j]) ** 2).sum()))

    clusters: dict = {}
    for i, c in enumerate(labels):
        clusters.setdefault(c, []).append(i)

    scores = []
    for i in range(n):
        own = clusters[labels[i]]
        if len(own) == 1:
            scores.append(0.0)
            continue
        a = sum(dist(i, j) for j in own if j != i) / (len(own) - 1)
        b = math.inf
        for c, members in clusters.items():
            if c == labels[i]:
                continue
            b = min(b, sum(dist(i, j) for j in members) / len(members))
        scores.append((b - a) / max(a, b))
    return sum(scores) / n
