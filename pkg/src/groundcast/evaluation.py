"""Cross-view retrieval metrics, clustering diagnostics, caption alignment.

Rank convention is pessimistic: the true match's rank is 1 plus the number of
gallery items whose similarity is greater than OR EQUAL to it (ties count
against the query). Median rank over an even query count averages the two
central ranks, so half-integers are legal values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DomainError

Direction = Literal["Overhead2Ground", "Ground2Overhead"]


def _as_square_sim(sim: np.ndarray) -> np.ndarray:
    sim = np.asarray(sim, dtype=np.float64)
    if sim.ndim != 2 or sim.shape[0] != sim.shape[1]:
        raise DomainError(f"paired similarity matrix must be square, got {sim.shape}")
    if not np.all(np.isfinite(sim)):
        raise DomainError("similarity matrix contains non-finite entries")
    return sim


def ranks(sim: np.ndarray) -> np.ndarray:
    """Pessimistic rank of the diagonal entry within each row."""
    sim = _as_square_sim(sim)
    diag = np.diagonal(sim)
    return (sim >= diag[:, None]).sum(axis=1)


def recall_at_k(sim: np.ndarray, k: int) -> float:
    """Fraction of queries whose true match ranks within the top k."""
    sim = _as_square_sim(sim)
    n = sim.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    return float(np.mean(ranks(sim) <= k))


def median_rank(sim: np.ndarray) -> float:
    """Median of per-query ranks; even counts average the two central ranks."""
    return float(np.median(ranks(sim)))


@dataclass(frozen=True)
class RetrievalReport:
    direction: Direction
    r_at_5: float
    r_at_10: float
    median_rank: float
    n: int

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "R@5": self.r_at_5,
            "R@10": self.r_at_10,
            "Median-R": self.median_rank,
            "n": self.n,
        }


def cosine_similarity_matrix(queries: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    queries = np.asarray(queries, dtype=np.float64)
    gallery = np.asarray(gallery, dtype=np.float64)
    qn = queries / np.linalg.norm(queries, axis=1, keepdims=True)
    gn = gallery / np.linalg.norm(gallery, axis=1, keepdims=True)
    return qn @ gn.T


def cross_view_report(
    overhead_embs: np.ndarray,
    ground_embs: np.ndarray,
    direction: Direction = "Overhead2Ground",
) -> RetrievalReport:
    """R@5, R@10 and median rank for one retrieval direction; pairing is by
    index identity."""
    overhead_embs = np.asarray(overhead_embs)
    ground_embs = np.asarray(ground_embs)
    if overhead_embs.shape != ground_embs.shape:
        raise DomainError(
            f"paired sets must have equal shapes, got {overhead_embs.shape} vs {ground_embs.shape}"
        )
    if direction == "Overhead2Ground":
        sim = cosine_similarity_matrix(overhead_embs, ground_embs)
    elif direction == "Ground2Overhead":
        sim = cosine_similarity_matrix(ground_embs, overhead_embs)
    else:
        raise DomainError(f"unknown direction {direction!r}")
    n = sim.shape[0]
    return RetrievalReport(
        direction=direction,
        r_at_5=recall_at_k(sim, min(5, n)),
        r_at_10=recall_at_k(sim, min(10, n)),
        median_rank=median_rank(sim),
        n=n,
    )


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=points.dtype)
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = points[rng.integers(n)]
            continue
        probs = d2 / total
        centers[j] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # |x-c|^2 = |x|^2 + |c|^2 - 2 x.c, clipped against float cancellation
    d2 = (
        (points**2).sum(axis=1, keepdims=True)
        + (centers**2).sum(axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    return np.maximum(d2, 0.0)


def kmeans(
    embeddings: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
    return_details: bool = False,
):
    """Seed-deterministic k-means++ with Lloyd iterations to a fixpoint.

    Empty clusters are re-seeded from the point currently farthest from its
    center. With return_details=True also returns centers and the per-iteration
    inertia history.
    """
    points = np.asarray(embeddings, dtype=np.float64)
    if points.ndim != 2:
        raise DomainError(f"embeddings must be 2-D, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise DomainError("embeddings contain non-finite values")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = _kmeans_pp_init(points, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _sq_distances(points, centers)
        new_labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = points[mask].mean(axis=0)
            else:
                farthest = int(d2[np.arange(n), labels].argmax())
                centers[j] = points[farthest]
    if return_details:
        return labels, centers, history
    return labels


def silhouette(embeddings: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette value with Euclidean distances.

    Per point: a = mean distance to own cluster (excluding self), b = smallest
    mean distance to any other cluster, s = (b - a) / max(a, b); singleton
    clusters contribute 0.
    """
    points = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if points.shape[0] != labels.shape[0]:
        raise DomainError("labels must align with embeddings")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise DomainError("silhouette requires at least 2 clusters")
    dists = np.sqrt(_sq_distances(points, points))
    n = points.shape[0]
    scores = np.zeros(n)
    cluster_masks = {int(c): labels == c for c in uniq}
    sizes = {c: int(m.sum()) for c, m in cluster_masks.items()}
    for i in range(n):
        own = int(labels[i])
        if sizes[own] == 1:
            scores[i] = 0.0
            continue
        a = dists[i, cluster_masks[own]].sum() / (sizes[own] - 1)
        b = min(dists[i, m].mean() for c, m in cluster_masks.items() if c != own)
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())


def silhouette_curve(
    embeddings_a: np.ndarray,
    embeddings_b: np.ndarray,
    k_list: Sequence[int],
    seed: int,
) -> list[dict]:
    """Cluster both sets with identical k-means parameters per k and report
    their silhouettes side by side (plot-ready rows)."""
    a = np.asarray(embeddings_a)
    b = np.asarray(embeddings_b)
    if a.shape[0] != b.shape[0]:
        raise DomainError("both embedding sets must have the same count")
    rows = []
    for k in k_list:
        sil_a = silhouette(a, kmeans(a, k, seed))
        sil_b = silhouette(b, kmeans(b, k, seed))
        rows.append({"k": int(k), "silhouette_a": sil_a, "silhouette_b": sil_b})
    return rows


def caption_alignment(texts_a: Sequence[str], texts_b: Sequence[str], sentence_embedder) -> float:
    """Mean pairwise cosine between two caption lists under a pluggable
    sentence embedder (anything with embed_texts)."""
    if len(texts_a) != len(texts_b):
        raise DomainError(f"paired lists must have equal length, got {len(texts_a)} vs {len(texts_b)}")
    if len(texts_a) == 0:
        raise DomainError("caption lists must be non-empty")
    emb_a = np.asarray(sentence_embedder.embed_texts(list(texts_a)), dtype=np.float64)
    emb_b = np.asarray(sentence_embedder.embed_texts(list(texts_b)), dtype=np.float64)
    emb_a /= np.linalg.norm(emb_a, axis=1, keepdims=True)
    emb_b /= np.linalg.norm(emb_b, axis=1, keepdims=True)
    return float(np.sum(emb_a * emb_b, axis=1).mean())


def format_report_table(rows: Sequence[dict]) -> str:
    """Aligned plain-text table with the ablation flags and metric columns."""
    headers = ["Meta/Training", "Dropout", "Meta/Inference", "Direction", "R@5", "R@10", "Median-R"]
    table = [headers]
    for row in rows:
        table.append(
            [
                "yes" if row.get("meta_training") else "no",
                "yes" if row.get("meta_dropout") else "no",
                "yes" if row.get("meta_inference") else "no",
                str(row.get("direction", "")),
                f"{row['R@5']:.3f}",
                f"{row['R@10']:.3f}",
                f"{row['Median-R']:g}",
            ]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    lines = []
    for i, r in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(r)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
