"""Agglomerative clustering of agent samples and its evaluation against the true classes.

Linkages come from scipy's hierarchy module, which applies the Lance-Williams
update. Clusters are fitted on the train+validation part and test samples join the
nearest training centroid.
"""

import logging
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.cluster.hierarchy import cophenet, cut_tree, linkage
from scipy.spatial.distance import pdist
from sklearn.metrics import pairwise_distances_argmin, silhouette_score

from agentlab.core.errors import ConfigurationError, DataError
from agentlab.schemas.models import ClassificationReport
from agentlab.services.metrics import classification_report

logger = logging.getLogger(__name__)

LINKAGES: tuple[str, ...] = ("ward", "complete", "average", "centroid")


@dataclass(frozen=True)
class Dendrogram:
    """
    Merge history in scipy's linkage-matrix layout.

    Row m merges nodes Z[m, 0] and Z[m, 1] at height Z[m, 2] into a node of Z[m, 3]
    leaves; that node gets id n + m.
    """

    Z: np.ndarray
    n_leaves: int
    method: str = "ward"

    @property
    def heights(self) -> np.ndarray:
        return self.Z[:, 2]

    def merges(self) -> list[tuple[int, int, float, int]]:
        return [(int(a), int(b), float(h), int(s)) for a, b, h, s in self.Z]

    def to_text(self) -> str:
        """Merge-list export: a header line, then `node_a node_b height size` per merge."""
        lines = [f"# method={self.method} leaves={self.n_leaves}"]
        lines += [f"{a} {b} {h:.12g} {s}" for a, b, h, s in self.merges()]
        return "\n".join(lines) + "\n"


def ward_agglomerate(X: np.ndarray, method: str = "ward") -> Dendrogram:
    """
    Agglomerate samples bottom-up under a Euclidean linkage.

    Merge costs that are exactly equal resolve in scipy's own fixed order, which
    is reproducible for a given input but is not the smallest index pair.
    Duplicate points merge first at height zero. Exact ties between distinct
    merges do not occur on continuous features.

    Args:
        X: Standardized samples, one per row
        method: ward, complete, average or centroid

    Returns:
        The full dendrogram
    """
    if method not in LINKAGES:
        raise ConfigurationError(f"Unknown linkage {method!r}; expected one of {LINKAGES}")
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        raise DataError(f"Clustering needs at least 2 samples, got {len(X)}")
    logger.info("Agglomerating %d samples with %s linkage", len(X), method)
    Z = linkage(X, method=method, metric="euclidean")
    return Dendrogram(Z=Z, n_leaves=len(X), method=method)


def _normalize_labels(raw: np.ndarray) -> np.ndarray:
    """Renumber clusters by their smallest member index."""
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inverse]


def cut(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Undo the k-1 last merges; cluster ids follow the order of their first member."""
    if not 1 <= k <= dendrogram.n_leaves:
        raise ConfigurationError(f"k must be in [1, {dendrogram.n_leaves}], got {k}")
    return _normalize_labels(cut_tree(dendrogram.Z, n_clusters=k).ravel())


def wcss(X: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster sum of squared distances to the cluster means."""
    total = 0.0
    for cluster in np.unique(labels):
        members = X[labels == cluster]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def knee(ks: Sequence[int], values: Sequence[float]) -> int:
    """
    Elbow of a decreasing curve: the point farthest from the chord joining its ends.

    Both axes are rescaled to [0, 1] first so the result does not depend on units.
    """
    x = np.asarray(ks, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(x) < 3:
        return int(x[0])
    x = (x - x.min()) / (x.max() - x.min())
    span = y.max() - y.min()
    y = (y - y.min()) / span if span > 0 else np.zeros_like(y)
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    distance = np.abs(dy * (x - x[0]) - dx * (y - y[0])) / np.hypot(dx, dy)
    return int(np.asarray(ks)[int(np.argmax(distance))])


@dataclass(frozen=True)
class KDiagnostics:
    ks: tuple[int, ...]
    silhouette: tuple[float, ...]
    wcss: tuple[float, ...]
    silhouette_k: int
    elbow_k: int
    cophenetic: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"k": self.ks, "silhouette": self.silhouette, "wcss": self.wcss})


def cophenetic_correlation(X: np.ndarray, dendrogram: Dendrogram) -> float:
    """Pearson correlation of cophenetic and Euclidean pairwise distances."""
    correlation, _ = cophenet(dendrogram.Z, pdist(X))
    return float(correlation)


def k_diagnostics(
    X: np.ndarray,
    dendrogram: Dendrogram,
    k_range: tuple[int, int] = (2, 20),
) -> KDiagnostics:
    """
    Silhouette and WCSS over a range of cluster counts, plus cophenetic correlation.

    The range is clipped to [2, n-1] so every silhouette is defined.
    """
    lo, hi = max(2, k_range[0]), min(k_range[1], dendrogram.n_leaves - 1)
    if lo > hi:
        raise DataError(f"No valid k in {k_range} for {dendrogram.n_leaves} samples")
    ks = tuple(range(lo, hi + 1))
    silhouettes, sums = [], []
    for k in ks:
        labels = cut(dendrogram, k)
        silhouettes.append(float(silhouette_score(X, labels, metric="euclidean")))
        sums.append(wcss(X, labels))

    diagnostics = KDiagnostics(
        ks=ks,
        silhouette=tuple(silhouettes),
        wcss=tuple(sums),
        silhouette_k=ks[int(np.argmax(silhouettes))],
        elbow_k=knee(ks, sums),
        cophenetic=cophenetic_correlation(X, dendrogram),
    )
    logger.info(
        "Silhouette peaks at k=%d (%.3f), elbow at k=%d, cophenetic %.3f",
        diagnostics.silhouette_k,
        max(silhouettes),
        diagnostics.elbow_k,
        diagnostics.cophenetic,
    )
    return diagnostics


def map_clusters(assignments: np.ndarray, labels: np.ndarray) -> dict[int, int]:
    """
    Give every cluster the class holding the majority of its members.

    A class left without any cluster takes over the cluster where it has its
    highest count, provided the cluster's current class keeps another cluster.
    Claims are served largest count first. Every tie goes to the lowest index.
    """
    assignments = np.asarray(assignments)
    labels = np.asarray(labels)
    clusters = sorted(np.unique(assignments).tolist())
    classes = sorted(np.unique(labels).tolist())
    counts = {c: Counter(labels[assignments == c].tolist()) for c in clusters}

    mapping = {
        c: min(counts[c], key=lambda cls, c=c: (-counts[c][cls], cls)) for c in clusters
    }

    owned = Counter(mapping.values())
    claims = []
    for cls in classes:
        if owned[cls]:
            continue
        present = [c for c in clusters if counts[c][cls] > 0]
        if not present:
            continue
        best = min(present, key=lambda c, cls=cls: (-counts[c][cls], c))
        claims.append((-counts[best][cls], cls, best))

    for _, cls, cluster in sorted(claims):
        holder = mapping[cluster]
        if owned[holder] > 1:
            mapping[cluster] = cls
            owned[holder] -= 1
            owned[cls] += 1
        else:
            logger.debug("Class %d cannot take cluster %d from class %d", cls, cluster, holder)
    return mapping


@dataclass(frozen=True)
class ClusterModel:
    """Clusters fitted on training samples, with centroids and the class map."""

    k: int
    assignments: np.ndarray
    centroids: np.ndarray
    cluster_class: dict[int, int]

    def predict_clusters(self, X: np.ndarray) -> np.ndarray:
        """Nearest centroid; equidistant points go to the lowest cluster id."""
        return pairwise_distances_argmin(np.atleast_2d(X), self.centroids)

    def predict(self, X: np.ndarray) -> np.ndarray:
        clusters = self.predict_clusters(X)
        return np.array([self.cluster_class[int(c)] for c in clusters])

    def assigned_clusters(self, class_id: int) -> list[int]:
        return sorted(c for c, cls in self.cluster_class.items() if cls == class_id)


def fit_clusters(
    X: np.ndarray,
    y: np.ndarray,
    k: int,
    dendrogram: Dendrogram | None = None,
) -> ClusterModel:
    """Cut the dendrogram at k and map its clusters to classes."""
    dendrogram = dendrogram or ward_agglomerate(X)
    assignments = cut(dendrogram, k)
    centroids = np.vstack([X[assignments == c].mean(axis=0) for c in range(k)])
    return ClusterModel(
        k=k,
        assignments=assignments,
        centroids=centroids,
        cluster_class=map_clusters(assignments, y),
    )


def assign_test(
    model: ClusterModel,
    X: np.ndarray,
    y: np.ndarray,
    classes: Sequence[int] | None = None,
) -> tuple[np.ndarray, ClassificationReport]:
    """
    Assign held-out samples to clusters and score the implied class predictions.

    Clusters mapped to the same class count as one prediction for the metrics.
    """
    clusters = model.predict_clusters(X)
    predictions = np.array([model.cluster_class[int(c)] for c in clusters])
    labels = classes if classes is not None else sorted(np.unique(y).tolist())
    return clusters, classification_report(y, predictions, labels)


def cluster_report_frame(
    model: ClusterModel,
    report: ClassificationReport,
    class_names: dict[int, str] | None = None,
) -> pd.DataFrame:
    """Per-class metrics with the clusters each class was given."""
    frame = report.to_frame(class_names)
    frame.insert(
        2,
        "assigned_clusters",
        [
            " ".join(str(c + 1) for c in model.assigned_clusters(cls)) or "-"
            for cls in report.classes
        ],
    )
    return frame


def compare_linkages(
    X: np.ndarray,
    methods: Sequence[str] = LINKAGES,
) -> pd.DataFrame:
    """Cophenetic correlation and merge-height profile of each linkage."""
    distances = pdist(X)
    rows = []
    for method in methods:
        dendrogram = ward_agglomerate(X, method)
        correlation, _ = cophenet(dendrogram.Z, distances)
        heights = dendrogram.heights
        rows.append(
            {
                "linkage": method,
                "cophenetic": float(correlation),
                "height_q25": float(np.quantile(heights, 0.25)),
                "height_median": float(np.median(heights)),
                "height_q75": float(np.quantile(heights, 0.75)),
                "height_max": float(heights.max()),
                "monotone": bool(np.all(np.diff(heights) >= 0)),
            }
        )
    return pd.DataFrame(rows)
