"""Classification metrics shared by the supervised and the clustering pipelines."""

from collections.abc import Sequence

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support

from agentlab.core.errors import DataError
from agentlab.schemas.models import ClassificationReport


def classification_report(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    classes: Sequence[int] | None = None,
) -> ClassificationReport:
    """Per-class precision/recall/F1, accuracy and the signed confusion matrix."""
    y_true = np.asarray(y_true)
    if len(y_true) == 0:
        raise DataError("Cannot evaluate on an empty test set")
    labels = list(classes) if classes is not None else sorted(np.unique(y_true).tolist())
    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=labels, zero_division=0
    )
    counts = confusion_matrix(y_true, y_pred, labels=labels).astype(float)
    rows = counts.sum(axis=1, keepdims=True)
    normalized = np.divide(counts, rows, out=np.zeros_like(counts), where=rows > 0)
    signed = -normalized
    np.fill_diagonal(signed, np.diag(normalized))
    return ClassificationReport(
        classes=tuple(int(c) for c in labels),
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        accuracy=float(accuracy_score(y_true, y_pred)),
        confusion=signed,
    )
