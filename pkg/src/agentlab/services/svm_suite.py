"""One-vs-one soft-margin SVM: pairwise training, grid search, metrics and weight maps.

Each binary problem is solved by libsvm (through scikit-learn's SVC), whose SMO
solver uses second-order working-set selection. Pairs are trained independently so
they can run in parallel and expose their own coefficients.
"""

import itertools
import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics import accuracy_score, pairwise_kernels
from sklearn.svm import SVC

from agentlab.core.errors import DataError, SolverError
from agentlab.schemas.models import ClassificationReport, KernelType, SvmHyperParams
from agentlab.services.metrics import classification_report

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BinarySvm:
    """A fitted two-class model; positive decisions mean the +1 label."""

    hp: SvmHyperParams
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # y_i * alpha_i of each support vector
    bias: float
    support: np.ndarray  # row positions of the support vectors in the training set
    n_iter: int = 0

    def _kernel(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        params: dict = {}
        if self.hp.kernel is KernelType.POLY:
            params = {"gamma": self.hp.gamma, "degree": self.hp.degree, "coef0": 0.0}
        elif self.hp.kernel is KernelType.RBF:
            params = {"gamma": self.hp.gamma}
        metric = "polynomial" if self.hp.kernel is KernelType.POLY else self.hp.kernel.value
        return pairwise_kernels(X, Y, metric=metric, **params)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return self._kernel(np.atleast_2d(X), self.support_vectors) @ self.dual_coef + self.bias

    @property
    def weights(self) -> np.ndarray:
        """Primal weight vector; only defined for the linear kernel."""
        if self.hp.kernel is not KernelType.LINEAR:
            raise SolverError(f"No primal weights for a {self.hp.kernel} kernel")
        return self.dual_coef @ self.support_vectors

    def alphas(self, n_samples: int) -> np.ndarray:
        """Dense |y_i alpha_i| over the training set."""
        alpha = np.zeros(n_samples)
        alpha[self.support] = np.abs(self.dual_coef)
        return alpha


def _svc(hp: SvmHyperParams, tol: float, max_iter: int) -> SVC:
    return SVC(
        kernel=hp.kernel.value,
        C=hp.C,
        gamma=hp.gamma,
        degree=hp.degree,
        coef0=0.0,
        tol=tol,
        max_iter=max_iter,
        cache_size=500,
    )


def train_binary_svm(
    X: np.ndarray,
    y: np.ndarray,
    hp: SvmHyperParams,
    tol: float = 1e-3,
    max_iter: int = 100_000,
) -> BinarySvm:
    """
    Solve the soft-margin dual of one two-class problem.

    Args:
        X: Standardized features
        y: Labels in {-1, +1}
        hp: Kernel and penalty
        tol: KKT stopping tolerance
        max_iter: Solver iteration cap

    Returns:
        The fitted binary model
    """
    y = np.asarray(y)
    labels = set(np.unique(y).tolist())
    if labels != {-1, 1}:
        raise SolverError(f"Binary SVM needs both labels -1 and +1, got {sorted(labels)}")

    estimator = _svc(hp, tol, max_iter)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        estimator.fit(X, y)
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        logger.warning("SVM %s stopped at the iteration cap (%d)", hp.label(), max_iter)

    # classes_ is [-1, 1]: sklearn's decision is positive for the +1 label
    return BinarySvm(
        hp=hp,
        support_vectors=estimator.support_vectors_.copy(),
        dual_coef=estimator.dual_coef_[0].copy(),
        bias=float(estimator.intercept_[0]),
        support=estimator.support_.copy(),
        n_iter=int(np.sum(estimator.n_iter_)),
    )


def dual_objective(model: BinarySvm, X: np.ndarray, y: np.ndarray) -> float:
    """Dual objective sum(alpha) - 1/2 alpha^T Q alpha of a fitted model."""
    alpha = model.alphas(len(X))
    coef = alpha * np.asarray(y)
    K = model._kernel(X, X)
    return float(alpha.sum() - 0.5 * coef @ K @ coef)


@dataclass
class TrainedOvoSvm:
    """k(k-1)/2 pairwise models over sorted classes; pair (i, j) is positive for i."""

    hp: SvmHyperParams
    classes: tuple[int, ...]
    pairs: dict[tuple[int, int], BinarySvm] = field(default_factory=dict)

    def pair_list(self) -> list[tuple[int, int]]:
        return list(itertools.combinations(range(len(self.classes)), 2))

    def predict(self, X: np.ndarray) -> np.ndarray:
        """
        Majority vote over the pairwise models.

        A decision of exactly zero votes for the lower class index of its pair.
        Vote ties go to the class whose won votes carry the largest summed
        decision magnitude, then to the lowest class index.
        """
        X = np.atleast_2d(X)
        k = len(self.classes)
        votes = np.zeros((len(X), k))
        strength = np.zeros((len(X), k))
        for i, j in self.pair_list():
            d = self.pairs[(i, j)].decision(X)
            won = d >= 0
            votes[:, i] += won
            votes[:, j] += ~won
            strength[:, i] += np.where(won, d, 0.0)
            strength[:, j] += np.where(won, 0.0, -d)

        winners = np.empty(len(X), dtype=int)
        for row in range(len(X)):
            tied = np.flatnonzero(votes[row] == votes[row].max())
            if tied.size > 1:
                best = strength[row, tied].max()
                tied = tied[strength[row, tied] == best]
            winners[row] = tied[0]
        return np.asarray(self.classes)[winners]


def _train_pair(
    X: np.ndarray,
    y: np.ndarray,
    classes: tuple[int, ...],
    i: int,
    j: int,
    hp: SvmHyperParams,
    tol: float,
    max_iter: int,
) -> tuple[tuple[int, int], BinarySvm]:
    mask = (y == classes[i]) | (y == classes[j])
    binary = np.where(y[mask] == classes[i], 1, -1)
    return (i, j), train_binary_svm(X[mask], binary, hp, tol, max_iter)


def train_ovo(
    X: np.ndarray,
    y: np.ndarray,
    hp: SvmHyperParams,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    jobs: int | None = 1,
) -> TrainedOvoSvm:
    """Train every pairwise model of a multiclass problem."""
    y = np.asarray(y)
    classes = tuple(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise SolverError(f"One-vs-one training needs at least 2 classes, got {len(classes)}")

    model = TrainedOvoSvm(hp=hp, classes=classes)
    results = Parallel(n_jobs=jobs)(
        delayed(_train_pair)(X, y, classes, i, j, hp, tol, max_iter) for i, j in model.pair_list()
    )
    model.pairs = dict(results)
    logger.debug("Trained %d pairs for %s", len(model.pairs), hp.label())
    return model


@dataclass(frozen=True)
class GridSearchResult:
    best: SvmHyperParams
    best_accuracy: float
    scores: list[tuple[SvmHyperParams, float]]


def grid_search(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    grid: Sequence[SvmHyperParams],
    tol: float = 1e-3,
    max_iter: int = 100_000,
    jobs: int | None = 1,
) -> GridSearchResult:
    """
    Pick the grid point with the best validation accuracy.

    Ties prefer the simpler model: linear first, then the smallest C.
    """
    if not grid:
        raise SolverError("Empty hyper-parameter grid")
    if len(X_val) == 0:
        raise DataError("Grid search needs a non-empty validation set")

    scores: list[tuple[SvmHyperParams, float]] = []
    for hp in grid:
        model = train_ovo(X_train, y_train, hp, tol, max_iter, jobs)
        accuracy = float(accuracy_score(y_val, model.predict(X_val)))
        scores.append((hp, accuracy))
        logger.info("Grid %-40s val accuracy %.4f", hp.label(), accuracy)

    best, best_accuracy = min(scores, key=lambda s: (-s[1], s[0].sort_key()))
    return GridSearchResult(best=best, best_accuracy=best_accuracy, scores=scores)


def evaluate(model: TrainedOvoSvm, X: np.ndarray, y: np.ndarray) -> ClassificationReport:
    """Score a trained model on a held-out set."""
    return classification_report(y, model.predict(X), model.classes)


def explain_weights(model: TrainedOvoSvm) -> np.ndarray:
    """
    Normalized absolute linear weights per class pair.

    Returns:
        Array of shape (n_features, k, k); entry [f, i, j] for i < j is
        |w_ij[f]| / sum_g |w_ij[g]|, NaN elsewhere
    """
    if model.hp.kernel is not KernelType.LINEAR:
        raise SolverError(f"Weight explanation needs a linear kernel, got {model.hp.kernel}")
    k = len(model.classes)
    n_features = next(iter(model.pairs.values())).support_vectors.shape[1]
    maps = np.full((n_features, k, k), np.nan)
    for (i, j), binary in model.pairs.items():
        w = np.abs(binary.weights)
        total = w.sum()
        maps[:, i, j] = w / total if total > 0 else 1.0 / n_features
    return maps


def weights_frame(model: TrainedOvoSvm, feature_names: Sequence[str]) -> pd.DataFrame:
    """Long-format weight maps: one row per feature and class pair (i < j)."""
    maps = explain_weights(model)
    rows = []
    for f, name in enumerate(feature_names):
        for i, j in model.pair_list():
            rows.append(
                {
                    "feature": name,
                    "class_i": model.classes[i],
                    "class_j": model.classes[j],
                    "weight": float(maps[f, i, j]),
                }
            )
    return pd.DataFrame(rows)
