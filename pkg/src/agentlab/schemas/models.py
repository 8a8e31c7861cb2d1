"""Classifier hyper-parameters and evaluation reports."""

import itertools
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

GRID_C: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)
GRID_GAMMA: tuple[float, ...] = (0.01, 0.1, 1.0)
GRID_DEGREE: tuple[int, ...] = (2, 3, 4)


class KernelType(StrEnum):
    LINEAR = "linear"
    POLY = "poly"
    RBF = "rbf"

    @property
    def rank(self) -> int:
        """Simplicity order used to break grid-search ties."""
        return list(KernelType).index(self)


class SvmHyperParams(BaseModel):
    """One point of the SVM grid."""

    model_config = ConfigDict(frozen=True)

    kernel: KernelType = Field(default=KernelType.LINEAR)
    C: float = Field(default=1.0, gt=0, description="Soft-margin penalty")
    gamma: float = Field(default=1.0, gt=0, description="Kernel scale (poly and rbf)")
    degree: int = Field(default=3, ge=1, description="Polynomial degree (poly)")

    def label(self) -> str:
        match self.kernel:
            case KernelType.LINEAR:
                return f"linear C={self.C:g}"
            case KernelType.POLY:
                return f"poly C={self.C:g} gamma={self.gamma:g} degree={self.degree}"
            case KernelType.RBF:
                return f"rbf C={self.C:g} gamma={self.gamma:g}"

    def sort_key(self) -> tuple[int, float, float, int]:
        return (self.kernel.rank, self.C, self.gamma, self.degree)


def svm_grid(preset: str = "full") -> list[SvmHyperParams]:
    """The classification grid: every kernel, or the linear kernel only."""
    grid = [SvmHyperParams(kernel=KernelType.LINEAR, C=c) for c in GRID_C]
    if preset == "linear":
        return grid
    grid += [
        SvmHyperParams(kernel=KernelType.POLY, C=c, gamma=g, degree=d)
        for c, g, d in itertools.product(GRID_C, GRID_GAMMA, GRID_DEGREE)
    ]
    grid += [
        SvmHyperParams(kernel=KernelType.RBF, C=c, gamma=g)
        for c, g in itertools.product(GRID_C, GRID_GAMMA)
    ]
    return grid


@dataclass(frozen=True)
class ClassificationReport:
    """
    Per-class metrics plus a row-normalized confusion matrix.

    `confusion` follows the signed convention: the diagonal holds the recall of each
    class, off-diagonal entries are the negated fractions sent to other classes.
    """

    classes: tuple[int, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    confusion: np.ndarray

    def to_frame(self, class_names: dict[int, str] | None = None) -> pd.DataFrame:
        names = class_names or {}
        return pd.DataFrame(
            {
                "class_id": self.classes,
                "agent_type": [names.get(c, str(c)) for c in self.classes],
                "precision": self.precision,
                "recall": self.recall,
                "f1": self.f1,
                "support": self.support,
            }
        )

    def confusion_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.confusion, index=self.classes, columns=self.classes)

    def f1_of(self, class_id: int) -> float:
        return float(self.f1[self.classes.index(class_id)])
