"""Experiment manifest: the provenance record embedded in every artifact."""

import hashlib
import json
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from agentlab import __version__
from agentlab.schemas.features import MergeMode

Stage = Literal["simulate", "features", "classify", "cluster", "stylized", "reproduce"]


class ExperimentManifest(BaseModel):
    """Everything that determines an artifact's content."""

    model_config = ConfigDict(frozen=True)

    stage: Stage = Field(..., description="Pipeline step that produced the artifact")
    scenario_hash: str = Field(..., description="sha256 of the effective scenario")
    master_seed: int
    n_runs: int
    horizon: float
    merge_mode: MergeMode | None = None
    merge_seed: int | None = None
    split_fractions: tuple[float, float, float] | None = None
    split_seed: int | None = None
    feature_view: int | None = None
    hyperparams: dict[str, Any] = Field(default_factory=dict)
    inputs: tuple[str, ...] = Field(default=(), description="Digests of consumed manifests")
    tool_version: str = __version__

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        """Short content hash used to prefix artifact names."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:16]
