"""Dependency resolution for the pipeline commands.

Every command derives its manifest from the settings and the effective scenario,
so upstream artifacts are located by recomputing their manifests.
"""

import hashlib

from agentlab.core.config import Settings
from agentlab.schemas.agents import ScenarioSpec
from agentlab.schemas.manifest import ExperimentManifest
from agentlab.services.artifact_store import ArtifactStore
from agentlab.services.scenario import scenario_from_settings


def get_store(settings: Settings) -> ArtifactStore:
    """Get the artifact store rooted at the configured out-dir."""
    return ArtifactStore(settings.out_dir)


def get_scenario(settings: Settings) -> ScenarioSpec:
    """Get the scenario with the settings' market overrides applied."""
    return scenario_from_settings(settings)


def scenario_hash(spec: ScenarioSpec) -> str:
    return hashlib.sha256(spec.model_dump_json().encode("utf-8")).hexdigest()


def simulate_manifest(settings: Settings, spec: ScenarioSpec) -> ExperimentManifest:
    return ExperimentManifest(
        stage="simulate",
        scenario_hash=scenario_hash(spec),
        master_seed=settings.master_seed,
        n_runs=settings.n_runs,
        horizon=spec.horizon,
    )


def features_manifest(settings: Settings, spec: ScenarioSpec) -> ExperimentManifest:
    upstream = simulate_manifest(settings, spec)
    return upstream.model_copy(
        update={
            "stage": "features",
            "merge_mode": settings.merge_mode,
            "merge_seed": settings.merge_seed,
            "split_fractions": tuple(settings.split_fractions),
            "split_seed": settings.split_seed,
            "inputs": (upstream.digest(),),
        }
    )


def classify_manifest(settings: Settings, spec: ScenarioSpec) -> ExperimentManifest:
    upstream = features_manifest(settings, spec)
    return upstream.model_copy(
        update={
            "stage": "classify",
            "feature_view": settings.feature_view,
            "hyperparams": {
                "grid": settings.svm_grid,
                "tol": settings.svm_tol,
                "max_iter": settings.svm_max_iter,
            },
            "inputs": (upstream.digest(),),
        }
    )


def cluster_manifest(settings: Settings, spec: ScenarioSpec) -> ExperimentManifest:
    upstream = features_manifest(settings, spec)
    return upstream.model_copy(
        update={
            "stage": "cluster",
            "feature_view": settings.feature_view,
            "hyperparams": {
                "linkage": settings.linkage,
                "k_values": list(settings.k_values),
                "k_range": list(settings.k_range),
            },
            "inputs": (upstream.digest(),),
        }
    )


def stylized_manifest(settings: Settings, spec: ScenarioSpec) -> ExperimentManifest:
    upstream = simulate_manifest(settings, spec)
    return upstream.model_copy(
        update={
            "stage": "stylized",
            "hyperparams": {
                "acf_max_lag": settings.acf_max_lag,
                "histogram_bins": settings.histogram_bins,
            },
            "inputs": (upstream.digest(),),
        }
    )
