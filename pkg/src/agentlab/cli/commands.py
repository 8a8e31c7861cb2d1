"""Pipeline commands: simulate, features, classify, cluster and stylized.

Each command reads its upstream artifact, runs one service and persists its own
artifact under its manifest. Rerunning a command with the same settings rewrites
byte-identical files; simulate and features skip work already on disk.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from agentlab.cli.dependencies import (
    classify_manifest,
    cluster_manifest,
    features_manifest,
    simulate_manifest,
    stylized_manifest,
)
from agentlab.core.config import Settings
from agentlab.schemas.agents import ScenarioSpec
from agentlab.schemas.features import feature_view
from agentlab.schemas.manifest import ExperimentManifest
from agentlab.schemas.models import (
    ClassificationReport,
    KernelType,
    SvmHyperParams,
    svm_grid,
)
from agentlab.services.artifact_store import ArtifactStore
from agentlab.services.cluster_suite import (
    KDiagnostics,
    assign_test,
    cluster_report_frame,
    compare_linkages,
    fit_clusters,
    k_diagnostics,
    ward_agglomerate,
)
from agentlab.services.diagnostics import StylizedReport, stylized_report
from agentlab.services.feature_lab import (
    build_dataset,
    build_merge_map,
    dataset_matrix,
    split_dataset,
    standardize,
)
from agentlab.services.scenario import agent_classes, run_batch
from agentlab.services.svm_suite import evaluate, grid_search, train_ovo, weights_frame

logger = logging.getLogger(__name__)

RESOLUTIONS: tuple[float, ...] = (1.0, 60.0)


@dataclass(frozen=True)
class ClassifyOutcome:
    manifest: ExperimentManifest
    best: SvmHyperParams
    val_accuracy: float
    report: ClassificationReport


@dataclass(frozen=True)
class ClusterOutcome:
    manifest: ExperimentManifest
    diagnostics: KDiagnostics
    reports: dict[int, ClassificationReport]


def _positions(indices: tuple[int, ...]) -> np.ndarray:
    return np.asarray(indices, dtype=int)


def cmd_simulate(
    settings: Settings,
    store: ArtifactStore,
    spec: ScenarioSpec,
) -> ExperimentManifest:
    """
    Simulate a seeded batch and persist one event log per run.

    The manifest is written last, so an interrupted batch is redone in full.
    """
    manifest = simulate_manifest(settings, spec)
    if store.has("logs", manifest):
        logger.info("Logs %s already present, skipping simulation", manifest.digest())
        return manifest

    logs = run_batch(spec, settings.n_runs, settings.master_seed, settings.jobs)
    for log in logs:
        store.write_event_log(log, manifest)
    store.write_manifest("logs", manifest)
    logger.info("Simulated %d runs into logs/%s", len(logs), manifest.digest())
    return manifest


def cmd_features(
    settings: Settings,
    store: ArtifactStore,
    spec: ScenarioSpec,
) -> ExperimentManifest:
    """
    Extract all 18 features of every sample, then fix the split.

    The feature view is chosen later by classify and cluster, so both views share
    one dataset and one split.
    """
    manifest = features_manifest(settings, spec)
    if store.has("datasets", manifest):
        logger.info("Dataset %s already present, skipping extraction", manifest.digest())
        return manifest

    logs = store.read_event_logs(simulate_manifest(settings, spec))
    merge_map = build_merge_map(
        agent_classes(spec),
        spec.noise_class_ids(),
        settings.merge_mode,
        settings.merge_seed,
    )
    frame = build_dataset(logs, merge_map, jobs=settings.jobs)
    split = split_dataset(frame["label"].to_numpy(), settings.split_fractions, settings.split_seed)
    store.write_dataset(frame, merge_map, split, manifest)
    return manifest


def cmd_classify(
    settings: Settings,
    store: ArtifactStore,
    spec: ScenarioSpec,
) -> ClassifyOutcome:
    """Grid-search the SVM on validation accuracy and score the winner on the test set."""
    manifest = classify_manifest(settings, spec)
    frame, split, _ = store.read_dataset(features_manifest(settings, spec))
    X, y = dataset_matrix(frame, settings.feature_view)
    train, val, test = (_positions(p) for p in (split.train, split.val, split.test))
    (X_train, X_val, X_test), scaler = standardize(X[train], X[val], X[test])

    jobs = settings.jobs or -1
    search = grid_search(
        X_train,
        y[train],
        X_val,
        y[val],
        svm_grid(settings.svm_grid),
        tol=settings.svm_tol,
        max_iter=settings.svm_max_iter,
        jobs=jobs,
    )
    model = train_ovo(X_train, y[train], search.best, settings.svm_tol, settings.svm_max_iter, jobs)
    report = evaluate(model, X_test, y[test])
    logger.info(
        "Best %s (val %.4f), test accuracy %.4f",
        search.best.label(),
        search.best_accuracy,
        report.accuracy,
    )

    names = spec.class_names()
    store.write_report("metrics", report.to_frame(names), manifest)
    store.write_report("confusion", report.confusion_frame(), manifest, index=True)
    store.write_report(
        "grid",
        pd.DataFrame(
            [{"hyperparams": hp.label(), "val_accuracy": acc} for hp, acc in search.scores]
        ),
        manifest,
    )
    store.write_report(
        "summary",
        pd.DataFrame(
            [
                {
                    "best": search.best.label(),
                    "val_accuracy": search.best_accuracy,
                    "test_accuracy": report.accuracy,
                    "n_train": len(train),
                    "n_val": len(val),
                    "n_test": len(test),
                }
            ]
        ),
        manifest,
    )
    if search.best.kernel is KernelType.LINEAR:
        store.write_report(
            "weights", weights_frame(model, feature_view(settings.feature_view)), manifest
        )
    else:
        logger.info("Best kernel is %s; no weight maps written", search.best.kernel)
    store.write_model("svm", {"model": model, "scaler": scaler}, manifest)
    store.write_manifest("reports", manifest)
    return ClassifyOutcome(
        manifest=manifest,
        best=search.best,
        val_accuracy=search.best_accuracy,
        report=report,
    )


def cmd_cluster(
    settings: Settings,
    store: ArtifactStore,
    spec: ScenarioSpec,
) -> ClusterOutcome:
    """
    Agglomerate train+validation samples and score test assignments per k.

    Samples are scaled with training statistics only, as for classification.
    """
    manifest = cluster_manifest(settings, spec)
    frame, split, _ = store.read_dataset(features_manifest(settings, spec))
    X, y = dataset_matrix(frame, settings.feature_view)
    fit = _positions(tuple(sorted(split.train + split.val)))
    test = _positions(split.test)
    (_, X_fit, X_test), _ = standardize(X[_positions(split.train)], X[fit], X[test])

    dendrogram = ward_agglomerate(X_fit, settings.linkage)
    diagnostics = k_diagnostics(X_fit, dendrogram, tuple(settings.k_range))
    store.write_report("k_diagnostics", diagnostics.to_frame(), manifest)
    store.write_report("linkages", compare_linkages(X_fit), manifest)
    store.write_text(f"dendrogram_{settings.linkage}.txt", dendrogram.to_text(), manifest)

    names = spec.class_names()
    classes = sorted(np.unique(y).tolist())
    reports: dict[int, ClassificationReport] = {}
    rows = []
    for k in settings.k_values:
        model = fit_clusters(X_fit, y[fit], k, dendrogram)
        _, report = assign_test(model, X_test, y[test], classes)
        reports[k] = report
        store.write_report(f"clusters_k{k}", cluster_report_frame(model, report, names), manifest)
        rows.append({"k": k, "accuracy": report.accuracy})
        logger.info("k=%d: test accuracy %.4f", k, report.accuracy)

    summary = pd.DataFrame(rows)
    summary["silhouette_k"] = diagnostics.silhouette_k
    summary["elbow_k"] = diagnostics.elbow_k
    summary["cophenetic"] = diagnostics.cophenetic
    store.write_report("summary", summary, manifest)
    store.write_manifest("reports", manifest)
    return ClusterOutcome(manifest=manifest, diagnostics=diagnostics, reports=reports)


def cmd_stylized(
    settings: Settings,
    store: ArtifactStore,
    spec: ScenarioSpec,
) -> StylizedReport:
    """Return distributions, autocorrelations and activity rates of a simulated batch."""
    manifest = stylized_manifest(settings, spec)
    logs = store.read_event_logs(simulate_manifest(settings, spec))
    report = stylized_report(
        logs,
        resolutions=RESOLUTIONS,
        max_lag=settings.acf_max_lag,
        bins=settings.histogram_bins,
    )

    store.write_report("summary", report.summary_frame(), manifest)
    for resolution, histogram in report.histograms.items():
        store.write_report(f"histogram_{resolution:g}s", histogram.to_frame(), manifest)
        if resolution in report.return_acf:
            store.write_report(f"acf_{resolution:g}s", report.acf_frame(resolution), manifest)
    names = spec.class_names()
    store.write_report(
        "activity",
        pd.DataFrame(
            [
                {"class_id": c, "agent_type": names.get(c, str(c)), "orders_per_hour": rate}
                for c, rate in report.orders_per_hour.items()
            ]
        ),
        manifest,
    )
    store.write_manifest("reports", manifest)
    logger.info("Trades per hour: %.0f", report.trades_per_hour)
    return report
