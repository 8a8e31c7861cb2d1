"""Artifact store: the out-dir layout and every reader/writer of persisted results.

Layout::

    out_dir/
      logs/<digest>/      manifest.json, run_0000.parquet, run_0000_book.parquet, ...
      datasets/<digest>/  manifest.json, dataset.csv, split.json, merge_map.json
      models/<digest>/    manifest.json, svm.joblib
      reports/<digest>/   manifest.json, *.csv, dendrogram_*.txt

`<digest>` is the short hash of the manifest that produced the directory, so equal
manifests land in the same place and a rerun can be skipped.
"""

import json
import logging
from pathlib import Path
from typing import Any

import joblib
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq
from pydantic import ValidationError

from agentlab.core.errors import DataError
from agentlab.schemas.events import (
    EVENT_LOG_COLUMNS,
    EVENT_LOG_SCHEMA_VERSION,
    Action,
    EventLog,
    EventLogRecord,
    FillRef,
)
from agentlab.schemas.features import DatasetSplit, MergeMap, MergeMode
from agentlab.schemas.manifest import ExperimentManifest

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
FLOAT_FORMAT = "%.10g"
# 17 significant digits read back to the same double
DATASET_FLOAT_FORMAT = "%.17g"
SPLIT_PARTS: tuple[str, ...] = ("train", "val", "test")
STAGES: tuple[str, ...] = ("logs", "datasets", "models", "reports")

_META_VERSION = b"agentlab.schema_version"
_META_MANIFEST = b"agentlab.manifest"
_META_RUN = b"agentlab.run"

_FILL_TYPE = pa.list_(
    pa.struct(
        [
            ("price", pa.float64()),
            ("size", pa.int64()),
            ("maker_order_id", pa.int64()),
        ]
    )
)

EVENT_LOG_SCHEMA = pa.schema(
    [
        ("time", pa.float64()),
        ("agent_id", pa.int64()),
        ("class_id", pa.int64()),
        ("action", pa.string()),
        ("side", pa.int8()),
        ("price", pa.float64()),
        ("size", pa.int64()),
        ("fills", _FILL_TYPE),
        ("mid", pa.float64()),
        ("order_id", pa.int64()),
        ("remaining", pa.int64()),
        ("seq", pa.int64()),
    ]
)

BOOK_SCHEMA = pa.schema(
    [
        ("time", pa.float64()),
        ("best_bid", pa.float64()),
        ("best_ask", pa.float64()),
    ]
)


class ArtifactStore:
    """Reads and writes pipeline artifacts under one output directory."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        logger.debug("Artifact store at %s", self.out_dir)

    # ---------------------- layout ----------------------

    def stage_dir(self, stage: str, manifest: ExperimentManifest, create: bool = True) -> Path:
        """Directory of one artifact, named after its manifest digest."""
        if stage not in STAGES:
            raise ValueError(f"Unknown artifact stage: {stage}")
        path = self.out_dir / stage / manifest.digest()
        if create:
            path.mkdir(parents=True, exist_ok=True)
        return path

    def write_manifest(self, stage: str, manifest: ExperimentManifest) -> Path:
        path = self.stage_dir(stage, manifest) / "manifest.json"
        path.write_text(
            json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return path

    def read_manifest(self, stage: str, digest: str) -> ExperimentManifest:
        path = self.out_dir / stage / digest / "manifest.json"
        if not path.exists():
            raise DataError(f"Missing {stage} artifact {digest}: no manifest at {path}")
        try:
            return ExperimentManifest.model_validate_json(path.read_text(encoding="utf-8"))
        except (ValidationError, OSError) as e:
            raise DataError(f"Corrupt manifest {path}: {e}") from e

    def has(self, stage: str, manifest: ExperimentManifest) -> bool:
        return (self.stage_dir(stage, manifest, create=False) / "manifest.json").exists()

    def require(self, stage: str, manifest: ExperimentManifest) -> Path:
        """Directory of an upstream artifact that must already exist."""
        path = self.stage_dir(stage, manifest, create=False)
        if not (path / "manifest.json").exists():
            raise DataError(
                f"Missing {stage} artifact for manifest {manifest.digest()} "
                f"(stage={manifest.stage}); run the `{manifest.stage}` command first"
            )
        return path

    # ---------------------- event logs ----------------------

    def write_event_log(self, log: EventLog, manifest: ExperimentManifest) -> Path:
        """Persist one run as a records parquet plus a top-of-book parquet."""
        directory = self.stage_dir("logs", manifest)
        columns: dict[str, list[Any]] = {name: [] for name in EVENT_LOG_COLUMNS}
        for r in log.records:
            columns["time"].append(r.time)
            columns["agent_id"].append(r.agent_id)
            columns["class_id"].append(r.class_id)
            columns["action"].append(r.action.value)
            columns["side"].append(int(r.side))
            columns["price"].append(r.price)
            columns["size"].append(r.size)
            columns["fills"].append(
                [
                    {"price": f.price, "size": f.size, "maker_order_id": f.maker_order_id}
                    for f in r.fills
                ]
            )
            columns["mid"].append(r.mid)
            columns["order_id"].append(r.order_id)
            columns["remaining"].append(r.remaining)
            columns["seq"].append(r.seq)

        run_meta = {
            "run_id": log.run_id,
            "seed": log.seed,
            "horizon": log.horizon,
            "tick_size": log.tick_size,
            "agent_classes": {str(a): c for a, c in sorted(log.agent_classes.items())},
            "fundamental_breakpoints": list(log.fundamental_breakpoints),
        }
        metadata = {
            _META_VERSION: str(EVENT_LOG_SCHEMA_VERSION).encode(),
            _META_MANIFEST: manifest.canonical_json().encode(),
            _META_RUN: json.dumps(run_meta, sort_keys=True).encode(),
        }

        records = pa.table(columns, schema=EVENT_LOG_SCHEMA).replace_schema_metadata(metadata)
        book = pa.table(
            {
                "time": log.snapshot_times,
                "best_bid": log.snapshot_bids,
                "best_ask": log.snapshot_asks,
            },
            schema=BOOK_SCHEMA,
        ).replace_schema_metadata(metadata)

        path = directory / f"run_{log.run_id:04d}.parquet"
        pq.write_table(records, path)
        pq.write_table(book, directory / f"run_{log.run_id:04d}_book.parquet")
        logger.debug("Wrote %d records of run %d to %s", len(log.records), log.run_id, path)
        return path

    def read_event_log(self, path: Path) -> EventLog:
        """Load one run written by `write_event_log`."""
        path = Path(path)
        book_path = path.with_name(f"{path.stem}_book.parquet")
        if not path.exists() or not book_path.exists():
            raise DataError(f"Missing event log {path} or its book file")
        try:
            table = pq.read_table(path)
            book = pq.read_table(book_path)
        except (pa.ArrowException, OSError) as e:
            raise DataError(f"Corrupt event log {path}: {e}") from e

        metadata = table.schema.metadata or {}
        version = metadata.get(_META_VERSION)
        if version is None or int(version) != EVENT_LOG_SCHEMA_VERSION:
            raise DataError(
                f"Event log {path} has schema version {version!r}, "
                f"expected {EVENT_LOG_SCHEMA_VERSION}"
            )
        missing = set(EVENT_LOG_COLUMNS) - set(table.column_names)
        if missing:
            raise DataError(f"Event log {path} lacks columns {sorted(missing)}")
        run = json.loads(metadata[_META_RUN])

        records = [
            EventLogRecord(
                time=row["time"],
                agent_id=row["agent_id"],
                class_id=row["class_id"],
                action=Action(row["action"]),
                side=row["side"],
                price=row["price"],
                size=row["size"],
                fills=tuple(FillRef(**f) for f in row["fills"]),
                mid=row["mid"],
                order_id=row["order_id"],
                remaining=row["remaining"],
                seq=row["seq"],
            )
            for row in table.to_pylist()
        ]
        return EventLog(
            run_id=run["run_id"],
            seed=run["seed"],
            horizon=run["horizon"],
            tick_size=run["tick_size"],
            agent_classes={int(a): c for a, c in run["agent_classes"].items()},
            fundamental_breakpoints=tuple(run["fundamental_breakpoints"]),
            records=records,
            snapshot_times=book.column("time").to_pylist(),
            snapshot_bids=book.column("best_bid").to_pylist(),
            snapshot_asks=book.column("best_ask").to_pylist(),
        )

    def log_paths(self, manifest: ExperimentManifest) -> list[Path]:
        directory = self.require("logs", manifest)
        paths = sorted(p for p in directory.glob("run_*.parquet") if "_book" not in p.stem)
        if len(paths) != manifest.n_runs:
            raise DataError(
                f"Log artifact {manifest.digest()} holds {len(paths)} runs, "
                f"its manifest declares {manifest.n_runs}"
            )
        return paths

    def read_event_logs(self, manifest: ExperimentManifest) -> list[EventLog]:
        return [self.read_event_log(p) for p in self.log_paths(manifest)]

    # ---------------------- datasets ----------------------

    def write_dataset(
        self,
        frame: pd.DataFrame,
        merge_map: MergeMap,
        split: DatasetSplit,
        manifest: ExperimentManifest,
    ) -> Path:
        directory = self.stage_dir("datasets", manifest)
        frame.to_csv(directory / "dataset.csv", index=False, float_format=DATASET_FLOAT_FORMAT)
        # The sidecar names samples by (run_id, agent_id), not by row position
        keys = list(zip(frame["run_id"].tolist(), frame["agent_id"].tolist(), strict=True))
        members = {
            part: [[int(keys[p][0]), int(keys[p][1])] for p in getattr(split, part)]
            for part in SPLIT_PARTS
        }
        (directory / "split.json").write_text(
            json.dumps({"seed": split.seed, "fractions": list(split.fractions), **members}),
            encoding="utf-8",
        )
        (directory / "merge_map.json").write_text(
            json.dumps(
                {
                    "mode": merge_map.mode.value,
                    "seed": merge_map.seed,
                    "pairs": {str(a): list(p) for a, p in sorted(merge_map.pairs.items())},
                    "standalone_noise": list(merge_map.standalone_noise),
                }
            ),
            encoding="utf-8",
        )
        self.write_manifest("datasets", manifest)
        logger.info("Saved dataset of %d samples to %s", len(frame), directory)
        return directory

    def read_dataset(
        self, manifest: ExperimentManifest
    ) -> tuple[pd.DataFrame, DatasetSplit, MergeMap]:
        directory = self.require("datasets", manifest)
        try:
            frame = pd.read_csv(directory / "dataset.csv", float_precision="round_trip")
            split_raw = json.loads((directory / "split.json").read_text(encoding="utf-8"))
            merge_raw = json.loads((directory / "merge_map.json").read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise DataError(f"Corrupt dataset artifact {directory}: {e}") from e

        positions = {
            key: i
            for i, key in enumerate(
                zip(frame["run_id"].tolist(), frame["agent_id"].tolist(), strict=True)
            )
        }
        if len(positions) != len(frame):
            raise DataError(f"Dataset {directory} repeats a (run_id, agent_id) sample")
        try:
            parts = {
                part: tuple(positions[(run_id, agent_id)] for run_id, agent_id in split_raw[part])
                for part in SPLIT_PARTS
            }
        except KeyError as e:
            raise DataError(f"Split of {directory} names a sample not in the dataset: {e}") from e

        split = DatasetSplit(
            **parts,
            seed=split_raw["seed"],
            fractions=tuple(split_raw["fractions"]),
        )
        merge_map = MergeMap(
            mode=MergeMode(merge_raw["mode"]),
            seed=merge_raw["seed"],
            pairs={int(a): tuple(p) for a, p in merge_raw["pairs"].items()},
            standalone_noise=tuple(merge_raw["standalone_noise"]),
        )
        return frame, split, merge_map

    # ---------------------- models ----------------------

    def write_model(self, name: str, model: Any, manifest: ExperimentManifest) -> Path:
        path = self.stage_dir("models", manifest) / f"{name}.joblib"
        joblib.dump(
            {
                "format_version": MODEL_FORMAT_VERSION,
                "manifest": manifest.model_dump(mode="json"),
                "model": model,
            },
            path,
        )
        self.write_manifest("models", manifest)
        return path

    def read_model(self, name: str, manifest: ExperimentManifest) -> Any:
        path = self.require("models", manifest) / f"{name}.joblib"
        try:
            payload = joblib.load(path)
        except (OSError, EOFError, ValueError) as e:
            raise DataError(f"Cannot load model {path}: {e}") from e
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataError(
                f"Model {path} has format {payload.get('format_version')}, "
                f"expected {MODEL_FORMAT_VERSION}"
            )
        return payload["model"]

    # ---------------------- reports ----------------------

    def write_report(
        self,
        name: str,
        frame: pd.DataFrame,
        manifest: ExperimentManifest,
        index: bool = False,
    ) -> Path:
        """Delimited table with a header row and fixed float formatting."""
        path = self.stage_dir("reports", manifest) / f"{name}.csv"
        frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, na_rep="")
        logger.debug("Wrote report %s", path)
        return path

    def write_text(self, name: str, text: str, manifest: ExperimentManifest) -> Path:
        path = self.stage_dir("reports", manifest) / name
        path.write_text(text, encoding="utf-8")
        return path
