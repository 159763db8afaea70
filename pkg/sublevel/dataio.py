"""LIBSVM ingestion, standardization and run artifacts (CSV, JSON, SVG)."""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal, Optional, Sequence, Union

import numpy as np

from sublevel.errors import DimensionError, EmptyDataset, ParseError
from sublevel.trace import TRACE_COLUMNS, IterationRecord, IterationTrace

LabelConvention = Literal["binary", "unit", "raw"]
PathLike = Union[str, Path]

SCHEMA = "sublevel/1"
LOG_FLOOR = 1e-16

_TOKEN = re.compile(r"\S+")
_INDEX = re.compile(r"[0-9]+")


@dataclass(slots=True, frozen=True)
class Dataset:
    """Dense feature matrix with labels.

    Attributes:
        features (ndarray): m x n matrix A.
        labels (ndarray): length-m labels b.
        name (str): display name.
        source (str): 'file:<path>' or 'synthetic:<description>'.
        label_map (str): label convention applied at load time.
        standardized (bool): columns were centered and scaled.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    source: str = ""
    label_map: LabelConvention = "raw"
    standardized: bool = False

    def __post_init__(self):
        for attr in ("features", "labels"):
            array = np.array(getattr(self, attr), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, attr, array)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DimensionError(
                f"features {self.features.shape} do not match {self.labels.shape[0]} labels.")
        if self.features.shape[0] < 1 or self.features.shape[1] < 1:
            raise EmptyDataset(f"dataset '{self.name}' has shape {self.features.shape}.")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.labels))):
            raise ValueError(f"dataset '{self.name}' contains non-finite values.")

    @property
    def shape(self) -> tuple[int, int]:
        return self.features.shape

    def metadata(self) -> dict[str, Any]:
        m, n = self.shape
        return {"name": self.name, "source": self.source, "m": m, "n": n,
                "label_map": self.label_map, "standardized": self.standardized}


def _number(text: str, line: int, column: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(line, column, f"invalid {what} '{text}'") from None
    if not math.isfinite(value):
        raise ParseError(line, column, f"non-finite {what} '{text}'")
    return value


def _parse_line(text: str, line: int) -> tuple[float, list[tuple[int, float]]]:
    tokens = list(_TOKEN.finditer(text))
    label = _number(tokens[0].group(), line, tokens[0].start() + 1, "label")
    entries: list[tuple[int, float]] = []
    last = 0
    for token in tokens[1:]:
        column = token.start() + 1
        index_text, sep, value_text = token.group().partition(":")
        if not sep or not _INDEX.fullmatch(index_text):
            raise ParseError(line, column, f"expected 'index:value', got '{token.group()}'")
        index = int(index_text)
        if index < 1:
            raise ParseError(line, column, f"indices are 1-based, got {index}")
        if index <= last:
            raise ParseError(line, column, f"index {index} does not increase past {last}")
        value = _number(value_text, line, column + len(index_text) + 1, "value")
        entries.append((index, value))
        last = index
    return label, entries


def _map_labels(labels: np.ndarray, convention: LabelConvention) -> np.ndarray:
    match convention:
        case "binary":
            return np.where(labels > 0, 1.0, -1.0)
        case "unit":
            return np.clip(labels, 0.0, 1.0)
        case "raw":
            return labels
    raise ValueError(f"unknown label convention '{convention}'.")


def load_libsvm(
    path: PathLike,
    n_override: Optional[int] = None,
    label_convention: LabelConvention = "raw",
    name: Optional[str] = None,
) -> Dataset:
    """Reads a LIBSVM file `label (index:value)*` into a dense dataset.

    Blank lines are skipped. Indices are 1-based and strictly increasing
    within a line; absent entries are zero. The largest index in the file
    defines n unless `n_override` is given.

    Label conventions: 'binary' maps positive labels to +1 and the rest to
    -1 (e.g. {0, 1} -> {-1, +1}), 'unit' clips to [0, 1], 'raw' keeps them.

    Raises:
        ParseError: malformed or non-increasing entry, with line and column.
        EmptyDataset: the file holds no data lines.
        DimensionError: an index exceeds `n_override`.
    """

    path = Path(path)
    labels: list[float] = []
    rows: list[list[tuple[int, float]]] = []
    with path.open("r", encoding="utf-8") as handle:
        for number, text in enumerate(handle, start=1):
            if not text.strip():
                continue
            label, entries = _parse_line(text.rstrip("\n"), number)
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise EmptyDataset(f"{path}: no data lines.")

    widest = max((entries[-1][0] for entries in rows if entries), default=0)
    n = widest if n_override is None else n_override
    if n < widest:
        raise DimensionError(f"{path}: index {widest} exceeds n_override = {n}.")
    features = np.zeros((len(rows), max(n, 1)))
    for i, entries in enumerate(rows):
        for index, value in entries:
            features[i, index - 1] = value
    return Dataset(
        features=features,
        labels=_map_labels(np.array(labels), label_convention),
        name=name or path.stem,
        source=f"file:{path}",
        label_map=label_convention,
    )


def write_libsvm(ds: Dataset, path: PathLike):
    """Writes the nonzero entries of every row in LIBSVM format."""

    with Path(path).open("w", encoding="utf-8") as handle:
        for label, row in zip(ds.labels, ds.features):
            parts = [format(label, ".17g")]
            parts += [f"{j + 1}:{row[j]:.17g}" for j in np.flatnonzero(row)]
            handle.write(" ".join(parts) + "\n")


def standardize(ds: Dataset) -> Dataset:
    """Centers every column and scales it to unit variance; constant columns become zeros."""

    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)
    centered = ds.features - mean
    scale = np.where(std > 0, std, 1.0)
    features = np.where(std > 0, centered / scale, 0.0)
    return replace(ds, features=features, standardized=True)


@dataclass(slots=True)
class RunArtifact:
    """One method's run: its configuration snapshot, trace and free-form metadata."""

    config: dict[str, Any]
    trace: IterationTrace
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def method(self) -> str:
        return self.trace.method


def _cell(value: float) -> str:
    if isinstance(value, int):
        return str(value)
    return "" if math.isnan(value) else format(value, ".17g")


def write_trace_csv(artifact: RunArtifact, path: PathLike):
    """Writes one row per iterate; undefined values are left empty."""

    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for record in artifact.trace.records:
                writer.writerow([_cell(value) for value in record.as_row()])
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def artifact_to_dict(artifact: RunArtifact) -> dict[str, Any]:
    summary = artifact.trace.summary()
    return _jsonable({
        "schema": SCHEMA,
        "method": artifact.method,
        "config": artifact.config,
        "summary": {
            "final_f": summary.final_f,
            "final_grad_norm": summary.final_grad_norm,
            "iterations": summary.iterations,
            "total_seconds": summary.total_seconds,
            "status": summary.status,
        },
        "message": artifact.trace.message,
        "columns": list(TRACE_COLUMNS),
        "records": [list(record.as_row()) for record in artifact.trace.records],
        "metadata": artifact.metadata,
    })


def write_summary_json(artifact: RunArtifact, path: PathLike):
    """Writes config, summary, trace rows and metadata; NaN is written as null."""

    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            json.dump(artifact_to_dict(artifact), handle, indent=2, sort_keys=True, allow_nan=False)
            handle.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc


def read_artifact_json(path: PathLike) -> RunArtifact:
    with Path(path).open("r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("schema") != SCHEMA:
        raise ValueError(f"{path}: unsupported schema {payload.get('schema')!r}.")
    records = []
    for row in payload["records"]:
        values = dict(zip(payload["columns"], row))
        records.append(IterationRecord(**{
            name: (math.nan if value is None else value) for name, value in values.items()}))
    trace = IterationTrace(
        method=payload["method"],
        records=records,
        status=payload["summary"]["status"],
        message=payload.get("message", ""),
    )
    return RunArtifact(config=payload["config"], trace=trace, metadata=payload.get("metadata", {}))


def emit_convergence_svg(
    artifacts: Sequence[RunArtifact],
    path: PathLike,
    x: Literal["iterations", "seconds"] = "iterations",
    y: Literal["f_gap", "grad_norm"] = "f_gap",
    log_y: bool = True,
    title: Optional[str] = None,
) -> bool:
    """Plots one line per artifact into a self-contained SVG.

    'f_gap' plots f - f* with f* taken from each artifact's metadata. On a
    log axis values below 1e-16 are clamped to 1e-16.

    Returns:
        bool: True if any value was clamped.

    Raises:
        ValueError: no artifacts, or 'f_gap' without f_star in the metadata.
    """

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not artifacts:
        raise ValueError("no artifacts to plot.")
    if y == "f_gap":
        missing = [a.method for a in artifacts if a.metadata.get("f_star") is None]
        if missing:
            raise ValueError(f"f_gap needs f_star in the metadata of {', '.join(missing)}.")

    clamped = False
    with plt.rc_context({"svg.hashsalt": "sublevel", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for artifact in artifacts:
            trace = artifact.trace
            xs = trace.column("k") if x == "iterations" else trace.column("elapsed_s")
            if y == "f_gap":
                ys = trace.column("f") - float(artifact.metadata["f_star"])
            else:
                ys = trace.column("grad_norm")
            if log_y:
                low = ys < LOG_FLOOR
                clamped = clamped or bool(low.any())
                ys = np.where(low, LOG_FLOOR, ys)
            ax.plot(xs, ys, label=artifact.method, linewidth=1.4)
        if log_y:
            ax.set_yscale("log")
        ax.set_xlabel("iteration" if x == "iterations" else "seconds")
        ax.set_ylabel("f - f*" if y == "f_gap" else "||grad f||")
        if title:
            ax.set_title(title)
        ax.grid(True, which="major", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        try:
            fig.savefig(Path(path), format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return clamped
