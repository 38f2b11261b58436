"""Labeled feature matrices: assembly, z-scoring, persistence and the
row-correlation validity check."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateRow, DuplicateSample, EmptyFitSet, InvalidArgument, IoFailure, SchemaMismatch
from .features import FEATURE_NAMES, N_FEATURES, extract_sample_features
from .ingest import CaseLabel, SensorTrace
from .util import write_text_atomic


@dataclass
class FeatureMatrix:
    cases: list[CaseLabel]
    sample_ids: list[int]
    values: np.ndarray
    column_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.cases), -1)
        if self.values.shape[1] != N_FEATURES or len(self.column_names) != N_FEATURES:
            raise SchemaMismatch(f"expected {N_FEATURES} feature columns, got {self.values.shape[1]}")
        if len(self.sample_ids) != len(self.cases):
            raise InvalidArgument("cases and sample_ids must have equal length")
        seen = set()
        for case, sid in zip(self.cases, self.sample_ids):
            if (case, sid) in seen:
                raise DuplicateSample(f"duplicate sample {case.name}_{sid}")
            seen.add((case, sid))

    def __len__(self) -> int:
        return len(self.cases)

    @property
    def n_values(self) -> int:
        return int(self.values.size)

    def labels(self) -> np.ndarray:
        return np.array([c.index for c in self.cases])

    def rows_for(self, *cases: CaseLabel) -> np.ndarray:
        wanted = set(cases)
        return np.array([i for i, c in enumerate(self.cases) if c in wanted], dtype=int)

    def subset(self, rows: Sequence[int]) -> "FeatureMatrix":
        rows = list(rows)
        return FeatureMatrix(
            [self.cases[i] for i in rows],
            [self.sample_ids[i] for i in rows],
            self.values[rows],
            self.column_names,
        )

    def equals(self, other: "FeatureMatrix") -> bool:
        return (
            self.cases == other.cases
            and self.sample_ids == other.sample_ids
            and tuple(self.column_names) == tuple(other.column_names)
            and np.array_equal(self.values, other.values)
        )


@dataclass
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray
    flagged: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES, dtype=bool))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    @classmethod
    def identity(cls, width: int = N_FEATURES) -> "StandardizationParams":
        return cls(np.zeros(width), np.ones(width), np.zeros(width, dtype=bool))


def build_database(traces: Iterable[SensorTrace]) -> FeatureMatrix:
    """One 54-value row per trace, sorted by (case, sample_id)."""
    traces = sorted(traces, key=lambda tr: (tr.case.index, tr.sample_id))
    if not traces:
        raise InvalidArgument("no traces given")
    seen = set()
    for tr in traces:
        key = (tr.case, tr.sample_id)
        if key in seen:
            raise DuplicateSample(f"duplicate sample {tr.case.name}_{tr.sample_id}")
        seen.add(key)
    values = np.vstack([extract_sample_features(tr) for tr in traces])
    return FeatureMatrix([tr.case for tr in traces], [tr.sample_id for tr in traces], values)


def fit_standardization(values: np.ndarray) -> StandardizationParams:
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise EmptyFitSet("standardization needs at least one fit row")
    mu = values.mean(axis=0)
    sd = np.sqrt(((values - mu) ** 2).mean(axis=0))
    flagged = ~(sd > 0)
    # zero-spread columns pass through unscaled
    return StandardizationParams(np.where(flagged, 0.0, mu), np.where(flagged, 1.0, sd), flagged)


def standardize(matrix: FeatureMatrix, fit_rows: Sequence[int]) -> tuple[FeatureMatrix, StandardizationParams]:
    fit_rows = list(fit_rows)
    if not fit_rows:
        raise EmptyFitSet("fit_rows is empty")
    params = fit_standardization(matrix.values[fit_rows])
    scaled = FeatureMatrix(list(matrix.cases), list(matrix.sample_ids), params.apply(matrix.values), matrix.column_names)
    return scaled, params


@dataclass
class CorrelationReport:
    intra_case_mean: float
    inter_case_mean: float
    pair_means: np.ndarray  # 6x6, NaN where no pairs exist
    degenerate_rows: list[tuple[CaseLabel, int]]
    n_intra_pairs: int
    n_inter_pairs: int

    def to_text(self) -> str:
        lines = [
            "Feature database correlation check (Pearson over standardized rows)",
            f"intra-case mean correlation: {self.intra_case_mean:.6f} ({self.n_intra_pairs} pairs)",
            f"inter-case mean correlation: {self.inter_case_mean:.6f} ({self.n_inter_pairs} pairs)",
            f"degenerate rows excluded: {len(self.degenerate_rows)}",
        ]
        for case, sid in self.degenerate_rows:
            lines.append(f"  {case.name}_{sid}")
        verdict = "PASS" if self.intra_case_mean > self.inter_case_mean else "FAIL"
        lines.append(f"intra > inter: {verdict}")
        lines.append("")
        lines.append("case-pair mean correlation:")
        lines.append("    " + "".join(f"{c.name:>9}" for c in CaseLabel))
        for i, row_case in enumerate(CaseLabel):
            cells = "".join(f"{v:9.4f}" for v in self.pair_means[i])
            lines.append(f"  {row_case.name} {cells}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["case"] + [c.name for c in CaseLabel])
        for i, c in enumerate(CaseLabel):
            w.writerow([c.name] + [_fmt17(v) for v in self.pair_means[i]])
        return buf.getvalue()


def pearson_rows(values: np.ndarray) -> np.ndarray:
    """Pairwise Pearson correlation between rows; rows must have nonzero spread."""
    centered = values - values.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered * centered).sum(axis=1))
    if np.any(norms == 0):
        raise DegenerateRow("row with zero variance has no defined correlation")
    unit = centered / norms[:, None]
    return np.clip(unit @ unit.T, -1.0, 1.0)


def validate_correlation(matrix: FeatureMatrix) -> CorrelationReport:
    """Average row correlations within and across cases."""
    counts = {c: len(matrix.rows_for(c)) for c in set(matrix.cases)}
    if any(n < 2 for n in counts.values()):
        raise InvalidArgument("correlation check needs at least 2 rows per case")
    values = matrix.values
    spread = values.max(axis=1) - values.min(axis=1)
    keep = np.flatnonzero(spread > 0)
    degenerate = [(matrix.cases[i], matrix.sample_ids[i]) for i in np.flatnonzero(spread == 0)]
    corr = pearson_rows(values[keep])
    labels = matrix.labels()[keep]

    iu, ju = np.triu_indices(len(keep), k=1)
    same = labels[iu] == labels[ju]
    pair_sum = np.zeros((6, 6))
    pair_n = np.zeros((6, 6))
    np.add.at(pair_sum, (labels[iu], labels[ju]), corr[iu, ju])
    np.add.at(pair_n, (labels[iu], labels[ju]), 1)
    pair_sum = pair_sum + np.triu(pair_sum, 1).T + np.tril(pair_sum, -1).T
    pair_n = pair_n + np.triu(pair_n, 1).T + np.tril(pair_n, -1).T
    with np.errstate(invalid="ignore"):
        pair_means = np.where(pair_n > 0, pair_sum / np.maximum(pair_n, 1), np.nan)

    vals = corr[iu, ju]
    intra = float(vals[same].mean()) if same.any() else float("nan")
    inter = float(vals[~same].mean()) if (~same).any() else float("nan")
    return CorrelationReport(intra, inter, pair_means, degenerate, int(same.sum()), int((~same).sum()))


def _fmt17(x: float) -> str:
    return f"{x:.17g}"


def matrix_to_csv(matrix: FeatureMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "sample_id", *matrix.column_names])
    for case, sid, row in zip(matrix.cases, matrix.sample_ids, matrix.values):
        w.writerow([case.name, sid, *(_fmt17(v) for v in row)])
    return buf.getvalue()


def matrix_from_csv(text: str) -> FeatureMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["case", "sample_id", *FEATURE_NAMES]
    if header is None:
        raise SchemaMismatch("empty feature file")
    if len(header) != len(expected):
        raise SchemaMismatch(f"header has {len(header) - 2} feature columns, expected {N_FEATURES}")
    if header != expected:
        raise SchemaMismatch("header does not match the feature column order")
    cases, sids, rows = [], [], []
    for rownum, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(expected):
            raise SchemaMismatch(f"row {rownum}: expected {len(expected)} fields, got {len(row)}")
        if row[0] not in CaseLabel.__members__:
            raise SchemaMismatch(f"row {rownum}: unknown case {row[0]!r}")
        try:
            sid = int(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise SchemaMismatch(f"row {rownum}: {exc}") from None
        if sid < 0:
            raise SchemaMismatch(f"row {rownum}: negative sample_id")
        cases.append(CaseLabel[row[0]])
        sids.append(sid)
        rows.append(vals)
    return FeatureMatrix(cases, sids, np.array(rows).reshape(len(rows), N_FEATURES))


def save_matrix(matrix: FeatureMatrix, destination: Path) -> None:
    write_text_atomic(destination, matrix_to_csv(matrix))


def load_matrix(source: Path) -> FeatureMatrix:
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {source}: {exc}") from exc
    return matrix_from_csv(text)
