"""Pairwise evaluation: stratified splits, per-pair accuracies for every
network kind, summary averages and the network ranking."""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, InsufficientClassRows
from .featuredb import FeatureMatrix, fit_standardization
from .ingest import CaseLabel
from .nnets import GaConfig, NetworkKind, TrainConfig, one_hot, predict_labels, train
from .split import stratified_partition
from .synthgen import derive_seed

PAIRS: tuple[tuple[CaseLabel, CaseLabel], ...] = tuple(itertools.combinations(CaseLabel, 2))
DEFAULT_TRAIN_FRACTION = 0.7


def pair_name(pair: tuple[CaseLabel, CaseLabel]) -> str:
    return pair[0].name + pair[1].name


def parse_pair(text: str) -> tuple[CaseLabel, CaseLabel]:
    text = text.strip().upper()
    if len(text) != 2 or text[0] == text[1]:
        raise InvalidArgument(f"pair must be two distinct case letters, got {text!r}")
    a, b = sorted((CaseLabel.from_letter(text[0]), CaseLabel.from_letter(text[1])))
    return a, b


@dataclass
class SplitPlan:
    train: np.ndarray
    test: np.ndarray
    seed: int


def stratified_split(matrix: FeatureMatrix, train_fraction: float = DEFAULT_TRAIN_FRACTION, seed: int = 0) -> SplitPlan:
    train_rows, test_rows = stratified_partition(matrix.labels(), train_fraction, seed)
    return SplitPlan(train_rows, test_rows, seed)


def evaluate_pair(
    matrix: FeatureMatrix,
    pair: tuple[CaseLabel, CaseLabel],
    kind: NetworkKind,
    cfg: TrainConfig | None = None,
    ga: GaConfig | None = None,
    seed: int = 0,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
) -> float:
    """Test-set accuracy in percent (unrounded) for one pair and network kind."""
    cfg = cfg or TrainConfig()
    rows = matrix.rows_for(*pair)
    for case in pair:
        if not any(matrix.cases[i] == case for i in rows):
            raise InsufficientClassRows(f"case {case.name} has no rows in the feature matrix")
    sub = matrix.subset(rows)
    labels = np.array([0 if c == pair[0] else 1 for c in sub.cases])
    plan = stratified_partition(labels, train_fraction, seed)
    train_rows, test_rows = plan
    st = fit_standardization(sub.values[train_rows])
    model = train(
        kind,
        st.apply(sub.values[train_rows]),
        one_hot(labels[train_rows]),
        replace(cfg, seed=seed),
        ga,
        standardization=st,
    )
    predicted = predict_labels(model, sub.values[test_rows])
    correct = int(np.count_nonzero(predicted == labels[test_rows]))
    return 100.0 * correct / len(test_rows)


@dataclass
class PerformanceTable:
    pairs: list[tuple[CaseLabel, CaseLabel]]
    kinds: list[NetworkKind]
    accuracy: np.ndarray  # (pairs, kinds), percent
    row_averages: np.ndarray = field(init=False)
    column_averages: np.ndarray = field(init=False)
    grand_average: float = field(init=False)
    seeds: list[int] | None = None
    note: str = ""

    def __post_init__(self) -> None:
        self.accuracy = np.asarray(self.accuracy, dtype=float).reshape(len(self.pairs), len(self.kinds))
        if np.any(~np.isfinite(self.accuracy)) or np.any((self.accuracy < 0) | (self.accuracy > 100)):
            raise InvalidArgument("accuracies must lie in [0, 100]")
        if self.accuracy.size == 0:
            self.row_averages = np.full(len(self.pairs), np.nan)
            self.column_averages = np.full(len(self.kinds), np.nan)
            self.grand_average = float("nan")
            return
        self.row_averages = self.accuracy.mean(axis=1)
        self.column_averages = self.accuracy.mean(axis=0)
        self.grand_average = float(self.accuracy.mean())

    @property
    def is_empty(self) -> bool:
        return self.accuracy.size == 0

    def entry(self, pair: str | tuple[CaseLabel, CaseLabel], kind: NetworkKind) -> float:
        if isinstance(pair, str):
            pair = parse_pair(pair)
        return float(self.accuracy[self.pairs.index(pair), self.kinds.index(kind)])

    def row_average(self, pair: str | tuple[CaseLabel, CaseLabel]) -> float:
        if isinstance(pair, str):
            pair = parse_pair(pair)
        return float(self.row_averages[self.pairs.index(pair)])

    def column_average(self, kind: NetworkKind) -> float:
        return float(self.column_averages[self.kinds.index(kind)])


def summarize(
    accuracy,
    pairs: Sequence[tuple[CaseLabel, CaseLabel]] = PAIRS,
    kinds: Sequence[NetworkKind] = tuple(NetworkKind),
) -> PerformanceTable:
    """Wrap a pairs-by-kinds grid of accuracies and compute every average."""
    return PerformanceTable(list(pairs), list(kinds), accuracy)


def _task(args):
    matrix, pair, kind, cfg, ga, seed, fraction = args
    return evaluate_pair(matrix, pair, kind, cfg, ga, seed, fraction)


def run_full_matrix(
    matrix: FeatureMatrix,
    cfg: TrainConfig | None = None,
    ga: GaConfig | None = None,
    master_seed: int = 42,
    kinds: Sequence[NetworkKind] = tuple(NetworkKind),
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    workers: int = 1,
) -> PerformanceTable:
    """All 15 pairs x selected kinds. Each pair's split and initialization seed
    is derived from ``master_seed`` and the pair index, so results do not depend
    on how tasks are scheduled."""
    cfg = cfg or TrainConfig()
    present = set(matrix.cases)
    missing = [c.name for c in CaseLabel if c not in present]
    if missing:
        raise InsufficientClassRows(f"feature matrix lacks cases {','.join(missing)}")
    kinds = list(kinds)
    seeds = [derive_seed(master_seed, i) for i in range(len(PAIRS))]
    tasks = [
        (matrix, pair, kind, cfg, ga, seeds[i], train_fraction)
        for i, pair in enumerate(PAIRS)
        for kind in kinds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    table = summarize(np.array(results).reshape(len(PAIRS), len(kinds)), PAIRS, kinds)
    table.seeds = seeds
    table.note = f"stratified {train_fraction:g}/{1 - train_fraction:g} split per pair, single run, master seed {master_seed}"
    return table


def run_multi_seed(
    matrix: FeatureMatrix,
    cfg: TrainConfig | None = None,
    ga: GaConfig | None = None,
    master_seed: int = 42,
    runs: int = 1,
    kinds: Sequence[NetworkKind] = tuple(NetworkKind),
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    workers: int = 1,
) -> PerformanceTable:
    """Entry-wise mean over ``runs`` full-matrix runs with master seeds
    ``master_seed, master_seed + 1, ...``."""
    if runs < 1:
        raise InvalidArgument("runs must be >= 1")
    tables = [
        run_full_matrix(matrix, cfg, ga, master_seed + r, kinds, train_fraction, workers)
        for r in range(runs)
    ]
    if runs == 1:
        return tables[0]
    table = summarize(np.mean([t.accuracy for t in tables], axis=0), PAIRS, kinds)
    table.note = (
        f"stratified {train_fraction:g}/{1 - train_fraction:g} split per pair, "
        f"mean of {runs} runs, master seeds {master_seed}..{master_seed + runs - 1}"
    )
    return table


def rank_networks(table: PerformanceTable) -> list[NetworkKind]:
    """Kinds by descending column average; ties keep column order."""
    order = {k: i for i, k in enumerate(NetworkKind)}
    return sorted(table.kinds, key=lambda k: (-table.column_average(k), order[k]))


def render_markdown(table: PerformanceTable) -> str:
    header = ["Cases", *(f"{k.display_name} (%)" for k in table.kinds), "Average on cases (%)"]
    lines = ["# Classification performance", ""]
    if table.note:
        lines += [f"Protocol: {table.note}. Accuracies rounded to 2 decimals for display.", ""]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join("---" for _ in header) + "|")
    for i, pair in enumerate(table.pairs):
        cells = [f"{v:.2f}" for v in table.accuracy[i]] + [f"{table.row_averages[i]:.3f}"]
        lines.append(f"| {pair_name(pair)} | " + " | ".join(cells) + " |")
    cells = [f"{v:.3f}" for v in table.column_averages] + [f"{table.grand_average:.3f}"]
    lines.append("| Average | " + " | ".join(cells) + " |")
    lines.append("")
    ranking = ", ".join(f"{i}-{k.display_name}" for i, k in enumerate(rank_networks(table), start=1))
    lines.append(f"Ranking: {ranking}")
    return "\n".join(lines) + "\n"


def render_csv(table: PerformanceTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair", "seed", *(k.value for k in table.kinds), "row_average"])
    for i, pair in enumerate(table.pairs):
        seed = "" if table.seeds is None else table.seeds[i]
        w.writerow([pair_name(pair), seed, *(f"{v:.17g}" for v in table.accuracy[i]), f"{table.row_averages[i]:.17g}"])
    w.writerow(["average", "", *(f"{v:.17g}" for v in table.column_averages), f"{table.grand_average:.17g}"])
    return buf.getvalue()


def table_from_csv(text: str) -> PerformanceTable:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:2] != ["pair", "seed"] or rows[0][-1] != "row_average":
        raise InvalidArgument("not a performance report CSV")
    kinds = [NetworkKind(v) for v in rows[0][2:-1]]
    body = [r for r in rows[1:] if r and r[0] != "average"]
    pairs = [parse_pair(r[0]) for r in body]
    acc = np.array([[float(v) for v in r[2:-1]] for r in body]).reshape(len(body), len(kinds))
    table = PerformanceTable(pairs, kinds, acc)
    if all(r[1] for r in body):
        table.seeds = [int(r[1]) for r in body]
    return table
