"""The active-learning loop.

Owns the unlabeled/labeled/pseudo-labeled partition of the pool and
advances it one iteration at a time: score the pool, query the oracle
for the most informative samples, pseudo-label the high-confidence rest,
fine-tune, decay the threshold. Iterations are pure: they never mutate
their input state, so an oracle failure aborts with nothing changed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from ceal import model, selection
from ceal.data import Dataset
from ceal.model import ModelParams, TrainConfig
from ceal.selection import CriterionKind, PseudoLabel, ThresholdSchedule


@dataclass
class PoolState:
    """The evolving pool partition.

    pseudo is transient: populated only inside an iteration, always
    empty on the states this module returns.
    """

    unlabeled: set[int]
    labeled: dict[int, int]
    pseudo: dict[int, PseudoLabel] = field(default_factory=dict)

    def check(self, total: int | None = None) -> None:
        ids = [set(self.unlabeled), set(self.labeled), set(self.pseudo)]
        if sum(len(s) for s in ids) != len(ids[0] | ids[1] | ids[2]):
            raise ValueError("unlabeled/labeled/pseudo sets overlap")
        if total is not None and len(self.unlabeled) + len(self.labeled) != total:
            raise ValueError("pool does not partition the dataset")


@dataclass(frozen=True)
class CealConfig:
    """Knobs of the learning loop."""

    delta0: float = 0.05
    decay_rate: float = 0.0033
    query_size: int = 100  # samples sent for annotation per iteration
    max_iterations: int | None = None  # None: run until the pool is exhausted
    finetune_interval: int = 1
    criterion: CriterionKind = CriterionKind.EN
    train: TrainConfig = field(default_factory=TrainConfig)
    pseudo_enabled: bool = True
    seed: int = 0
    hidden_size: int | None = None

    def __post_init__(self) -> None:
        if self.query_size < 1:
            raise ValueError("query_size must be >= 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.finetune_interval < 1:
            raise ValueError("finetune_interval must be >= 1")

    @property
    def schedule(self) -> ThresholdSchedule:
        return ThresholdSchedule(self.delta0, self.decay_rate)


@dataclass(frozen=True)
class IterationReport:
    iteration: int
    pct_labeled: float
    test_accuracy: float
    pseudo_count: int
    pseudo_error_rate: float
    delta: float
    annotations_cumulative: int

    def to_json_line(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json_line(cls, line: str) -> "IterationReport":
        return cls(**json.loads(line))


class Oracle:
    """Label source. Subclasses implement label(); batch queries may block."""

    def label(self, sample_id: int) -> int:
        raise NotImplementedError

    def label_batch(
        self, sample_ids: list[int], scores: list[float] | None = None
    ) -> list[int]:
        return [self.label(i) for i in sample_ids]


class SimulatedOracle(Oracle):
    """Answers instantly from the dataset's ground truth."""

    def __init__(self, dataset: Dataset):
        self._labels = dataset.labels

    def label(self, sample_id: int) -> int:
        return int(self._labels[sample_id])


def pseudo_error_rate(pseudo: Iterable[PseudoLabel], truth: np.ndarray) -> float:
    """Fraction of pseudo-labels disagreeing with ground truth; 0 when empty."""
    pseudo = list(pseudo)
    if not pseudo:
        return 0.0
    wrong = sum(1 for p in pseudo if p.label != int(truth[p.sample_id]))
    return wrong / len(pseudo)


def _class_members(dataset: Dataset) -> list[np.ndarray]:
    members = [np.flatnonzero(dataset.labels == c) for c in range(dataset.class_count)]
    for c, m in enumerate(members):
        if len(m) == 0:
            raise ValueError(f"class {c} has no samples")
    return members


def initialize(
    dataset: Dataset,
    init_fraction: float,
    cfg: CealConfig,
    oracle: Oracle,
) -> tuple[PoolState, ModelParams]:
    """Stratified seed annotation plus first training pass.

    Draws init_fraction of each class (at least one sample), labels them
    through the oracle, and trains fresh parameters on the result.
    """
    if not 0 < init_fraction <= 1:
        raise ValueError("init_fraction must be in (0, 1]")
    rng = np.random.default_rng([cfg.seed, 0])
    seed_ids: list[int] = []
    for members in _class_members(dataset):
        n_init = min(max(int(round(init_fraction * len(members))), 1), len(members))
        seed_ids.extend(int(i) for i in rng.permutation(members)[:n_init])
    seed_ids = sorted(seed_ids)
    labels = oracle.label_batch(seed_ids)
    _check_labels(labels, dataset.class_count)
    labeled = dict(zip(seed_ids, labels))
    state = PoolState(unlabeled=set(range(len(dataset))) - set(seed_ids), labeled=labeled)
    params = model.init_params(
        dataset.dim, dataset.class_count, hidden_size=cfg.hidden_size, seed=cfg.seed
    )
    params = _finetune_on(params, dataset, labeled, {}, cfg.train)
    return state, params


def _check_labels(labels: list[int], class_count: int) -> None:
    for label in labels:
        if not 0 <= label < class_count:
            raise ValueError(f"oracle label {label} outside [0, {class_count})")


def _finetune_on(
    params: ModelParams,
    dataset: Dataset,
    labeled: dict[int, int],
    pseudo: dict[int, PseudoLabel],
    train_cfg: TrainConfig,
) -> ModelParams:
    ids = sorted(labeled) + sorted(pseudo)
    y = np.array([labeled[i] for i in sorted(labeled)] + [pseudo[i].label for i in sorted(pseudo)])
    return model.sgd_finetune(params, dataset.features[ids], y, train_cfg)


def _select_query(
    probs_by_sample: dict[int, np.ndarray],
    dataset: Dataset,
    cfg: CealConfig,
    iter_index: int,
) -> list[int]:
    k = min(cfg.query_size, len(probs_by_sample))
    seed = [cfg.seed, iter_index]
    if cfg.criterion == CriterionKind.FUSION:
        return selection.fuse_select(probs_by_sample, k, seed)
    if cfg.criterion == CriterionKind.TCAL:
        n_uncertain = min(4 * k, len(probs_by_sample))
        features = {i: dataset.features[i] for i in probs_by_sample}
        return selection.tcal_select(probs_by_sample, features, n_uncertain, k, seed)
    return selection.select_informative(probs_by_sample, cfg.criterion, k, seed)


def run_iteration(
    dataset: Dataset,
    state: PoolState,
    params: ModelParams,
    cfg: CealConfig,
    oracle: Oracle,
    iter_index: int,
    test_set: Dataset | None = None,
) -> tuple[PoolState, ModelParams, IterationReport]:
    """One pass of the loop; iter_index counts from 1.

    Annotation precedes pseudo-labeling, so the two selections are
    disjoint; pseudo-labels are consumed by fine-tuning and then erased.
    """
    if iter_index < 1:
        raise ValueError("iter_index counts from 1")
    if not state.unlabeled:
        raise ValueError("empty pool")
    pool_ids = sorted(state.unlabeled)
    probs = model.forward_probs(params, dataset.features[pool_ids])
    probs_by_sample = {i: probs[row] for row, i in enumerate(pool_ids)}

    selected = _select_query(probs_by_sample, dataset, cfg, iter_index)
    scored = selection.uncertainty_scores(probs_by_sample, cfg.criterion, selected)
    labels = oracle.label_batch(selected, [s.value for s in scored])
    if len(labels) != len(selected):
        raise ValueError("oracle returned wrong number of labels")
    _check_labels(labels, dataset.class_count)

    labeled = dict(state.labeled)
    labeled.update(zip(selected, labels))
    remaining = set(state.unlabeled) - set(selected)

    events_done = (iter_index - 1) // cfg.finetune_interval
    delta_now = selection.update_threshold(cfg.schedule, events_done)
    pseudo: dict[int, PseudoLabel] = {}
    if cfg.pseudo_enabled and remaining:
        remaining_probs = {i: probs_by_sample[i] for i in remaining}
        pseudo = {
            p.sample_id: p
            for p in selection.select_high_confidence(remaining_probs, delta_now)
        }
    err = pseudo_error_rate(pseudo.values(), dataset.labels)

    new_params = params
    if iter_index % cfg.finetune_interval == 0:
        train_cfg = replace(cfg.train, seed=cfg.train.seed + iter_index)
        new_params = _finetune_on(params, dataset, labeled, pseudo, train_cfg)

    eval_set = test_set if test_set is not None else dataset
    report = IterationReport(
        iteration=iter_index,
        pct_labeled=len(labeled) / len(dataset),
        test_accuracy=model.accuracy(new_params, eval_set.features, eval_set.labels),
        pseudo_count=len(pseudo),
        pseudo_error_rate=err,
        delta=selection.update_threshold(cfg.schedule, iter_index // cfg.finetune_interval),
        annotations_cumulative=len(labeled),
    )
    # pseudo-labels are erased: their samples return to the unlabeled pool
    new_state = PoolState(unlabeled=remaining, labeled=labeled)
    return new_state, new_params, report


def run_detailed(
    dataset: Dataset,
    cfg: CealConfig,
    oracle: Oracle,
    init_fraction: float = 0.1,
    test_set: Dataset | None = None,
    on_report: Callable[[IterationReport], None] | None = None,
) -> tuple[list[IterationReport], PoolState, ModelParams]:
    """Full run returning the trace plus final state and parameters."""
    state, params = initialize(dataset, init_fraction, cfg, oracle)
    eval_set = test_set if test_set is not None else dataset
    reports = [
        IterationReport(
            iteration=0,
            pct_labeled=len(state.labeled) / len(dataset),
            test_accuracy=model.accuracy(params, eval_set.features, eval_set.labels),
            pseudo_count=0,
            pseudo_error_rate=0.0,
            delta=cfg.delta0,
            annotations_cumulative=len(state.labeled),
        )
    ]
    if on_report:
        on_report(reports[0])
    iter_index = 1
    while state.unlabeled and (cfg.max_iterations is None or iter_index <= cfg.max_iterations):
        state, params, report = run_iteration(
            dataset, state, params, cfg, oracle, iter_index, test_set
        )
        reports.append(report)
        if on_report:
            on_report(report)
        iter_index += 1
    return reports, state, params


def run(
    dataset: Dataset,
    cfg: CealConfig,
    oracle: Oracle,
    init_fraction: float = 0.1,
    test_set: Dataset | None = None,
    on_report: Callable[[IterationReport], None] | None = None,
) -> list[IterationReport]:
    """Initialize, then iterate until max_iterations or pool exhaustion."""
    reports, _, _ = run_detailed(dataset, cfg, oracle, init_fraction, test_set, on_report)
    return reports
