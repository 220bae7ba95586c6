"""Sample scoring and selection strategies.

Three uncertainty criteria (least confidence, margin, entropy) pick the
samples worth human annotation; an entropy threshold with linear decay
admits samples for automatic pseudo-labeling. Also provides criterion
fusion and a diversity/density baseline built on k-means.

All functions are pure and deterministic: ties break on ascending
sample id, and any randomness is driven by an explicit seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class CriterionKind(str, Enum):
    LC = "LC"
    MS = "MS"
    EN = "EN"
    RAND = "RAND"
    FUSION = "FUSION"
    TCAL = "TCAL"


@dataclass(frozen=True)
class UncertaintyScore:
    sample_id: int
    criterion: CriterionKind
    value: float


@dataclass(frozen=True)
class ThresholdSchedule:
    """Linear decay of the pseudo-labeling entropy threshold."""

    delta0: float
    decay_rate: float

    def __post_init__(self) -> None:
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.decay_rate < 0:
            raise ValueError("decay_rate must be non-negative")


@dataclass(frozen=True)
class PseudoLabel:
    sample_id: int
    label: int
    entropy_at_assignment: float


def score_lc(probs: np.ndarray) -> float:
    """Probability of the most probable class; lower means more uncertain."""
    return float(np.max(probs))


def score_ms(probs: np.ndarray) -> float:
    """Gap between the top-two class probabilities; smaller means more uncertain."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape[-1] < 2:
        raise ValueError("margin sampling needs at least 2 classes")
    top2 = np.sort(probs)[-2:]
    return float(top2[1] - top2[0])


def score_en(probs: np.ndarray) -> float:
    """Shannon entropy (nats) with 0*ln(0) := 0; higher means more uncertain."""
    probs = np.asarray(probs, dtype=float)
    terms = np.where(probs > 0, probs * np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    return float(-terms.sum())


def score(probs: np.ndarray, criterion: CriterionKind) -> float:
    """Criterion value for one probability vector (entropy for the rest)."""
    if criterion == CriterionKind.LC:
        return score_lc(probs)
    if criterion == CriterionKind.MS:
        return score_ms(probs)
    return score_en(probs)


def uncertainty_scores(
    probs_by_sample: dict[int, np.ndarray],
    criterion: CriterionKind,
    sample_ids: list[int] | None = None,
) -> list[UncertaintyScore]:
    """Scored records for the given ids (whole pool when omitted)."""
    ids = sorted(probs_by_sample) if sample_ids is None else sample_ids
    return [
        UncertaintyScore(sample_id=i, criterion=criterion, value=score(probs_by_sample[i], criterion))
        for i in ids
    ]


def _pool_arrays(probs_by_sample: dict[int, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    if not probs_by_sample:
        raise ValueError("empty pool")
    ids = np.array(sorted(probs_by_sample), dtype=int)
    probs = np.stack([np.asarray(probs_by_sample[i], dtype=float) for i in ids])
    return ids, probs


def _lc_values(probs: np.ndarray) -> np.ndarray:
    return probs.max(axis=1)


def _ms_values(probs: np.ndarray) -> np.ndarray:
    if probs.shape[1] < 2:
        raise ValueError("margin sampling needs at least 2 classes")
    part = np.sort(probs, axis=1)
    return part[:, -1] - part[:, -2]


def _en_values(probs: np.ndarray) -> np.ndarray:
    terms = np.where(probs > 0, probs * np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    return -terms.sum(axis=1)


def rank_by_criterion(
    probs_by_sample: dict[int, np.ndarray], criterion: CriterionKind
) -> list[int]:
    """All sample ids, most uncertain first, ties by ascending id."""
    ids, probs = _pool_arrays(probs_by_sample)
    if criterion == CriterionKind.LC:
        keys = _lc_values(probs)
    elif criterion == CriterionKind.MS:
        keys = _ms_values(probs)
    elif criterion == CriterionKind.EN:
        keys = -_en_values(probs)
    else:
        raise ValueError(f"no uncertainty ranking for criterion {criterion}")
    # ids are ascending, so a stable sort breaks ties on ascending id
    order = np.argsort(keys, kind="stable")
    return [int(i) for i in ids[order]]


def select_informative(
    probs_by_sample: dict[int, np.ndarray],
    criterion: CriterionKind,
    k: int,
    seed: int | list[int] = 0,
) -> list[int]:
    """The min(k, pool) most informative sample ids for annotation.

    LC and MS rank ascending, EN descending; RAND draws uniformly
    without replacement from the seed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if criterion == CriterionKind.RAND:
        ids, _ = _pool_arrays(probs_by_sample)
        rng = np.random.default_rng(seed)
        picked = rng.permutation(ids)[: min(k, len(ids))]
        return [int(i) for i in picked]
    ranked = rank_by_criterion(probs_by_sample, criterion)
    return ranked[:k]


def select_high_confidence(
    probs_by_sample: dict[int, np.ndarray], delta: float
) -> list[PseudoLabel]:
    """Pseudo-labels for every sample whose entropy is strictly below delta."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if not probs_by_sample:
        return []
    ids, probs = _pool_arrays(probs_by_sample)
    entropies = _en_values(probs)
    labels = probs.argmax(axis=1)
    return [
        PseudoLabel(sample_id=int(i), label=int(j), entropy_at_assignment=float(en))
        for i, j, en in zip(ids, labels, entropies)
        if en < delta
    ]


def update_threshold(schedule: ThresholdSchedule, finetune_event_index: int) -> float:
    """Threshold after the given number of completed fine-tuning events."""
    if finetune_event_index < 0:
        raise ValueError("event index must be >= 0")
    return max(0.0, schedule.delta0 - schedule.decay_rate * finetune_event_index)


def fuse_select(
    probs_by_sample: dict[int, np.ndarray], k: int, seed: int | list[int] = 0
) -> list[int]:
    """Union of the top-k/2 lists of LC, MS and EN, then k drawn at random.

    Duplicates across criteria are removed first; if the union is not
    larger than k the whole union is returned.
    """
    ids, _ = _pool_arrays(probs_by_sample)
    if k >= len(ids):
        return [int(i) for i in ids]
    half = max(1, k // 2)  # k=1 degenerates to one candidate per criterion
    union: set[int] = set()
    for criterion in (CriterionKind.LC, CriterionKind.MS, CriterionKind.EN):
        union.update(rank_by_criterion(probs_by_sample, criterion)[:half])
    candidates = sorted(union)
    if len(candidates) <= k:
        return candidates
    rng = np.random.default_rng(seed)
    picked = rng.choice(np.array(candidates), size=k, replace=False)
    return sorted(int(i) for i in picked)


def _kmeans_assign(
    points: np.ndarray, k: int, seed: int | list[int], max_iter: int = 100
) -> np.ndarray:
    """Lloyd's k-means returning cluster assignments; seeded and single-threaded.

    Caller guarantees at least k distinct points. An emptied cluster is
    re-seeded on the point farthest from its assigned centroid.
    """
    rng = np.random.default_rng(seed)
    distinct = np.unique(points, axis=0)
    centroids = distinct[rng.choice(len(distinct), size=k, replace=False)].copy()
    prev = None
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        for c in range(k):
            if not (assign == c).any():
                farthest = int(d2[np.arange(len(points)), assign].argmax())
                centroids[c] = points[farthest]
                assign[farthest] = c
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign
        for c in range(k):
            centroids[c] = points[assign == c].mean(axis=0)
    return assign


def tcal_select(
    probs_by_sample: dict[int, np.ndarray],
    features: dict[int, np.ndarray],
    n_uncertain: int,
    n_select: int,
    seed: int | list[int] = 0,
) -> list[int]:
    """Margin-uncertainty shortlist, k-means diversity, then per-cluster density.

    Clusters the n_uncertain most margin-uncertain samples into n_select
    groups and returns from each the sample with the smallest average
    Euclidean distance to the rest of its cluster.
    """
    if not (1 <= n_select <= n_uncertain):
        raise ValueError("need 1 <= n_select <= n_uncertain")
    shortlist = rank_by_criterion(probs_by_sample, CriterionKind.MS)[:n_uncertain]
    points = np.stack([np.asarray(features[i], dtype=float) for i in shortlist])
    n_distinct = len(np.unique(points, axis=0))
    if n_distinct < n_select:
        # not enough distinct points to form n_select clusters: return one
        # representative (smallest id) per distinct point
        reps: dict[bytes, int] = {}
        for sid, row in zip(shortlist, points):
            reps.setdefault(row.tobytes(), sid)
        return sorted(reps.values())
    if n_select == len(shortlist):
        return sorted(shortlist)
    assign = _kmeans_assign(points, n_select, seed)
    ids = np.array(shortlist)
    selected = []
    for c in range(n_select):
        members = np.flatnonzero(assign == c)
        if len(members) == 1:
            selected.append(int(ids[members[0]]))
            continue
        q = points[members]
        dists = np.sqrt(((q[:, None, :] - q[None, :, :]) ** 2).sum(axis=2))
        avg = dists.sum(axis=1) / (len(members) - 1)
        # members are in shortlist order; re-rank by id so argmin ties
        # resolve to the smallest sample id
        member_ids = ids[members]
        by_id = np.argsort(member_ids, kind="stable")
        best = by_id[int(np.argmin(avg[by_id]))]
        selected.append(int(member_ids[best]))
    return sorted(selected)
