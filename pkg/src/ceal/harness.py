"""Experiment runner: variants, multi-seed curves, savings and sweeps.

Maps named variants onto engine configurations, repeats each over
per-repetition seeds, aggregates accuracy-vs-percent-annotated curves,
and writes curves.csv / savings.csv / per-run trace files. Everything is
reproducible from the spec alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ceal import data, engine
from ceal.data import Dataset, SplitSpec
from ceal.engine import CealConfig, IterationReport, SimulatedOracle
from ceal.model import TrainConfig
from ceal.selection import CriterionKind

# variant name -> (query criterion, pseudo-labeling on)
VARIANT_TABLE: dict[str, tuple[CriterionKind, bool]] = {
    "AL_RAND": (CriterionKind.RAND, False),
    "AL_LC": (CriterionKind.LC, False),
    "AL_MS": (CriterionKind.MS, False),
    "AL_EN": (CriterionKind.EN, False),
    "CEAL_RAND": (CriterionKind.RAND, True),
    "CEAL_LC": (CriterionKind.LC, True),
    "CEAL_MS": (CriterionKind.MS, True),
    "CEAL_EN": (CriterionKind.EN, True),
    "CEAL_FUSION": (CriterionKind.FUSION, True),
    "TCAL": (CriterionKind.TCAL, False),
}
ALL_VARIANTS = ["AL_ALL"] + list(VARIANT_TABLE)

# the upper-bound baseline gets one long training run instead of many
# incremental ones; 8x the per-iteration budget reaches saturation
AL_ALL_EPOCH_FACTOR = 8


@dataclass(frozen=True)
class CurvePoint:
    variant: str
    pct_labeled: float
    mean_accuracy: float
    stddev_accuracy: float


@dataclass(frozen=True)
class SweepCell:
    delta0: float
    decay_rate: float
    mean_final_accuracy: float
    stddev_final_accuracy: float


@dataclass(frozen=True)
class ExperimentSpec:
    source: dict = field(
        default_factory=lambda: {
            "kind": "synthetic",
            "class_count": 4,
            "per_class": 625,
            "dim": 16,
            "separation": 3.0,
            "seed": 7,
        }
    )
    split: SplitSpec = field(default_factory=SplitSpec)
    ceal: CealConfig = field(default_factory=CealConfig)
    variants: tuple[str, ...] = ("AL_RAND", "AL_ALL", "CEAL_EN")
    repetitions: int = 5
    normalize_features: bool = False
    savings_target: float | None = None  # absolute accuracy; None: 0.95 * AL_ALL final

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for v in self.variants:
            if v not in ALL_VARIANTS:
                raise ValueError(f"unknown variant {v!r}; known: {ALL_VARIANTS}")


@dataclass
class ExperimentResult:
    curves: list[CurvePoint]
    traces: dict[tuple[str, int], list[IterationReport]]
    spec: ExperimentSpec

    def final_accuracy(self, variant: str) -> float:
        reps = [t for (v, _), t in self.traces.items() if v == variant]
        return float(np.mean([t[-1].test_accuracy for t in reps]))


def load_source(source: dict) -> Dataset:
    kind = source.get("kind", "synthetic")
    if kind == "synthetic":
        return data.synth_gaussian_mixture(
            class_count=int(source.get("class_count", 4)),
            per_class=int(source.get("per_class", 625)),
            dim=int(source.get("dim", 16)),
            class_separation=float(source.get("separation", 3.0)),
            seed=int(source.get("seed", 7)),
        )
    if kind == "csv":
        return data.load_csv(source["path"])
    if kind == "idx":
        return data.load_idx(source["images"], source["labels"])
    raise ValueError(f"unknown dataset kind {kind!r}")


def variant_config(base: CealConfig, variant: str, seed: int) -> tuple[CealConfig, float]:
    """Engine config and init fraction for one (variant, repetition seed)."""
    if variant == "AL_ALL":
        long_train = replace(base.train, epochs=base.train.epochs * AL_ALL_EPOCH_FACTOR, seed=seed)
        return replace(base, train=long_train, pseudo_enabled=False, seed=seed), 1.0
    criterion, pseudo = VARIANT_TABLE[variant]
    cfg = replace(
        base,
        criterion=criterion,
        pseudo_enabled=pseudo,
        seed=seed,
        train=replace(base.train, seed=seed),
    )
    return cfg, -1.0  # init fraction comes from the split spec


def _run_one(
    dataset: Dataset, spec: ExperimentSpec, variant: str, rep: int
) -> list[IterationReport]:
    seed = spec.ceal.seed + rep
    train_pool, test = data.split(dataset, replace(spec.split, seed=spec.split.seed + rep))
    if spec.normalize_features:
        stats = data.feature_stats(train_pool)
        train_pool = data.normalize(train_pool, stats)
        test = data.normalize(test, stats)
    cfg, init_fraction = variant_config(spec.ceal, variant, seed)
    if init_fraction < 0:
        init_fraction = spec.split.init_fraction
    oracle = SimulatedOracle(train_pool)
    return engine.run(train_pool, cfg, oracle, init_fraction=init_fraction, test_set=test)


def aggregate_curves(
    traces: dict[tuple[str, int], list[IterationReport]]
) -> list[CurvePoint]:
    """Mean/std accuracy per (variant, iteration); pct_labeled is shared."""
    variants = sorted({v for v, _ in traces})
    curves = []
    for variant in variants:
        runs = [traces[key] for key in sorted(traces) if key[0] == variant]
        length = min(len(r) for r in runs)
        for i in range(length):
            accs = np.array([r[i].test_accuracy for r in runs])
            curves.append(
                CurvePoint(
                    variant=variant,
                    pct_labeled=runs[0][i].pct_labeled,
                    mean_accuracy=float(accs.mean()),
                    stddev_accuracy=float(accs.std()),
                )
            )
    return curves


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Every variant x repetition, sequentially, with derived seeds."""
    dataset = load_source(spec.source)
    traces: dict[tuple[str, int], list[IterationReport]] = {}
    for variant in spec.variants:
        for rep in range(spec.repetitions):
            traces[(variant, rep)] = _run_one(dataset, spec, variant, rep)
    return ExperimentResult(curves=aggregate_curves(traces), traces=traces, spec=spec)


def annotation_savings(
    curves: list[CurvePoint], target_accuracy: float
) -> dict[str, float | None]:
    """Smallest annotated fraction reaching the target, per variant.

    Linear interpolation between the bracketing curve points; None when
    a variant never reaches the target.
    """
    out: dict[str, float | None] = {}
    for variant in sorted({c.variant for c in curves}):
        points = sorted(
            (c for c in curves if c.variant == variant), key=lambda c: c.pct_labeled
        )
        reached = None
        for i, point in enumerate(points):
            if point.mean_accuracy >= target_accuracy:
                if i == 0:
                    reached = point.pct_labeled
                else:
                    prev = points[i - 1]
                    frac = (target_accuracy - prev.mean_accuracy) / (
                        point.mean_accuracy - prev.mean_accuracy
                    )
                    reached = prev.pct_labeled + frac * (point.pct_labeled - prev.pct_labeled)
                break
        out[variant] = reached
    return out


def sweep_sensitivity(
    spec: ExperimentSpec,
    delta0_values: list[float],
    decay_values: list[float],
) -> list[SweepCell]:
    """One-at-a-time sensitivity grid for the pseudo-labeling threshold.

    Each delta0 runs with the spec's decay rate fixed and vice versa;
    every cell is CEAL_EN repeated spec.repetitions times.
    """
    if not delta0_values and not decay_values:
        raise ValueError("at least one non-empty range required")
    cells = [(d0, spec.ceal.decay_rate) for d0 in delta0_values]
    cells += [(spec.ceal.delta0, dr) for dr in decay_values]
    seen = set()
    grid = [c for c in cells if not (c in seen or seen.add(c))]
    dataset = load_source(spec.source)
    results = []
    for delta0, decay_rate in grid:
        cell_spec = replace(
            spec,
            ceal=replace(spec.ceal, delta0=delta0, decay_rate=decay_rate),
            variants=("CEAL_EN",),
        )
        finals = [
            _run_one(dataset, cell_spec, "CEAL_EN", rep)[-1].test_accuracy
            for rep in range(spec.repetitions)
        ]
        results.append(
            SweepCell(
                delta0=delta0,
                decay_rate=decay_rate,
                mean_final_accuracy=float(np.mean(finals)),
                stddev_final_accuracy=float(np.std(finals)),
            )
        )
    return results


def resolve_savings_target(result: ExperimentResult) -> float | None:
    if result.spec.savings_target is not None:
        return result.spec.savings_target
    if "AL_ALL" in result.spec.variants:
        return 0.95 * result.final_accuracy("AL_ALL")
    return None


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> None:
    """curves.csv, savings.csv and one trace jsonl per (variant, seed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "curves.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "pct_labeled", "mean_acc", "std_acc"])
        for c in result.curves:
            writer.writerow([c.variant, c.pct_labeled, c.mean_accuracy, c.stddev_accuracy])
    target = resolve_savings_target(result)
    if target is not None:
        savings = annotation_savings(result.curves, target)
        with open(out / "savings.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "target_accuracy", "pct_labeled"])
            for variant, pct in sorted(savings.items()):
                writer.writerow(
                    [variant, target, "not_reached" if pct is None else pct]
                )
    for (variant, rep), reports in sorted(result.traces.items()):
        seed = result.spec.ceal.seed + rep
        with open(out / f"trace-{variant}-{seed}.jsonl", "w") as fh:
            for report in reports:
                fh.write(report.to_json_line() + "\n")


def write_sweep_outputs(cells: list[SweepCell], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta0", "decay_rate", "mean_final_acc", "std_final_acc"])
        for cell in cells:
            writer.writerow(
                [cell.delta0, cell.decay_rate, cell.mean_final_accuracy, cell.stddev_final_accuracy]
            )


def spec_from_dict(raw: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from a parsed config mapping (YAML/JSON)."""
    split_raw = raw.get("split", {})
    ceal_raw = dict(raw.get("ceal", {}))
    train_raw = ceal_raw.pop("train", {})
    if "criterion" in ceal_raw:
        ceal_raw["criterion"] = CriterionKind(ceal_raw["criterion"])
    kwargs: dict = {}
    if "dataset" in raw:
        kwargs["source"] = raw["dataset"]
    if "variants" in raw:
        kwargs["variants"] = tuple(raw["variants"])
    for key in ("repetitions", "normalize_features", "savings_target"):
        if key in raw:
            kwargs[key] = raw[key]
    return ExperimentSpec(
        split=SplitSpec(**split_raw),
        ceal=CealConfig(train=TrainConfig(**train_raw), **ceal_raw),
        **kwargs,
    )


def preset(name: str) -> ExperimentSpec:
    """Named parameter presets; paper-scale knobs on the synthetic source."""
    if name == "synthetic":
        return ExperimentSpec()
    if name == "cacd":
        return ExperimentSpec(
            ceal=CealConfig(delta0=0.05, decay_rate=0.0033, query_size=2000)
        )
    if name == "caltech256":
        return ExperimentSpec(
            ceal=CealConfig(delta0=0.005, decay_rate=0.00033, query_size=1000)
        )
    raise ValueError(f"unknown preset {name!r}; known: synthetic, cacd, caltech256")
