"""Cost-effective active learning (CEAL).

Pool-based active learning that pairs human annotation of the most
uncertain samples with automatic pseudo-labeling of high-confidence
samples, wrapped around a small gradient-trained softmax classifier.
"""

from ceal.data import Dataset, Sample, SplitSpec
from ceal.engine import CealConfig, IterationReport, PoolState, SimulatedOracle
from ceal.model import ModelParams, TrainConfig
from ceal.selection import CriterionKind, PseudoLabel, ThresholdSchedule

__version__ = "0.1.0"

__all__ = [
    "CealConfig",
    "CriterionKind",
    "Dataset",
    "IterationReport",
    "ModelParams",
    "PoolState",
    "PseudoLabel",
    "Sample",
    "SimulatedOracle",
    "SplitSpec",
    "ThresholdSchedule",
    "TrainConfig",
]
