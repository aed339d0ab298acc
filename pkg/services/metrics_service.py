"""
Global-model accuracy and filtering-quality scores.
"""

from dataclasses import dataclass

import numpy as np

from data.dataset import Dataset
from nn.network import ModelParameters, predict
from utils.errors import InputError


def evaluate_accuracy(model: ModelParameters, test: Dataset) -> float:
    """Fraction of arg-max predictions matching the labels; the model is not modified."""
    if len(test) == 0:
        raise InputError("Cannot evaluate accuracy on an empty test set")
    return float(np.mean(predict(model, test.features) == test.labels))


@dataclass(frozen=True)
class FilteringScores:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    f1_defined: bool


def filtering_scores(selected, participants, malicious_ids) -> FilteringScores:
    """Confusion counts of the removal decision: a removed malicious client is a true positive.

    When nothing is removed and no participant is malicious, F1 is undefined and reported as
    1.0 with f1_defined=False.
    """
    participants = set(participants)
    selected = set(selected)
    if not selected <= participants:
        raise InputError("Selected clients must be participants")
    malicious = set(malicious_ids) & participants
    removed = participants - selected

    tp = len(removed & malicious)
    fp = len(removed - malicious)
    fn = len(malicious - removed)
    tn = len(participants) - tp - fp - fn

    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    if tp + fp + fn == 0:
        return FilteringScores(tp, fp, tn, fn, 1.0, 1.0, 1.0, False)
    f1 = 2 * tp / (2 * tp + fp + fn)
    return FilteringScores(tp, fp, tn, fn, precision, recall, f1, True)


def tail_statistics(accuracies: list[float], fraction: float = 0.1) -> tuple[float, float]:
    """Mean and population std of the last `fraction` of rounds (at least one round)."""
    if not accuracies:
        return 0.0, 0.0
    count = max(1, int(np.ceil(fraction * len(accuracies))))
    tail = np.asarray(accuracies[-count:])
    return float(tail.mean()), float(tail.std())
