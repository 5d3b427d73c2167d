"""Micro-F1 and exact-match scoring of predicted item selections."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from knar.errors import DuplicateId, LengthMismatch, MissingTruth
from knar.instance import KnapsackInstance, Solution, effective_capacity


def _flatten_bits(bits):
    if _is_nested(bits):
        arr = np.concatenate([np.ravel(np.asarray(b)) for b in bits])
    else:
        arr = np.ravel(np.asarray(bits))
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("selections must contain only 0/1")
    return arr.astype(np.int64)


def _is_nested(bits):
    return len(bits) > 0 and all(isinstance(b, (list, tuple, np.ndarray)) for b in bits)


def confusion_counts(predicted_bits, true_bits) -> tuple[int, int, int]:
    """(tp, fp, fn) with "selected" as the positive class."""
    if _is_nested(predicted_bits) and _is_nested(true_bits):
        if len(predicted_bits) != len(true_bits) or any(
            len(p) != len(t) for p, t in zip(predicted_bits, true_bits)
        ):
            raise LengthMismatch("predicted and true selections differ in shape")
    p = _flatten_bits(predicted_bits)
    t = _flatten_bits(true_bits)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.size} predicted bits vs {t.size} true bits")
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    return tp, fp, fn


def f1_from_counts(tp, fp, fn) -> float:
    denom = 2 * tp + fp + fn
    return 1.0 if denom == 0 else 2 * tp / denom


def micro_f1(predicted_bits, true_bits) -> float:
    """Positive-class F1 over all items of all samples; 1.0 when nothing is positive anywhere."""
    return f1_from_counts(*confusion_counts(predicted_bits, true_bits))


def greedy_discretize(instance: KnapsackInstance, item_probs, stop_at_first_misfit=False) -> Solution:
    """Take items by descending probability (ties: lower index first) while they fit.

    By default an item that does not fit is skipped and later items are still
    tried; ``stop_at_first_misfit`` ends the scan at the first such item instead.
    """
    probs = np.asarray(item_probs, dtype=np.float64)
    if probs.shape != (instance.n,):
        raise LengthMismatch(f"{probs.size} probabilities for {instance.n} items")
    if not np.all(np.isfinite(probs)):
        raise ValueError("item probabilities must be finite")
    order = np.argsort(-probs, kind="stable")
    remaining = effective_capacity(instance)
    selected = [0] * instance.n
    for k in order:
        w = instance.weights[k]
        if w <= remaining:
            selected[k] = 1
            remaining -= w
        elif stop_at_first_misfit:
            break
    return Solution.from_selection(instance, selected)


@dataclass
class EvalReport:
    micro_f1: float
    exact_match: float
    num_samples: int
    tp: int
    fp: int
    fn: int
    per_config: dict = field(default_factory=dict)

    def to_record(self):
        return {
            "micro_f1": self.micro_f1,
            "exact_match": self.exact_match,
            "num_samples": self.num_samples,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "per_config": {
                f"n={n},C={c}": scores for (n, c), scores in sorted(self.per_config.items())
            },
        }


def _truth_parts(rec):
    """(instance, true selection) from a solved instance or an (instance, bits) pair."""
    if isinstance(rec, tuple):
        inst, bits = rec
        return inst, tuple(int(b) for b in bits)
    return rec.instance, tuple(rec.solution.selected)


def evaluate(truth_records, prediction_records, stop_at_first_misfit=False) -> EvalReport:
    """Score predictions against canonical ground-truth selections.

    ``truth_records`` are solved instances; ``prediction_records`` expose ``id``
    and ``item_probs``. Predicted probabilities are discretised greedily; a
    sample is an exact match only if its selection equals the truth bitwise.
    """
    truth = {}
    for rec in truth_records:
        inst, bits = _truth_parts(rec)
        if inst.id in truth:
            raise DuplicateId(f"duplicate truth id {inst.id!r}")
        truth[inst.id] = (inst, bits)
    seen = set()
    totals = Counter()
    groups: dict[tuple[int, int], Counter] = {}
    for pred in prediction_records:
        if pred.id in seen:
            raise DuplicateId(f"duplicate prediction id {pred.id!r}")
        seen.add(pred.id)
        if pred.id not in truth:
            raise MissingTruth(pred.id)
        inst, bits = truth[pred.id]
        if pred.item_probs is None:
            raise LengthMismatch(f"prediction {pred.id!r} has no item_probs")
        guess = greedy_discretize(inst, pred.item_probs, stop_at_first_misfit).selected
        tp, fp, fn = confusion_counts(guess, bits)
        counts = Counter(tp=tp, fp=fp, fn=fn, samples=1, matches=int(guess == bits))
        totals.update(counts)
        groups.setdefault((inst.n, inst.capacity), Counter()).update(counts)

    def scores(c):
        return {
            "micro_f1": f1_from_counts(c["tp"], c["fp"], c["fn"]),
            "exact_match": c["matches"] / c["samples"] if c["samples"] else 0.0,
            "num_samples": c["samples"],
        }

    overall = scores(totals)
    return EvalReport(
        overall["micro_f1"],
        overall["exact_match"],
        totals["samples"],
        totals["tp"],
        totals["fp"],
        totals["fn"],
        {key: scores(c) for key, c in groups.items()},
    )
