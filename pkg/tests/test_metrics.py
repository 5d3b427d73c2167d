import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from knar.dataset import Prediction
from knar.errors import DuplicateId, LengthMismatch, MissingTruth
from knar.instance import SamplerConfig, effective_capacity, new_instance, sample_instances
from knar.metrics import confusion_counts, evaluate, greedy_discretize, micro_f1
from knar.oracle import solve
from knar.softrecon import soft_reconstruct


def test_f1_worked_example():
    assert confusion_counts([1, 1, 1, 0], [1, 0, 1, 0]) == (2, 1, 0)
    assert micro_f1([1, 1, 1, 0], [1, 0, 1, 0]) == pytest.approx(0.8)


def test_f1_perfect_and_degenerate():
    assert micro_f1([1, 0, 1], [1, 0, 1]) == 1.0
    assert micro_f1([0, 0, 0], [0, 0, 0]) == 1.0
    assert micro_f1([], []) == 1.0
    assert micro_f1([0, 0], [1, 1]) == 0.0


def test_f1_aggregates_over_samples():
    pred = [[1, 0], [1, 1, 0]]
    true = [[1, 1], [0, 1, 0]]
    # tp=2 fp=1 fn=1
    assert micro_f1(pred, true) == pytest.approx(4 / 6)


def test_f1_length_mismatch():
    with pytest.raises(LengthMismatch):
        micro_f1([1, 0], [1, 0, 1])
    with pytest.raises(LengthMismatch):
        micro_f1([[1], [0, 1]], [[1, 0], [1]])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=1, max_size=6).flatmap(
    lambda t: st.tuples(st.just(t), st.lists(st.integers(0, 1), min_size=len(t), max_size=len(t)))
), min_size=1, max_size=8), st.randoms())
def test_f1_order_invariant(pairs, rnd):
    preds = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    score = micro_f1(preds, truth)
    order = list(range(len(pairs)))
    rnd.shuffle(order)
    assert micro_f1([preds[k] for k in order], [truth[k] for k in order]) == score
    flat_p = [b for p in preds for b in p]
    flat_t = [b for t in truth for b in t]
    assert micro_f1(flat_p, flat_t) == score


def test_greedy_instance_a(instance_a):
    sol = greedy_discretize(instance_a, [0.2, 0.9])
    assert sol.selected == (0, 1)


def test_greedy_ties_take_index_order():
    inst = new_instance([2, 2, 2], [0.1, 0.1, 0.1], 4)
    assert greedy_discretize(inst, [0.5, 0.5, 0.5]).selected == (1, 1, 0)


def test_greedy_zero_capacity():
    inst = new_instance([1, 2], [0.5, 0.5], 0)
    assert greedy_discretize(inst, [0.9, 0.8]).selected == (0, 0)


def test_greedy_skip_versus_stop():
    inst = new_instance([3, 4, 1], [0.1, 0.1, 0.1], 4)
    assert greedy_discretize(inst, [0.9, 0.8, 0.1]).selected == (1, 0, 1)
    assert greedy_discretize(inst, [0.9, 0.8, 0.1], stop_at_first_misfit=True).selected == (1, 0, 0)


def test_greedy_length_check(instance_a):
    with pytest.raises(LengthMismatch):
        greedy_discretize(instance_a, [0.5])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_greedy_always_feasible(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_max=20, c_max=40)
    sol = greedy_discretize(inst, rng.uniform(size=inst.n))
    assert sol.total_weight <= effective_capacity(inst)


@pytest.fixture
def solved16():
    return [solve(i) for i in sample_instances(SamplerConfig(n=16, capacity=16, seed=1))]


def test_evaluate_oracle_predictions(solved16):
    preds = [Prediction(s.id, tuple(map(float, s.solution.selected))) for s in solved16]
    report = evaluate(solved16, preds)
    assert report.micro_f1 == 1.0 and report.exact_match == 1.0
    assert report.num_samples == 64 and report.fp == 0 and report.fn == 0
    rec = report.to_record()
    assert rec["per_config"]["n=16,C=16"]["exact_match"] == 1.0


def test_evaluate_zero_predictions(solved16):
    assert all(any(s.solution.selected) for s in solved16)
    preds = [Prediction(s.id, (0.0,) * 16) for s in solved16]
    assert evaluate(solved16, preds).exact_match == 0.0


def test_evaluate_soft_reconstruction_on_true_tables():
    solved = []
    for n, c in ((16, 16), (64, 64), (32, 16)):
        solved += [solve(i) for i in sample_instances(SamplerConfig(n=n, capacity=c, num_samples=20, seed=9))]
    preds = [
        Prediction(s.id, tuple(soft_reconstruct(s.instance, s.tables.decision_table).soft_selected))
        for s in solved
    ]
    report = evaluate(solved, preds)
    assert report.exact_match == 1.0 and report.micro_f1 == 1.0
    assert set(report.per_config) == {(16, 16), (64, 64), (32, 16)}


def test_evaluate_errors(solved16):
    with pytest.raises(MissingTruth):
        evaluate(solved16, [Prediction("nope", ())])
    p = Prediction(solved16[0].id, (0.0,) * 16)
    with pytest.raises(DuplicateId):
        evaluate(solved16, [p, p])
    with pytest.raises(DuplicateId):
        evaluate(solved16 + solved16[:1], [])
