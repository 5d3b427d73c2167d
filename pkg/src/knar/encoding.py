"""Graph inputs for the construction and reconstruction phases.

Weight one-hots have ``w_max + 1`` slots. Slot 0 means "no weight" and is used
to pad capacity nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from knar.errors import DimensionMismatch
from knar.instance import KnapsackInstance, effective_capacity

DEFAULT_LENGTH_CATEGORIES = 10


def edge_length_encoding(num_nodes, M=DEFAULT_LENGTH_CATEGORIES, capacity_node_count=None):
    """One-hot distance categories, shape (num_nodes, num_nodes, M).

    Pairs of capacity nodes get ``min(|i - j|, M - 1)``; any pair touching a node
    at index ``>= capacity_node_count`` gets the cutoff category ``M - 1``.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if capacity_node_count is None:
        capacity_node_count = num_nodes
    if not 0 <= capacity_node_count <= num_nodes:
        raise ValueError("capacity_node_count must lie in [0, num_nodes]")
    idx = np.arange(num_nodes)
    cat = np.minimum(np.abs(idx[:, None] - idx[None, :]), M - 1)
    is_item = idx >= capacity_node_count
    cat[is_item[:, None] | is_item[None, :]] = M - 1
    return np.eye(M, dtype=np.uint8)[cat]


def weight_onehot(weight, w_max):
    out = np.zeros(w_max + 1, dtype=np.uint8)
    out[weight] = 1
    return out


def node_positions(num_nodes, randomize=False, rng=None):
    """Evenly spaced positions in [0, 1], or sorted uniform draws if ``randomize``."""
    if randomize:
        rng = np.random.default_rng(rng)
        return np.sort(rng.uniform(0.0, 1.0, size=num_nodes))
    if num_nodes <= 1:
        return np.zeros(num_nodes)
    return np.arange(num_nodes) / (num_nodes - 1)


@dataclass(frozen=True, eq=False)
class StepInput:
    weight_onehot: np.ndarray
    value: float


@dataclass(frozen=True, eq=False)
class ConstructionGraph:
    num_nodes: int
    node_pos: np.ndarray
    edge_length: np.ndarray
    per_step_graph_inputs: tuple[StepInput, ...]

    def probes(self, t):
        """Input arrays for step ``t`` (1-based): node, edge and graph features."""
        step = self.per_step_graph_inputs[t - 1]
        node = self.node_pos[:, None]
        graph = np.concatenate([step.weight_onehot.astype(np.float64), [step.value]])
        return node, self.edge_length.astype(np.float64), graph


def build_construction_graph(instance: KnapsackInstance, M=DEFAULT_LENGTH_CATEGORIES,
                             randomize_pos=False, rng=None) -> ConstructionGraph:
    num_nodes = effective_capacity(instance) + 1
    steps = tuple(
        StepInput(weight_onehot(w, instance.w_max), float(v))
        for w, v in zip(instance.weights, instance.values)
    )
    return ConstructionGraph(
        num_nodes,
        node_positions(num_nodes, randomize_pos, rng),
        edge_length_encoding(num_nodes, M),
        steps,
    )


@dataclass(frozen=True, eq=False)
class ReconstructionGraph:
    num_nodes: int
    capacity_node_count: int
    node_pos: np.ndarray
    node_weight_onehot: np.ndarray
    node_is_item: np.ndarray
    edge_decision: np.ndarray
    edge_length: np.ndarray

    def item_node(self, k):
        """Node index of item ``k`` (1-based)."""
        return self.capacity_node_count + k - 1

    def probes(self):
        node = np.concatenate(
            [self.node_pos[:, None], self.node_weight_onehot, self.node_is_item[:, None]],
            axis=1,
        ).astype(np.float64)
        edge = np.concatenate(
            [self.edge_decision[:, :, None], self.edge_length], axis=2
        ).astype(np.float64)
        return node, edge, np.zeros(0)


def build_reconstruction_graph(instance: KnapsackInstance, decision_probs,
                               M=DEFAULT_LENGTH_CATEGORIES, randomize_pos=False,
                               rng=None) -> ReconstructionGraph:
    """Capacity nodes ``0..C`` followed by one node per item.

    ``edge_decision`` is symmetric: entry (c, item k) and (item k, c) both hold
    ``decision_probs[k - 1][c]``; every other pair is 0.
    """
    cap = effective_capacity(instance)
    n = instance.n
    probs = np.asarray(decision_probs, dtype=np.float64)
    if probs.size == 0 and n == 0:
        probs = np.zeros((0, cap + 1))
    if probs.shape != (n, cap + 1):
        raise DimensionMismatch(f"decision probs shape {probs.shape}, want {(n, cap + 1)}")
    cap_nodes = cap + 1
    num_nodes = cap_nodes + n
    onehot = np.zeros((num_nodes, instance.w_max + 1), dtype=np.uint8)
    onehot[:cap_nodes, 0] = 1
    onehot[np.arange(cap_nodes, num_nodes), list(instance.weights)] = 1
    is_item = np.zeros(num_nodes, dtype=np.uint8)
    is_item[cap_nodes:] = 1
    edge_decision = np.zeros((num_nodes, num_nodes))
    edge_decision[:cap_nodes, cap_nodes:] = probs.T
    edge_decision[cap_nodes:, :cap_nodes] = probs
    return ReconstructionGraph(
        num_nodes,
        cap_nodes,
        node_positions(num_nodes, randomize_pos, rng),
        onehot,
        is_item,
        edge_decision,
        edge_length_encoding(num_nodes, M, cap_nodes),
    )
