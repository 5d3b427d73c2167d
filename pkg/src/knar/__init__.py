"""Knapsack DP oracle, differentiable reconstruction and hint trajectories for neural algorithmic reasoning."""

from knar.instance import (
    KnapsackInstance,
    SamplerConfig,
    Solution,
    effective_capacity,
    new_instance,
    reduce_partition,
    reduce_subset_sum,
    sample_instances,
)
from knar.oracle import DpTables, SolvedInstance, backtrack, brute_force, build_dp, solve
from knar.softrecon import (
    finite_difference_grad,
    harden,
    soft_reconstruct,
    soft_reconstruct_vjp,
)
from knar.encoding import (
    build_construction_graph,
    build_reconstruction_graph,
    edge_length_encoding,
)
from knar.trajectory import (
    construction_trajectory,
    reconstruction_trajectory,
    validate_trajectory,
)
from knar.dataset import read_dataset, write_dataset
from knar.processor import ProcessorConfig, encode_probes, homogeneity_check, init_params, mp_step
from knar.metrics import EvalReport, evaluate, greedy_discretize, micro_f1

__version__ = "0.1.0"
