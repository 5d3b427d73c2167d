"""Exact pseudo-polynomial DP, classical backtracking and a brute-force reference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from knar.errors import InconsistentTables, TooLarge
from knar.instance import KnapsackInstance, Solution, effective_capacity

BRUTE_FORCE_MAX_N = 24
_BRUTE_FORCE_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class DpTables:
    """``value_table`` is (n+1, C+1) with row 0 the base case; ``decision_table``
    is (n, C+1) and row ``t - 1`` belongs to item ``t``."""

    value_table: np.ndarray
    decision_table: np.ndarray

    @property
    def n(self):
        return self.decision_table.shape[0]

    @property
    def capacity(self):
        return self.value_table.shape[1] - 1


def build_dp(instance: KnapsackInstance) -> DpTables:
    """Fill the value and decision tables row by row.

    An item is marked as included only when including it is strictly better,
    so ties resolve to exclusion.
    """
    n = instance.n
    cap = effective_capacity(instance)
    value = np.zeros((n + 1, cap + 1), dtype=np.float64)
    decision = np.zeros((n, cap + 1), dtype=np.uint8)
    for i, (w, v) in enumerate(zip(instance.weights, instance.values), start=1):
        prev = value[i - 1]
        row = prev.copy()
        if w <= cap:
            include = prev[: cap + 1 - w] + v
            better = include > prev[w:]
            row[w:][better] = include[better]
            decision[i - 1, w:] = better
        value[i] = row
    value.setflags(write=False)
    decision.setflags(write=False)
    return DpTables(value, decision)


def backtrack(instance: KnapsackInstance, tables: DpTables) -> Solution:
    """Walk the decision table from (n, C_eff) down to row 1."""
    decision = np.asarray(tables.decision_table)
    c = effective_capacity(instance)
    if decision.shape != (instance.n, c + 1):
        raise InconsistentTables(
            f"decision table shape {decision.shape}, want {(instance.n, c + 1)}"
        )
    selected = [0] * instance.n
    for i in range(instance.n, 0, -1):
        if decision[i - 1, c]:
            w = instance.weights[i - 1]
            if w > c:
                raise InconsistentTables(
                    f"item {i} selected at capacity {c} but weighs {w}"
                )
            selected[i - 1] = 1
            c -= w
    return Solution.from_selection(instance, selected)


def check_tables(instance: KnapsackInstance, tables: DpTables) -> None:
    """Raise :class:`InconsistentTables` unless every DpTables invariant holds."""
    n, cap = instance.n, effective_capacity(instance)
    value = np.asarray(tables.value_table, dtype=np.float64)
    decision = np.asarray(tables.decision_table)
    if value.shape != (n + 1, cap + 1):
        raise InconsistentTables(f"value table shape {value.shape}, want {(n + 1, cap + 1)}")
    if decision.shape != (n, cap + 1):
        raise InconsistentTables(f"decision table shape {decision.shape}, want {(n, cap + 1)}")
    if not np.isin(decision, (0, 1)).all():
        raise InconsistentTables("decision table entries must be 0 or 1")
    if np.any(value[0] != 0):
        raise InconsistentTables("row 0 of the value table must be zero")
    if np.any(np.diff(value, axis=1) < 0) or np.any(np.diff(value, axis=0) < 0):
        raise InconsistentTables("value table must be non-decreasing in c and i")
    cols = np.arange(cap + 1)
    for i in range(1, n + 1):
        w, v = instance.weights[i - 1], instance.values[i - 1]
        take = decision[i - 1].astype(bool)
        if np.any(take & (cols < w)):
            raise InconsistentTables(f"row {i}: item selected where it does not fit")
        tc = cols[take]
        if np.any(value[i, tc] != value[i - 1, tc - w] + v):
            raise InconsistentTables(f"row {i}: include cell disagrees with recurrence")
        if np.any(value[i, ~take] != value[i - 1, ~take]):
            raise InconsistentTables(f"row {i}: exclude cell disagrees with recurrence")


def brute_force(instance: KnapsackInstance) -> Solution:
    """Enumerate all 2^n subsets.

    Ties between optimal subsets favour lower-index items: reading the selection
    as a bit string with item 1 most significant, the largest one wins, so
    ``[1, 0]`` beats ``[0, 1]``.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 0:
        return Solution((), 0, 0.0)
    cap = effective_capacity(instance)
    weights = np.asarray(instance.weights, dtype=np.int64)
    values = np.asarray(instance.values, dtype=np.float64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_value, best_mask = -1.0, 0
    for start in range(0, 1 << n, _BRUTE_FORCE_CHUNK):
        masks = np.arange(start, min(start + _BRUTE_FORCE_CHUNK, 1 << n), dtype=np.int64)
        bits = (masks[:, None] >> shifts) & 1
        tot_w = bits @ weights
        tot_v = np.where(tot_w <= cap, bits @ values, -1.0)
        k = len(tot_v) - 1 - int(np.argmax(tot_v[::-1]))
        if tot_v[k] >= best_value:
            best_value, best_mask = float(tot_v[k]), int(masks[k])
    selected = [(best_mask >> int(s)) & 1 for s in shifts]
    return Solution.from_selection(instance, selected)


@dataclass(frozen=True, eq=False)
class SolvedInstance:
    instance: KnapsackInstance
    tables: DpTables
    solution: Solution

    @property
    def id(self):
        return self.instance.id

    def to_record(self) -> dict:
        rec = self.instance.to_record()
        rec["optimal_value"] = float(self.solution.total_value)
        rec["optimal_selection"] = list(self.solution.selected)
        rec["dp"] = self.tables.value_table.tolist()
        rec["decision"] = self.tables.decision_table.astype(int).tolist()
        return rec


def solve(instance: KnapsackInstance) -> SolvedInstance:
    tables = build_dp(instance)
    return SolvedInstance(instance, tables, backtrack(instance, tables))


def reduction_solvable(instance: KnapsackInstance, feasible_parity: int = 1) -> bool:
    """Solvability of a reduced Subset Sum / Partition instance: the optimum hits the target."""
    best = backtrack(instance, build_dp(instance)).total_value
    return bool(feasible_parity) and best == instance.capacity
