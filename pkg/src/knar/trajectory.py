"""Hint trajectories for the construction and reconstruction phases.

Construction emits one step per item: the item's weight one-hot and value as
per-step input, with the matching DP value row and decision row as hints.

Reconstruction replays classical backtracking from (n, C_eff) with two steps
per item, visiting items n..1. Step A (``alt=0``) points at the item and updates
the selection. Step B (``alt=1``) moves the remaining-capacity pointer.
``cur_item`` and ``rem_cap`` are node indices into the reconstruction graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from knar.encoding import weight_onehot
from knar.errors import DimensionMismatch, InconsistentTables
from knar.instance import KnapsackInstance, effective_capacity
from knar.oracle import DpTables


@dataclass(frozen=True)
class ConstructionStep:
    t: int
    weight_onehot: tuple[int, ...]
    value: float
    dp_row: tuple[float, ...]
    decision_row: tuple[int, ...]

    def to_record(self):
        return {
            "t": self.t,
            "weight_onehot": list(self.weight_onehot),
            "value": self.value,
            "dp_row": list(self.dp_row),
            "decision_row": list(self.decision_row),
        }


@dataclass(frozen=True)
class ConstructionTrajectory:
    id: str
    num_nodes: int
    steps: tuple[ConstructionStep, ...]

    kind = "construct"

    def to_record(self):
        return {
            "id": self.id,
            "kind": self.kind,
            "num_nodes": self.num_nodes,
            "steps": [s.to_record() for s in self.steps],
        }

    def decision_table(self):
        return np.array([s.decision_row for s in self.steps], dtype=np.uint8).reshape(
            len(self.steps), self.num_nodes
        )


@dataclass(frozen=True)
class ReconstructionStep:
    alt: int
    cur_item: int
    rem_cap: int
    selected: tuple[int, ...]

    def to_record(self):
        return {
            "alt": self.alt,
            "cur_item": self.cur_item,
            "rem_cap": self.rem_cap,
            "selected": list(self.selected),
        }


@dataclass(frozen=True)
class ReconstructionTrajectory:
    id: str
    num_nodes: int
    steps: tuple[ReconstructionStep, ...]
    output: tuple[int, ...]

    kind = "reconstruct"

    def to_record(self):
        return {
            "id": self.id,
            "kind": self.kind,
            "num_nodes": self.num_nodes,
            "steps": [s.to_record() for s in self.steps],
            "output": list(self.output),
        }


def construction_trajectory(instance: KnapsackInstance, tables: DpTables) -> ConstructionTrajectory:
    cap = effective_capacity(instance)
    value = np.asarray(tables.value_table)
    decision = np.asarray(tables.decision_table)
    if value.shape != (instance.n + 1, cap + 1) or decision.shape != (instance.n, cap + 1):
        raise DimensionMismatch(
            f"tables {value.shape}/{decision.shape} do not match n={instance.n}, C={cap}"
        )
    steps = tuple(
        ConstructionStep(
            t,
            tuple(int(b) for b in weight_onehot(w, instance.w_max)),
            float(v),
            tuple(float(x) for x in value[t]),
            tuple(int(b) for b in decision[t - 1]),
        )
        for t, (w, v) in enumerate(zip(instance.weights, instance.values), start=1)
    )
    return ConstructionTrajectory(instance.id, cap + 1, steps)


def reconstruction_trajectory(instance: KnapsackInstance, decision_bits) -> ReconstructionTrajectory:
    n, cap = instance.n, effective_capacity(instance)
    bits = np.asarray(decision_bits)
    if bits.size == 0 and n == 0:
        bits = np.zeros((0, cap + 1), dtype=np.uint8)
    if bits.shape != (n, cap + 1):
        raise DimensionMismatch(f"decision table shape {bits.shape}, want {(n, cap + 1)}")
    selected = [0] * n
    c = cap
    steps = []
    for i in range(n, 0, -1):
        item_node = cap + i
        if bits[i - 1, c]:
            selected[i - 1] = 1
        steps.append(ReconstructionStep(0, item_node, c, tuple(selected)))
        if selected[i - 1]:
            w = instance.weights[i - 1]
            if w > c:
                raise InconsistentTables(f"item {i} selected at capacity {c} but weighs {w}")
            c -= w
        steps.append(ReconstructionStep(1, item_node, c, tuple(selected)))
    return ReconstructionTrajectory(instance.id, cap + 1 + n, tuple(steps), tuple(selected))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violation: str | None = None

    def __bool__(self):
        return self.ok


def _is_bits(xs):
    return isinstance(xs, list) and all(isinstance(b, int) and b in (0, 1) for b in xs)


def _fail(msg):
    return ValidationReport(False, msg)


def _validate_construct(rec, n):
    steps = rec["steps"]
    num_nodes = rec["num_nodes"]
    if n is not None and len(steps) != n:
        return _fail(f"step count: {len(steps)} steps for n={n}")
    prev_dp = None
    for k, s in enumerate(steps, start=1):
        where = f"step {k}"
        if s.get("t") != k:
            return _fail(f"{where}: t={s.get('t')!r}, want {k}")
        oh, dp, dec = s.get("weight_onehot"), s.get("dp_row"), s.get("decision_row")
        if not _is_bits(oh) or sum(oh) != 1 or oh[0] == 1:
            return _fail(f"{where}: weight_onehot must have a single 1 outside slot 0")
        if not isinstance(dp, list) or len(dp) != num_nodes:
            return _fail(f"{where}: shape: dp_row has {len(dp) if isinstance(dp, list) else '?'} entries, want {num_nodes}")
        if not _is_bits(dec) or len(dec) != num_nodes:
            return _fail(f"{where}: shape: decision_row must be {num_nodes} bits")
        if not isinstance(s.get("value"), (int, float)):
            return _fail(f"{where}: value must be a number")
        dp = np.asarray(dp, dtype=np.float64)
        if np.any(np.diff(dp) < 0):
            return _fail(f"{where}: dp_row decreases along capacity")
        if prev_dp is not None and np.any(dp < prev_dp):
            return _fail(f"{where}: dp_row decreases relative to the previous step")
        w = oh.index(1)
        if any(dec[:w]):
            return _fail(f"{where}: decision set at a capacity below the item weight")
        prev_dp = dp
    return ValidationReport(True)


def _validate_reconstruct(rec, n):
    steps = rec["steps"]
    num_nodes = rec["num_nodes"]
    output = rec.get("output")
    if not _is_bits(output):
        return _fail("output must be a list of bits")
    items = len(output)
    if n is not None and items != n:
        return _fail(f"step count: output has {items} bits for n={n}")
    if len(steps) != 2 * items:
        return _fail(f"step count: {len(steps)} steps, want {2 * items}")
    for k, s in enumerate(steps):
        if s.get("alt") != k % 2:
            return _fail(f"step {k + 1}: alternation violated (alt={s.get('alt')!r})")
    cap_nodes = num_nodes - items
    if cap_nodes < 1:
        return _fail("shape: num_nodes leaves no capacity nodes")
    prev_cap, prev_sel = cap_nodes - 1, [0] * items
    for k, s in enumerate(steps):
        where = f"step {k + 1}"
        sel, cur, rem = s.get("selected"), s.get("cur_item"), s.get("rem_cap")
        if not _is_bits(sel) or len(sel) != items:
            return _fail(f"{where}: shape: selected must be {items} bits")
        if not isinstance(cur, int) or not cap_nodes <= cur < num_nodes:
            return _fail(f"{where}: cur_item {cur!r} is not an item node")
        item = items - k // 2
        if cur != cap_nodes + item - 1:
            return _fail(f"{where}: cur_item {cur} out of order, want {cap_nodes + item - 1}")
        if not isinstance(rem, int) or not 0 <= rem < cap_nodes:
            return _fail(f"{where}: rem_cap {rem!r} is not a capacity node")
        if rem > prev_cap:
            return _fail(f"{where}: remaining capacity increased")
        if any(a > b for a, b in zip(prev_sel, sel)):
            return _fail(f"{where}: selection not monotone")
        if s["alt"] == 0:
            if rem != prev_cap:
                return _fail(f"{where}: capacity moved during a selection step")
            changed = [j for j, (a, b) in enumerate(zip(prev_sel, sel)) if a != b]
            if changed and changed != [item - 1]:
                return _fail(f"{where}: selection changed for an item not under consideration")
        elif sel != prev_sel:
            return _fail(f"{where}: selection changed during a capacity step")
        prev_cap, prev_sel = rem, sel
    if prev_sel != output:
        return _fail("output differs from the final selection")
    return ValidationReport(True)


def validate_trajectory(record, n=None) -> ValidationReport:
    """Structural check of a trajectory (object or decoded JSON dict).

    Returns a report carrying the first violation found. ``n``, if given, also
    pins the expected step count.
    """
    if hasattr(record, "to_record"):
        record = record.to_record()
    if not isinstance(record, dict):
        return _fail("record must be an object")
    kind = record.get("kind")
    num_nodes = record.get("num_nodes")
    if not isinstance(num_nodes, int) or num_nodes < 1:
        return _fail("shape: num_nodes must be a positive integer")
    if not isinstance(record.get("steps"), list) or not all(
        isinstance(s, dict) for s in record["steps"]
    ):
        return _fail("steps must be a list of objects")
    if kind == "construct":
        return _validate_construct(record, n)
    if kind == "reconstruct":
        return _validate_reconstruct(record, n)
    return _fail(f"unknown trajectory kind {kind!r}")
