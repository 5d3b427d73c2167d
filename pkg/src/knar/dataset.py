"""JSON Lines reading and writing for every record kind.

Kinds: ``instance``, ``solved``, ``construct``, ``reconstruct``, ``prediction``
and ``softrecon``. A file holds one kind. Reading checks every line against its
schema and the invariants of the decoded type, and raises
:class:`SchemaViolation` with the 1-based line number.
"""

from __future__ import annotations

import io
import json
import math
import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from knar.errors import KnarError, SchemaViolation
from knar.instance import KnapsackInstance, Solution, effective_capacity
from knar.oracle import DpTables, SolvedInstance, check_tables
from knar.trajectory import (
    ConstructionStep,
    ConstructionTrajectory,
    ReconstructionStep,
    ReconstructionTrajectory,
    validate_trajectory,
)


@dataclass(frozen=True)
class Prediction:
    """Model output for one instance: item probabilities and/or a decision-probability table."""

    id: str
    item_probs: tuple[float, ...] | None = None
    decision_probs: tuple[tuple[float, ...], ...] | None = None

    def to_record(self):
        rec = {"id": self.id}
        if self.item_probs is not None:
            rec["item_probs"] = list(self.item_probs)
        if self.decision_probs is not None:
            rec["decision_probs"] = [list(r) for r in self.decision_probs]
        return rec


@dataclass(frozen=True)
class SoftReconRecord:
    id: str
    soft_selected: tuple[float, ...]
    row_mass_error: float

    def to_record(self):
        return {
            "id": self.id,
            "soft_selected": list(self.soft_selected),
            "row_mass_error": self.row_mass_error,
        }

    @property
    def item_probs(self):
        return self.soft_selected


def _require(rec, key, typ, what=None):
    if key not in rec:
        raise SchemaViolation(f"missing field {key!r}")
    val = rec[key]
    if typ is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    elif typ is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    else:
        ok = isinstance(val, typ)
    if not ok:
        raise SchemaViolation(f"field {key!r} must be {what or typ.__name__}")
    return val


def _num_list(rec, key):
    xs = _require(rec, key, list, "a list of numbers")
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in xs):
        raise SchemaViolation(f"field {key!r} must be a list of numbers")
    return xs


def _bit_list(xs, key):
    if not isinstance(xs, list) or not all(
        isinstance(b, int) and not isinstance(b, bool) and b in (0, 1) for b in xs
    ):
        raise SchemaViolation(f"field {key!r} must contain only bits 0/1")
    return xs


def _matrix(rec, key, bits=False):
    rows = _require(rec, key, list, "a list of rows")
    for r in rows:
        if bits:
            _bit_list(r, key)
        elif not isinstance(r, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in r
        ):
            raise SchemaViolation(f"field {key!r} must be a list of number rows")
    return rows


def parse_instance(rec) -> KnapsackInstance:
    ident = _require(rec, "id", str)
    n = _require(rec, "n", int)
    weights = _require(rec, "weights", list)
    if not all(isinstance(w, int) and not isinstance(w, bool) for w in weights):
        raise SchemaViolation("field 'weights' must be a list of integers")
    values = _num_list(rec, "values")
    inst = KnapsackInstance(
        tuple(weights), tuple(values), _require(rec, "capacity", int),
        _require(rec, "w_max", int), ident,
    )
    if n != inst.n:
        raise SchemaViolation(f"n={n} but {inst.n} weights")
    return inst


def parse_solved(rec) -> SolvedInstance:
    inst = parse_instance(rec)
    sel = _bit_list(_require(rec, "optimal_selection", list), "optimal_selection")
    opt = _require(rec, "optimal_value", float)
    dp = _matrix(rec, "dp")
    decision = _matrix(rec, "decision", bits=True)
    cap = effective_capacity(inst)
    try:
        value = np.asarray(dp, dtype=np.float64).reshape(inst.n + 1, cap + 1)
        dec = np.asarray(decision, dtype=np.uint8).reshape(inst.n, cap + 1)
    except ValueError:
        raise SchemaViolation(
            f"dp/decision shapes do not match n={inst.n}, C_eff={cap}"
        ) from None
    tables = DpTables(value, dec)
    check_tables(inst, tables)
    sol = Solution.from_selection(inst, sel)
    if sol.total_weight > cap:
        raise SchemaViolation("optimal_selection exceeds the effective capacity")
    if not math.isclose(sol.total_value, opt, rel_tol=0, abs_tol=1e-9) or opt != value[-1, -1]:
        raise SchemaViolation("optimal_value disagrees with the selection or dp table")
    return SolvedInstance(inst, tables, sol)


def parse_trajectory(rec):
    report = validate_trajectory(rec)
    if not report.ok:
        raise SchemaViolation(report.violation)
    if rec["kind"] == "construct":
        steps = tuple(
            ConstructionStep(
                s["t"], tuple(s["weight_onehot"]), float(s["value"]),
                tuple(float(x) for x in s["dp_row"]), tuple(s["decision_row"]),
            )
            for s in rec["steps"]
        )
        return ConstructionTrajectory(_require(rec, "id", str), rec["num_nodes"], steps)
    steps = tuple(
        ReconstructionStep(s["alt"], s["cur_item"], s["rem_cap"], tuple(s["selected"]))
        for s in rec["steps"]
    )
    return ReconstructionTrajectory(
        _require(rec, "id", str), rec["num_nodes"], steps, tuple(rec["output"])
    )


def _check_unit_interval(xs, key, slack=0.0):
    arr = np.asarray(xs, dtype=np.float64)
    if arr.size and not np.all((arr >= -slack) & (arr <= 1 + slack)):
        raise SchemaViolation(f"field {key!r} must lie in [0, 1]")


def parse_prediction(rec) -> Prediction:
    ident = _require(rec, "id", str)
    item_probs = decision_probs = None
    if "item_probs" in rec:
        item_probs = tuple(float(x) for x in _num_list(rec, "item_probs"))
        if not all(math.isfinite(x) for x in item_probs):
            raise SchemaViolation("field 'item_probs' must be finite")
    if "decision_probs" in rec:
        rows = _matrix(rec, "decision_probs")
        if len({len(r) for r in rows}) > 1:
            raise SchemaViolation("field 'decision_probs' rows differ in length")
        _check_unit_interval(rows, "decision_probs")
        decision_probs = tuple(tuple(float(x) for x in r) for r in rows)
    if item_probs is None and decision_probs is None:
        raise SchemaViolation("prediction needs 'item_probs' or 'decision_probs'")
    return Prediction(ident, item_probs, decision_probs)


def parse_softrecon(rec) -> SoftReconRecord:
    soft = _num_list(rec, "soft_selected")
    # mass sums may overshoot 1 by round-off
    _check_unit_interval(soft, "soft_selected", slack=1e-9)
    return SoftReconRecord(
        _require(rec, "id", str),
        tuple(float(x) for x in soft),
        float(_require(rec, "row_mass_error", float)),
    )


PARSERS = {
    "instance": parse_instance,
    "solved": parse_solved,
    "construct": parse_trajectory,
    "reconstruct": parse_trajectory,
    "prediction": parse_prediction,
    "softrecon": parse_softrecon,
}


def record_kind(rec: dict) -> str:
    if "kind" in rec:
        return str(rec["kind"])
    if "soft_selected" in rec:
        return "softrecon"
    if "item_probs" in rec or "decision_probs" in rec:
        return "prediction"
    if "dp" in rec or "decision" in rec:
        return "solved"
    return "instance"


def _family(kind):
    return "trajectory" if kind in ("construct", "reconstruct") else kind


def _to_record(obj):
    return obj if isinstance(obj, dict) else obj.to_record()


def dumps(rec: dict) -> str:
    # json emits the shortest repr that round-trips each float exactly
    return json.dumps(rec, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


@contextmanager
def _open_out(destination):
    """Text sink; paths are written to a temp file and renamed on success."""
    if destination in ("-", None):
        yield sys.stdout
        sys.stdout.flush()
        return
    if isinstance(destination, io.TextIOBase) or hasattr(destination, "write"):
        yield destination
        return
    path = Path(destination)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_dataset(records, destination) -> int:
    """Write records (typed objects or dicts) as JSON Lines; returns the count."""
    lines = []
    kind = None
    for k, obj in enumerate(records, start=1):
        rec = _to_record(obj)
        this = record_kind(rec)
        if kind is None:
            kind = this
        elif _family(this) != _family(kind):
            raise SchemaViolation(f"mixed record kinds {kind!r} and {this!r}", line=k)
        lines.append(dumps(rec))
    with _open_out(destination) as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    return len(lines)


def _iter_lines(source):
    if source in ("-", None):
        yield from sys.stdin
    elif hasattr(source, "read"):
        yield from source
    else:
        with open(source, encoding="utf-8") as fh:
            yield from fh


def read_dataset(source, kind=None) -> list:
    """Decode and validate every line; ``kind`` pins the expected record kind."""
    out = []
    for k, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc.msg}", line=k) from None
        if not isinstance(rec, dict):
            raise SchemaViolation("record must be a JSON object", line=k)
        this = record_kind(rec)
        if this not in PARSERS:
            raise SchemaViolation(f"unknown record kind {this!r}", line=k)
        if kind is None:
            kind = this
        elif _family(this) != _family(kind):
            raise SchemaViolation(f"expected {kind!r} record, got {this!r}", line=k)
        try:
            out.append(PARSERS[this](rec))
        except SchemaViolation as exc:
            raise SchemaViolation(str(exc), line=k) from None
        except (KnarError, TypeError) as exc:
            raise SchemaViolation(f"{type(exc).__name__}: {exc}", line=k) from None
    return out
