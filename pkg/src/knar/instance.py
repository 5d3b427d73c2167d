"""Knapsack instances, seeded samplers and reductions from Subset Sum / Partition."""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field

import numpy as np

from knar.errors import (
    LengthMismatch,
    NegativeCapacity,
    NegativeOrNonFiniteValue,
    WeightOutOfRange,
)

DEFAULT_W_MAX = 8
DEFAULT_NUM_SAMPLES = 64

# (n, C) configurations: the in-distribution training regime followed by the
# out-of-distribution test grid.
TRAIN_CONFIG = (16, 16)
OOD_CONFIGS = ((16, 64), (32, 32), (64, 16), (64, 64))
EVAL_GRID = (TRAIN_CONFIG,) + OOD_CONFIGS

_MASK64 = (1 << 64) - 1


def _as_int(x, what):
    try:
        return operator.index(x)
    except TypeError:
        if isinstance(x, float) and x.is_integer():
            return int(x)
        raise TypeError(f"{what} must be an integer, got {x!r}") from None


@dataclass(frozen=True)
class KnapsackInstance:
    """A 0/1 knapsack problem with integral weights bounded by ``w_max``."""

    weights: tuple[int, ...]
    values: tuple[float, ...]
    capacity: int
    w_max: int = DEFAULT_W_MAX
    id: str = ""

    def __post_init__(self):
        weights = tuple(_as_int(w, "weight") for w in self.weights)
        values = tuple(float(v) for v in self.values)
        capacity = _as_int(self.capacity, "capacity")
        w_max = _as_int(self.w_max, "w_max")
        if len(weights) != len(values):
            raise LengthMismatch(
                f"{len(weights)} weights but {len(values)} values"
            )
        if w_max < 1:
            raise WeightOutOfRange(f"w_max must be >= 1, got {w_max}")
        for i, w in enumerate(weights):
            if not 1 <= w <= w_max:
                raise WeightOutOfRange(
                    f"weight[{i}]={w} outside [1, {w_max}]"
                )
        for i, v in enumerate(values):
            if not math.isfinite(v) or v < 0:
                raise NegativeOrNonFiniteValue(f"value[{i}]={v!r}")
        if capacity < 0:
            raise NegativeCapacity(f"capacity={capacity}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "capacity", capacity)
        object.__setattr__(self, "w_max", w_max)
        object.__setattr__(self, "id", str(self.id))

    @property
    def n(self) -> int:
        return len(self.weights)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "n": self.n,
            "capacity": self.capacity,
            "w_max": self.w_max,
            "weights": list(self.weights),
            "values": list(self.values),
        }


def new_instance(weights, values, capacity, w_max=DEFAULT_W_MAX, id=""):
    """Validated constructor; raises a :class:`knar.errors.KnarError` subclass."""
    return KnapsackInstance(tuple(weights), tuple(values), capacity, w_max, id)


def effective_capacity(instance: KnapsackInstance) -> int:
    """Capacity clamped to ``n * w_max``; every DP table has this many columns minus one."""
    return min(instance.n * instance.w_max, instance.capacity)


@dataclass(frozen=True)
class Solution:
    selected: tuple[int, ...]
    total_weight: int
    total_value: float

    @classmethod
    def from_selection(cls, instance, selected):
        """Totals are accumulated in ascending item order, matching the DP's summation order."""
        bits = tuple(int(b) for b in selected)
        if len(bits) != instance.n:
            raise LengthMismatch(f"{len(bits)} bits for {instance.n} items")
        weight = 0
        value = 0.0
        for b, w, v in zip(bits, instance.weights, instance.values):
            if b:
                weight += w
                value += v
        return cls(bits, weight, value)


@dataclass(frozen=True)
class SamplerConfig:
    n: int
    capacity: int
    w_max: int = DEFAULT_W_MAX
    value_low: float = 0.0
    value_high: float = 1.0
    value_scale: float = 1.0
    num_samples: int = DEFAULT_NUM_SAMPLES
    seed: int = 0
    id_prefix: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.capacity < 0:
            raise NegativeCapacity(f"capacity={self.capacity}")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if not self.value_low < self.value_high:
            raise ValueError("value_low must be < value_high")
        if self.w_max < 1:
            raise ValueError("w_max must be >= 1")
        if not self.value_scale > 0:
            raise ValueError("value_scale must be positive")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """64-bit sub-seed for sample ``index``: splitmix64(splitmix64(seed) ^ index).

    Depends only on ``(seed, index)``, so samples can be generated in any order.
    """
    return _splitmix64(_splitmix64(seed & _MASK64) ^ (index & _MASK64))


def sample_instance(config: SamplerConfig, index: int) -> KnapsackInstance:
    rng = np.random.default_rng(derive_seed(config.seed, index))
    weights = rng.integers(1, config.w_max + 1, size=config.n)
    lo = config.value_low * config.value_scale
    hi = config.value_high * config.value_scale
    values = rng.uniform(lo, hi, size=config.n)
    # uniform() may round up to hi for some (lo, hi); keep the interval half-open
    values = np.where(values >= hi, np.nextafter(hi, lo), values)
    prefix = config.id_prefix or f"n{config.n}_C{config.capacity}_s{config.seed}"
    return KnapsackInstance(
        tuple(int(w) for w in weights),
        tuple(float(v) for v in values),
        config.capacity,
        config.w_max,
        f"{prefix}_{index:05d}",
    )


def sample_instances(config: SamplerConfig) -> list[KnapsackInstance]:
    return [sample_instance(config, k) for k in range(config.num_samples)]


def reduce_subset_sum(numbers, target, id="") -> KnapsackInstance:
    """Subset Sum as knapsack: weight = value = number, capacity = target.

    The subset-sum instance is solvable iff the optimal knapsack value equals ``target``.
    """
    numbers = [_as_int(x, "number") for x in numbers]
    target = _as_int(target, "target")
    w_max = max(numbers, default=1)
    return KnapsackInstance(
        tuple(numbers), tuple(float(x) for x in numbers), target, w_max, id
    )


def reduce_partition(numbers, id="") -> tuple[KnapsackInstance, int]:
    """Partition as Subset Sum with target ``sum // 2``.

    Returns ``(instance, feasible_parity)``; parity is 0 when the total is odd,
    in which case no equal partition exists whatever the knapsack optimum.
    """
    numbers = [_as_int(x, "number") for x in numbers]
    total = sum(numbers)
    return reduce_subset_sum(numbers, total // 2, id), int(total % 2 == 0)


def sample_subset_sum(num_samples, n_max, max_number, seed, n_min=1):
    """Random (numbers, target) pairs; target uniform on [0, sum(numbers)]."""
    out = []
    for k in range(num_samples):
        rng = np.random.default_rng(derive_seed(seed, k))
        n = int(rng.integers(n_min, n_max + 1))
        numbers = [int(x) for x in rng.integers(1, max_number + 1, size=n)]
        target = int(rng.integers(0, sum(numbers) + 1))
        out.append((numbers, target))
    return out


def sample_partition(num_samples, n_max, max_number, seed, n_min=1):
    out = []
    for k in range(num_samples):
        rng = np.random.default_rng(derive_seed(seed, k))
        n = int(rng.integers(n_min, n_max + 1))
        out.append([int(x) for x in rng.integers(1, max_number + 1, size=n)])
    return out
