"""Differentiable reconstruction from a decision-probability table.

Instead of following one backtracking path, probability mass over
(item, remaining capacity) states is split at each cell: a fraction ``d`` moves
to ``c - w_i`` (item taken) and ``1 - d`` stays at ``c``. The expected inclusion
of item ``i`` is the mass-weighted sum of its decision probabilities. Cells
where the item cannot fit are masked to ``d = 0``.

Array conventions: ``probs[i - 1]`` is the row for item ``i``; ``reach_mass[i]``
is the distribution over capacities when item ``i`` is about to be considered,
so row ``n`` is the start (all mass at ``C_eff``) and row 0 is terminal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from knar.errors import DimensionMismatch, ProbOutOfRange
from knar.instance import KnapsackInstance, derive_seed, effective_capacity


@dataclass(frozen=True, eq=False)
class SoftReconResult:
    soft_selected: np.ndarray
    reach_mass: np.ndarray

    def row_mass_error(self) -> float:
        if self.reach_mass.size == 0:
            return 0.0
        return float(np.max(np.abs(self.reach_mass.sum(axis=1) - 1.0)))


def _check_probs(instance, probs):
    probs = np.asarray(probs, dtype=np.float64)
    shape = (instance.n, effective_capacity(instance) + 1)
    if probs.shape != shape:
        if probs.size == 0 and shape[0] == 0:
            return np.zeros(shape)
        raise DimensionMismatch(f"probs shape {probs.shape}, want {shape}")
    if not np.all((probs >= 0.0) & (probs <= 1.0)):
        raise ProbOutOfRange("decision probabilities must lie in [0, 1]")
    return probs


def feasibility_mask(instance: KnapsackInstance) -> np.ndarray:
    """(n, C+1) boolean table, True where item ``i`` fits into capacity ``c``."""
    cols = np.arange(effective_capacity(instance) + 1)
    w = np.asarray(instance.weights, dtype=np.int64).reshape(-1, 1)
    return cols[None, :] >= w


def masked_probs(instance, probs) -> np.ndarray:
    probs = _check_probs(instance, probs)
    return np.where(feasibility_mask(instance), probs, 0.0)


def _forward(weights, d):
    n, width = d.shape
    reach = np.zeros((n + 1, width))
    if width:
        reach[n, width - 1] = 1.0
    soft = np.zeros(n)
    for i in range(n, 0, -1):
        m = reach[i]
        di = d[i - 1]
        taken = m * di
        soft[i - 1] = taken.sum()
        w = weights[i - 1]
        nxt = m * (1.0 - di)
        if w < width:
            nxt[: width - w] += taken[w:]
        reach[i - 1] = nxt
    return soft, reach


def soft_reconstruct(instance: KnapsackInstance, probs) -> SoftReconResult:
    """Forward mass-splitting recursion; uses only additions and multiplications."""
    d = masked_probs(instance, probs)
    soft, reach = _forward(instance.weights, d)
    return SoftReconResult(soft, reach)


def soft_reconstruct_vjp(instance: KnapsackInstance, probs, cotangent) -> np.ndarray:
    """Gradient of ``sum(cotangent * soft_selected)`` with respect to ``probs``.

    Adjoints of ``reach_mass`` are propagated from row 0 back to row n. Masked
    (infeasible) cells receive exactly zero.
    """
    mask = feasibility_mask(instance)
    d = masked_probs(instance, probs)
    g = np.asarray(cotangent, dtype=np.float64)
    n, width = d.shape
    if g.shape != (n,):
        raise DimensionMismatch(f"cotangent shape {g.shape}, want {(n,)}")
    _, reach = _forward(instance.weights, d)

    grad_d = np.zeros_like(d)
    # adjoint of reach[i - 1]; row 0 feeds nothing downstream
    adj_below = np.zeros(width)
    for i in range(1, n + 1):
        w = instance.weights[i - 1]
        di = d[i - 1]
        m = reach[i]
        # reach[i-1][c]     += m[c] * (1 - d[c])
        # reach[i-1][c - w] += m[c] * d[c]        (c >= w)
        shifted = np.zeros(width)
        if w < width:
            shifted[w:] = adj_below[: width - w]
        grad_d[i - 1] = m * (g[i - 1] + shifted - adj_below)
        adj_below = g[i - 1] * di + adj_below * (1.0 - di) + shifted * di
    return np.where(mask, grad_d, 0.0)


@dataclass(frozen=True, eq=False)
class FiniteDifferenceResult:
    grad: np.ndarray
    skipped: np.ndarray

    @property
    def skipped_entries(self) -> int:
        return int(self.skipped.sum())


def finite_difference_grad(instance, probs, cotangent, h=1e-6) -> FiniteDifferenceResult:
    """Central differences of ``sum(cotangent * soft_selected)``, one entry at a time.

    Entries outside ``(h, 1 - h)`` cannot be perturbed in both directions; they are
    left at 0 in ``grad`` and flagged in ``skipped``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    probs = _check_probs(instance, probs)
    g = np.asarray(cotangent, dtype=np.float64)
    if g.shape != (instance.n,):
        raise DimensionMismatch(f"cotangent shape {g.shape}, want {(instance.n,)}")

    def f(p):
        return float(g @ soft_reconstruct(instance, p).soft_selected)

    grad = np.zeros_like(probs)
    skipped = np.zeros(probs.shape, dtype=bool)
    work = probs.copy()
    for idx in np.ndindex(*probs.shape):
        p0 = probs[idx]
        if not h < p0 < 1.0 - h:
            skipped[idx] = True
            continue
        work[idx] = p0 + h
        up = f(work)
        work[idx] = p0 - h
        down = f(work)
        work[idx] = p0
        grad[idx] = (up - down) / (2.0 * h)
    return FiniteDifferenceResult(grad, skipped)


def relative_error(a, b, floor=1e-12):
    """Elementwise ``|a - b| / max(|a|, |b|, floor)``; ``floor`` only guards 0/0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def harden(probs, threshold=0.5) -> np.ndarray:
    """Binary table with 1 wherever ``probs >= threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return (np.asarray(probs, dtype=np.float64) >= threshold).astype(np.uint8)


@dataclass(frozen=True)
class GradcheckReport:
    trials: int
    max_rel_err: float
    skipped_entries: int

    def to_record(self):
        return {
            "trials": self.trials,
            "max_rel_err": self.max_rel_err,
            "skipped_entries": self.skipped_entries,
        }


def random_gradcheck(trials, n_max=6, c_max=10, w_max=8, p_low=0.1, p_high=0.9,
                     h=1e-6, seed=0) -> GradcheckReport:
    """Compare the reverse sweep with finite differences on random instances."""
    worst, skipped = 0.0, 0
    for k in range(trials):
        rng = np.random.default_rng(derive_seed(seed, k))
        n = int(rng.integers(1, n_max + 1))
        cap = int(rng.integers(1, c_max + 1))
        inst = KnapsackInstance(
            tuple(int(x) for x in rng.integers(1, w_max + 1, size=n)),
            tuple(float(x) for x in rng.uniform(0, 1, size=n)),
            cap, w_max,
        )
        probs = rng.uniform(p_low, p_high, size=(n, effective_capacity(inst) + 1))
        ones = np.ones(n)
        analytic = soft_reconstruct_vjp(inst, probs, ones)
        fd = finite_difference_grad(inst, probs, ones, h)
        err = relative_error(analytic, fd.grad)[~fd.skipped]
        if err.size:
            worst = max(worst, float(err.max()))
        skipped += fd.skipped_entries
    return GradcheckReport(trials, worst, skipped)
