"""Cost sequences of model-building paths and the losses that rank them.

A path of K steps is summarized by the costs of its K intermediate models.
Conceptually the sequence is infinite with zeros after step K, which makes
sequences of different lengths directly comparable. Losses defined on the
cost sequence alone (rather than on the models) stay consistent across
model classes: the same machinery scores regression paths and tree paths.

Two orderings matter in the limits of the geometric weighting: very large
gamma ranks by length then cost (sparsity-like), very small gamma ranks by
lexicographic comparison of the cost sequences (greedy-like).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidWeightsError

# Steps are assumed to have strictly positive cost; values this small are
# treated as an attempt to store a zero.
MIN_STEP_COST = 1e-12


@dataclass(frozen=True)
class CostSequence:
    """Per-step model costs of a path; entries beyond the last step are zero."""

    costs: tuple[float, ...] = ()

    def __post_init__(self):
        vals = tuple(float(c) for c in self.costs)
        for c in vals:
            if not math.isfinite(c) or c < MIN_STEP_COST:
                raise ValueError(
                    f"step costs must be finite and > {MIN_STEP_COST:g}, got {c!r}"
                )
        object.__setattr__(self, "costs", vals)

    def __len__(self) -> int:
        return len(self.costs)

    def value_at(self, k: int) -> float:
        """Cost of step k (1-based); 0.0 beyond the stored length."""
        if k < 1:
            raise IndexError("steps are numbered from 1")
        return self.costs[k - 1] if k <= len(self.costs) else 0.0


@dataclass(frozen=True)
class PathWeights:
    """Step weighting scheme: an explicit vector or geometric gamma**k.

    Explicit weights shorter than a path contribute nothing beyond their
    support (the tail is zero), which also covers the "expected cost under
    a distribution over stopping steps" use where alpha_k is a probability.
    """

    alphas: tuple[float, ...] | None = None
    gamma: float | None = None

    def __post_init__(self):
        if (self.alphas is None) == (self.gamma is None):
            raise InvalidWeightsError("specify exactly one of alphas / gamma")
        if self.alphas is not None:
            vals = tuple(float(a) for a in self.alphas)
            for a in vals:
                if not math.isfinite(a) or a < 0:
                    raise InvalidWeightsError(f"explicit weights must be >= 0, got {a!r}")
            object.__setattr__(self, "alphas", vals)
        else:
            g = float(self.gamma)
            if not math.isfinite(g) or g <= 0:
                raise InvalidWeightsError(f"gamma must be > 0, got {g!r}")
            object.__setattr__(self, "gamma", g)

    @classmethod
    def explicit(cls, alphas) -> "PathWeights":
        return cls(alphas=tuple(alphas))

    @classmethod
    def geometric(cls, gamma: float) -> "PathWeights":
        return cls(gamma=gamma)

    @property
    def is_geometric(self) -> bool:
        return self.gamma is not None

    def weight_at(self, k: int) -> float:
        """Weight of step k (1-based)."""
        if k < 1:
            raise IndexError("steps are numbered from 1")
        if self.gamma is not None:
            return self.gamma**k
        return self.alphas[k - 1] if k <= len(self.alphas) else 0.0

    def first_k(self, k: int) -> tuple[float, ...]:
        """Weights of steps 1..k as a tuple."""
        return tuple(self.weight_at(j) for j in range(1, k + 1))


@dataclass(frozen=True)
class PathLossReport:
    """Weighted path loss with its per-step breakdown.

    per_step holds (k, weight_k, cost_k, weight_k * cost_k); loss is the sum
    of the last column and complexity is the path length.
    """

    loss: float
    complexity: int
    per_step: tuple[tuple[int, float, float, float], ...]


def path_loss(costs: CostSequence, w: PathWeights) -> PathLossReport:
    """Weighted sum of step costs: sum over k of weight_k * cost_k.

    The zero tail of the cost sequence contributes nothing, so only the
    stored steps appear in the report.
    """
    rows = []
    total = 0.0
    for k in range(1, len(costs) + 1):
        wk = w.weight_at(k)
        ck = costs.value_at(k)
        rows.append((k, wk, ck, wk * ck))
        total += wk * ck
    return PathLossReport(loss=total, complexity=len(costs), per_step=tuple(rows))


def complexity(costs: CostSequence) -> int:
    """Number of steps in the path (the count of nonzero entries)."""
    return len(costs)


def dominates(a: CostSequence, b: CostSequence) -> bool:
    """True iff a_k <= b_k for every step k, zero tails included.

    This is weak elementwise dominance: a path that is at least as cheap at
    every step (and possibly shorter) dominates.
    """
    upto = max(len(a), len(b))
    return all(a.value_at(k) <= b.value_at(k) for k in range(1, upto + 1))


def lex_compare(a: CostSequence, b: CostSequence) -> int:
    """Lexicographic comparison of zero-padded sequences: -1, 0, or +1."""
    upto = max(len(a), len(b))
    for k in range(1, upto + 1):
        ak, bk = a.value_at(k), b.value_at(k)
        if ak < bk:
            return -1
        if ak > bk:
            return 1
    return 0
