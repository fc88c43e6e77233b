"""Linear regression built by single-coefficient steps.

A path starts from a base coefficient vector and changes one coordinate
per step. For a fixed sequence of coordinate indices the optimal step
values minimize a convex quadratic (solved in closed form from the data
moments), so the combinatorial part of every search is over index
sequences only.

Solvers:
  greedy_path          myopic best step at a time (forward-stagewise style)
  direct_path          insert final least-squares coefficients one by one
  exact_path_search    globally optimal fixed-length path (branch & bound)
  local_improvement    randomized position-resampling heuristic
  feature_order_path   steps add whole features, refitting all active ones

All coordinate indices are 0-based.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import CostSequence, PathWeights
from .errors import (
    BudgetExceededError,
    InvalidWeightsError,
    NumericalFailureError,
)

RIDGE_SCALE = 1e-10  # added to the trace when a normal system is singular


@dataclass(frozen=True)
class RegressionInstance:
    """Immutable regression data with precomputed second moments.

    Cost of a coefficient vector b is the population mean squared error,
    evaluated through the quadratic form b'Gb - 2g'b + y_ss where
    G = X'X/n, g = X'y/n and y_ss = y'y/n.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    G: np.ndarray
    g: np.ndarray
    y_ss: float

    @classmethod
    def from_data(cls, X, y, feature_names=None) -> "RegressionInstance":
        X = np.array(X, dtype=float)
        y = np.array(y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        n, d = X.shape
        if n < 1 or d < 1:
            raise ValueError("need at least one row and one feature")
        if y.shape[0] != n:
            raise ValueError(f"y has {y.shape[0]} entries for {n} rows")
        if feature_names is None:
            feature_names = tuple(f"x{j}" for j in range(d))
        else:
            feature_names = tuple(str(s) for s in feature_names)
            if len(feature_names) != d:
                raise ValueError("feature_names length must match X columns")
        G = (X.T @ X) / n
        G = (G + G.T) / 2.0
        g = (X.T @ y) / n
        y_ss = float(y @ y) / n
        for arr in (X, y, G, g):
            arr.flags.writeable = False
        return cls(X=X, y=y, feature_names=feature_names, G=G, g=g, y_ss=y_ss)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def mse_cost(inst: RegressionInstance, beta) -> float:
    """Mean squared error of the coefficient vector via the moment form."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != inst.d:
        raise ValueError(f"beta has {beta.shape[0]} entries for d={inst.d}")
    val = float(beta @ inst.G @ beta - 2.0 * (inst.g @ beta) + inst.y_ss)
    return max(val, 0.0)  # clip float noise, the true value is >= 0


@dataclass(frozen=True)
class CoordinatePath:
    """A start vector plus (coordinate, value-change) steps.

    Step j replaces coordinate indices[j] by adding deltas[j]; consecutive
    models therefore differ in at most one coordinate. deltas[j] == 0 is a
    legal no-op step.
    """

    beta0: tuple[float, ...]
    indices: tuple[int, ...]
    deltas: tuple[float, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.deltas):
            raise ValueError("indices and deltas must have equal length")

    def __len__(self) -> int:
        return len(self.indices)

    def models(self) -> list[np.ndarray]:
        """All intermediate coefficient vectors, step 1 through K."""
        beta = np.array(self.beta0, dtype=float)
        out = []
        for i, dlt in zip(self.indices, self.deltas):
            beta = beta.copy()
            beta[i] += dlt
            out.append(beta)
        return out

    def final_model(self) -> np.ndarray:
        beta = np.array(self.beta0, dtype=float)
        for i, dlt in zip(self.indices, self.deltas):
            beta[i] += dlt
        return beta


@dataclass(frozen=True)
class SolverStats:
    candidates_evaluated: int
    wall_time: float
    iterations: int


@dataclass(frozen=True)
class PathSolveResult:
    path: CoordinatePath
    cost_sequence: CostSequence
    objective: float
    solver_stats: SolverStats


@dataclass(frozen=True)
class FeatureOrderResult:
    """Path whose steps add whole features (all active coefficients refit)."""

    order: tuple[int, ...]
    models: tuple[tuple[float, ...], ...]
    cost_sequence: CostSequence
    objective: float
    solver_stats: SolverStats


def path_cost_values(inst: RegressionInstance, path: CoordinatePath) -> np.ndarray:
    """Recompute the per-step costs of a path from scratch."""
    return np.array([mse_cost(inst, b) for b in path.models()])


def _resolve_weights(w: PathWeights, K: int, require_positive=True) -> np.ndarray:
    alphas = np.array(w.first_k(K), dtype=float)
    if require_positive and K > 0 and not np.any(alphas > 0):
        raise InvalidWeightsError("all step weights are zero over the path length")
    return alphas


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric PSD A, with one ridge retry.

    Raises NumericalFailureError if the ridge-regularized system still
    fails or the residual is not small.
    """
    if A.shape[0] == 0:
        return np.zeros(0)

    def attempt(M):
        c, low = scipy.linalg.cho_factor(M, check_finite=False)
        return scipy.linalg.cho_solve((c, low), b, check_finite=False)

    try:
        x = attempt(A)
        if np.linalg.norm(A @ x - b) <= 1e-6 * (np.linalg.norm(b) + 1.0):
            return x
    except scipy.linalg.LinAlgError:
        pass
    ridge = RIDGE_SCALE * max(np.trace(A), 1.0)
    try:
        x = attempt(A + ridge * np.eye(A.shape[0]))
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailureError(
            "normal system is singular even after ridge regularization"
        ) from exc
    return x


def inner_solve(
    inst: RegressionInstance, beta0, indices, w: PathWeights
) -> tuple[np.ndarray, float]:
    """Optimal step values for a fixed coordinate index sequence.

    Minimizes the weighted sum over steps k of weight_k * cost(model_k),
    a convex quadratic in the step values. The stationarity system is
    A d = b with A[j,l] = tail(max(j,l)) * G[i_j, i_l] and
    b[j] = tail(j) * (g - G beta0)[i_j], tail(j) being the sum of weights
    from step j onward.

    Args:
        inst: regression data.
        beta0: starting coefficient vector (length d).
        indices: coordinate index per step, 0-based.
        w: step weights; must be nonnegative with at least one positive
           entry among the first K.

    Returns:
        (deltas, objective): optimal per-step value changes and the
        achieved weighted sum. An empty index sequence returns ((), 0.0).
    """
    beta0 = np.asarray(beta0, dtype=float).reshape(-1)
    if beta0.shape[0] != inst.d:
        raise ValueError(f"beta0 has {beta0.shape[0]} entries for d={inst.d}")
    idx = np.asarray(indices, dtype=int).reshape(-1)
    K = idx.shape[0]
    if K == 0:
        return np.zeros(0), 0.0
    if np.any(idx < 0) or np.any(idx >= inst.d):
        raise ValueError("coordinate index out of range")
    alphas = _resolve_weights(w, K)

    tails = np.cumsum(alphas[::-1])[::-1]  # tails[j] = sum of alphas[j:]
    Gsub = inst.G[np.ix_(idx, idx)]
    pos = np.arange(K)
    A = tails[np.maximum.outer(pos, pos)] * Gsub
    r0 = inst.g - inst.G @ beta0
    b = tails * r0[idx]
    deltas = _solve_spd(A, b)

    path = CoordinatePath(tuple(beta0), tuple(int(i) for i in idx), tuple(deltas))
    objective = float(alphas @ path_cost_values(inst, path))
    return deltas, objective


def _result_from_indices(
    inst, beta0, indices, deltas, objective, stats
) -> PathSolveResult:
    path = CoordinatePath(
        tuple(np.asarray(beta0, dtype=float)),
        tuple(int(i) for i in indices),
        tuple(float(x) for x in deltas),
    )
    costs = path_cost_values(inst, path)
    return PathSolveResult(
        path=path,
        cost_sequence=CostSequence(tuple(costs)),
        objective=float(objective),
        solver_stats=stats,
    )


def greedy_path(inst: RegressionInstance, beta0, K: int) -> PathSolveResult:
    """Myopic path: each step picks the (coordinate, value) pair that
    minimizes the immediate cost, ties to the smallest coordinate index."""
    if K < 0:
        raise ValueError("K must be >= 0")
    t0 = time.perf_counter()
    beta = np.asarray(beta0, dtype=float).reshape(-1).copy()
    if beta.shape[0] != inst.d:
        raise ValueError(f"beta0 has {beta.shape[0]} entries for d={inst.d}")
    diag = np.diag(inst.G)
    indices, deltas, costs = [], [], []
    evaluated = 0
    for _ in range(K):
        r = inst.g - inst.G @ beta
        reduction = np.where(diag > 0, r**2 / np.where(diag > 0, diag, 1.0), 0.0)
        j = int(np.argmax(reduction))  # argmax takes the first max: smallest index
        step = r[j] / diag[j] if diag[j] > 0 else 0.0
        evaluated += inst.d
        beta[j] += step
        indices.append(j)
        deltas.append(step)
        costs.append(mse_cost(inst, beta))
    stats = SolverStats(evaluated, time.perf_counter() - t0, K)
    path = CoordinatePath(tuple(np.asarray(beta0, dtype=float)), tuple(indices), tuple(deltas))
    return PathSolveResult(
        path=path,
        cost_sequence=CostSequence(tuple(costs)),
        objective=float(np.sum(costs)),
        solver_stats=stats,
    )


def ols_solution(inst: RegressionInstance) -> np.ndarray:
    """Unconstrained least-squares coefficients (ridge fallback if singular)."""
    return _solve_spd(inst.G, inst.g)


def direct_path(inst: RegressionInstance, K: int) -> PathSolveResult:
    """Insert final least-squares coefficients one coordinate at a time.

    The insertion order is chosen greedily on the immediate cost, so early
    steps are the most useful coefficients; values are never revisited.
    """
    if not 0 <= K <= inst.d:
        raise ValueError(f"K must be in [0, {inst.d}]")
    t0 = time.perf_counter()
    beta_ols = ols_solution(inst)
    beta = np.zeros(inst.d)
    remaining = list(range(inst.d))
    indices, deltas, costs = [], [], []
    evaluated = 0
    base_r = inst.G @ beta - inst.g
    for _ in range(K):
        cand = np.array(remaining)
        t = beta_ols[cand]
        cur = mse_cost(inst, beta)
        # cost(beta + t e_j) = cost(beta) + t^2 G_jj + 2 t (G beta - g)_j
        trial = cur + t**2 * np.diag(inst.G)[cand] + 2.0 * t * base_r[cand]
        evaluated += len(remaining)
        j = cand[int(np.argmin(trial))]
        beta[j] = beta_ols[j]
        base_r = inst.G @ beta - inst.g
        remaining.remove(int(j))
        indices.append(int(j))
        deltas.append(float(beta_ols[j]))
        costs.append(mse_cost(inst, beta))
    stats = SolverStats(evaluated, time.perf_counter() - t0, K)
    path = CoordinatePath(tuple(np.zeros(inst.d)), tuple(indices), tuple(deltas))
    return PathSolveResult(
        path=path,
        cost_sequence=CostSequence(tuple(costs)),
        objective=float(np.sum(costs)),
        solver_stats=stats,
    )


class _SupportBounds:
    """Lower bounds on step costs from support-restricted least squares.

    cls(mask) is the minimum cost over models that agree with beta0 off the
    coordinate set `mask`; bss(mask, e) additionally allows up to e extra
    free coordinates. Both are exact minima, hence valid lower bounds for
    any model a path can produce at the corresponding step.
    """

    def __init__(self, inst: RegressionInstance, beta0: np.ndarray):
        self.inst = inst
        self.beta0 = beta0
        self._cls: dict[int, float] = {}
        self._bss: dict[tuple[int, int], float] = {}
        # For wide problems the superset recursion is too large; fall back
        # to the global optimum as the (valid, looser) future bound.
        self._wide = inst.d > 16
        self._global_min = None

    def cls(self, mask: int) -> float:
        val = self._cls.get(mask)
        if val is not None:
            return val
        inst, beta0 = self.inst, self.beta0
        free = [j for j in range(inst.d) if mask >> j & 1]
        beta = beta0.copy()
        if free:
            pinned = beta0.copy()
            pinned[free] = 0.0
            rhs = inst.g[free] - (inst.G @ pinned)[free]
            sol = _solve_spd(inst.G[np.ix_(free, free)], rhs)
            beta[free] = sol
        val = mse_cost(inst, beta)
        self._cls[mask] = val
        return val

    def bss(self, mask: int, extra: int) -> float:
        if self._wide:
            if self._global_min is None:
                self._global_min = mse_cost(self.inst, ols_solution(self.inst))
            return self._global_min if extra > 0 else self.cls(mask)
        d = self.inst.d
        extra = min(extra, d - bin(mask).count("1"))
        if extra <= 0:
            return self.cls(mask)
        key = (mask, extra)
        val = self._bss.get(key)
        if val is not None:
            return val
        best = self.bss(mask, extra - 1)
        for j in range(d):
            if not mask >> j & 1:
                best = min(best, self.bss(mask | (1 << j), extra - 1))
        self._bss[key] = best
        return best


def exact_path_search(
    inst: RegressionInstance,
    beta0,
    K: int,
    w: PathWeights,
    budget: int = 10**7,
    tie_tol_rel: float = 1e-9,
) -> PathSolveResult:
    """Globally optimal fixed-length path by branch and bound.

    Enumerates coordinate index sequences depth-first in lexicographic
    order, lower-bounding partial sequences with support-restricted least
    squares costs, so the first optimum found is the lexicographically
    smallest one. A greedy warm start supplies the initial cutoff; the
    returned sequence always comes from the enumeration itself.

    Args:
        inst: regression data.
        beta0: starting coefficient vector.
        K: exact path length (index sequences in {0..d-1}^K).
        w: nonnegative step weights, at least one positive among the first K.
        budget: maximum d**K candidate sequences; beyond it the search is
            refused (use local_improvement instead).
        tie_tol_rel: relative tolerance under which objectives count as tied.

    Returns:
        PathSolveResult whose objective is the global minimum of the
        weighted sum of step costs.
    """
    t0 = time.perf_counter()
    beta0 = np.asarray(beta0, dtype=float).reshape(-1)
    if beta0.shape[0] != inst.d:
        raise ValueError(f"beta0 has {beta0.shape[0]} entries for d={inst.d}")
    if K < 0:
        raise ValueError("K must be >= 0")
    d = inst.d
    if K == 0:
        return _result_from_indices(inst, beta0, (), (), 0.0, SolverStats(0, 0.0, 0))
    if d**K > budget:
        raise BudgetExceededError(
            f"{d}**{K} candidate sequences exceed budget {budget}; "
            "use local_improvement for instances of this size"
        )
    alphas = _resolve_weights(w, K)

    bounds = _SupportBounds(inst, beta0)

    # Warm-start cutoff from the greedy index sequence (re-optimized).
    seed_idx = greedy_path(inst, beta0, K).path.indices
    _, v0 = inner_solve(inst, beta0, seed_idx, w)
    evaluated = 1
    tol = tie_tol_rel * (1.0 + abs(v0))

    future_cache: dict[tuple[int, int], float] = {}

    def future(p: int, mask: int) -> float:
        # Lower bound on the weighted cost of steps p+1..K given the
        # coordinates touched so far.
        key = (p, mask)
        val = future_cache.get(key)
        if val is None:
            val = 0.0
            for k in range(p + 1, K + 1):
                a = alphas[k - 1]
                if a > 0:
                    val += a * bounds.bss(mask, k - p)
            future_cache[key] = val
        return val

    best_val = np.inf
    best_seq: tuple[int, ...] | None = None
    best_deltas = None
    nodes = 0
    prefix = [0] * K

    def cut() -> float:
        return min(best_val - tol, v0 + tol)

    def dfs(p: int, mask: int, partial: float):
        nonlocal best_val, best_seq, best_deltas, nodes, evaluated
        for j in range(d):
            nodes += 1
            m2 = mask | (1 << j)
            part2 = partial + alphas[p] * bounds.cls(m2)
            if part2 + future(p + 1, m2) >= cut():
                continue
            prefix[p] = j
            if p + 1 == K:
                deltas, val = inner_solve(inst, beta0, tuple(prefix), w)
                evaluated += 1
                if val < best_val - tol:
                    best_val = val
                    best_seq = tuple(prefix)
                    best_deltas = deltas
            else:
                dfs(p + 1, m2, part2)

    dfs(0, 0, 0.0)

    if best_seq is None:
        # Everything was cut by the warm-start value: the warm start is
        # optimal within tolerance, so fall back to it.
        best_seq = tuple(seed_idx)
        best_deltas, best_val = inner_solve(inst, beta0, best_seq, w)
        evaluated += 1
    stats = SolverStats(evaluated, time.perf_counter() - t0, nodes)
    return _result_from_indices(inst, beta0, best_seq, best_deltas, best_val, stats)


def local_improvement(
    inst: RegressionInstance,
    beta0,
    i0,
    w: PathWeights,
    q: int,
    T: int,
    seed: int = 0,
) -> PathSolveResult:
    """Randomized local search over coordinate index sequences.

    Each iteration samples q step positions uniformly without replacement,
    scans all d**q reassignments of those positions (re-optimizing the step
    values for each candidate), and accepts a candidate only if it strictly
    improves the incumbent objective. The incumbent never worsens.

    Args:
        inst: regression data.
        beta0: starting coefficient vector.
        i0: initial index sequence (its length fixes K).
        w: nonnegative step weights.
        q: positions resampled per iteration (clamped to K with a warning).
        T: number of iterations.
        seed: seed for the position sampler.
    """
    t0 = time.perf_counter()
    beta0 = np.asarray(beta0, dtype=float).reshape(-1)
    i0 = tuple(int(i) for i in i0)
    K = len(i0)
    if T < 1:
        raise ValueError("T must be >= 1")
    if q < 1:
        raise ValueError("q must be >= 1")
    if q > K:
        warnings.warn(f"q={q} exceeds path length K={K}; clamping to K")
        q = K
    d = inst.d

    rng = np.random.default_rng(seed)
    best_i = i0
    best_deltas, best_obj = inner_solve(inst, beta0, best_i, w)
    evaluated = 1
    for _ in range(T):
        positions = np.sort(rng.choice(K, size=q, replace=False))
        for assign in itertools.product(range(d), repeat=q):
            cand = list(best_i)
            for p, f in zip(positions, assign):
                cand[p] = f
            cand = tuple(cand)
            if cand == best_i:
                continue
            deltas, obj = inner_solve(inst, beta0, cand, w)
            evaluated += 1
            if obj < best_obj:
                best_obj = obj
                best_i = cand
                best_deltas = deltas
    stats = SolverStats(evaluated, time.perf_counter() - t0, T)
    return _result_from_indices(inst, beta0, best_i, best_deltas, best_obj, stats)


def feature_order_path(
    inst: RegressionInstance,
    K: int,
    w: PathWeights,
    mode: str = "best",
    order=None,
    budget: int = 10**6,
) -> FeatureOrderResult:
    """Paths whose steps add one feature and refit all active coefficients.

    The model at step k is the least-squares fit restricted to the first k
    features of the ordering. mode="given" scores a supplied ordering;
    mode="best" searches all orderings of K features (falling back to
    greedy forward selection when d! exceeds the budget).
    """
    if not 0 <= K <= inst.d:
        raise ValueError(f"K must be in [0, {inst.d}]")
    t0 = time.perf_counter()
    alphas = _resolve_weights(w, K, require_positive=False)
    bounds = _SupportBounds(inst, np.zeros(inst.d))

    def prefix_costs(seq: tuple[int, ...]) -> np.ndarray:
        mask = 0
        vals = []
        for j in seq:
            mask |= 1 << j
            vals.append(bounds.cls(mask))
        return np.array(vals)

    evaluated = 0
    if mode == "given":
        if order is None:
            raise ValueError("mode='given' requires an order")
        order = tuple(int(j) for j in order)
        if len(set(order)) != len(order):
            raise ValueError("order contains repeated features")
        if any(j < 0 or j >= inst.d for j in order):
            raise ValueError("order contains an out-of-range feature")
        if len(order) < K:
            raise ValueError(f"order lists {len(order)} features, need {K}")
        chosen = order[:K]
        evaluated = 1
    elif mode == "best":
        if math.factorial(inst.d) <= budget:
            chosen, best_obj = None, np.inf
            for perm in itertools.permutations(range(inst.d), K):
                obj = float(alphas @ prefix_costs(perm))
                evaluated += 1
                if obj < best_obj:
                    best_obj = obj
                    chosen = perm
        else:
            warnings.warn(
                "ordering search too large; using greedy forward selection"
            )
            chosen = []
            mask = 0
            for _ in range(K):
                rest = [j for j in range(inst.d) if not mask >> j & 1]
                costs = [bounds.cls(mask | (1 << j)) for j in rest]
                evaluated += len(rest)
                j = rest[int(np.argmin(costs))]
                chosen.append(j)
                mask |= 1 << j
            chosen = tuple(chosen)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    models = []
    mask = 0
    for j in chosen:
        mask |= 1 << j
        free = [t for t in range(inst.d) if mask >> t & 1]
        beta = np.zeros(inst.d)
        beta[free] = _solve_spd(inst.G[np.ix_(free, free)], inst.g[free])
        models.append(tuple(beta))
    costs = prefix_costs(tuple(chosen))
    stats = SolverStats(evaluated, time.perf_counter() - t0, 1)
    return FeatureOrderResult(
        order=tuple(chosen),
        models=tuple(models),
        cost_sequence=CostSequence(tuple(costs)),
        objective=float(alphas @ costs) if K else 0.0,
        solver_stats=stats,
    )
