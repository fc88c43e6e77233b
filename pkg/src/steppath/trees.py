"""Binary classification trees grown one leaf split at a time.

A tree path is a nested sequence: tree k+1 equals tree k with exactly one
leaf turned into a branch, all existing splits kept verbatim. Costs are
training misclassification counts, leaves predict the majority class of
the points routed to them (ties go to class 0), and routing sends a point
left iff its feature value is <= the threshold.

best_nested_path enumerates every nested path of a given length and depth
bound, with depth-first pruning on the partial weighted cost, so it is
exact at small scale (tens of points, depth <= 2 or 3).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .core import CostSequence, PathWeights
from .errors import BudgetExceededError, DataError

Position = tuple[int, ...]  # 0 = left child, 1 = right child, () = root


@dataclass(frozen=True)
class LabeledDataset2C:
    """Points with binary class labels (at most two distinct values)."""

    points: np.ndarray
    labels: np.ndarray  # encoded 0/1
    class_names: tuple[str, ...]

    @classmethod
    def from_data(cls, points, labels, class_names=None) -> "LabeledDataset2C":
        points = np.array(points, dtype=float)
        if points.ndim != 2 or points.shape[0] < 1:
            raise DataError("points must be a nonempty 2-d array")
        raw = list(labels)
        if len(raw) != points.shape[0]:
            raise DataError("labels length must match the number of points")
        distinct = sorted(set(raw), key=str)
        if len(distinct) > 2:
            raise DataError(f"need at most 2 classes, got {len(distinct)}")
        if class_names is None:
            class_names = tuple(str(v) for v in distinct)
        else:
            class_names = tuple(str(s) for s in class_names)
        to_code = {v: i for i, v in enumerate(distinct)}
        enc = np.array([to_code[v] for v in raw], dtype=int)
        points.flags.writeable = False
        enc.flags.writeable = False
        return cls(points=points, labels=enc, class_names=class_names)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Leaf:
    klass: int


@dataclass(frozen=True)
class Branch:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Branch]


def _node_depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_node_depth(node.left), _node_depth(node.right))


def _node_splits(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + _node_splits(node.left) + _node_splits(node.right)


@dataclass(frozen=True)
class AxisTree:
    """An axis-aligned binary tree with majority-class leaves."""

    root: Node

    @property
    def depth(self) -> int:
        return _node_depth(self.root)

    @property
    def split_count(self) -> int:
        return _node_splits(self.root)

    def predict_one(self, x) -> int:
        node = self.root
        while isinstance(node, Branch):
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.klass

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([self.predict_one(row) for row in X], dtype=int)


def _majority(labels: np.ndarray) -> int:
    ones = int(labels.sum())
    zeros = labels.size - ones
    return 0 if zeros >= ones else 1  # tie predicts class 0


def _leaf_error(labels: np.ndarray) -> int:
    ones = int(labels.sum())
    return min(ones, labels.size - ones)


def single_leaf_tree(data: LabeledDataset2C) -> AxisTree:
    """The zero-split tree: one leaf predicting the global majority."""
    return AxisTree(root=Leaf(_majority(data.labels)))


def tree_from_splits(data: LabeledDataset2C, splits) -> AxisTree:
    """Build a tree by applying (position, feature, threshold) splits in order.

    Each position addresses an existing leaf as a tuple of 0/1 child moves
    from the root. Leaf classes are refit to the training majority.
    """
    tree = single_leaf_tree(data)
    for position, feature, threshold in splits:
        tree = split_leaf(data, tree, tuple(position), int(feature), float(threshold))
    return tree


def split_leaf(
    data: LabeledDataset2C,
    tree: AxisTree,
    position: Position,
    feature: int,
    threshold: float,
) -> AxisTree:
    """Return a new tree with the leaf at `position` split in two."""
    idx = _routed_indices(data, tree.root, position)

    def rebuild(node: Node, pos: Position) -> Node:
        if pos == position:
            if not isinstance(node, Leaf):
                raise ValueError(f"position {position} is not a leaf")
            vals = data.points[idx, feature]
            left_idx = idx[vals <= threshold]
            right_idx = idx[vals > threshold]
            return Branch(
                feature=feature,
                threshold=threshold,
                left=Leaf(_majority(data.labels[left_idx])),
                right=Leaf(_majority(data.labels[right_idx])),
            )
        if isinstance(node, Leaf):
            return node
        if position[: len(pos) + 1] == pos + (0,):
            return Branch(node.feature, node.threshold, rebuild(node.left, pos + (0,)), node.right)
        return Branch(node.feature, node.threshold, node.left, rebuild(node.right, pos + (1,)))

    return AxisTree(root=rebuild(tree.root, ()))


def _routed_indices(data: LabeledDataset2C, root: Node, position: Position) -> np.ndarray:
    idx = np.arange(data.n)
    node = root
    for move in position:
        if isinstance(node, Leaf):
            raise ValueError(f"position {position} walks past a leaf")
        vals = data.points[idx, node.feature]
        idx = idx[vals <= node.threshold] if move == 0 else idx[vals > node.threshold]
        node = node.left if move == 0 else node.right
    return idx


def _one_split_extension(a: Node, b: Node) -> bool:
    """True iff b equals a except exactly one leaf of a became a branch in b."""
    if isinstance(a, Leaf):
        if isinstance(b, Leaf):
            return False
        return isinstance(b.left, Leaf) and isinstance(b.right, Leaf)
    if isinstance(b, Leaf):
        return False
    if a.feature != b.feature or a.threshold != b.threshold:
        return False
    left_same = _same_structure(a.left, b.left)
    right_same = _same_structure(a.right, b.right)
    if left_same and not right_same:
        return _one_split_extension(a.right, b.right)
    if right_same and not left_same:
        return _one_split_extension(a.left, b.left)
    return False


def _same_structure(a: Node, b: Node) -> bool:
    if isinstance(a, Leaf) and isinstance(b, Leaf):
        return True
    if isinstance(a, Branch) and isinstance(b, Branch):
        return (
            a.feature == b.feature
            and a.threshold == b.threshold
            and _same_structure(a.left, b.left)
            and _same_structure(a.right, b.right)
        )
    return False


@dataclass(frozen=True)
class TreePath:
    """Nested trees of split counts 1..K, each one split beyond the last."""

    trees: tuple[AxisTree, ...]

    def __post_init__(self):
        prev: Node = Leaf(0)
        for k, t in enumerate(self.trees, start=1):
            if t.split_count != k:
                raise ValueError(f"tree {k} has {t.split_count} splits, expected {k}")
            if not _one_split_extension(prev, t.root):
                raise ValueError(f"tree {k} does not extend tree {k - 1} by one split")
            prev = t.root

    def __len__(self) -> int:
        return len(self.trees)


def candidate_splits(data: LabeledDataset2C, feature: int) -> np.ndarray:
    """Midpoints between consecutive distinct values of one feature."""
    if not 0 <= feature < data.d:
        raise ValueError(f"feature {feature} out of range for d={data.d}")
    vals = np.unique(data.points[:, feature])
    if vals.size < 2:
        return np.zeros(0)
    return (vals[:-1] + vals[1:]) / 2.0


def tree_cost(data: LabeledDataset2C, tree: AxisTree) -> int:
    """Number of training points the tree misclassifies."""
    pred = tree.predict(data.points)
    return int(np.sum(pred != data.labels))


class TreeSolveResult(NamedTuple):
    path: TreePath
    cost_sequence: CostSequence
    objective: float


class _LeafTables:
    """Memoized per-leaf errors and split candidates, keyed by point set."""

    def __init__(self, data: LabeledDataset2C):
        self.data = data
        self._err: dict[tuple, int] = {}
        self._opts: dict[tuple, list] = {}

    def err(self, key: tuple) -> int:
        val = self._err.get(key)
        if val is None:
            val = _leaf_error(self.data.labels[list(key)])
            self._err[key] = val
        return val

    def options(self, key: tuple) -> list:
        """Splits of this leaf: (feature, threshold, left_key, right_key),
        sorted by (feature, threshold); zero-routing splits excluded."""
        opts = self._opts.get(key)
        if opts is not None:
            return opts
        idx = np.array(key, dtype=int)
        opts = []
        for f in range(self.data.d):
            vals = self.data.points[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            si = idx[order]
            cuts = np.nonzero(sv[:-1] < sv[1:])[0]
            for c in cuts:
                thr = float((sv[c] + sv[c + 1]) / 2.0)
                left_key = tuple(sorted(int(i) for i in si[: c + 1]))
                right_key = tuple(sorted(int(i) for i in si[c + 1 :]))
                opts.append((f, thr, left_key, right_key))
        self._opts[key] = opts
        return opts


def best_nested_path(
    data: LabeledDataset2C,
    K: int,
    D: int = 2,
    w: PathWeights | None = None,
    budget: int = 10**7,
    tie_tol_rel: float = 1e-9,
) -> TreeSolveResult:
    """Globally best nested tree path of length K under a depth bound.

    Minimizes the weighted sum of per-tree misclassification counts over
    all nested paths, by exhaustive depth-first enumeration with pruning on
    the partial weighted sum plus a stuck-error lower bound (errors in
    depth-D leaves can never be removed). Candidates are visited in
    (feature, threshold, leftmost-leaf) order, so ties resolve to the
    smallest such triple sequence.

    Args:
        data: two-class dataset.
        K: number of splits / path length.
        D: maximum tree depth (a leaf at depth D is never split).
        w: nonnegative step weights; defaults to all-ones (gamma = 1).
        budget: maximum number of candidate evaluations.

    Returns:
        TreeSolveResult with the nested path, its cost sequence, and the
        achieved objective.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if D < 1:
        raise ValueError("D must be >= 1")
    if w is None:
        w = PathWeights.geometric(1.0)
    alphas = np.array(w.first_k(K), dtype=float)
    if np.any(alphas < 0):
        raise ValueError("step weights must be nonnegative")
    tail = np.concatenate([np.cumsum(alphas[::-1])[::-1], [0.0]])  # tail[p] = sum alphas[p:]

    tables = _LeafTables(data)
    root_key = tuple(range(data.n))

    if K == 0:
        return TreeSolveResult(TreePath(()), CostSequence(()), 0.0)

    # leaves: tuple of (position, depth, key) in leftmost order
    start_leaves = (((), 0, root_key),)
    start_cost = tables.err(root_key)

    def state_candidates(leaves):
        cands = []
        for li, (pos, depth, key) in enumerate(leaves):
            if depth >= D:
                continue
            for f, thr, lk, rk in tables.options(key):
                cands.append((f, thr, li, lk, rk))
        cands.sort(key=lambda c: (c[0], c[1], leaves[c[2]][0]))
        return cands

    def apply_split(leaves, cost, floor, cand):
        f, thr, li, lk, rk = cand
        pos, depth, key = leaves[li]
        el, er = tables.err(lk), tables.err(rk)
        new_cost = cost - tables.err(key) + el + er
        new_floor = floor + ((el + er) if depth + 1 >= D else 0)
        new_leaves = (
            leaves[:li]
            + ((pos + (0,), depth + 1, lk), (pos + (1,), depth + 1, rk))
            + leaves[li + 1 :]
        )
        return new_leaves, new_cost, new_floor

    # Greedy warm start for the pruning cutoff.
    v0 = 0.0
    leaves, cost, floor = start_leaves, start_cost, 0
    for p in range(K):
        cands = state_candidates(leaves)
        if not cands:
            v0 = np.inf
            break
        best = min(cands, key=lambda c: apply_split(leaves, cost, floor, c)[1])
        leaves, cost, floor = apply_split(leaves, cost, floor, best)
        v0 += alphas[p] * cost
    tol = tie_tol_rel * (1.0 + (abs(v0) if np.isfinite(v0) else 1.0))

    best_val = np.inf
    best_actions: list | None = None
    nodes = 0
    actions: list = [None] * K

    def cut() -> float:
        return min(best_val - tol, v0 + tol)

    def dfs(p, leaves, cost, floor, partial):
        nonlocal best_val, best_actions, nodes
        for cand in state_candidates(leaves):
            nodes += 1
            if nodes > budget:
                raise BudgetExceededError(
                    f"nested-path enumeration exceeded budget {budget}"
                )
            new_leaves, new_cost, new_floor = apply_split(leaves, cost, floor, cand)
            part2 = partial + alphas[p] * new_cost
            if part2 + new_floor * tail[p + 1] >= cut():
                continue
            f, thr, li, _, _ = cand
            actions[p] = (leaves[li][0], f, thr)
            if p + 1 == K:
                if part2 < best_val - tol:
                    best_val = part2
                    best_actions = list(actions)
            else:
                dfs(p + 1, new_leaves, new_cost, new_floor, part2)

    dfs(0, start_leaves, start_cost, 0, 0.0)

    if best_actions is None:
        raise DataError(
            f"no nested path of length {K} exists under depth bound {D} "
            "(not enough splittable leaves with distinct values)"
        )

    trees = []
    steps = []
    tree = single_leaf_tree(data)
    for pos, f, thr in best_actions:
        tree = split_leaf(data, tree, pos, f, thr)
        trees.append(tree)
        steps.append(tree_cost(data, tree))
    if min(steps) <= 0:
        raise DataError(
            "best nested path contains a zero-error tree; step costs must be "
            "positive (the data is separable at this depth)"
        )
    return TreeSolveResult(
        path=TreePath(tuple(trees)),
        cost_sequence=CostSequence(tuple(float(s) for s in steps)),
        objective=float(best_val),
    )
