"""Per-episode base learners fitted on a support set and scored on queries.

Kinds: nearest-prototype, multinomial logistic regression, one-vs-rest
linear SVM, CART decision tree, k-nearest-neighbor. All fitting is
deterministic: linear solvers start from zero, every tie (argmin, argmax,
vote, split) breaks toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ClassifierError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """First-order solver settings for the linear base learners.

    l2_strength < 0 means "auto": 1.0 / support size, chosen at fit time.
    The regularizer is l2_strength * (||W||^2 + ||b||^2) / 2.
    """

    l2_strength: float = -1.0
    max_iters: int = 500
    tolerance: float = 1e-8
    learning_rate: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ClassifierError("max_iters must be >= 1")
        if self.tolerance <= 0:
            raise ClassifierError("tolerance must be > 0")
        if self.learning_rate <= 0:
            raise ClassifierError("learning_rate must be > 0")

    def resolve_l2(self, n_samples: int) -> float:
        if self.l2_strength >= 0:
            return self.l2_strength
        return 1.0 / max(n_samples, 1)


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_split: int = 2

    def __post_init__(self):
        if self.min_split < 2:
            raise ClassifierError("min_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ClassifierError("max_depth must be >= 0")


@dataclass(frozen=True)
class KnnConfig:
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ClassifierError("k must be >= 1")


@dataclass(frozen=True)
class FitDiagnostic:
    iterations: int
    final_objective: float
    gradient_norm: float
    converged: bool


@dataclass(frozen=True)
class PrototypeModel:
    prototypes: np.ndarray  # n_way x dim, row c = class-c support mean


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # n_way x dim
    bias: np.ndarray  # n_way
    kind: str  # "logistic" | "svm"
    diagnostic: FitDiagnostic | None = None


@dataclass(frozen=True)
class TreeNode:
    """Internal node splits on feature <= threshold (left) vs > (right);
    a leaf has feature == -1 and carries class counts."""

    feature: int
    threshold: float
    left: "TreeNode | None"
    right: "TreeNode | None"
    counts: np.ndarray | None  # leaf only: per-class support counts

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True)
class TreeModel:
    root: TreeNode
    n_way: int


@dataclass(frozen=True)
class NeighborModel:
    vectors: np.ndarray  # memory, n x dim
    labels: np.ndarray  # episode-local labels
    record_ids: np.ndarray  # distance tie-break: lower record_id wins
    k: int
    n_way: int


TrainedClassifier = PrototypeModel | LinearModel | TreeModel | NeighborModel


# ---------------------------------------------------------------------------
# Nearest prototype
# ---------------------------------------------------------------------------


def euclidean_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ClassifierError(f"length mismatch: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.sum((p - q) ** 2)))


def compute_prototypes(vectors, labels, n_way: int) -> PrototypeModel:
    """Row c = arithmetic mean of class-c support vectors."""
    X = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels)
    prototypes = np.empty((n_way, X.shape[1]))
    for c in range(n_way):
        mask = y == c
        if not mask.any():
            raise ClassifierError(f"class {c} has no support records")
        prototypes[c] = X[mask].mean(axis=0)
    return PrototypeModel(prototypes=prototypes)


def classify_prototype(model: PrototypeModel, query) -> tuple[int, np.ndarray]:
    """Nearest prototype by Euclidean distance; scores are negated distances."""
    q = np.asarray(query, dtype=np.float64)
    if q.shape[0] != model.prototypes.shape[1]:
        raise ClassifierError("query dimensionality mismatch")
    dists = np.sqrt(np.sum((model.prototypes - q) ** 2, axis=1))
    scores = -dists
    return int(np.argmax(scores)), scores  # argmax ties break to lowest index


# ---------------------------------------------------------------------------
# Linear models: multinomial logistic and one-vs-rest SVM
# ---------------------------------------------------------------------------


def logistic_objective(W, b, X, y, l2: float) -> float:
    """Mean softmax cross-entropy plus l2*(||W||^2 + ||b||^2)/2."""
    logits = X @ W.T + b
    logits = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(logits).sum(axis=1))
    nll = log_z - logits[np.arange(len(y)), y]
    reg = 0.5 * l2 * (np.sum(W * W) + np.sum(b * b))
    return float(nll.mean() + reg)


def logistic_gradient(W, b, X, y, l2: float) -> tuple[np.ndarray, np.ndarray]:
    logits = X @ W.T + b
    logits = logits - logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    probs = expl / expl.sum(axis=1, keepdims=True)
    probs[np.arange(len(y)), y] -= 1.0
    probs /= len(y)
    return probs.T @ X + l2 * W, probs.sum(axis=0) + l2 * b


def svm_objective(W, b, X, y, l2: float) -> float:
    """Sum over one-vs-rest binary problems of mean hinge loss, plus
    l2*(||W||^2 + ||b||^2)/2."""
    margins = X @ W.T + b  # n x n_way
    signs = np.where(np.arange(W.shape[0])[None, :] == np.asarray(y)[:, None], 1.0, -1.0)
    hinge = np.maximum(0.0, 1.0 - signs * margins)
    reg = 0.5 * l2 * (np.sum(W * W) + np.sum(b * b))
    return float(hinge.mean(axis=0).sum() + reg)


def svm_gradient(W, b, X, y, l2: float) -> tuple[np.ndarray, np.ndarray]:
    margins = X @ W.T + b
    signs = np.where(np.arange(W.shape[0])[None, :] == np.asarray(y)[:, None], 1.0, -1.0)
    active = (1.0 - signs * margins) > 0.0
    coef = np.where(active, -signs, 0.0) / len(X)  # n x n_way
    return coef.T @ X + l2 * W, coef.sum(axis=0) + l2 * b


def _descend(objective, gradient, X, y, n_way, config: SolverConfig) -> tuple[
    np.ndarray, np.ndarray, FitDiagnostic
]:
    """Gradient descent with backtracking halving, zero initialization.

    Stops when the loss decrease falls below tolerance and the gradient norm
    is at most 10x tolerance, or at max_iters. The best-so-far iterate is
    kept, so the returned objective never exceeds the initial one.
    """
    l2 = config.resolve_l2(len(X))
    dim = X.shape[1]
    W = np.zeros((n_way, dim))
    b = np.zeros(n_way)
    f = objective(W, b, X, y, l2)
    best = (W, b, f)
    iters = 0
    gnorm = np.inf
    for iters in range(1, config.max_iters + 1):
        gW, gb = gradient(W, b, X, y, l2)
        gnorm = float(np.sqrt(np.sum(gW * gW) + np.sum(gb * gb)))
        if gnorm <= 10.0 * config.tolerance:
            break
        step = config.learning_rate
        g_sq = gnorm * gnorm
        new_f = None
        for _ in range(60):
            cand_W = W - step * gW
            cand_b = b - step * gb
            cand_f = objective(cand_W, cand_b, X, y, l2)
            if not np.isfinite(cand_f):
                step *= 0.5
                continue
            if cand_f <= f - 0.25 * step * g_sq or cand_f < f:
                new_f = cand_f
                break
            step *= 0.5
        if new_f is None:
            # Subgradient kink: no descent direction at any step size.
            break
        decrease = f - new_f
        W, b, f = cand_W, cand_b, new_f
        if f < best[2]:
            best = (W, b, f)
        if decrease < config.tolerance:
            break
    W, b, f = best
    if not np.isfinite(f):
        raise ClassifierError("non-finite objective; bad learning_rate")
    diag = FitDiagnostic(
        iterations=iters,
        final_objective=f,
        gradient_norm=gnorm,
        converged=gnorm <= 10.0 * config.tolerance or iters < config.max_iters,
    )
    return W, b, diag


def train_logistic(vectors, labels, n_way: int, config: SolverConfig = SolverConfig()) -> LinearModel:
    X = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels)
    for c in range(n_way):
        if not (y == c).any():
            raise ClassifierError(f"class {c} has no support records")
    W, b, diag = _descend(logistic_objective, logistic_gradient, X, y, n_way, config)
    return LinearModel(weights=W, bias=b, kind="logistic", diagnostic=diag)


def train_svm(vectors, labels, n_way: int, config: SolverConfig = SolverConfig()) -> LinearModel:
    X = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels)
    for c in range(n_way):
        if not (y == c).any():
            raise ClassifierError(f"class {c} has no support records")
    W, b, diag = _descend(svm_objective, svm_gradient, X, y, n_way, config)
    return LinearModel(weights=W, bias=b, kind="svm", diagnostic=diag)


# ---------------------------------------------------------------------------
# CART decision tree with Gini impurity
# ---------------------------------------------------------------------------


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _best_split(X: np.ndarray, y: np.ndarray, n_way: int):
    """Greedy best (feature, threshold) by Gini gain; ties resolve to the
    lowest feature index, then the lowest threshold. Returns None when no
    feature has two distinct values."""
    n, dim = X.shape
    parent_counts = np.bincount(y, minlength=n_way).astype(np.float64)
    parent_gini = _gini(parent_counts)
    best = None  # (gain, feature, threshold)
    for f in range(dim):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        left = np.zeros(n_way)
        right = parent_counts.copy()
        for i in range(n - 1):
            left[ys[i]] += 1
            right[ys[i]] -= 1
            if xs[i + 1] == xs[i]:
                continue
            threshold = 0.5 * (xs[i] + xs[i + 1])
            n_left = i + 1
            gain = parent_gini - (
                n_left * _gini(left) + (n - n_left) * _gini(right)
            ) / n
            if best is None or gain > best[0] + 1e-15:
                best = (gain, f, threshold)
    return best


def train_tree(vectors, labels, n_way: int, config: TreeConfig = TreeConfig()) -> TreeModel:
    X = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if len(X) == 0:
        raise ClassifierError("empty support set")

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(y[idx], minlength=n_way).astype(np.float64)
        pure = (counts > 0).sum() <= 1
        depth_stop = config.max_depth is not None and depth >= config.max_depth
        if pure or depth_stop or len(idx) < config.min_split:
            return TreeNode(-1, 0.0, None, None, counts)
        split = _best_split(X[idx], y[idx], n_way)
        if split is None:  # all vectors identical
            return TreeNode(-1, 0.0, None, None, counts)
        _, feature, threshold = split
        mask = X[idx, feature] <= threshold
        left = build(idx[mask], depth + 1)
        right = build(idx[~mask], depth + 1)
        return TreeNode(feature, threshold, left, right, None)

    return TreeModel(root=build(np.arange(len(X)), 0), n_way=n_way)


def _tree_leaf(model: TreeModel, x: np.ndarray) -> TreeNode:
    node = model.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def classify_tree(model: TreeModel, query) -> tuple[int, np.ndarray]:
    leaf = _tree_leaf(model, np.asarray(query, dtype=np.float64))
    scores = leaf.counts / leaf.counts.sum()
    return int(np.argmax(scores)), scores


# ---------------------------------------------------------------------------
# k-nearest-neighbor
# ---------------------------------------------------------------------------


def build_knn(vectors, labels, record_ids, n_way: int, config: KnnConfig = KnnConfig()) -> NeighborModel:
    X = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    rid = np.asarray(record_ids, dtype=np.int64)
    if config.k > len(X):
        raise ClassifierError(f"k={config.k} exceeds support size {len(X)}")
    return NeighborModel(vectors=X, labels=y, record_ids=rid, k=config.k, n_way=n_way)


def classify_knn(model: NeighborModel, query) -> tuple[int, np.ndarray]:
    """Majority vote among the k nearest by Euclidean distance. Distance
    ties go to the lower record_id; vote ties to the lowest class index.
    Scores are the class vote fractions."""
    q = np.asarray(query, dtype=np.float64)
    dists = np.sqrt(np.sum((model.vectors - q) ** 2, axis=1))
    order = np.lexsort((model.record_ids, dists))
    nearest = model.labels[order[: model.k]]
    counts = np.bincount(nearest, minlength=model.n_way).astype(np.float64)
    scores = counts / model.k
    return int(np.argmax(scores)), scores


# ---------------------------------------------------------------------------
# Uniform scoring facade
# ---------------------------------------------------------------------------


def predict_scores(classifier: TrainedClassifier, queries) -> np.ndarray:
    """Score matrix, one row per query, one column per episode-local class.
    Higher means more likely; argmax with lowest-index tie-break is the
    predicted label."""
    Q = np.asarray(queries, dtype=np.float64)
    if isinstance(classifier, PrototypeModel):
        d2 = (
            np.sum(Q * Q, axis=1, keepdims=True)
            - 2.0 * Q @ classifier.prototypes.T
            + np.sum(classifier.prototypes**2, axis=1)
        )
        return -np.sqrt(np.maximum(d2, 0.0))
    if isinstance(classifier, LinearModel):
        return Q @ classifier.weights.T + classifier.bias
    if isinstance(classifier, TreeModel):
        return np.stack([classify_tree(classifier, q)[1] for q in Q])
    if isinstance(classifier, NeighborModel):
        return np.stack([classify_knn(classifier, q)[1] for q in Q])
    raise ClassifierError(f"unknown classifier type {type(classifier)!r}")


def predict_labels(classifier: TrainedClassifier, queries) -> np.ndarray:
    return np.argmax(predict_scores(classifier, queries), axis=1)


def fit_classifier(
    kind: str,
    vectors,
    labels,
    record_ids,
    n_way: int,
    solver: SolverConfig = SolverConfig(),
    tree: TreeConfig = TreeConfig(),
    knn: KnnConfig = KnnConfig(),
) -> TrainedClassifier:
    """Dispatch on classifier kind; the episode-loop entry point."""
    if kind == "prototype":
        return compute_prototypes(vectors, labels, n_way)
    if kind == "logistic":
        return train_logistic(vectors, labels, n_way, solver)
    if kind == "svm":
        return train_svm(vectors, labels, n_way, solver)
    if kind == "tree":
        return train_tree(vectors, labels, n_way, tree)
    if kind == "knn":
        return build_knn(vectors, labels, record_ids, n_way, knn)
    raise ClassifierError(f"unknown classifier kind {kind!r}")


CLASSIFIER_KINDS = ("prototype", "logistic", "svm", "tree", "knn")
