"""Classification rules behind a single interface.

Four rules: linear SVM (trained by SMO), RBF-kernel SVM (same solver),
CART with Gini impurity, and k-nearest neighbors.  Trained classifiers
are immutable, deterministic, and expose batch prediction.  The linear
SVM additionally exposes its (a, b) form, which the bolstered estimators
use for closed-form half-space masses.

All tie-breaking is pinned for reproducibility: neighbor distance ties go
to the lowest training index, label votes and leaf majorities to the
smallest class index, and a point exactly on a linear decision boundary
is assigned class 0 (margin must be strictly positive for class 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .exceptions import InvalidSpecError, UnsupportedOperationError

_RULES = ("linear-svm", "rbf-svm", "cart", "knn")


@dataclass(frozen=True)
class TrainingConfig:
    """Classification rule selection plus rule-specific hyperparameters."""

    rule: str
    C: float = 1.0
    gamma: float | None = None  # None: 1 / (d * mean feature variance)
    min_leaf: int = 5
    k: int = 3
    seed: int = 0
    tol: float = 1e-3
    max_passes: int = 10_000

    def __post_init__(self):
        if self.rule not in _RULES:
            raise InvalidSpecError(f"unknown rule {self.rule!r}; expected one of {_RULES}")
        if self.C <= 0:
            raise InvalidSpecError("C must be > 0")
        if self.gamma is not None and self.gamma <= 0:
            raise InvalidSpecError("gamma must be > 0")
        if self.min_leaf < 1:
            raise InvalidSpecError("min_leaf must be >= 1")
        if self.k < 1:
            raise InvalidSpecError("k must be >= 1")


class Classifier:
    """Trained decision function R^d -> {0..c-1}."""

    linear_form: tuple[np.ndarray, float] | None = None
    constant_warning: bool = False

    def __init__(self, class_count: int):
        self.class_count = class_count

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predict labels for a (m, d) batch."""
        raise NotImplementedError

    def predict_point(self, x) -> int:
        return int(self.predict(np.asarray(x, dtype=np.float64)[None, :])[0])


def decision_margin(clf: Classifier, x) -> float:
    """Signed distance-like quantity a.x + b for linear classifiers.

    Positive margin means class 1; exactly zero means class 0 (tie rule).
    """
    if clf.linear_form is None:
        raise UnsupportedOperationError("classifier has no linear form")
    a, b = clf.linear_form
    return float(np.asarray(x, dtype=np.float64).ravel() @ a + b)


class ConstantClassifier(Classifier):
    """Fallback for degenerate (single-class) training data."""

    def __init__(self, label: int, class_count: int):
        super().__init__(class_count)
        self.label = int(label)
        self.constant_warning = True

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.label, dtype=np.int64)


class LinearClassifier(Classifier):
    """Two-class rule predict(x) = 1 iff a.x + b > 0."""

    def __init__(self, a: np.ndarray, b: float, class_count: int = 2):
        super().__init__(class_count)
        a = np.asarray(a, dtype=np.float64).ravel()
        a.setflags(write=False)
        self.linear_form = (a, float(b))

    def predict(self, X):
        a, b = self.linear_form
        return (np.asarray(X, dtype=np.float64) @ a + b > 0).astype(np.int64)


# ---------------------------------------------------------------------------
# SVM via sequential minimal optimization


def _smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_passes: int):
    """Solve the binary SVM dual for Gram matrix K and labels y in {-1,+1}.

    Pair selection is the maximal-violating-pair rule, which needs no
    randomness, so training is deterministic from the data alone.  Returns
    (alpha, b) for the decision function sum_t alpha_t y_t K(x, x_t) + b.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a with Q = yy' * K
    Q = K * np.outer(y, y)
    eps = 1e-12
    for _ in range(max_passes):
        neg_yg = -y * grad
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        low = ((y < 0) & (alpha < C - eps)) | ((y > 0) & (alpha > eps))
        if not up.any() or not low.any():
            break
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = up_idx[np.argmax(neg_yg[up_idx])]
        j = low_idx[np.argmin(neg_yg[low_idx])]
        violation = neg_yg[i] - neg_yg[j]
        if violation < tol:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 0:
            eta = 1e-12
        ai_old, aj_old = alpha[i], alpha[j]
        aj_new = aj_old - y[j] * violation / eta
        if y[i] != y[j]:
            lo_bound = max(0.0, aj_old - ai_old)
            hi_bound = min(C, C + aj_old - ai_old)
        else:
            lo_bound = max(0.0, ai_old + aj_old - C)
            hi_bound = min(C, ai_old + aj_old)
        aj_new = min(max(aj_new, lo_bound), hi_bound)
        d_aj = aj_new - aj_old
        if abs(d_aj) < 1e-14:
            break
        d_ai = -y[i] * y[j] * d_aj
        alpha[i] = ai_old + d_ai
        alpha[j] = aj_new
        grad += Q[:, i] * d_ai + Q[:, j] * d_aj

    neg_yg = -y * grad
    free = (alpha > eps) & (alpha < C - eps)
    if free.any():
        b = float(neg_yg[free].mean())
    else:
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        low = ((y < 0) & (alpha < C - eps)) | ((y > 0) & (alpha > eps))
        hi = neg_yg[up].max() if up.any() else None
        lo = neg_yg[low].min() if low.any() else None
        if hi is not None and lo is not None:
            b = 0.5 * (hi + lo)
        else:
            b = float(hi if hi is not None else (lo if lo is not None else 0.0))
    return alpha, b


def _rbf_gamma(config: TrainingConfig, X: np.ndarray) -> float:
    if config.gamma is not None:
        return config.gamma
    spread = float(X.var(axis=0).mean())
    if spread <= 0:
        return 1.0
    return 1.0 / (X.shape[1] * spread)


def _rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        (A * A).sum(axis=1)[:, None]
        - 2.0 * (A @ B.T)
        + (B * B).sum(axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class KernelSVMClassifier(Classifier):
    """Binary RBF-kernel SVM keeping only its support vectors."""

    def __init__(self, support, coef, b, gamma, class_count=2):
        super().__init__(class_count)
        self.support = support
        self.coef = coef  # alpha_t * y_t for support vectors
        self.b = float(b)
        self.gamma = float(gamma)

    def margins(self, X):
        X = np.asarray(X, dtype=np.float64)
        return _rbf_kernel(X, self.support, self.gamma) @ self.coef + self.b

    def predict(self, X):
        return (self.margins(X) > 0).astype(np.int64)


class OneVsRestClassifier(Classifier):
    """Multi-class wrapper: argmax of per-class margins, ties to the
    smallest class index."""

    def __init__(self, machines, class_count):
        super().__init__(class_count)
        self.machines = machines  # one margin-producing machine per class

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        margins = np.column_stack([m(X) for m in self.machines])
        return np.argmax(margins, axis=1).astype(np.int64)


def _train_svm(config: TrainingConfig, ds: LabeledDataset) -> Classifier:
    X = ds.features
    linear = config.rule == "linear-svm"
    gamma = None if linear else _rbf_gamma(config, X)

    def fit_binary(y_pm):
        K = X @ X.T if linear else _rbf_kernel(X, X, gamma)
        alpha, b = _smo_solve(K, y_pm, config.C, config.tol, config.max_passes)
        if linear:
            w = (alpha * y_pm) @ X
            return ("linear", w, b)
        keep = alpha > 1e-12
        return ("rbf", X[keep], (alpha * y_pm)[keep], b)

    if ds.class_count == 2:
        y_pm = np.where(ds.labels == 1, 1.0, -1.0)
        fit = fit_binary(y_pm)
        if linear:
            return LinearClassifier(fit[1], fit[2])
        return KernelSVMClassifier(fit[1], fit[2], fit[3], gamma)

    machines = []
    for cls in range(ds.class_count):
        y_pm = np.where(ds.labels == cls, 1.0, -1.0)
        if (y_pm > 0).all() or (y_pm < 0).all():
            sign = 1.0 if (y_pm > 0).all() else -1.0
            machines.append(lambda Xq, s=sign: np.full(Xq.shape[0], s * 1e12))
            continue
        fit = fit_binary(y_pm)
        if fit[0] == "linear":
            machines.append(lambda Xq, w=fit[1], b=fit[2]: Xq @ w + b)
        else:
            sub = KernelSVMClassifier(fit[1], fit[2], fit[3], gamma)
            machines.append(sub.margins)
    return OneVsRestClassifier(machines, ds.class_count)


# ---------------------------------------------------------------------------
# k-nearest neighbors


class KNNClassifier(Classifier):
    """Brute-force kNN with Euclidean distance.

    A query that coincides with a training point counts that point among
    its own neighbors (distance zero), which is the behavior resubstitution
    conventions rely on.
    """

    def __init__(self, ds: LabeledDataset, k: int):
        super().__init__(ds.class_count)
        self.train_x = ds.features
        self.train_y = ds.labels
        self.k = min(k, ds.n)  # clamp so tiny resampled folds stay trainable

    def neighbor_indices(self, X: np.ndarray) -> np.ndarray:
        """(m, k) training indices of the k nearest points per query,
        distance ties broken by lowest training index."""
        X = np.asarray(X, dtype=np.float64)
        m = X.shape[0]
        out = np.empty((m, self.k), dtype=np.int64)
        chunk = max(1, (1 << 22) // max(1, self.train_x.shape[0] * self.train_x.shape[1]))
        for start in range(0, m, chunk):
            block = X[start : start + chunk]
            diff = block[:, None, :] - self.train_x[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            order = np.argsort(d2, axis=1, kind="stable")
            out[start : start + block.shape[0]] = order[:, : self.k]
        return out

    def predict(self, X):
        idx = self.neighbor_indices(X)
        votes = self.train_y[idx]  # (m, k)
        counts = (votes[:, :, None] == np.arange(self.class_count)).sum(axis=1)
        return np.argmax(counts, axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# CART


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "label", "count")

    def __init__(self, label=0, count=0):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.label = label
        self.count = count

    @property
    def is_leaf(self):
        return self.left is None


def _gini_from_counts(counts, total):
    p = counts / total
    return 1.0 - float((p * p).sum())


def _best_split(X, y, idx, class_count, min_leaf):
    """Best axis-aligned midpoint split of the rows in idx, or None."""
    n = idx.shape[0]
    labels = y[idx]
    parent = _gini_from_counts(np.bincount(labels, minlength=class_count), n)
    best = (0.0, -1, 0.0)  # gain, feature, threshold
    for feat in range(X.shape[1]):
        vals = X[idx, feat]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sl = labels[order]
        one_hot = np.zeros((n, class_count))
        one_hot[np.arange(n), sl] = 1.0
        cum = one_hot.cumsum(axis=0)
        # split after position p: left = sv[:p+1]; candidates need distinct
        # neighbor values and min_leaf points on both sides
        pos = np.arange(n - 1)
        valid = (sv[:-1] < sv[1:]) & (pos + 1 >= min_leaf) & (n - pos - 1 >= min_leaf)
        if not valid.any():
            continue
        p = pos[valid]
        n_left = (p + 1).astype(np.float64)
        n_right = n - n_left
        left_counts = cum[p]
        right_counts = cum[-1] - left_counts
        gini_l = 1.0 - ((left_counts / n_left[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((right_counts / n_right[:, None]) ** 2).sum(axis=1)
        gains = parent - (n_left * gini_l + n_right * gini_r) / n
        at = int(np.argmax(gains))
        if gains[at] > best[0]:
            best = (float(gains[at]), feat, 0.5 * (sv[p[at]] + sv[p[at] + 1]))
    if best[1] < 0:
        return None
    return best


def _build_tree(X, y, idx, class_count, min_leaf):
    labels = y[idx]
    counts = np.bincount(labels, minlength=class_count)
    node = _TreeNode(label=int(np.argmax(counts)), count=idx.shape[0])
    if idx.shape[0] < 2 * min_leaf or (counts > 0).sum() == 1:
        return node
    split = _best_split(X, y, idx, class_count, min_leaf)
    if split is None:
        return node
    _, feat, threshold = split
    mask = X[idx, feat] <= threshold
    node.feature = feat
    node.threshold = threshold
    node.left = _build_tree(X, y, idx[mask], class_count, min_leaf)
    node.right = _build_tree(X, y, idx[~mask], class_count, min_leaf)
    return node


class CARTClassifier(Classifier):
    """Gini-impurity decision tree with axis-aligned midpoint splits."""

    def __init__(self, ds: LabeledDataset, min_leaf: int):
        super().__init__(ds.class_count)
        self.min_leaf = min_leaf
        self.root = _build_tree(
            ds.features, ds.labels, np.arange(ds.n), ds.class_count, min_leaf
        )

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0], dtype=np.int64)
        self._fill(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _fill(self, node, X, idx, out):
        if node.is_leaf:
            out[idx] = node.label
            return
        mask = X[idx, node.feature] <= node.threshold
        self._fill(node.left, X, idx[mask], out)
        self._fill(node.right, X, idx[~mask], out)

    def leaves(self):
        stack, found = [self.root], []
        while stack:
            node = stack.pop()
            if node.is_leaf:
                found.append(node)
            else:
                stack.extend((node.left, node.right))
        return found


# ---------------------------------------------------------------------------


def train(config: TrainingConfig, ds: LabeledDataset) -> Classifier:
    """Fit the configured rule; deterministic given (config, ds).

    Single-class training data yields a constant classifier carrying a
    warning flag rather than an error, so resampling estimators can keep
    going when a fold loses a class.
    """
    counts = ds.class_counts()
    present = np.flatnonzero(counts > 0)
    if present.shape[0] == 1:
        return ConstantClassifier(present[0], ds.class_count)
    if config.rule in ("linear-svm", "rbf-svm"):
        return _train_svm(config, ds)
    if config.rule == "knn":
        return KNNClassifier(ds, config.k)
    return CARTClassifier(ds, config.min_leaf)
