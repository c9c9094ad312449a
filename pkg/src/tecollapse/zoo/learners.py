"""From-scratch binary classifiers: logistic regression, a one-hidden-layer MLP
and a gradient-boosted shallow-tree ensemble.

All three are deterministic given ``(features, labels, hp, seed)`` and predict
hard labels by thresholding the positive-class probability at 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import HPConfig, as_labels
from ..errors import ConfigError, InputError, TrainingError

THRESHOLD = 0.5


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^z) - y*z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _check_inputs(features, labels) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise InputError(f"features must be an n x d matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise InputError("features contain NaN or Inf")
    y = as_labels(labels).astype(np.float64)
    if y.size != X.shape[0]:
        raise InputError(f"{X.shape[0]} feature rows but {y.size} labels")
    if y.size == 0:
        raise InputError("cannot train on an empty dataset")
    return X, y


def _param(hp: HPConfig, name: str, default=None):
    if name in hp.params:
        return hp.params[name]
    if default is None:
        raise ConfigError(f"{hp.config_id}: missing hyper-parameter {name!r}")
    return default


class BinaryModel:
    def predict_proba(self, features) -> np.ndarray:
        raise NotImplementedError

    def predict(self, features) -> np.ndarray:
        return (self.predict_proba(features) >= THRESHOLD).astype(np.int8)


@dataclass
class LogisticModel(BinaryModel):
    weights: np.ndarray
    bias: float

    def decision_function(self, features) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, features) -> np.ndarray:
        return _sigmoid(self.decision_function(features))


def _top_eigenvalue(A: np.ndarray, iters: int = 100) -> float:
    v = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
    lam = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        lam = float(v @ w)
        v = w / norm
    return lam


def train_lr(features, labels, hp: HPConfig, seed: int = 0) -> LogisticModel:
    """L2-regularized logistic regression by full-batch gradient descent.

    Minimizes ``mean(log_loss) + l2 / (2n) * ||w||^2`` (the bias is not
    penalized), i.e. the usual inverse-C convention with ``C = 1 / l2``.
    The step is ``1/L`` for the smoothness constant ``L`` of the objective.
    """
    if hp.family != "LR":
        raise ConfigError(f"train_lr got a {hp.family} config")
    X, y = _check_inputs(features, labels)
    l2 = float(_param(hp, "l2"))
    if l2 < 0:
        raise ConfigError(f"{hp.config_id}: l2 must be >= 0")
    iters = int(_param(hp, "max_iter", 500))
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    lip = 0.25 * _top_eigenvalue(Xb) / n + l2 / n
    step = 1.0 / max(lip, 1e-12)
    theta = np.zeros(d + 1)
    penalty = np.full(d + 1, l2 / n)
    penalty[-1] = 0.0
    for _ in range(iters):
        p = _sigmoid(Xb @ theta)
        grad = Xb.T @ (p - y) / n + penalty * theta
        theta -= step * grad
    if not np.isfinite(theta).all():
        raise TrainingError(f"{hp.config_id}: gradient descent diverged")
    return LogisticModel(theta[:-1].copy(), float(theta[-1]))


@dataclass
class MLPModel(BinaryModel):
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def logits(self, features) -> np.ndarray:
        h = np.maximum(np.asarray(features, dtype=np.float64) @ self.W1 + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def predict_proba(self, features) -> np.ndarray:
        return _sigmoid(self.logits(features))


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def __init__(self, params, lr):
        self.params, self.lr = params, lr

    def step(self, grads):
        for p, g in zip(self.params, grads):
            p -= self.lr * g


OPTIMIZERS = {"sgd": _SGD, "adam": _Adam}


def train_mlp(features, labels, hp: HPConfig, seed: int = 0) -> MLPModel:
    """One ReLU hidden layer, sigmoid output, binary cross-entropy.

    Mini-batches of ``batch_size`` (default 32) are drawn from a per-epoch
    permutation of a ``seed``-determined generator. Updates are plain SGD
    with step ``lr`` unless ``optimizer = "adam"``. Inverted dropout is
    applied to the hidden layer in training.
    """
    if hp.family != "MLP":
        raise ConfigError(f"train_mlp got a {hp.family} config")
    X, y = _check_inputs(features, labels)
    lr = float(_param(hp, "lr"))
    hidden = int(_param(hp, "hidden"))
    dropout = float(_param(hp, "dropout", 0.0))
    epochs = int(_param(hp, "epochs"))
    batch = int(_param(hp, "batch_size", 32))
    optimizer = str(_param(hp, "optimizer", "sgd"))
    if lr <= 0 or hidden < 1 or not 0 <= dropout < 1 or epochs < 1 or batch < 1 \
            or optimizer not in OPTIMIZERS:
        raise ConfigError(f"{hp.config_id}: illegal MLP hyper-parameters")

    rng = np.random.default_rng(seed)
    n, d = X.shape
    W1 = rng.standard_normal((d, hidden)) * np.sqrt(2.0 / d)
    b1 = np.zeros(hidden)
    w2 = rng.standard_normal(hidden) * np.sqrt(1.0 / hidden)
    b2 = np.zeros(1)
    opt = OPTIMIZERS[optimizer]([W1, b1, w2, b2], lr)
    keep = 1.0 - dropout

    # divergence is caught through the loss check, so numpy overflow warnings are noise
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, epochs + 1):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                xb, yb = X[idx], y[idx]
                pre = xb @ W1 + b1
                h = np.maximum(pre, 0.0)
                if dropout > 0:
                    mask = (rng.random(h.shape) < keep) / keep
                    h = h * mask
                z = h @ w2 + b2[0]
                total += _log_loss_from_logits(z, yb) * idx.size
                dz = (_sigmoid(z) - yb) / idx.size
                gw2 = h.T @ dz
                gb2 = np.array([dz.sum()])
                dh = np.outer(dz, w2)
                if dropout > 0:
                    dh *= mask
                dh[pre <= 0] = 0.0
                gW1 = xb.T @ dh
                gb1 = dh.sum(axis=0)
                opt.step([gW1, gb1, gw2, gb2])
            if not np.isfinite(total):
                raise TrainingError(f"{hp.config_id}: non-finite training loss", epoch=epoch)
    return MLPModel(W1, b1, w2, float(b2[0]))


@dataclass
class _Tree:
    # parallel arrays; feature == -1 marks a leaf
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            rows = np.nonzero(inner)[0]
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])


def _build_tree(X, g, h, max_depth, min_child, reg_lambda) -> _Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
            lst.append(v)
        return len(feature) - 1

    def grow(idx: np.ndarray, depth: int) -> int:
        node = new_node()
        G, H = g[idx].sum(), h[idx].sum()
        value[node] = -G / (H + reg_lambda)
        m = idx.size
        if depth >= max_depth or m < 2 * min_child:
            return node
        Xn = X[idx]
        order = np.argsort(Xn, axis=0, kind="stable")
        xs = np.take_along_axis(Xn, order, axis=0)
        gl = np.cumsum(g[idx][order], axis=0)[:-1]
        hl = np.cumsum(h[idx][order], axis=0)[:-1]
        gr, hr = G - gl, H - hl
        gain = gl**2 / (hl + reg_lambda) + gr**2 / (hr + reg_lambda) - G**2 / (H + reg_lambda)
        # split after position k: left holds k+1 rows
        k = np.arange(m - 1)[:, None]
        valid = (xs[1:] > xs[:-1]) & (k + 1 >= min_child) & (m - k - 1 >= min_child)
        if not valid.any():
            return node
        gain = np.where(valid, gain, -np.inf)
        # ties resolve to the lowest feature index, then the lowest threshold
        flat = np.argmax(gain.T)
        f, pos = divmod(int(flat), m - 1)
        thr = 0.5 * (xs[pos, f] + xs[pos + 1, f])
        goes_left = Xn[:, f] <= thr
        feature[node], threshold[node] = f, thr
        lnode = grow(idx[goes_left], depth + 1)
        rnode = grow(idx[~goes_left], depth + 1)
        left[node], right[node] = lnode, rnode
        return node

    grow(np.arange(X.shape[0]), 0)
    return _Tree(
        np.asarray(feature, np.int64), np.asarray(threshold, np.float64),
        np.asarray(left, np.int64), np.asarray(right, np.int64), np.asarray(value, np.float64),
    )


@dataclass
class StumpEnsembleModel(BinaryModel):
    base_score: float
    learning_rate: float
    trees: list

    def decision_function(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        F = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            F += self.learning_rate * t.apply(X)
        return F

    def predict_proba(self, features) -> np.ndarray:
        return _sigmoid(self.decision_function(features))


def train_stump_ensemble(features, labels, hp: HPConfig, seed: int = 0) -> StumpEnsembleModel:
    """Gradient boosting with log-loss on depth-limited axis-aligned trees.

    Starts from the training log-odds; each tree fits Newton leaf values
    ``-sum(g) / (sum(h) + reg_lambda)``. Fully deterministic, ``seed`` is
    accepted for interface symmetry only.
    """
    if hp.family != "StumpEnsemble":
        raise ConfigError(f"train_stump_ensemble got a {hp.family} config")
    X, y = _check_inputs(features, labels)
    lr = float(_param(hp, "lr"))
    n_est = int(_param(hp, "n_estimators"))
    depth = int(_param(hp, "max_depth"))
    min_child = int(_param(hp, "min_child_samples", 1))
    reg_lambda = float(_param(hp, "reg_lambda", 1.0))
    if lr <= 0 or n_est < 1 or depth < 1 or min_child < 1 or reg_lambda < 0:
        raise ConfigError(f"{hp.config_id}: illegal boosting hyper-parameters")

    prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    base = float(np.log(prior / (1 - prior)))
    F = np.full(y.size, base)
    trees = []
    for it in range(1, n_est + 1):
        p = _sigmoid(F)
        g, h = p - y, np.maximum(p * (1 - p), 1e-16)
        tree = _build_tree(X, g, h, depth, min_child, reg_lambda)
        F += lr * tree.apply(X)
        if not np.isfinite(F).all():
            raise TrainingError(f"{hp.config_id}: non-finite scores", epoch=it)
        trees.append(tree)
    return StumpEnsembleModel(base, lr, trees)


TRAINERS = {
    "LR": train_lr,
    "MLP": train_mlp,
    "StumpEnsemble": train_stump_ensemble,
}


def train(features, labels, hp: HPConfig, seed: int = 0) -> BinaryModel:
    try:
        trainer = TRAINERS[hp.family]
    except KeyError:
        raise ConfigError(f"family {hp.family!r} is ingest-only and cannot be trained here") from None
    return trainer(features, labels, hp, seed)
