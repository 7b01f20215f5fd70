"""Classifier heads over embedded nodes, plus the source-only baseline.

Training rows are the labeled barycenter (or source) rows of a spectral
embedding, test rows the target rows. Two deliberately small heads are
provided: a k-NN voter with fully deterministic tie-breaking, and a
multinomial logistic model trained by full-batch gradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NumericalError, ShapeError
from .measures import LabeledDomain, squared_distances, standardize


@dataclass(frozen=True)
class EmbeddedDataset:
    """Labeled training rows and unlabeled test rows in one feature space."""

    train_rows: np.ndarray
    train_labels: np.ndarray
    test_rows: np.ndarray

    def __post_init__(self):
        tr = np.atleast_2d(np.asarray(self.train_rows, dtype=np.float64))
        te = np.atleast_2d(np.asarray(self.test_rows, dtype=np.float64))
        y = np.asarray(self.train_labels, dtype=np.int64).ravel()
        if tr.shape[0] == 0:
            raise InvalidInput("empty training set")
        if tr.shape[1] != te.shape[1]:
            raise ShapeError(
                f"train has {tr.shape[1]} columns, test has {te.shape[1]}"
            )
        if y.shape[0] != tr.shape[0]:
            raise ShapeError(f"{y.shape[0]} labels for {tr.shape[0]} training rows")
        if np.any(y < 0):
            raise InvalidInput("class ids must be nonnegative")
        object.__setattr__(self, "train_rows", tr)
        object.__setattr__(self, "test_rows", te)
        object.__setattr__(self, "train_labels", y)

    @property
    def n_classes(self) -> int:
        return int(self.train_labels.max()) + 1


@dataclass(frozen=True)
class ClassifierConfig:
    """Which head to use and its hyperparameters."""

    kind: str = "knn"
    knn_k: int = 5
    l2: float = 1e-3
    lr: float = 0.1
    epochs: int = 300

    def __post_init__(self):
        if self.kind not in ("knn", "softmax"):
            raise InvalidInput(f"unknown classifier kind {self.kind!r}")
        if self.knn_k < 1:
            raise InvalidInput("knn_k must be >= 1")
        if self.l2 < 0 or self.epochs < 1 or self.lr <= 0:
            raise InvalidInput("need l2 >= 0, lr > 0, epochs >= 1")


def knn_predict(data: EmbeddedDataset, k_neighbors: int = 5) -> np.ndarray:
    """Majority vote of the k nearest training rows (Euclidean).

    Deterministic: equal distances prefer the smaller training index, vote
    ties prefer the smaller class id.
    """
    if k_neighbors < 1:
        raise InvalidInput("k_neighbors must be >= 1")
    if k_neighbors > data.train_rows.shape[0]:
        raise InvalidInput(
            f"k_neighbors={k_neighbors} exceeds {data.train_rows.shape[0]} "
            "training rows"
        )
    d2 = squared_distances(data.test_rows, data.train_rows)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k_neighbors]
    votes = data.train_labels[order]
    n_classes = data.n_classes
    out = np.empty(data.test_rows.shape[0], dtype=np.int64)
    for i in range(out.shape[0]):
        out[i] = np.argmax(np.bincount(votes[i], minlength=n_classes))
    return out


@dataclass(frozen=True)
class SoftmaxModel:
    """Linear softmax classifier: weights (n_classes, dim), bias (n_classes,)."""

    weights: np.ndarray
    bias: np.ndarray
    final_loss: float
    loss_trace: np.ndarray = field(repr=False)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss_grad(W, bias, X, Y_onehot, l2):
    """Mean cross-entropy plus (l2/2)||W||^2 and its analytic gradient."""
    n = X.shape[0]
    probs = _softmax(X @ W.T + bias)
    eps = np.finfo(float).tiny
    ce = -np.log(np.clip((probs * Y_onehot).sum(axis=1), eps, None)).mean()
    loss = ce + 0.5 * l2 * float((W * W).sum())
    delta = (probs - Y_onehot) / n
    grad_w = delta.T @ X + l2 * W
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def softmax_train(
    data: EmbeddedDataset,
    l2: float = 1e-3,
    lr: float = 0.1,
    epochs: int = 300,
    seed: int = 0,
) -> SoftmaxModel:
    """Full-batch gradient descent on the regularized cross-entropy.

    Weights start at zero, so training is deterministic and the initial loss
    on balanced data is log(n_classes); `seed` is accepted for interface
    parity with stochastic heads and currently unused.
    """
    del seed
    if epochs < 1 or l2 < 0:
        raise InvalidInput("need epochs >= 1 and l2 >= 0")
    X = data.train_rows
    n, dim = X.shape
    n_classes = data.n_classes
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), data.train_labels] = 1.0
    W = np.zeros((n_classes, dim))
    bias = np.zeros(n_classes)
    losses = np.empty(epochs + 1)
    for epoch in range(epochs):
        loss, grad_w, grad_b = softmax_loss_grad(W, bias, X, Y, l2)
        if not np.isfinite(loss):
            raise NumericalError(f"non-finite training loss at epoch {epoch}")
        losses[epoch] = loss
        W -= lr * grad_w
        bias -= lr * grad_b
    final, _, _ = softmax_loss_grad(W, bias, X, Y, l2)
    if not np.isfinite(final):
        raise NumericalError(f"non-finite training loss at epoch {epochs}")
    losses[epochs] = final
    return SoftmaxModel(weights=W, bias=bias, final_loss=float(final), loss_trace=losses)


def softmax_predict(model: SoftmaxModel, rows: np.ndarray) -> np.ndarray:
    logits = np.atleast_2d(rows) @ model.weights.T + model.bias
    return np.argmax(logits, axis=1).astype(np.int64)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy, per-class accuracy, and the confusion matrix (rows = truth)."""

    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray
    n_test: int


def evaluate(
    predictions: np.ndarray, truth: np.ndarray, n_classes: int | None = None
) -> EvalReport:
    """Score predictions against ground truth."""
    pred = np.asarray(predictions, dtype=np.int64).ravel()
    true = np.asarray(truth, dtype=np.int64).ravel()
    if pred.shape[0] != true.shape[0]:
        raise ShapeError(f"{pred.shape[0]} predictions for {true.shape[0]} labels")
    if pred.shape[0] == 0:
        raise InvalidInput("cannot evaluate empty prediction vector")
    if n_classes is None:
        n_classes = int(max(pred.max(), true.max())) + 1
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (true, pred), 1)
    row_sums = confusion.sum(axis=1)
    per_class = np.where(row_sums > 0, np.diag(confusion) / np.maximum(row_sums, 1), 0.0)
    return EvalReport(
        accuracy=float(np.trace(confusion) / pred.shape[0]),
        per_class_accuracy=per_class,
        confusion=confusion,
        n_test=int(pred.shape[0]),
    )


def fit_predict(
    cfg: ClassifierConfig,
    train_rows: np.ndarray,
    train_labels: np.ndarray,
    test_rows: np.ndarray,
    seed: int = 0,
) -> np.ndarray:
    """Train the configured head and predict labels for the test rows."""
    data = EmbeddedDataset(train_rows, train_labels, test_rows)
    if cfg.kind == "knn":
        return knn_predict(data, cfg.knn_k)
    model = softmax_train(data, l2=cfg.l2, lr=cfg.lr, epochs=cfg.epochs, seed=seed)
    return softmax_predict(model, data.test_rows)


def source_only_baseline(
    sources: list[LabeledDomain],
    target: LabeledDomain,
    cfg: ClassifierConfig = ClassifierConfig(),
    seed: int = 0,
) -> EvalReport:
    """No-adaptation reference: train on pooled source features, score on target.

    Features are standardized jointly with the target (the same preprocessing
    the adaptive pipeline sees); target labels are used for scoring only.
    """
    if not sources:
        raise InvalidInput("need at least one source domain")
    if any(s.labels is None for s in sources):
        raise InvalidInput("all sources must be labeled")
    if target.labels is None:
        raise InvalidInput("baseline evaluation requires target labels")
    scaled = standardize(list(sources) + [target])
    src, tgt = scaled[:-1], scaled[-1]
    train = np.vstack([s.points for s in src])
    labels = np.concatenate([s.labels for s in src])
    preds = fit_predict(cfg, train, labels, tgt.points, seed=seed)
    n_classes = int(max(labels.max(), target.labels.max())) + 1
    return evaluate(preds, target.labels, n_classes=n_classes)
