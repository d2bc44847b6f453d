"""Training loops: source pre-training, re-teachers, student, evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyDataset, EmptySlice, FrozenModelMutated, NoAnsweredQueries
from ..prompt import PromptSpec
from ..seeding import derive_seed
from .layers import conv_stack, cross_entropy
from .models import FrozenSourceModel, TargetModel, build_model
from .optim import Adam


@dataclass
class TrainConfig:
    lr: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    lr_decay_per_epoch: float = 0.7
    batch_size: int = 16
    epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if not (0.0 < self.lr_decay_per_epoch <= 1.0):
            raise ValueError("lr_decay_per_epoch must lie in (0, 1]")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")


@dataclass
class StudentConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    pseudo_label_rounds: int = 2
    confidence_threshold: float = 0.95

    def __post_init__(self):
        if self.pseudo_label_rounds < 0:
            raise ValueError("pseudo_label_rounds must be nonnegative")
        # 1.0 is accepted and disables pseudo-labelling.
        if not (0.0 < self.confidence_threshold <= 1.0):
            raise ValueError("confidence_threshold must lie in (0, 1]")


@dataclass
class FitHistory:
    batch_loss: list[float] = field(default_factory=list)
    epoch_loss: list[float] = field(default_factory=list)


def fit(params: dict, loss_and_grads, x, y, config: TrainConfig,
        on_epoch=None) -> tuple[dict, FitHistory]:
    """Mini-batch Adam over ``(x, y)``; ``loss_and_grads(params, xb, yb)``.

    Batches are reshuffled every epoch from ``config.seed`` and the learning
    rate is multiplied by ``lr_decay_per_epoch`` after each epoch.
    """
    rng = np.random.default_rng(config.seed)
    opt = Adam(config.lr, config.beta1, config.beta2, config.eps_hat)
    history = FitHistory()
    n = x.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = loss_and_grads(params, x[idx], y[idx])
            params = opt.step(params, grads)
            history.batch_loss.append(loss)
            total += loss * idx.size
        history.epoch_loss.append(total / n)
        if on_epoch is not None:
            on_epoch(params)
        opt.lr *= config.lr_decay_per_epoch
    return params, history


def fit_model(model: TargetModel, prepared, labels, config: TrainConfig,
              on_epoch=None) -> FitHistory:
    def loss_and_grads(params, xb, yb):
        model.assign(params)
        return model.loss_and_grads(xb, yb)

    params, history = fit(model.trainable(), loss_and_grads, prepared,
                          np.asarray(labels, dtype=np.int64), config, on_epoch)
    model.assign(params)
    return history


def accuracy(pred, labels) -> float:
    pred, labels = np.asarray(pred), np.asarray(labels)
    if labels.size == 0:
        raise EmptyDataset("cannot score an empty set")
    return float(np.mean(pred == labels))


def train_source(images, labels, num_classes: int, config: TrainConfig,
                 channels=(8, 16), test_images=None, test_labels=None,
                 init_seed: int | None = None,
                 label_smoothing: float = 0.0) -> FrozenSourceModel:
    """Train the conv stack on the public source task, then seal it."""
    images = np.asarray(images, dtype=np.float64)
    if images.shape[0] == 0:
        raise EmptyDataset("source dataset is empty")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != images.shape[0]:
        raise ValueError("images and labels disagree in length")
    if labels.max() >= num_classes:
        raise ValueError("label exceeds source class count")
    net = conv_stack(images.shape[1:], num_classes, tuple(channels))
    seed = config.seed if init_seed is None else init_seed
    params = net.init_params(np.random.default_rng(derive_seed(seed, "source-init")))

    def loss_and_grads(p, xb, yb):
        logits, caches = net.forward(p, xb)
        loss, g = cross_entropy(logits, yb, label_smoothing)
        _, grads = net.backward(p, caches, g)
        return loss, grads

    params, _ = fit(params, loss_and_grads, images, labels, config)
    acc = None
    if test_images is not None and len(test_images):
        tmp = FrozenSourceModel(net, params)
        acc = accuracy(tmp.predict(np.asarray(test_images, dtype=np.float64)), test_labels)
    return FrozenSourceModel(net, params, source_accuracy=acc, seed=seed)


def train_reteacher(images, labels, source: FrozenSourceModel, spec: PromptSpec,
                    map_kind: str, num_classes: int, config: TrainConfig,
                    kind: str = "vp", init_seed: int | None = None) -> TargetModel:
    """Fit one teacher on its private slice; the source must come back untouched."""
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] == 0:
        raise EmptySlice("teacher slice is empty")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError("slice label outside the target classes")
    before = source.current_fingerprint()
    seed = config.seed if init_seed is None else init_seed
    model = build_model(kind, source, spec, map_kind, num_classes,
                        np.random.default_rng(derive_seed(seed, "model-init")))
    fit_model(model, model.prepare(images), labels, config)
    if source.current_fingerprint() != before:
        raise FrozenModelMutated("source parameters changed during teacher training")
    return model


def train_student(images, labels, unlabeled, source: FrozenSourceModel,
                  spec: PromptSpec, map_kind: str, num_classes: int,
                  config: StudentConfig, kind: str = "vp") -> TargetModel:
    """Supervised fit on answered queries, then confidence-thresholded self-training.

    Each round labels ``unlabeled`` with the current model, keeps predictions
    whose top probability reaches the threshold, and refits from the same
    initialisation on the union.  A round that keeps nothing leaves the model
    unchanged.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] == 0:
        raise NoAnsweredQueries("no answered queries to train the student on")
    model = train_reteacher(images, labels, source, spec, map_kind, num_classes,
                            config.train, kind=kind)
    unlabeled = np.asarray(unlabeled, dtype=np.float64)
    if unlabeled.shape[0] == 0 or config.confidence_threshold >= 1.0:
        return model
    for _ in range(config.pseudo_label_rounds):
        probs = model.predict_proba(unlabeled)
        keep = probs.max(axis=1) >= config.confidence_threshold
        if not keep.any():
            break
        x = np.concatenate([images, unlabeled[keep]])
        y = np.concatenate([labels, probs[keep].argmax(axis=1)])
        model = train_reteacher(x, y, source, spec, map_kind, num_classes,
                                config.train, kind=kind)
    return model


def evaluate(model, images, labels) -> float:
    """Top-1 accuracy of ``model.predict`` on a held-out set."""
    images = np.asarray(images)
    if images.shape[0] == 0:
        raise EmptyDataset("test set is empty")
    return accuracy(model.predict(images), labels)
