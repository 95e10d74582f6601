"""Plain SGD training with softmax cross-entropy for the micro CNN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cnn import Network, _loss_and_param_grads, logits_batch
from .data import Dataset, split_dataset
from .errors import NumericalError, ParameterError


# Defaults that reach >= 95% validation accuracy on the synthetic shapes.
# The rate is per architecture: vggish collapses to chance above ~0.2 while
# densish undertrains below ~0.3.
DEFAULT_EPOCHS = 30
DEFAULT_BATCH_SIZE = 32
DEFAULT_LEARNING_RATE = {"vggish": 0.15, "densish": 0.3}


@dataclass(frozen=True, eq=False)
class TrainResult:
    network: Network
    train_accuracy: tuple
    val_accuracy: tuple
    losses: tuple


def accuracy(net: Network, data: Dataset) -> float:
    if len(data) == 0:
        raise ParameterError("cannot score an empty dataset")
    preds = logits_batch(net, data.stacked()).argmax(axis=1)
    return float((preds == data.labels).mean())


def predict(net: Network, images: np.ndarray) -> np.ndarray:
    return logits_batch(net, images).argmax(axis=1)


def train(
    net: Network,
    data: Dataset,
    epochs: int,
    learning_rate: float,
    batch_size: int,
    seed: int,
    val_data: Dataset | None = None,
) -> TrainResult:
    """Train with plain minibatch SGD; returns a new network plus per-epoch
    train/val accuracy and mean epoch loss.

    Without an explicit ``val_data``, a deterministic stratified sixth of
    ``data`` (the last examples of each class) is held out; the holdout is
    skipped when a class has fewer than six examples. ``val_accuracy``
    entries are None when no validation examples exist. Shuffling and batch
    order come from the seed alone, so results are bit-reproducible.
    """
    if epochs < 0:
        raise ParameterError(f"epochs must be >= 0, got {epochs}")
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")
    if len(data) == 0:
        raise ParameterError("training data is empty")
    if val_data is None:
        train_split, val_split = split_dataset(data)
        if len(train_split) == 0:
            train_split, val_split = data, Dataset((), np.zeros(0, dtype=np.int64), data.seed)
    else:
        train_split, val_split = data, val_data

    xs = train_split.stacked()
    ys = train_split.labels
    weights = {i: {k: v.copy() for k, v in t.items()} for i, t in net.weights.items()}
    rng = np.random.default_rng(seed)
    lr = float(learning_rate)

    train_acc, val_acc, losses = [], [], []
    for epoch in range(epochs):
        order = rng.permutation(len(train_split))
        epoch_losses = []
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            loss, grads, _ = _loss_and_param_grads(net, weights, xs[batch], ys[batch])
            if not np.isfinite(loss):
                raise NumericalError(f"training diverged at epoch {epoch}", step=epoch)
            for i, tensors in grads.items():
                for name, g in tensors.items():
                    weights[i][name] -= lr * g
            epoch_losses.append(loss)
        snapshot = Network(net.input_shape, net.layers, weights, net.seed)
        train_acc.append(accuracy(snapshot, train_split))
        val_acc.append(accuracy(snapshot, val_split) if len(val_split) else None)
        losses.append(float(np.mean(epoch_losses)))

    final = Network(net.input_shape, net.layers, weights, net.seed)
    return TrainResult(final, tuple(train_acc), tuple(val_acc), tuple(losses))
