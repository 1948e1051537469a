"""Network assembly from an architecture encoding, training loop and SGD."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..space import ArchitectureSpace
from .layers import Conv2D, Dense, Dropout, Flatten, Identity, Layer, MaxPool2D, ResidualBlock


class BuildError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class TrainingConfigError(ValueError):
    pass


@dataclass
class LayerInstance:
    token: str  # operation id, or "flatten"/"head" for structural layers
    kind: str
    input_shape: tuple[int, ...]
    output_shape: tuple[int, ...]
    layer: Layer
    repaired: str | None = None

    @property
    def param_count(self) -> int:
        return self.layer.param_count


@dataclass
class Network:
    input_shape: tuple[int, ...]
    num_classes: int
    layers: list[LayerInstance]

    @property
    def param_count(self) -> int:
        return sum(l.param_count for l in self.layers)

    @property
    def body_param_count(self) -> int:
        return sum(l.param_count for l in self.layers if l.token != "head")

    @property
    def params(self) -> list[np.ndarray]:
        return [p for l in self.layers for p in l.layer.params]

    @property
    def repairs(self) -> list[tuple[int, str]]:
        return [(i, l.repaired) for i, l in enumerate(self.layers) if l.repaired]

    def head_input_shape(self) -> tuple[int, ...]:
        return self.layers[-1].input_shape


def build_network(space: ArchitectureSpace, arch, input_shape, num_classes: int, rng: np.random.Generator) -> Network:
    """Instantiate layers in order with shape inference and repair rules.

    Repairs: spatial ops (conv, maxpool, residual) on a flat tensor become
    identity; maxpool on a spatial size below 2 becomes identity; dense on a
    spatial tensor gets an implicit flatten in front.
    """
    arch = space.validate(arch)
    shape = tuple(int(d) for d in input_shape)
    if len(shape) not in (1, 3) or any(d < 1 for d in shape):
        raise BuildError(f"input shape must be (features,) or (H, W, C) with positive dims, got {input_shape}")
    if num_classes < 2:
        raise BuildError("num_classes must be >= 2")

    layers: list[LayerInstance] = []

    def add(token, kind, layer, out_shape, repaired=None):
        nonlocal shape
        layers.append(LayerInstance(token, kind, shape, out_shape, layer, repaired))
        shape = out_shape

    for token in arch:
        op = space.op(token)
        spatial = len(shape) == 3
        if op.kind in ("conv", "residual_block", "maxpool") and not spatial:
            add(token, op.kind, Identity(), shape, "spatial op on flat tensor")
        elif op.kind == "conv":
            add(token, op.kind, Conv2D(shape[2], op.filters, op.kernel, rng), (shape[0], shape[1], op.filters))
        elif op.kind == "residual_block":
            add(token, op.kind, ResidualBlock(shape[2], op.filters, rng), (shape[0], shape[1], op.filters))
        elif op.kind == "maxpool":
            if min(shape[0], shape[1]) < 2:
                add(token, op.kind, Identity(), shape, "pool below 1x1")
            else:
                add(token, op.kind, MaxPool2D(), (shape[0] // 2, shape[1] // 2, shape[2]))
        elif op.kind == "dense":
            if spatial:
                add("flatten", "flatten", Flatten(), (int(np.prod(shape)),))
            add(token, op.kind, Dense(shape[0], op.units, rng), (op.units,))
        elif op.kind == "dropout":
            add(token, op.kind, Dropout(op.rate), shape)
        else:
            add(token, op.kind, Identity(), shape)

    if len(shape) == 3:
        add("flatten", "flatten", Flatten(), (int(np.prod(shape)),))
    add("head", "dense", Dense(shape[0], num_classes, rng, relu=False), (num_classes,))
    return Network(tuple(int(d) for d in input_shape), num_classes, layers)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def _check_batch(net: Network, batch: np.ndarray):
    if batch.ndim != len(net.input_shape) + 1 or tuple(batch.shape[1:]) != net.input_shape:
        raise ShapeError(f"batch shape {batch.shape} does not match network input {net.input_shape}")


def logits(net: Network, batch, training: bool = False, rng=None, reuse_masks: bool = False) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    _check_batch(net, x)
    for inst in net.layers:
        x = inst.layer.forward(x, training=training, rng=rng, reuse_masks=reuse_masks)
    return x


def forward(net: Network, batch, training: bool = False, rng=None, reuse_masks: bool = False) -> np.ndarray:
    """Softmax class probabilities for a batch."""
    return softmax(logits(net, batch, training, rng, reuse_masks))


def loss(net: Network, batch, labels, training: bool = False, rng=None, reuse_masks: bool = False) -> float:
    return cross_entropy(forward(net, batch, training, rng, reuse_masks), np.asarray(labels))


def backward(net: Network, batch, labels, training: bool = True, rng=None, reuse_masks: bool = False):
    """Gradients of mean cross-entropy w.r.t. every parameter, aligned with ``net.params``.

    Returns ``(loss, grads)``.
    """
    labels = np.asarray(labels)
    probs = forward(net, batch, training=training, rng=rng, reuse_masks=reuse_masks)
    if labels.shape != (probs.shape[0],):
        raise ShapeError("labels must be a 1-d array of class indices, one per sample")
    value = cross_entropy(probs, labels)
    d = probs.copy()
    d[np.arange(len(labels)), labels] -= 1.0
    d /= len(labels)
    for inst in net.layers:
        inst.layer.zero_grads()
    for inst in reversed(net.layers):
        d = inst.layer.backward(d)
    return value, [g for inst in net.layers for g in inst.layer.grads]


def sgd_step(net: Network, grads: list[np.ndarray], lr: float):
    for p, g in zip(net.params, grads):
        p -= lr * g


def accuracy(net: Network, x, y, batch_size: int = 512) -> tuple[float, float]:
    """Accuracy and mean cross-entropy in inference mode."""
    if len(y) == 0:
        return 0.0, 0.0
    correct, total_loss = 0, 0.0
    for start in range(0, len(y), batch_size):
        xb, yb = x[start : start + batch_size], y[start : start + batch_size]
        probs = forward(net, xb)
        correct += int(np.sum(probs.argmax(axis=1) == yb))
        total_loss += cross_entropy(probs, yb) * len(yb)
    return correct / len(y), total_loss / len(y)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int | None = None
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    def __len__(self) -> int:
        return self.epochs_run


def train(
    net: Network,
    x_train,
    y_train,
    x_val,
    y_val,
    epochs: int,
    batch_size: int,
    lr: float,
    rng: np.random.Generator,
    patience: int | None = None,
) -> TrainHistory:
    """Minibatch SGD with seeded shuffling.

    With ``patience`` set, training stops once validation loss has not improved
    for that many epochs and the best-epoch parameters are restored.
    """
    if len(y_train) == 0:
        raise TrainingConfigError("training split is empty")
    if batch_size < 1 or lr < 0 or epochs < 0:
        raise TrainingConfigError("batch_size must be >= 1, lr >= 0, epochs >= 0")
    history = TrainHistory()
    best_loss, best_params, waited = np.inf, None, 0
    n = len(y_train)
    for epoch in range(epochs):
        order = rng.permutation(n)
        running = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            value, grads = backward(net, x_train[idx], y_train[idx], training=True, rng=rng)
            sgd_step(net, grads, lr)
            running += value * len(idx)
        history.train_loss.append(running / n)
        val_acc, val_loss = accuracy(net, x_val, y_val) if len(y_val) else (0.0, running / n)
        history.val_loss.append(val_loss)
        history.val_accuracy.append(val_acc)
        if patience is not None:
            if val_loss < best_loss:
                best_loss, waited, history.best_epoch = val_loss, 0, epoch
                best_params = [p.copy() for p in net.params]
            else:
                waited += 1
                if waited >= patience:
                    history.stopped_early = True
                    for p, saved in zip(net.params, best_params):
                        p[...] = saved
                    break
    return history
