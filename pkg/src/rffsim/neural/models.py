"""Model definitions, Adam training loops and per-sample calibration.

Two architectures: a three-block 1-D CNN classifier over 2xL signal
representations, and a four-layer dense calibration network that maps
augmented receiver samples back to source-receiver I/Q.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import EmptyDataset, ShapeMismatch
from ..waveform import ComplexFrame
from .layers import (
    BatchNorm1d, Conv1d, Dense, Flatten, Layer, LeakyReLU, MaxPool1d,
    cross_entropy_loss, mse_loss, softmax,
)


@dataclass
class ClassifierConfig:
    input_len: int = 100
    input_channels: int = 2
    conv_filters: tuple[int, ...] = (32, 64, 128)
    kernel: int = 3
    stride: int = 2
    padding: int = 1
    leaky_slope: float = 0.01
    pool_size: int = 2
    pool_stride: int = 2
    classes: int = 12
    l2_strength: float = 0.001
    lr: float = 0.001
    lr_decay_factor: float = 0.5
    lr_decay_every: int = 50
    epochs: int = 200
    batch: int = 320

    def __post_init__(self) -> None:
        if self.classes < 2:
            raise ValueError("need at least two classes")


@dataclass
class TcnnConfig:
    envelope_order: int = 4  # highest |x|^D term in the augmented input
    hidden: tuple[int, ...] = (40, 40, 40)
    output_dim: int = 2
    leaky_slope: float = 0.01
    lr: float = 0.0001
    epochs: int = 100
    batch: int = 1024

    @property
    def input_dim(self) -> int:
        return 2 + self.envelope_order


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


class Model:
    """A layer stack plus everything needed to resume or replay training."""

    def __init__(self, kind: str, layers: list[Layer], config, seed: int):
        self.kind = kind
        self.layers = layers
        self.config = config
        self.seed = seed
        self.epoch = 0
        self.loss_history: list[float] = []
        self.adam = AdamState()
        for p in self.trainable_params():
            self.adam.m.append(np.zeros_like(p.value))
            self.adam.v.append(np.zeros_like(p.value))

    def trainable_params(self):
        return [p for layer in self.layers for p in layer.params()]

    def state_tensors(self):
        """Trainable params, then batch-norm stats, then Adam moments."""
        tensors = [p.value for p in self.trainable_params()]
        tensors += [t for layer in self.layers for _, t in layer.state()]
        tensors += self.adam.m + self.adam.v
        return tensors

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, grad: np.ndarray) -> None:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def zero_grads(self) -> None:
        for p in self.trainable_params():
            p.zero_grad()

    def astype(self, dtype) -> "Model":
        for layer in self.layers:
            layer.astype(dtype)
        self.adam.m = [m.astype(dtype) for m in self.adam.m]
        self.adam.v = [v.astype(dtype) for v in self.adam.v]
        return self

    def config_dict(self) -> dict:
        return asdict(self.config)


def build_dsqcnn(config: ClassifierConfig, seed: int) -> Model:
    """Conv-BN-LeakyReLU-MaxPool blocks, then a dense softmax head."""
    rng = np.random.default_rng((seed, 0))
    layers: list[Layer] = []
    c_in = config.input_channels
    length = config.input_len
    for filters in config.conv_filters:
        conv = Conv1d(c_in, filters, config.kernel, config.stride, config.padding, rng)
        layers += [conv, BatchNorm1d(filters), LeakyReLU(config.leaky_slope),
                   MaxPool1d(config.pool_size, config.pool_stride)]
        length = conv.out_len(length)
        length = (length - config.pool_size) // config.pool_stride + 1
        if length < 1:
            raise ValueError(
                f"input_len {config.input_len} collapses to zero length "
                f"after {len(config.conv_filters)} conv/pool blocks")
        c_in = filters
    layers += [Flatten(), Dense(c_in * length, config.classes, rng)]
    return Model("dsqcnn", layers, config, seed)


def build_tcnn(config: TcnnConfig, seed: int) -> Model:
    rng = np.random.default_rng((seed, 1))
    layers: list[Layer] = []
    fan_in = config.input_dim
    for width in config.hidden:
        layers += [Dense(fan_in, width, rng), LeakyReLU(config.leaky_slope)]
        fan_in = width
    layers.append(Dense(fan_in, config.output_dim, rng))
    return Model("tcnn", layers, config, seed)


def classifier_forward(model: Model, batch: np.ndarray, mode: str = "eval") -> np.ndarray:
    """Class probabilities, rows summing to one."""
    cfg = model.config
    if batch.ndim != 3 or batch.shape[1:] != (cfg.input_channels, cfg.input_len):
        raise ShapeMismatch(
            f"expected (N, {cfg.input_channels}, {cfg.input_len}), got {batch.shape}")
    logits = model.forward(batch.astype(np.float32), train=(mode == "train"))
    return softmax(logits)


def predict_label(model: Model, rep) -> int:
    """Argmax class; exact ties resolve to the lowest index."""
    values = rep.values if hasattr(rep, "values") else np.asarray(rep)
    probs = classifier_forward(model, values[None, ...])
    return int(np.argmax(probs[0]))


def predict_labels(model: Model, batch: np.ndarray, chunk: int = 1024) -> np.ndarray:
    out = []
    for lo in range(0, len(batch), chunk):
        probs = classifier_forward(model, batch[lo : lo + chunk])
        out.append(np.argmax(probs, axis=1))
    return np.concatenate(out) if out else np.empty(0, dtype=int)


def _adam_step(model: Model, lr: float) -> None:
    a = model.adam
    a.t += 1
    correction = np.sqrt(1 - a.beta2**a.t) / (1 - a.beta1**a.t)
    for i, p in enumerate(model.trainable_params()):
        a.m[i] = a.beta1 * a.m[i] + (1 - a.beta1) * p.grad
        a.v[i] = a.beta2 * a.v[i] + (1 - a.beta2) * p.grad**2
        p.value -= (lr * correction) * a.m[i] / (np.sqrt(a.v[i]) + a.eps)


def _l2_penalty(model: Model, strength: float, add_grads: bool) -> float:
    """strength * sum of squared weights (biases and norm parameters exempt)."""
    if strength == 0:
        return 0.0
    total = 0.0
    for p in model.trainable_params():
        if p.is_weight:
            total += float((p.value.astype(np.float64) ** 2).sum())
            if add_grads:
                p.grad += (2 * strength) * p.value
    return strength * total


def train_classifier(
    model: Model,
    features: np.ndarray,
    labels: np.ndarray,
    config: ClassifierConfig | None = None,
    log_every: int = 0,
) -> Model:
    """Cross-entropy + L2 via Adam with the stepped learning-rate schedule.

    features: (N, 2, L) float; labels: (N,) ints. Shuffling is seeded per
    epoch so a fixed seed reproduces the final weights bit for bit.
    """
    cfg = config or model.config
    if len(features) == 0:
        raise EmptyDataset("no training records")
    features = features.astype(np.float32)
    labels = np.asarray(labels, dtype=int)
    for epoch in range(model.epoch, cfg.epochs):
        lr = cfg.lr * cfg.lr_decay_factor ** (epoch // cfg.lr_decay_every)
        order = np.random.default_rng((model.seed, 2, epoch)).permutation(len(features))
        epoch_loss, batches = 0.0, 0
        for lo in range(0, len(order), cfg.batch):
            idx = order[lo : lo + cfg.batch]
            model.zero_grads()
            logits = model.forward(features[idx], train=True)
            loss, dlogits = cross_entropy_loss(logits, labels[idx])
            loss += _l2_penalty(model, cfg.l2_strength, add_grads=True)
            model.backward(dlogits.astype(np.float32))
            _adam_step(model, lr)
            epoch_loss += loss
            batches += 1
        model.epoch = epoch + 1
        model.loss_history.append(epoch_loss / batches)
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}/{cfg.epochs} loss {model.loss_history[-1]:.4f}")
    return model


def augment_samples(x: np.ndarray, order: int = 4) -> np.ndarray:
    """[x_I, x_Q, |x|, |x|^2, ..., |x|^order] per complex sample."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    mag = np.abs(x)
    cols = [x.real, x.imag] + [mag**d for d in range(1, order + 1)]
    return np.stack(cols, axis=1)


def augment_input(sample: complex, order: int = 4) -> np.ndarray:
    """Augmented feature row of a single complex sample."""
    return augment_samples(np.array([sample]), order)[0]


def train_tcnn(
    model: Model,
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TcnnConfig | None = None,
) -> Model:
    """Half-MSE regression onto source-receiver I/Q pairs."""
    cfg = config or model.config
    if len(inputs) == 0:
        raise EmptyDataset("no calibration samples")
    inputs = inputs.astype(np.float32)
    targets = targets.astype(np.float32)
    for epoch in range(model.epoch, cfg.epochs):
        order = np.random.default_rng((model.seed, 3, epoch)).permutation(len(inputs))
        epoch_loss, batches = 0.0, 0
        for lo in range(0, len(order), cfg.batch):
            idx = order[lo : lo + cfg.batch]
            model.zero_grads()
            pred = model.forward(inputs[idx], train=True)
            loss, dpred = mse_loss(pred, targets[idx])
            model.backward(dpred.astype(np.float32))
            _adam_step(model, cfg.lr)
            epoch_loss += loss
            batches += 1
        model.epoch = epoch + 1
        model.loss_history.append(epoch_loss / batches)
    return model


def calibrate_sequence(model: Model, frame: ComplexFrame) -> ComplexFrame:
    """Map every sample through the calibration network (length preserved)."""
    cfg = model.config
    feats = augment_samples(frame.samples, cfg.envelope_order).astype(np.float32)
    out = model.forward(feats, train=False)
    samples = out[:, 0].astype(float) + 1j * out[:, 1].astype(float)
    return ComplexFrame(samples, frame.sample_rate, origin="calibrated")
